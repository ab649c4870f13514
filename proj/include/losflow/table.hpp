#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "losflow/domain.hpp"
#include "losflow/matrix.hpp"

namespace losflow {

enum class FeatureKind { numeric, categorical };

std::string_view to_string(FeatureKind kind);

struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  /// One cell per encounter. Numeric columns hold double or missing,
  /// categorical columns hold string or missing.
  std::vector<FeatureValue> values;

  std::size_t missing_count() const;
  double missing_ratio() const;
  /// Numeric value or std::nullopt when missing. Throws for categorical columns.
  std::optional<double> number(std::size_t row) const;
};

struct FeatureMeta {
  std::string name;
  FeatureKind kind;
  double missing_ratio;
};

/// Encounters plus their features in column order. Every column has one cell
/// per encounter.
class EncounterTable {
 public:
  EncounterTable() = default;
  explicit EncounterTable(std::vector<Encounter> encounters) : encounters_(std::move(encounters)) {}

  std::size_t size() const { return encounters_.size(); }
  bool empty() const { return encounters_.empty(); }

  const std::vector<Encounter>& encounters() const { return encounters_; }
  const Encounter& encounter(std::size_t row) const { return encounters_[row]; }
  const std::vector<FeatureColumn>& columns() const { return columns_; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  const FeatureColumn& column(std::string_view name) const;
  std::vector<std::string> feature_names() const;
  std::vector<FeatureMeta> feature_meta() const;

  /// Adds a column; throws if the name already exists or the length is wrong.
  void add_column(FeatureColumn column);
  void remove_column(std::string_view name);
  void replace_column(FeatureColumn column);

  /// Appends an encounter; `cells` is in column order.
  void append_row(Encounter encounter, std::vector<FeatureValue> cells);

  EncounterTable select_rows(std::span<const std::size_t> rows) const;

  /// Ground-truth labels from los_hours.
  std::vector<ClassLabel> labels(double threshold_hours = kDefaultLosThresholdHours) const;

  /// Numeric design matrix over every feature column. Throws DataError if a
  /// column is categorical or has missing cells.
  Matrix to_matrix() const;

 private:
  std::vector<Encounter> encounters_;
  std::vector<FeatureColumn> columns_;
};

enum class TimestampFormat { hours, iso8601 };

struct CsvSchema {
  TimestampFormat timestamps = TimestampFormat::hours;
};

/// Parses "YYYY-MM-DD[Thh:mm[:ss[.fff]]]" (also with a space separator) into
/// hours since 1970-01-01T00:00 UTC.
double parse_iso8601_hours(std::string_view text);

/// Reads the encounter CSV. Required columns: encounter_id, patient_hash,
/// triage_time, admit_decision_time, los_hours. Everything else is a feature;
/// a feature is numeric iff every non-empty cell parses as a real.
EncounterTable load_encounters(std::istream& in, const CsvSchema& schema = {});
EncounterTable load_encounters_file(const std::string& path, const CsvSchema& schema = {});

/// Writes the same layout load_encounters reads (timestamps as hours).
void write_encounters(std::ostream& out, const EncounterTable& table);

}  // namespace losflow
