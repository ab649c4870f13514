#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "losflow/table.hpp"

namespace losflow {

struct PruneResult {
  EncounterTable table;
  std::vector<std::string> dropped;
};

/// Keeps exactly the features whose missing ratio is below `threshold`.
PruneResult drop_sparse_features(const EncounterTable& table, double threshold);

/// Adds a numeric feature counting, per row, the non-missing cells among
/// `dropped` in `source` (the table before pruning). `target` must have the
/// same rows as `source`.
EncounterTable count_rare_tests(const EncounterTable& target, const EncounterTable& source,
                                std::span<const std::string> dropped, const std::string& new_feature_name);

/// Mean for numeric columns, mode (smallest category on ties) for categorical.
struct Imputer {
  std::map<std::string, FeatureValue> fill;

  static Imputer fit(const EncounterTable& table);
  /// Fills missing cells of every column the imputer was fitted on.
  EncounterTable apply(const EncounterTable& table) const;
};

EncounterTable impute(const EncounterTable& table);

/// Scans numeric column pairs in column order and drops the later column when
/// |pearson| exceeds `rho_threshold`. Missing cells are skipped pairwise;
/// constant columns never correlate.
PruneResult drop_correlated(const EncounterTable& table, double rho_threshold);

struct OneHotEncoder {
  /// Column name -> sorted categories seen at fit time.
  std::vector<std::pair<std::string, std::vector<std::string>>> categories;

  static OneHotEncoder fit(const EncounterTable& table, std::span<const std::string> columns);
  /// Replaces each fitted column with "<name>=<category>" 0/1 columns. Missing
  /// and unseen categories encode as all zeros.
  EncounterTable apply(const EncounterTable& table) const;
};

EncounterTable one_hot_encode(const EncounterTable& table, std::span<const std::string> columns);

struct SplitResult {
  EncounterTable train;
  EncounterTable test;
};

/// train: triage_time < cutoff; test: the rest. Row order preserved.
SplitResult temporal_split(const EncounterTable& table, double cutoff_hours);

/// Column-name conventions used by feature engineering. None of these cutoffs
/// come from clinical guidance; they are configurable defaults.
struct FeatureConventions {
  std::string lab_prefix = "lab_";
  std::string vital_prefix = "vit_";
  std::string bp_prefix = "vit_sbp";
  std::string diag_count_column = "ip_diag_count";
  double high_bp = 140.0;
  double low_bp = 90.0;
};

/// 75th percentile of each lab column, fitted on a reference (training) table.
struct LabPercentiles {
  std::map<std::string, double> p75;

  static LabPercentiles fit(const EncounterTable& reference, const FeatureConventions& conventions = {});
};

/// Linear interpolation between order statistics; `q` in [0,1]. `values` need
/// not be sorted.
double percentile(std::vector<double> values, double q);

/// Adds the engineered features. Patient history only uses encounters with a
/// strictly earlier triage_time; a previous LOS is only visible once that
/// encounter was discharged before this row's admit decision.
EncounterTable engineer_features(const EncounterTable& table, const LabPercentiles& reference,
                                 const FeatureConventions& conventions = {});

/// Same, with the lab percentiles fitted on `table` itself.
EncounterTable engineer_features(const EncounterTable& table, const FeatureConventions& conventions = {});

/// Names of the columns engineer_features adds, in order.
std::vector<std::string> engineered_feature_names();

}  // namespace losflow
