#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace losflow {

/// Base class for every error raised by the library. Callers that only need
/// to distinguish "bad input" from "broken invariant" catch the two subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (schema, CSV cell, infeasible parameters).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration document; `what()` names the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Internal invariant violated; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultLosThresholdHours = 72.0;

enum class ClassLabel : std::uint8_t { SS = 0, LS = 1 };

std::string_view to_string(ClassLabel label);
ClassLabel parse_label(std::string_view text);

/// LS iff los_hours > threshold_hours. The tie goes to SS.
ClassLabel label_from_los(double los_hours, double threshold_hours = kDefaultLosThresholdHours);

inline bool is_ls(ClassLabel label) { return label == ClassLabel::LS; }

/// Missing, numeric or categorical cell value.
using FeatureValue = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const FeatureValue& v) { return std::holds_alternative<std::monostate>(v); }

/// Core fields of one hospital admission. Feature values live column-wise in
/// EncounterTable. Times are hours from the scenario epoch.
struct Encounter {
  std::string encounter_id;
  std::string patient_hash;
  double triage_time = 0.0;
  double admit_decision_time = 0.0;
  double los_hours = 0.0;

  /// Throws DataError when admit_decision_time < triage_time or los_hours <= 0.
  void validate() const;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  std::int64_t support_ls() const { return tp + fn; }
  std::int64_t support_ss() const { return tn + fp; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Bed count for a unit; std::nullopt means unbounded.
using Capacity = std::optional<std::int64_t>;

enum class RoutingPolicy : std::uint8_t {
  /// Predicted-SS patients in the waiting area take the first free SSU or GW bed.
  flexible_ss,
  /// Every patient waits only for the unit its prediction maps to.
  strict,
};

std::string_view to_string(RoutingPolicy policy);
RoutingPolicy parse_routing_policy(std::string_view text);

struct Scenario {
  Capacity gw_capacity;
  Capacity ssu_capacity;
  double transfer_threshold_hours = kDefaultLosThresholdHours;
  double sterilization_min_hours = 1.0;
  double sterilization_max_hours = 3.0;
  RoutingPolicy routing_policy = RoutingPolicy::flexible_ss;
  /// std::nullopt runs until every patient has left ("drain").
  std::optional<double> horizon_hours;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace losflow
