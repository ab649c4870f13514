#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "losflow/config.hpp"
#include "losflow/table.hpp"

namespace losflow {

/// Parametric LOS family.
///   lognormal          LOS ~ LogNormal(mu, sigma), truncated to the class range
///   shifted_lognormal  LOS = threshold + LogNormal(mu, sigma)   (LS only)
///   uniform            LOS ~ Uniform(min, max), must lie inside the class range
struct LosDistribution {
  enum class Family { lognormal, shifted_lognormal, uniform };
  Family family = Family::lognormal;
  double mu = 0.0;
  double sigma = 1.0;
  double min = 0.0;
  double max = 0.0;
};

/// Synthetic cohort parameters. The defaults describe a hospital population of
/// 16,222 encounters over five years, two thirds LS, LS stays of a few hundred
/// hours with a long right tail.
struct CohortConfig {
  static constexpr int kSchemaVersion = 1;

  std::int64_t n_patients = 16222;
  double arrival_rate_per_day = 8.9;
  /// Relative arrival intensity per hour of day; normalized to mean 1.
  std::optional<std::array<double, 24>> hourly_multipliers;
  double ls_fraction = 0.67;
  double threshold_hours = 72.0;
  LosDistribution ss_los{LosDistribution::Family::lognormal, 3.6, 0.6, 0.0, 0.0};
  LosDistribution ls_los{LosDistribution::Family::shifted_lognormal, 4.53, 1.16, 0.0, 0.0};
  /// Triage to admit-decision delay, LogNormal(mu, sigma) hours.
  double wait_mu = 1.4;
  double wait_sigma = 0.5;
  std::int64_t feature_dim = 8;
  /// Euclidean distance between the class means of the signal features
  /// (unit-variance Gaussians). Bayes AUC = Phi(separation / sqrt(2)).
  double class_separation = 1.0;
  double repeat_visit_probability = 0.2;
  double start_hours = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

config::Json to_json(const CohortConfig& c);
/// Missing fields take the defaults above. Errors name the offending field path.
CohortConfig cohort_config_from_json(const config::Reader& reader);

/// Simulator clock resolution (hours). Generated times and LOS values lie on
/// this grid so they round-trip through the simulator exactly.
inline constexpr double kTimeResolutionHours = 1e-6;
double quantize_hours(double hours);

/// Deterministic per config (seed included).
///
/// Columns: f00.. signal features; age; admitting_service (categorical);
/// lab_01..lab_08 (lab_06..lab_08 are mostly missing); vit_hr, vit_temp,
/// vit_sbp_1..3; ip_diag_count. Only the f-columns carry class signal.
EncounterTable generate_cohort(const CohortConfig& config);

}  // namespace losflow
