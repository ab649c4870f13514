#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "losflow/table.hpp"

namespace losflow {

struct FeatureScore {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> cramers_v;
  std::optional<double> chi_square;
  std::optional<double> f_statistic;
  /// Nats.
  std::optional<double> mutual_information;
};

inline constexpr const char* kScorerNames[] = {"pearson",    "spearman",    "cramers_v",
                                               "chi_square", "f_statistic", "mutual_information"};

/// Scorer value by name, as listed in kScorerNames.
std::optional<double> scorer_value(const FeatureScore& score, std::string_view scorer);

struct FeatureScoreOptions {
  /// Equal-frequency bins for numeric features in the contingency scorers.
  /// Features with no more distinct values than this are used as-is.
  std::size_t bins = 10;
};

/// Univariate scores of every feature against the binary label. Numeric
/// features get all six; categorical features get cramers_v, chi_square and
/// mutual_information. Requires an imputed table.
std::vector<FeatureScore> feature_scores(const EncounterTable& table, std::span<const ClassLabel> labels,
                                         const FeatureScoreOptions& options = {});

/// Category index per row after discretization. Exposed for tests.
std::vector<std::size_t> discretize(std::span<const double> values, std::size_t bins);

struct RankedFeature {
  std::string name;
  double mean_rank = 0.0;
  std::size_t rank = 0;
};

/// Per scorer, features are ranked by |score| descending (average ranks on
/// ties, 1 = best). A feature's aggregate is its mean rank over the scorers it
/// has; the result is sorted by aggregate, then name.
std::vector<RankedFeature> ensemble_rank(std::span<const FeatureScore> scores);

}  // namespace losflow
