#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "losflow/classifiers.hpp"
#include "losflow/dataset.hpp"
#include "losflow/metrics.hpp"

namespace losflow {

enum class Resampling { none, undersample, smote };

std::string_view to_string(Resampling r);
Resampling parse_resampling(std::string_view text);

/// Fits a classifier on a training set. The seed covers any randomness in
/// fitting; deterministic trainers ignore it.
using Trainer = std::function<CalibratedClassifier(const Dataset& train, std::uint64_t seed)>;

/// Declarative description of a trainer, as it appears in config files.
struct ModelSpec {
  ModelKind kind = ModelKind::logistic;
  LogisticHyper logistic;
  double lda_regularization = -1.0;
  /// When set, the threshold is calibrated on the training set's own scores.
  std::optional<CalibrationTarget> calibration;
  /// Model used verbatim for the non-trainable kinds.
  ScoreModel fixed;
};

Trainer make_trainer(const ModelSpec& spec);

/// Test-row indices for each of k stratified folds, each sorted ascending.
/// Throws DataError if k exceeds the size of either class.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const ClassLabel> labels, std::size_t k,
                                                       std::uint64_t seed);

struct FoldResult {
  std::vector<std::size_t> test_rows;
  MetricReport report;
  double auc = 0.0;
  std::vector<double> scores;  // aligned with test_rows
};

struct CvResult {
  std::vector<FoldResult> folds;
  /// Score of each row from the fold that held it out.
  std::vector<double> oof_scores;
  /// Mean and sample standard deviation across folds, keyed by metric name
  /// (MetricReport fields plus "auc").
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;
};

struct CvOptions {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  Resampling resampling = Resampling::none;
  std::size_t smote_neighbors = 5;
};

/// Stratified k-fold cross-validation. Resampling touches training folds only.
CvResult kfold_cv(const Trainer& trainer, const Dataset& data, const CvOptions& options);

/// `name` is a MetricReport field or "auc".
double fold_metric(const FoldResult& fold, std::string_view name);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

/// Dietterich's 5x2cv paired t-test on `metric`. Both trainers see the same
/// splits and training seeds.
TTestResult paired_5x2_ttest(const Trainer& a, const Trainer& b, const Dataset& data, std::uint64_t seed,
                             std::string_view metric = "f1_weighted", Resampling resampling = Resampling::none);

/// Paired permutation test for |AUC_A - AUC_B|; per encounter the two scores
/// swap with probability 1/2. Returns (1 + #{null >= observed}) / (n + 1).
double roc_permutation_test(std::span<const double> scores_a, std::span<const double> scores_b,
                            std::span<const ClassLabel> truth, std::size_t n_permutations, std::uint64_t seed);

}  // namespace losflow
