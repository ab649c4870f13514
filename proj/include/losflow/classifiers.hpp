#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "losflow/config.hpp"
#include "losflow/dataset.hpp"

namespace losflow {

enum class ModelKind { logistic, lda, perfect, random, confusion_noise, external };

std::string_view to_string(ModelKind kind);

/// Per-column z-score transform fitted on training data. Constant columns get
/// scale 1 so they map to zero.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

struct LogisticHyper {
  double learning_rate = 1.0;
  int max_iters = 5000;
  double l2_penalty = 1e-4;
  double tolerance = 1e-6;
};

struct LogisticParams {
  double intercept = 0.0;
  std::vector<double> coef;
  Standardizer standardizer;
  int iterations = 0;
};

struct LdaParams {
  double prior_ls = 0.5;
  std::vector<double> mean_ls;
  std::vector<double> mean_ss;
  /// Pooled within-class covariance including the ridge term.
  Matrix covariance;
  double regularization = 0.0;
};

struct PerfectParams {};

struct RandomParams {
  double p_ls = 0.5;
  std::uint64_t seed = 0;
};

struct ConfusionNoiseParams {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  std::uint64_t seed = 0;
};

struct ExternalParams {
  std::map<std::string, double> scores;
};

/// Produces P(label = LS) for each row of a Dataset.
///
/// Trainable kinds read `features`; oracle kinds (perfect, confusion_noise)
/// read `labels` as ground truth; external reads `ids`. Random and
/// confusion-noise draws are keyed by row position, so two models with the
/// same seed see the same uniforms on the same rows.
class ScoreModel {
 public:
  using Params = std::variant<LogisticParams, LdaParams, PerfectParams, RandomParams, ConfusionNoiseParams,
                              ExternalParams>;

  ScoreModel() : params_(PerfectParams{}) {}
  explicit ScoreModel(Params params);

  ModelKind kind() const;
  const Params& params() const { return params_; }

  std::vector<double> score(const Dataset& batch) const;

 private:
  Params params_;
};

/// label = LS iff score >= threshold.
struct CalibratedClassifier {
  ScoreModel model;
  double threshold = 0.5;

  std::vector<ClassLabel> predict(const Dataset& batch) const;
  std::vector<ClassLabel> labels_from_scores(std::span<const double> scores) const;
};

// --- logistic regression -------------------------------------------------

double sigmoid(double z);

struct LogisticObjective {
  double loss = 0.0;
  double grad_intercept = 0.0;
  std::vector<double> grad_coef;
};

/// Mean negative log-likelihood plus (l2/2)*|w|^2 (intercept unpenalized) and
/// its gradient, on already-standardized features.
LogisticObjective logistic_objective(const Matrix& features, std::span<const ClassLabel> labels, double intercept,
                                     std::span<const double> coef, double l2_penalty);

/// Full-batch gradient descent from zero. Stops when the gradient's max-norm
/// drops below tolerance or after max_iters. The step halves whenever the
/// loss would increase.
ScoreModel train_logistic(const Matrix& features, std::span<const ClassLabel> labels, const LogisticHyper& hyper = {});

// --- linear discriminant analysis ----------------------------------------

/// Default ridge added to the pooled covariance: 1e-6 * trace / d.
inline constexpr double kLdaDefaultRidgeFactor = 1e-6;

/// `regularization` < 0 selects the default ridge. With regularization 0 a
/// singular pooled covariance is an error.
ScoreModel train_lda(const Matrix& features, std::span<const ClassLabel> labels, double regularization = -1.0);

struct Posterior {
  double ss = 0.0;
  double ls = 0.0;
};

/// Bayes-rule posterior under the shared-covariance Gaussian class model.
Posterior lda_posterior(const LdaParams& params, std::span<const double> x);

// --- oracle-derived classifiers ------------------------------------------

CalibratedClassifier perfect_classifier();
CalibratedClassifier random_classifier(double p_ls, std::uint64_t seed);
CalibratedClassifier confusion_noise_classifier(double fp_rate, double fn_rate, std::uint64_t seed);

// --- threshold calibration -----------------------------------------------

enum class CalibrationMetric { precision, recall };

struct CalibrationTarget {
  CalibrationMetric metric = CalibrationMetric::recall;
  double value = 0.9;
};

/// Recall target: the largest distinct score whose recall reaches the value.
/// Precision target: the smallest distinct score whose precision reaches it.
/// Throws DataError naming the best achievable value otherwise.
double calibrate_threshold(std::span<const double> scores, std::span<const ClassLabel> truth,
                           const CalibrationTarget& target);

// --- external scores -----------------------------------------------------

/// CSV with header encounter_id,score; scores in [0,1]; ids unique.
ScoreModel load_external_predictions(std::istream& in);
ScoreModel load_external_predictions_file(const std::string& path);
void write_predictions(std::ostream& out, std::span<const std::string> ids, std::span<const double> scores);

// --- persistence ---------------------------------------------------------

config::Json to_json(const CalibratedClassifier& classifier);
CalibratedClassifier classifier_from_json(const config::Json& json);

}  // namespace losflow
