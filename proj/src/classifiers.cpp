#include "losflow/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>

#include "losflow/csv.hpp"
#include "losflow/kernels.hpp"
#include "losflow/random.hpp"

namespace losflow {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::logistic:
      return "logistic";
    case ModelKind::lda:
      return "lda";
    case ModelKind::perfect:
      return "perfect";
    case ModelKind::random:
      return "random";
    case ModelKind::confusion_noise:
      return "confusion_noise";
    case ModelKind::external:
      return "external";
  }
  return "unknown";
}

namespace {

void require_binary(std::span<const ClassLabel> labels) {
  const bool has_ls = std::any_of(labels.begin(), labels.end(), is_ls);
  const bool has_ss = std::any_of(labels.begin(), labels.end(), [](auto l) { return !is_ls(l); });
  if (!has_ls || !has_ss) throw DataError("training requires both SS and LS examples");
}

void require_finite(const Matrix& m) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw DataError("features contain non-finite values");
  }
}

std::size_t batch_rows(const Dataset& b) { return std::max({b.ids.size(), b.features.rows(), b.labels.size()}); }

// Lower Cholesky factor, or nullopt if the matrix is not positive definite.
std::optional<Matrix> cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto lj = l.row(j).first(j);
    double diag = a(j, j) - kernels::dot(lj, lj);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - kernels::dot(l.row(i).first(j), lj)) / l(j, j);
    }
  }
  return l;
}

// |L^{-1} v|^2 by forward substitution.
double mahalanobis_sq(const Matrix& chol, std::span<const double> v, std::vector<double>& z) {
  const std::size_t n = chol.rows();
  z.resize(n);
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = (v[i] - kernels::dot(chol.row(i).first(i), std::span<const double>(z).first(i))) / chol(i, i);
    q += z[i] * z[i];
  }
  return q;
}

Matrix lda_cholesky(const LdaParams& p) {
  auto l = cholesky(p.covariance);
  if (!l) throw DataError("lda: pooled covariance is singular; use regularization > 0");
  return *l;
}

Posterior lda_posterior_with(const LdaParams& p, const Matrix& chol, std::span<const double> x,
                             std::vector<double>& diff, std::vector<double>& z) {
  diff.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - p.mean_ls[i];
  const double a_ls = std::log(p.prior_ls) - 0.5 * mahalanobis_sq(chol, diff, z);
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - p.mean_ss[i];
  const double a_ss = std::log1p(-p.prior_ls) - 0.5 * mahalanobis_sq(chol, diff, z);
  const double m = std::max(a_ls, a_ss);
  const double e_ls = std::exp(a_ls - m), e_ss = std::exp(a_ss - m);
  return {e_ss / (e_ls + e_ss), e_ls / (e_ls + e_ss)};
}

struct Scorer {
  const Dataset& batch;
  std::size_t n;

  std::vector<double> operator()(const LogisticParams& p) const {
    if (batch.features.rows() != n) throw DataError("logistic model needs a feature row per encounter");
    if (batch.features.cols() != p.coef.size()) throw DataError("logistic model: feature count mismatch");
    const Matrix xs = p.standardizer.apply(batch.features);
    std::vector<double> z(n);
    kernels::gemv(xs.data(), xs.rows(), xs.cols(), p.coef, z);
    for (auto& v : z) v = sigmoid(v + p.intercept);
    return z;
  }

  std::vector<double> operator()(const LdaParams& p) const {
    if (batch.features.rows() != n) throw DataError("lda model needs a feature row per encounter");
    if (batch.features.cols() != p.mean_ls.size()) throw DataError("lda model: feature count mismatch");
    const Matrix chol = lda_cholesky(p);
    std::vector<double> out(n), diff, z;
    for (std::size_t r = 0; r < n; ++r) out[r] = lda_posterior_with(p, chol, batch.features.row(r), diff, z).ls;
    return out;
  }

  std::vector<double> operator()(const PerfectParams&) const {
    if (batch.labels.size() != n) throw DataError("perfect classifier: ground truth missing for some encounters");
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = is_ls(batch.labels[r]) ? 1.0 : 0.0;
    return out;
  }

  std::vector<double> operator()(const RandomParams& p) const {
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = keyed_uniform(p.seed, r) < p.p_ls ? 1.0 : 0.0;
    return out;
  }

  std::vector<double> operator()(const ConfusionNoiseParams& p) const {
    if (batch.labels.size() != n) throw DataError("confusion-noise classifier: ground truth missing");
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double u = keyed_uniform(p.seed, r);
      const bool ls = is_ls(batch.labels[r]);
      const bool flip = u < (ls ? p.fn_rate : p.fp_rate);
      out[r] = (ls != flip) ? 1.0 : 0.0;
    }
    return out;
  }

  std::vector<double> operator()(const ExternalParams& p) const {
    if (batch.ids.size() != n) throw DataError("external model needs encounter ids");
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto it = p.scores.find(batch.ids[r]);
      if (it == p.scores.end()) throw DataError("external predictions have no score for '" + batch.ids[r] + "'");
      out[r] = it->second;
    }
    return out;
  }
};

void check_rate(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DataError(std::string(what) + " must lie in [0,1]");
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& features) {
  Standardizer s;
  const std::size_t n = features.rows(), d = features.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(1.0, features.row(r), s.mean);
  for (auto& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> ss(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = features(r, c) - s.mean[c];
      ss[c] += dv * dv;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(ss[c] / static_cast<double>(n));
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size()) throw DataError("standardizer: feature count mismatch");
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
  return out;
}

ScoreModel::ScoreModel(Params params) : params_(std::move(params)) {}

ModelKind ScoreModel::kind() const { return static_cast<ModelKind>(params_.index()); }

std::vector<double> ScoreModel::score(const Dataset& batch) const {
  return std::visit(Scorer{batch, batch_rows(batch)}, params_);
}

std::vector<ClassLabel> CalibratedClassifier::labels_from_scores(std::span<const double> scores) const {
  std::vector<ClassLabel> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s >= threshold ? ClassLabel::LS : ClassLabel::SS);
  return out;
}

std::vector<ClassLabel> CalibratedClassifier::predict(const Dataset& batch) const {
  return labels_from_scores(model.score(batch));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticObjective logistic_objective(const Matrix& features, std::span<const ClassLabel> labels, double intercept,
                                     std::span<const double> coef, double l2_penalty) {
  const std::size_t n = features.rows(), d = features.cols();
  if (labels.size() != n || coef.size() != d) throw InvariantError("logistic_objective: shape mismatch");
  std::vector<double> z(n);
  kernels::gemv(features.data(), n, d, coef, z);
  LogisticObjective obj;
  double loss = 0.0;
  std::vector<double> residual(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = z[i] + intercept;
    const double y = is_ls(labels[i]) ? 1.0 : 0.0;
    const double softplus = zi > 0.0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    loss += softplus - y * zi;
    residual[i] = (sigmoid(zi) - y) * inv_n;
    obj.grad_intercept += residual[i];
  }
  obj.grad_coef.resize(d);
  kernels::gemv_t(features.data(), n, d, residual, obj.grad_coef);
  kernels::axpy(l2_penalty, coef, obj.grad_coef);
  obj.loss = loss * inv_n + 0.5 * l2_penalty * kernels::dot(coef, coef);
  return obj;
}

ScoreModel train_logistic(const Matrix& features, std::span<const ClassLabel> labels, const LogisticHyper& hyper) {
  if (labels.size() != features.rows()) throw InvariantError("train_logistic: label count does not match rows");
  if (!(hyper.learning_rate > 0.0) || hyper.max_iters < 0 || !(hyper.l2_penalty >= 0.0)) {
    throw DataError("train_logistic: invalid hyperparameters");
  }
  require_finite(features);
  require_binary(labels);

  LogisticParams p;
  p.standardizer = Standardizer::fit(features);
  const Matrix xs = p.standardizer.apply(features);
  p.coef.assign(xs.cols(), 0.0);
  double step = hyper.learning_rate;
  auto obj = logistic_objective(xs, labels, p.intercept, p.coef, hyper.l2_penalty);
  std::vector<double> trial(p.coef.size());
  for (int it = 0; it < hyper.max_iters; ++it) {
    double gmax = std::fabs(obj.grad_intercept);
    for (double g : obj.grad_coef) gmax = std::max(gmax, std::fabs(g));
    if (gmax < hyper.tolerance) break;
    // Backtrack until the loss does not increase.
    while (true) {
      std::copy(p.coef.begin(), p.coef.end(), trial.begin());
      kernels::axpy(-step, obj.grad_coef, trial);
      const double trial_intercept = p.intercept - step * obj.grad_intercept;
      auto next = logistic_objective(xs, labels, trial_intercept, trial, hyper.l2_penalty);
      if (next.loss <= obj.loss || step < 1e-12) {
        p.coef.swap(trial);
        trial.resize(p.coef.size());
        p.intercept = trial_intercept;
        obj = std::move(next);
        break;
      }
      step *= 0.5;
    }
    p.iterations = it + 1;
  }
  return ScoreModel(std::move(p));
}

ScoreModel train_lda(const Matrix& features, std::span<const ClassLabel> labels, double regularization) {
  const std::size_t n = features.rows(), d = features.cols();
  if (labels.size() != n) throw InvariantError("train_lda: label count does not match rows");
  require_finite(features);
  const auto n_ls = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), ClassLabel::LS));
  const std::size_t n_ss = n - n_ls;
  if (n_ls < 2 || n_ss < 2) throw DataError("train_lda: needs at least two samples per class");

  LdaParams p;
  p.prior_ls = static_cast<double>(n_ls) / static_cast<double>(n);
  p.mean_ls.assign(d, 0.0);
  p.mean_ss.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(1.0, features.row(r), is_ls(labels[r]) ? p.mean_ls : p.mean_ss);
  for (auto& v : p.mean_ls) v /= static_cast<double>(n_ls);
  for (auto& v : p.mean_ss) v /= static_cast<double>(n_ss);

  p.covariance = Matrix(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& mu = is_ls(labels[r]) ? p.mean_ls : p.mean_ss;
    const auto x = features.row(r);
    for (std::size_t c = 0; c < d; ++c) centered[c] = x[c] - mu[c];
    for (std::size_t c = 0; c < d; ++c) kernels::axpy(centered[c], centered, p.covariance.row(c));
  }
  double trace = 0.0;
  for (auto& v : p.covariance.data()) v /= static_cast<double>(n - 2);
  for (std::size_t c = 0; c < d; ++c) trace += p.covariance(c, c);
  p.regularization = regularization < 0.0 ? kLdaDefaultRidgeFactor * trace / static_cast<double>(std::max<std::size_t>(d, 1))
                                          : regularization;
  for (std::size_t c = 0; c < d; ++c) p.covariance(c, c) += p.regularization;
  if (!cholesky(p.covariance)) {
    throw DataError("train_lda: pooled covariance is singular; use regularization > 0");
  }
  return ScoreModel(std::move(p));
}

Posterior lda_posterior(const LdaParams& params, std::span<const double> x) {
  if (x.size() != params.mean_ls.size()) throw DataError("lda_posterior: feature count mismatch");
  std::vector<double> diff, z;
  return lda_posterior_with(params, lda_cholesky(params), x, diff, z);
}

CalibratedClassifier perfect_classifier() { return {ScoreModel(PerfectParams{}), 0.5}; }

CalibratedClassifier random_classifier(double p_ls, std::uint64_t seed) {
  check_rate(p_ls, "p_ls");
  return {ScoreModel(RandomParams{p_ls, seed}), 0.5};
}

CalibratedClassifier confusion_noise_classifier(double fp_rate, double fn_rate, std::uint64_t seed) {
  check_rate(fp_rate, "fp_rate");
  check_rate(fn_rate, "fn_rate");
  return {ScoreModel(ConfusionNoiseParams{fp_rate, fn_rate, seed}), 0.5};
}

double calibrate_threshold(std::span<const double> scores, std::span<const ClassLabel> truth,
                           const CalibrationTarget& target) {
  if (scores.size() != truth.size()) throw InvariantError("calibrate_threshold: length mismatch");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw DataError("calibrate_threshold: scores must lie in [0,1]");
  }
  const auto positives = static_cast<double>(std::count(truth.begin(), truth.end(), ClassLabel::LS));
  if (positives == 0.0) throw DataError("calibrate_threshold: no LS examples");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  double tp = 0.0, fp = 0.0, best = 0.0;
  std::optional<double> chosen;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (is_ls(truth[order[i]]) ? tp : fp) += 1.0;
    const double metric = target.metric == CalibrationMetric::recall ? tp / positives : tp / (tp + fp);
    best = std::max(best, metric);
    if (metric >= target.value) {
      if (target.metric == CalibrationMetric::recall) return t;
      chosen = t;  // keep scanning down for the smallest qualifying threshold
    }
  }
  if (chosen) return *chosen;
  throw DataError(std::string("calibrate_threshold: target ") +
                  (target.metric == CalibrationMetric::recall ? "recall " : "precision ") +
                  csv::format_double(target.value) + " is unachievable; best achievable is " +
                  csv::format_double(best));
}

ScoreModel load_external_predictions(std::istream& in) {
  const auto doc = csv::read(in);
  const auto id_col = doc.column("encounter_id");
  const auto score_col = doc.column("score");
  if (!id_col || !score_col) throw DataError("predictions CSV needs columns encounter_id,score");
  ExternalParams p;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& id = doc.rows[r][*id_col];
    const auto s = csv::parse_double(doc.rows[r][*score_col]);
    if (!s || !(*s >= 0.0 && *s <= 1.0)) {
      throw DataError("predictions row " + std::to_string(r) + ": score must be a number in [0,1]");
    }
    if (!p.scores.emplace(id, *s).second) throw DataError("predictions: duplicate encounter_id '" + id + "'");
  }
  return ScoreModel(std::move(p));
}

ScoreModel load_external_predictions_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_external_predictions(in);
}

void write_predictions(std::ostream& out, std::span<const std::string> ids, std::span<const double> scores) {
  if (ids.size() != scores.size()) throw InvariantError("write_predictions: length mismatch");
  csv::write_row(out, {"encounter_id", "score"});
  for (std::size_t i = 0; i < ids.size(); ++i) csv::write_row(out, {ids[i], csv::format_double(scores[i])});
}

namespace {

config::Json matrix_to_json(const Matrix& m) {
  config::Json rows = config::Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const config::Json& j) {
  Matrix m;
  for (const auto& row : j) m.append_row(row.get<std::vector<double>>());
  return m;
}

}  // namespace

config::Json to_json(const CalibratedClassifier& classifier) {
  config::Json j;
  j["schema_version"] = 1;
  j["kind"] = std::string(to_string(classifier.model.kind()));
  j["threshold"] = classifier.threshold;
  config::Json params = config::Json::object();
  config::Json standardization = config::Json::object();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticParams>) {
          params = {{"intercept", p.intercept}, {"coef", p.coef}, {"iterations", p.iterations}};
          standardization = {{"mean", p.standardizer.mean}, {"scale", p.standardizer.scale}};
        } else if constexpr (std::is_same_v<T, LdaParams>) {
          params = {{"prior_ls", p.prior_ls},
                    {"mean_ls", p.mean_ls},
                    {"mean_ss", p.mean_ss},
                    {"covariance", matrix_to_json(p.covariance)},
                    {"regularization", p.regularization}};
        } else if constexpr (std::is_same_v<T, RandomParams>) {
          params = {{"p_ls", p.p_ls}, {"seed", p.seed}};
        } else if constexpr (std::is_same_v<T, ConfusionNoiseParams>) {
          params = {{"fp_rate", p.fp_rate}, {"fn_rate", p.fn_rate}, {"seed", p.seed}};
        } else if constexpr (std::is_same_v<T, ExternalParams>) {
          params = {{"scores", p.scores}};
        }
      },
      classifier.model.params());
  j["parameters"] = std::move(params);
  j["standardization"] = std::move(standardization);
  return j;
}

CalibratedClassifier classifier_from_json(const config::Json& json) {
  const config::Reader r(json, "model");
  r.check_schema_version(1);
  CalibratedClassifier out;
  out.threshold = r.number("threshold", 0.5);
  const auto kind = r.string("kind");
  const auto& params = json.contains("parameters") ? json.at("parameters") : config::Json::object();
  try {
    if (kind == "logistic") {
      LogisticParams p;
      p.intercept = params.at("intercept").get<double>();
      p.coef = params.at("coef").get<std::vector<double>>();
      p.iterations = params.value("iterations", 0);
      p.standardizer.mean = json.at("standardization").at("mean").get<std::vector<double>>();
      p.standardizer.scale = json.at("standardization").at("scale").get<std::vector<double>>();
      if (p.standardizer.mean.size() != p.coef.size() || p.standardizer.scale.size() != p.coef.size()) {
        throw ConfigError("model.standardization: length does not match coefficients");
      }
      out.model = ScoreModel(std::move(p));
    } else if (kind == "lda") {
      LdaParams p;
      p.prior_ls = params.at("prior_ls").get<double>();
      p.mean_ls = params.at("mean_ls").get<std::vector<double>>();
      p.mean_ss = params.at("mean_ss").get<std::vector<double>>();
      p.covariance = matrix_from_json(params.at("covariance"));
      p.regularization = params.value("regularization", 0.0);
      out.model = ScoreModel(std::move(p));
    } else if (kind == "perfect") {
      out.model = ScoreModel(PerfectParams{});
    } else if (kind == "random") {
      out.model = ScoreModel(RandomParams{params.at("p_ls").get<double>(), params.at("seed").get<std::uint64_t>()});
    } else if (kind == "confusion_noise") {
      out.model = ScoreModel(ConfusionNoiseParams{params.at("fp_rate").get<double>(), params.at("fn_rate").get<double>(),
                                                  params.at("seed").get<std::uint64_t>()});
    } else if (kind == "external") {
      out.model = ScoreModel(ExternalParams{params.at("scores").get<std::map<std::string, double>>()});
    } else {
      r.fail("kind", "unknown model kind '" + kind + "'");
    }
  } catch (const config::Json::exception& e) {
    throw ConfigError(std::string("model.parameters: ") + e.what());
  }
  return out;
}

}  // namespace losflow
