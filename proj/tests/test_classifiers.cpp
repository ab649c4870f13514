#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "losflow/classifiers.hpp"
#include "losflow/metrics.hpp"
#include "losflow/random.hpp"

using namespace losflow;

namespace {

constexpr auto LS = ClassLabel::LS;
constexpr auto SS = ClassLabel::SS;

Dataset gaussian_classes(std::uint64_t seed, std::size_t n, std::size_t dim, double separation) {
  Rng rng(seed);
  Dataset d;
  d.features = Matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ls = rng.bernoulli(0.5);
    d.labels.push_back(ls ? LS : SS);
    d.ids.push_back("r" + std::to_string(i));
    for (std::size_t c = 0; c < dim; ++c) {
      const double shift = c == 0 ? (ls ? separation / 2 : -separation / 2) : 0.0;
      d.features(i, c) = shift + rng.normal();
    }
  }
  for (std::size_t c = 0; c < dim; ++c) d.feature_names.push_back("x" + std::to_string(c));
  return d;
}

Dataset labels_only(const std::vector<ClassLabel>& labels) {
  Dataset d;
  d.labels = labels;
  d.features = Matrix(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) d.ids.push_back("r" + std::to_string(i));
  return d;
}

double max_rel_error(const Matrix& x, const std::vector<ClassLabel>& y, double b, const std::vector<double>& w,
                     double l2) {
  const auto g = logistic_objective(x, y, b, w, l2);
  const double h = 1e-6;
  const auto rel = [](double a, double n) { return std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n)); };
  double worst = rel(g.grad_intercept, (logistic_objective(x, y, b + h, w, l2).loss -
                                        logistic_objective(x, y, b - h, w, l2).loss) /
                                           (2 * h));
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    const double num = (logistic_objective(x, y, b, wp, l2).loss - logistic_objective(x, y, b, wm, l2).loss) / (2 * h);
    worst = std::max(worst, rel(g.grad_coef[j], num));
  }
  return worst;
}

}  // namespace

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("zero logistic model scores one half") {
  LogisticParams p;
  p.coef = {0.0, 0.0};
  p.standardizer.mean = {0.0, 0.0};
  p.standardizer.scale = {1.0, 1.0};
  const ScoreModel m(p);
  const auto d = gaussian_classes(1, 5, 2, 1.0);
  for (double s : m.score(d)) CHECK(s == 0.5);
}

TEST_CASE("logistic gradient matches finite differences") {
  const auto d = gaussian_classes(2, 60, 4, 1.0);
  const auto x = Standardizer::fit(d.features).apply(d.features);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> w(4);
    for (auto& v : w) v = rng.uniform(-2, 2);
    CHECK(max_rel_error(x, d.labels, rng.uniform(-1, 1), w, 0.01) < 1e-5);
  }
}

TEST_CASE("separable one-dimensional data") {
  Dataset d;
  d.features = Matrix(0, 1);
  for (int i = 0; i < 10; ++i) {
    d.features.append_row(std::vector<double>{i % 2 ? 1.0 : -1.0});
    d.labels.push_back(i % 2 ? LS : SS);
    d.ids.push_back(std::to_string(i));
  }
  const auto m = train_logistic(d.features, d.labels, {1.0, 5000, 0.01, 1e-8});
  const auto& p = std::get<LogisticParams>(m.params());
  CHECK(p.coef[0] > 0.0);
  // brute-force scan: the loss minimizer over a grid has the same sign
  const auto xs = p.standardizer.apply(d.features);
  double best_w = 0, best = 1e300;
  for (double w = -10; w <= 10; w += 0.05) {
    const double loss = logistic_objective(xs, d.labels, 0.0, std::vector<double>{w}, 0.01).loss;
    if (loss < best) best = loss, best_w = w;
  }
  CHECK(best_w > 0.0);
  CHECK(p.coef[0] == doctest::Approx(best_w).epsilon(0.05));
  const CalibratedClassifier c{m, 0.5};
  const auto pred = c.predict(d);
  CHECK(pred == d.labels);
}

TEST_CASE("logistic score monotone in the linear predictor") {
  const auto d = gaussian_classes(4, 200, 3, 1.5);
  const auto m = train_logistic(d.features, d.labels);
  const auto& p = std::get<LogisticParams>(m.params());
  const auto s = m.score(d);
  const auto xs = p.standardizer.apply(d.features);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double z = p.intercept;
    for (std::size_t j = 0; j < 3; ++j) z += p.coef[j] * xs(i, j);
    pairs.emplace_back(z, s[i]);
  }
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].second >= pairs[i - 1].second);
}

TEST_CASE("logistic scores are invariant to positive feature scaling") {
  const auto d = gaussian_classes(5, 150, 2, 1.0);
  auto scaled = d;
  for (auto& v : scaled.features.data()) v *= 7.5;
  const auto a = train_logistic(d.features, d.labels).score(d);
  const auto b = train_logistic(scaled.features, scaled.labels).score(scaled);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("logistic rejects non-finite features") {
  auto d = gaussian_classes(6, 20, 2, 1.0);
  d.features(3, 1) = NAN;
  CHECK_THROWS_AS(train_logistic(d.features, d.labels), DataError);
}

TEST_CASE("lda symmetric case") {
  Dataset d;
  d.features = Matrix(0, 1);
  for (double x : {-2.0, -1.0, 0.0}) {
    d.features.append_row(std::vector<double>{x});
    d.labels.push_back(SS);
  }
  for (double x : {0.0, 1.0, 2.0}) {
    d.features.append_row(std::vector<double>{x});
    d.labels.push_back(LS);
  }
  const auto m = train_lda(d.features, d.labels, 0.0);
  const auto& p = std::get<LdaParams>(m.params());
  CHECK(p.prior_ls == 0.5);
  CHECK(p.mean_ls[0] == 1.0);
  CHECK(lda_posterior(p, std::vector<double>{0.0}).ls == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lda_posterior(p, std::vector<double>{0.5}).ls > 0.5);
}

TEST_CASE("lda posteriors are normalized") {
  const auto d = gaussian_classes(7, 300, 3, 2.0);
  const auto m = train_lda(d.features, d.labels);
  const auto& p = std::get<LdaParams>(m.params());
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x{rng.normal(0, 10), rng.normal(0, 10), rng.normal(0, 10)};
    const auto post = lda_posterior(p, x);
    CHECK(post.ls >= 0.0);
    CHECK(post.ls <= 1.0);
    CHECK(std::abs(post.ls + post.ss - 1.0) <= 1e-12);
  }
}

TEST_CASE("lda on well-separated gaussians") {
  // Means 6 sigma apart: Bayes error Phi(-3) = 0.00135.
  const auto train = gaussian_classes(9, 2000, 2, 6.0);
  const auto test = gaussian_classes(10, 5000, 2, 6.0);
  const CalibratedClassifier c{train_lda(train.features, train.labels), 0.5};
  const auto r = metric_report(confusion(c.predict(test), test.labels));
  CHECK(r.accuracy >= 0.99);
}

TEST_CASE("lda singular covariance") {
  Dataset d;
  d.features = Matrix(0, 2);
  for (int i = 0; i < 6; ++i) {
    const double x = i;
    d.features.append_row(std::vector<double>{x, 2 * x});
    d.labels.push_back(i < 3 ? SS : LS);
  }
  try {
    train_lda(d.features, d.labels, 0.0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("regularization") != std::string::npos);
  }
  CHECK_NOTHROW(train_lda(d.features, d.labels));
  const std::vector<ClassLabel> lonely{SS, LS, LS, LS, LS, LS};
  CHECK_THROWS_AS(train_lda(d.features, lonely), DataError);
}

TEST_CASE("perfect classifier") {
  const auto d = labels_only({LS, SS, LS, SS, SS});
  const auto c = perfect_classifier();
  const auto pred = c.predict(d);
  CHECK(pred == d.labels);
  const auto counts = confusion(pred, d.labels);
  CHECK(counts.fp == 0);
  CHECK(counts.fn == 0);
  CHECK(c.predict(labels_only({})).empty());
  Dataset no_truth = d;
  no_truth.labels.clear();
  CHECK_THROWS_AS(c.predict(no_truth), DataError);
}

TEST_CASE("random classifier") {
  std::vector<ClassLabel> truth(3040, LS);
  const auto d = labels_only(truth);
  for (auto l : random_classifier(1.0, 3).predict(d)) CHECK(l == LS);
  for (auto l : random_classifier(0.0, 3).predict(d)) CHECK(l == SS);
  const auto pred = random_classifier(0.5, 3).predict(d);
  const auto fn = confusion(pred, truth).fn;
  CHECK(std::abs(static_cast<double>(fn) - 1520.0) <= 3 * std::sqrt(3040 * 0.25));
  CHECK(random_classifier(0.5, 3).predict(d) == pred);
}

TEST_CASE("confusion noise classifier") {
  std::vector<ClassLabel> truth;
  for (int i = 0; i < 4597; ++i) truth.push_back(i < 3040 ? LS : SS);
  const auto d = labels_only(truth);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CHECK(confusion_noise_classifier(0, 0, seed).predict(d) == perfect_classifier().predict(d));
  }
  const auto flipped = confusion_noise_classifier(1, 1, 4).predict(d);
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(flipped[i] != truth[i]);
  const auto c = confusion(confusion_noise_classifier(0.0, 0.2, 5).predict(d), truth);
  CHECK(std::abs(static_cast<double>(c.fn) - 608.0) <= 3 * std::sqrt(3040 * 0.2 * 0.8));
  CHECK(c.fp == 0);
}

TEST_CASE("threshold comparison uses >=") {
  const CalibratedClassifier c{ScoreModel{}, 0.4};
  const std::vector<double> s{0.39999, 0.4, 0.9};
  CHECK(c.labels_from_scores(s) == std::vector<ClassLabel>{SS, LS, LS});
}

TEST_CASE("threshold calibration on a three point example") {
  const std::vector<double> s{0.9, 0.8, 0.2};
  const std::vector<ClassLabel> y{LS, LS, SS};
  CHECK(calibrate_threshold(s, y, {CalibrationMetric::recall, 1.0}) == 0.8);
  CHECK(calibrate_threshold(s, y, {CalibrationMetric::precision, 1.0}) == 0.8);
  CHECK(calibrate_threshold(s, y, {CalibrationMetric::recall, 0.5}) == 0.9);
}

TEST_CASE("calibrated threshold achieves its target") {
  const auto d = gaussian_classes(11, 400, 2, 1.0);
  const auto scores = train_logistic(d.features, d.labels).score(d);
  for (double target : {0.5, 0.7, 0.9, 0.99}) {
    const double t = calibrate_threshold(scores, d.labels, {CalibrationMetric::recall, target});
    const CalibratedClassifier c{ScoreModel{}, t};
    CHECK(metric_report(confusion(c.labels_from_scores(scores), d.labels)).recall_ls >= target);
  }
  for (double target : {0.6, 0.75, 0.85}) {
    const double t = calibrate_threshold(scores, d.labels, {CalibrationMetric::precision, target});
    const CalibratedClassifier c{ScoreModel{}, t};
    CHECK(metric_report(confusion(c.labels_from_scores(scores), d.labels)).precision_ls >= target);
  }
}

TEST_CASE("unachievable calibration target reports the best value") {
  const std::vector<double> s{0.9, 0.8, 0.2};
  const std::vector<ClassLabel> y{SS, LS, LS};
  try {
    calibrate_threshold(s, y, {CalibrationMetric::precision, 0.9});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("0.666") != std::string::npos);
  }
}

TEST_CASE("external predictions") {
  std::istringstream in("encounter_id,score\na,0.25\nb,1\n");
  const auto m = load_external_predictions(in);
  Dataset d = labels_only({SS, LS});
  d.ids = {"b", "a"};
  CHECK(m.score(d) == std::vector<double>{1.0, 0.25});
  d.ids = {"c", "a"};
  CHECK_THROWS_AS(m.score(d), DataError);

  std::istringstream dup("encounter_id,score\na,0.1\na,0.2\n");
  CHECK_THROWS_AS(load_external_predictions(dup), DataError);
  std::istringstream range("encounter_id,score\na,1.7\n");
  CHECK_THROWS_AS(load_external_predictions(range), DataError);
}

TEST_CASE("perfect scores survive an export and reload") {
  const auto d = labels_only({LS, SS, SS, LS});
  const auto scores = perfect_classifier().model.score(d);
  std::ostringstream out;
  write_predictions(out, d.ids, scores);
  std::istringstream in(out.str());
  const CalibratedClassifier back{load_external_predictions(in), 0.5};
  CHECK(back.predict(d) == d.labels);
}

TEST_CASE("classifier json round trip") {
  const auto d = gaussian_classes(12, 200, 3, 1.0);
  for (const auto& c : {CalibratedClassifier{train_logistic(d.features, d.labels), 0.41},
                        CalibratedClassifier{train_lda(d.features, d.labels), 0.65}, random_classifier(0.3, 9),
                        confusion_noise_classifier(0.1, 0.2, 9), perfect_classifier()}) {
    const auto back = classifier_from_json(config::parse(to_json(c).dump(), "x"));
    CHECK(back.threshold == c.threshold);
    CHECK(back.model.kind() == c.model.kind());
    const auto a = c.model.score(d), b = back.model.score(d);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    CHECK(back.predict(d) == c.predict(d));
  }
}
