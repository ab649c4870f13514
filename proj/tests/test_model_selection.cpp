#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "losflow/model_selection.hpp"
#include "losflow/random.hpp"

using namespace losflow;

namespace {

constexpr auto LS = ClassLabel::LS;
constexpr auto SS = ClassLabel::SS;

Dataset gaussian_classes(std::uint64_t seed, std::size_t n, double separation) {
  Rng rng(seed);
  Dataset d;
  d.features = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ls = i % 3 != 0;
    d.labels.push_back(ls ? LS : SS);
    d.ids.push_back("r" + std::to_string(i));
    d.features(i, 0) = (ls ? separation / 2 : -separation / 2) + rng.normal();
    d.features(i, 1) = rng.normal();
  }
  d.feature_names = {"a", "b"};
  return d;
}

Trainer fixed(CalibratedClassifier c) {
  return [c](const Dataset&, std::uint64_t) { return c; };
}

Trainer lda() {
  ModelSpec s;
  s.kind = ModelKind::lda;
  return make_trainer(s);
}

}  // namespace

TEST_CASE("resampling names") {
  for (auto r : {Resampling::none, Resampling::undersample, Resampling::smote}) {
    CHECK(parse_resampling(to_string(r)) == r);
  }
  CHECK_THROWS(parse_resampling("bootstrap"));
}

TEST_CASE("stratified folds partition the rows") {
  std::vector<ClassLabel> y;
  for (int i = 0; i < 103; ++i) y.push_back(i % 4 == 0 ? SS : LS);
  const auto folds = stratified_folds(y, 10, 5);
  REQUIRE(folds.size() == 10);
  std::vector<int> seen(y.size(), 0);
  for (const auto& f : folds) {
    CHECK(std::is_sorted(f.begin(), f.end()));
    std::size_t ss = 0;
    for (auto r : f) {
      ++seen[r];
      ss += y[r] == SS;
    }
    CHECK(ss >= 2);
    CHECK(ss <= 3);
    CHECK(f.size() >= 10);
    CHECK(f.size() <= 11);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(stratified_folds(y, 10, 5) == folds);
  CHECK(stratified_folds(y, 10, 6) != folds);
  const std::vector<ClassLabel> few{LS, LS, LS, SS, SS};
  CHECK_THROWS_AS(stratified_folds(few, 3, 1), DataError);
}

TEST_CASE("perfect classifier cross-validates to F1 = 1") {
  const auto d = gaussian_classes(1, 90, 1.0);
  for (std::size_t k : {2u, 5u, 10u}) {
    for (auto r : {Resampling::none, Resampling::undersample, Resampling::smote}) {
      const auto cv = kfold_cv(fixed(perfect_classifier()), d, {k, 3, r, 3});
      CHECK(cv.folds.size() == k);
      for (const auto& f : cv.folds) {
        CHECK(f.report.f1_weighted == 1.0);
        CHECK(fold_metric(f, "auc") == 1.0);
      }
      CHECK(cv.mean.at("f1_weighted") == 1.0);
      CHECK(cv.stddev.at("f1_weighted") == 0.0);
    }
  }
}

TEST_CASE("cross-validation is deterministic and covers every row") {
  const auto d = gaussian_classes(2, 200, 1.5);
  const auto a = kfold_cv(lda(), d, {5, 11, Resampling::smote, 5});
  const auto b = kfold_cv(lda(), d, {5, 11, Resampling::smote, 5});
  CHECK(a.oof_scores == b.oof_scores);
  CHECK(a.oof_scores.size() == d.size());
  std::set<std::size_t> rows;
  for (const auto& f : a.folds) {
    CHECK(f.scores.size() == f.test_rows.size());
    rows.insert(f.test_rows.begin(), f.test_rows.end());
  }
  CHECK(rows.size() == d.size());
  CHECK(a.mean.at("auc") > 0.8);
}

TEST_CASE("5x2 test on identical trainers gives p = 1") {
  const auto d = gaussian_classes(3, 120, 1.0);
  const auto t = paired_5x2_ttest(lda(), lda(), d, 7);
  CHECK(t.p == 1.0);
  CHECK(t.t == 0.0);
}

TEST_CASE("5x2 test detects a strong model against a coin flip") {
  const auto d = gaussian_classes(4, 200, 4.0);
  const auto t = paired_5x2_ttest(lda(), fixed(random_classifier(0.5, 1)), d, 7);
  CHECK(t.p < 0.05);
  CHECK(t.t > 0.0);
}

TEST_CASE("permutation test") {
  Rng rng(5);
  std::vector<double> a(50), b(50);
  std::vector<ClassLabel> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = i % 2 ? LS : SS;
    a[i] = rng.uniform();
    b[i] = (y[i] == LS ? 0.5 : 0.0) + 0.5 * rng.uniform();
  }
  CHECK(roc_permutation_test(a, a, y, 200, 1) == 1.0);
  const double p = roc_permutation_test(a, b, y, 500, 1);
  CHECK(p > 0.0);
  CHECK(p < 0.01);
  CHECK(roc_permutation_test(a, b, y, 500, 1) == p);
  CHECK_THROWS_AS(roc_permutation_test(a, b, y, 0, 1), DataError);
}

TEST_CASE("permutation p-values lie in (0, 1]") {
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(30), b(30);
    std::vector<ClassLabel> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      y[i] = i < 12 ? SS : LS;
      a[i] = rng.uniform();
      b[i] = rng.uniform();
    }
    const double p = roc_permutation_test(a, b, y, 99, static_cast<std::uint64_t>(rep));
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("calibrated trainer") {
  const auto d = gaussian_classes(7, 300, 1.0);
  ModelSpec s;
  s.kind = ModelKind::logistic;
  s.calibration = CalibrationTarget{CalibrationMetric::recall, 0.9};
  const auto c = make_trainer(s)(d, 0);
  const auto r = metric_report(confusion(c.predict(d), d.labels));
  CHECK(r.recall_ls >= 0.9);
  CHECK(c.threshold < 0.5);
}
