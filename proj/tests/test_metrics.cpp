#include <cmath>
#include <sstream>

#include "doctest.h"
#include "losflow/metrics.hpp"
#include "losflow/random.hpp"

using namespace losflow;

namespace {

constexpr auto LS = ClassLabel::LS;
constexpr auto SS = ClassLabel::SS;

// Pairwise concordance, ties 1/2.
double concordance(const std::vector<double>& s, const std::vector<ClassLabel>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != LS || y[j] != SS) continue;
      den += 1;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return num / den;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<ClassLabel> truth{LS, LS, SS};
  CHECK(confusion(truth, truth) == ConfusionCounts{2, 1, 0, 0});
  const std::vector<ClassLabel> flipped{SS, SS, LS};
  const auto c = confusion(flipped, truth);
  CHECK(c.tp == 0);
  CHECK(c.tn == 0);
  CHECK(c.fp == 1);
  CHECK(c.fn == 2);
  CHECK_THROWS_AS(confusion(std::vector<ClassLabel>{LS}, truth), DataError);
}

TEST_CASE("metric formulas on reference counts") {
  const auto r = metric_report({2752, 491, 1066, 288});
  CHECK(std::abs(r.precision_ls - 2752.0 / 3818.0) <= 1e-12);
  CHECK(std::abs(r.recall_ls - 2752.0 / 3040.0) <= 1e-12);
  CHECK(std::abs(r.accuracy - 3243.0 / 4597.0) <= 1e-12);
  CHECK(std::abs(r.precision_ls - 0.7208) <= 1e-4);
  CHECK(std::abs(r.recall_ls - 0.9053) <= 1e-4);
  CHECK(std::abs(r.accuracy - 0.7055) <= 1e-4);
  CHECK(std::abs(r.precision_ss - 491.0 / 779.0) <= 1e-12);
  CHECK(std::abs(r.recall_ss - 491.0 / 1557.0) <= 1e-12);
  const double f_ls = 2 * r.precision_ls * r.recall_ls / (r.precision_ls + r.recall_ls);
  const double f_ss = 2 * r.precision_ss * r.recall_ss / (r.precision_ss + r.recall_ss);
  CHECK(std::abs(r.f1_ls - f_ls) <= 1e-12);
  CHECK(std::abs(r.f1_weighted - (3040 * f_ls + 1557 * f_ss) / 4597) <= 1e-12);
  CHECK(r.undefined.empty());
  CHECK(r.value("recall_ls") == r.recall_ls);
  CHECK_THROWS(r.value("nonsense"));
}

TEST_CASE("perfect and balanced reports") {
  const auto r = metric_report({5, 5, 0, 0});
  for (double v : {r.accuracy, r.precision_ls, r.precision_ss, r.recall_ls, r.recall_ss, r.f1_ls, r.f1_ss,
                   r.f1_weighted}) {
    CHECK(v == 1.0);
  }
  const auto h = metric_report({1, 1, 1, 1});
  CHECK(h.precision_ls == 0.5);
  CHECK(h.recall_ls == 0.5);
  CHECK(h.f1_ls == 0.5);
}

TEST_CASE("undefined ratios are zero and flagged") {
  const auto r = metric_report({0, 4, 0, 0});
  CHECK(r.precision_ls == 0.0);
  CHECK(r.recall_ls == 0.0);
  CHECK(std::find(r.undefined.begin(), r.undefined.end(), "precision_ls") != r.undefined.end());
  CHECK(std::find(r.undefined.begin(), r.undefined.end(), "recall_ls") != r.undefined.end());
  CHECK(r.accuracy == 1.0);
  const auto j = to_json(r);
  CHECK(j.contains("undefined"));
  CHECK(j["counts"]["tn"] == 4);
}

TEST_CASE("metric report property: random counts") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    ConfusionCounts c{static_cast<std::int64_t>(rng.index(50)) + 1, static_cast<std::int64_t>(rng.index(50)) + 1,
                      static_cast<std::int64_t>(rng.index(50)), static_cast<std::int64_t>(rng.index(50))};
    const auto r = metric_report(c);
    CHECK(std::abs(r.accuracy - static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total())) <= 1e-12);
    const double w = (c.support_ls() * r.f1_ls + c.support_ss() * r.f1_ss) / static_cast<double>(c.total());
    CHECK(std::abs(r.f1_weighted - w) <= 1e-12);
  }
}

TEST_CASE("four point AUC") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  const std::vector<ClassLabel> y{LS, SS, LS, SS};
  CHECK(auc(roc_curve(s, y)) == 0.75);
  CHECK(roc_auc(s, y) == 0.75);
  CHECK(concordance(s, y) == 0.75);
}

TEST_CASE("roc curve shape") {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.3, 0.1};
  const std::vector<ClassLabel> y{LS, SS, LS, LS, SS};
  const auto c = roc_curve(s, y);
  CHECK(c.kind == CurveKind::roc);
  CHECK(std::isinf(c.points.front().threshold));
  CHECK(c.points.front().x == 0.0);
  CHECK(c.points.front().y == 0.0);
  CHECK(c.points.back().x == 1.0);
  CHECK(c.points.back().y == 1.0);
  CHECK(c.points.size() == 5);  // +inf plus four distinct scores
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    CHECK(c.points[i].threshold < c.points[i - 1].threshold);
    CHECK(c.points[i].x >= c.points[i - 1].x);
    CHECK(c.points[i].y >= c.points[i - 1].y);
  }
  CHECK_THROWS_AS(roc_curve(s, std::vector<ClassLabel>(5, LS)), DataError);
}

TEST_CASE("AUC properties on random data") {
  Rng rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 5 + rng.index(60);
    std::vector<double> s(n);
    std::vector<ClassLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 3 == 0 ? SS : LS;
      s[i] = std::round(rng.uniform() * 20) / 20;  // ties are common
    }
    const double a = auc(roc_curve(s, y));
    CHECK(std::abs(a - concordance(s, y)) <= 1e-12);
    CHECK(std::abs(a - roc_auc(s, y)) <= 1e-12);
    std::vector<double> e(n), f(n), flip(n);
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = std::exp(s[i]);
      f[i] = 3.0 * s[i] - 7.0;
      flip[i] = 1.0 - s[i];
    }
    CHECK(std::abs(auc(roc_curve(e, y)) - a) <= 1e-12);
    CHECK(std::abs(auc(roc_curve(f, y)) - a) <= 1e-12);
    CHECK(std::abs(auc(roc_curve(flip, y)) + a - 1.0) <= 1e-12);
  }
}

TEST_CASE("perfect ranking") {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  const std::vector<ClassLabel> y{SS, SS, LS, LS};
  CHECK(auc(roc_curve(s, y)) == 1.0);
  const auto pr = pr_curve(s, y);
  for (const auto& p : pr.points) {
    if (p.defined && p.threshold >= 0.8) CHECK(p.y == 1.0);
  }
}

TEST_CASE("pr curve") {
  const std::vector<double> s{0.9, 0.8, 0.2};
  const std::vector<ClassLabel> y{LS, LS, SS};
  const auto c = pr_curve(s, y);
  REQUIRE(c.points.size() == 4);
  CHECK_FALSE(c.points[0].defined);
  CHECK(c.points[0].x == 0.0);
  CHECK(c.points[1].x == 0.5);
  CHECK(c.points[1].y == 1.0);
  CHECK(c.points[2].x == 1.0);
  CHECK(c.points[2].y == 1.0);
  CHECK(c.points[3].y == doctest::Approx(2.0 / 3.0));
  for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i].x >= c.points[i - 1].x);
  CHECK_THROWS_AS(pr_curve(s, std::vector<ClassLabel>(3, SS)), DataError);
}

TEST_CASE("curve csv") {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<ClassLabel> y{LS, SS};
  std::ostringstream out;
  write_curve_csv(out, roc_curve(s, y));
  CHECK(out.str().rfind("threshold,x,y\n", 0) == 0);
  CHECK(out.str().find("inf,0,0") != std::string::npos);
}
