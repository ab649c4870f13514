#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "losflow/cohort.hpp"
#include "losflow/preprocess.hpp"
#include "losflow/random.hpp"

using namespace losflow;

namespace {

Encounter enc(std::string id, std::string patient, double triage, double admit, double los) {
  return {std::move(id), std::move(patient), triage, admit, los};
}

// Rows with only core fields; columns are added by the caller.
EncounterTable bare(std::size_t n) {
  std::vector<Encounter> e;
  for (std::size_t i = 0; i < n; ++i) {
    e.push_back(enc("e" + std::to_string(i), "p" + std::to_string(i), static_cast<double>(i), i + 1.0, 10.0));
  }
  return EncounterTable(std::move(e));
}

FeatureValue num(double v) { return v; }
FeatureValue cat(const char* v) { return std::string(v); }
const FeatureValue kNa{};

double at(const EncounterTable& t, std::string_view col, std::size_t row) { return *t.column(col).number(row); }

}  // namespace

TEST_CASE("sparse feature pruning keeps ratios strictly below the threshold") {
  auto t = bare(5);
  t.add_column({"dense", FeatureKind::numeric, {num(1), num(2), num(3), num(4), num(5)}});
  t.add_column({"sparse80", FeatureKind::numeric, {num(1), kNa, kNa, kNa, kNa}});
  t.add_column({"at75", FeatureKind::numeric, {num(1), kNa, kNa, kNa, num(2)}});  // 0.6
  t.add_column({"empty", FeatureKind::numeric, {kNa, kNa, kNa, kNa, kNa}});
  const auto r = drop_sparse_features(t, 0.75);
  CHECK(r.table.feature_names() == std::vector<std::string>{"dense", "at75"});
  CHECK(r.dropped == std::vector<std::string>{"sparse80", "empty"});
  const auto all = drop_sparse_features(t, 1.0);
  CHECK(all.dropped == std::vector<std::string>{"empty"});
  // idempotent
  const auto again = drop_sparse_features(r.table, 0.75);
  CHECK(again.dropped.empty());
  CHECK(again.table.feature_names() == r.table.feature_names());
  CHECK_THROWS_AS(drop_sparse_features(t, 1.5), DataError);
}

TEST_CASE("rare test counting") {
  auto t = bare(3);
  t.add_column({"a", FeatureKind::numeric, {num(1), kNa, kNa}});
  t.add_column({"b", FeatureKind::numeric, {num(1), kNa, num(4)}});
  t.add_column({"c", FeatureKind::categorical, {cat("x"), kNa, kNa}});
  t.add_column({"d", FeatureKind::numeric, {kNa, kNa, kNa}});
  t.add_column({"e", FeatureKind::numeric, {kNa, kNa, num(2)}});
  const std::vector<std::string> dropped{"a", "b", "c", "d", "e"};
  const auto pruned = bare(3);
  const auto out = count_rare_tests(pruned, t, dropped, "rare_test_count");
  CHECK(at(out, "rare_test_count", 0) == 3.0);
  CHECK(at(out, "rare_test_count", 1) == 0.0);
  CHECK(at(out, "rare_test_count", 2) == 2.0);
  const std::vector<std::string> none_present{"d"};
  const auto zero = count_rare_tests(pruned, t, none_present, "z");
  for (std::size_t r = 0; r < 3; ++r) CHECK(at(zero, "z", r) == 0.0);
  const std::vector<std::string> unknown{"nope"};
  CHECK_THROWS_AS(count_rare_tests(pruned, t, unknown, "z"), DataError);
}

TEST_CASE("imputation by mean and mode") {
  auto t = bare(4);
  t.add_column({"x", FeatureKind::numeric, {num(1), kNa, num(3), num(5)}});
  t.add_column({"s", FeatureKind::categorical, {cat("a"), cat("a"), kNa, cat("b")}});
  t.add_column({"tie", FeatureKind::categorical, {cat("b"), cat("a"), kNa, kNa}});
  const auto out = impute(t);
  CHECK(at(out, "x", 1) == doctest::Approx(3.0));
  CHECK(std::get<std::string>(out.column("s").values[2]) == "a");
  CHECK(std::get<std::string>(out.column("tie").values[2]) == "a");
  CHECK(std::get<std::string>(out.column("tie").values[3]) == "a");
  // observed values untouched
  CHECK(at(out, "x", 0) == 1.0);
  CHECK(at(out, "x", 3) == 5.0);
  t.add_column({"gone", FeatureKind::numeric, {kNa, kNa, kNa, kNa}});
  CHECK_THROWS_AS(impute(t), DataError);
}

TEST_CASE("imputer fitted on train applies to test") {
  auto train = bare(3);
  train.add_column({"x", FeatureKind::numeric, {num(2), num(4), num(6)}});
  auto test = bare(2);
  test.add_column({"x", FeatureKind::numeric, {kNa, num(100)}});
  const auto imp = Imputer::fit(train);
  const auto out = imp.apply(test);
  CHECK(at(out, "x", 0) == 4.0);
  CHECK(at(out, "x", 1) == 100.0);
}

TEST_CASE("imputation preserves the observed mean") {
  Rng rng(3);
  auto t = bare(200);
  std::vector<FeatureValue> v;
  double sum = 0.0;
  int k = 0;
  for (int i = 0; i < 200; ++i) {
    if (rng.bernoulli(0.3)) {
      v.push_back(kNa);
    } else {
      const double x = rng.normal(5.0, 2.0);
      sum += x;
      ++k;
      v.push_back(x);
    }
  }
  t.add_column({"x", FeatureKind::numeric, v});
  const auto out = impute(t);
  double after = 0.0;
  for (std::size_t r = 0; r < 200; ++r) after += at(out, "x", r);
  CHECK(after / 200.0 == doctest::Approx(sum / k).epsilon(1e-12));
}

TEST_CASE("correlation pruning") {
  auto t = bare(5);
  t.add_column({"a", FeatureKind::numeric, {num(1), num(2), num(3), num(4), num(6)}});
  t.add_column({"b", FeatureKind::numeric, {num(1), num(2), num(3), num(4), num(6)}});
  t.add_column({"neg", FeatureKind::numeric, {num(-1), num(-2), num(-3), num(-4), num(-6)}});
  t.add_column({"other", FeatureKind::numeric, {num(5), num(1), num(4), num(2), num(2)}});
  t.add_column({"flat", FeatureKind::numeric, {num(7), num(7), num(7), num(7), num(7)}});
  t.add_column({"flat2", FeatureKind::numeric, {num(7), num(7), num(7), num(7), num(7)}});
  const auto r = drop_correlated(t, 0.99);
  CHECK(r.dropped == std::vector<std::string>{"b", "neg"});
  CHECK(r.table.feature_names() == std::vector<std::string>{"a", "other", "flat", "flat2"});
}

TEST_CASE("correlation pruning leaves every retained pair below the threshold") {
  Rng rng(8);
  auto t = bare(60);
  std::vector<double> base(60);
  for (auto& b : base) b = rng.normal();
  for (int c = 0; c < 6; ++c) {
    std::vector<FeatureValue> v;
    for (int i = 0; i < 60; ++i) v.push_back(base[i] + (c % 2 ? 0.01 : 1.0) * rng.normal());
    t.add_column({"f" + std::to_string(c), FeatureKind::numeric, v});
  }
  const double rho = 0.9;
  const auto r = drop_correlated(t, rho);
  const auto& cols = r.table.columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      std::vector<double> x, y;
      for (std::size_t k = 0; k < 60; ++k) {
        x.push_back(*cols[i].number(k));
        y.push_back(*cols[j].number(k));
      }
      double mx = 0, my = 0;
      for (std::size_t k = 0; k < 60; ++k) {
        mx += x[k] / 60;
        my += y[k] / 60;
      }
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t k = 0; k < 60; ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
      }
      CHECK(std::abs(sxy / std::sqrt(sxx * syy)) <= rho);
    }
  }
}

TEST_CASE("one-hot encoding") {
  auto t = bare(4);
  t.add_column({"day", FeatureKind::categorical, {cat("tue"), cat("mon"), kNa, cat("tue")}});
  t.add_column({"x", FeatureKind::numeric, {num(1), num(2), num(3), num(4)}});
  const std::vector<std::string> cols{"day"};
  const auto enc = OneHotEncoder::fit(t, cols);
  const auto out = enc.apply(t);
  CHECK_FALSE(out.find_column("day").has_value());
  CHECK(at(out, "day=mon", 1) == 1.0);
  CHECK(at(out, "day=tue", 0) == 1.0);
  for (std::size_t r : {0u, 1u, 3u}) CHECK(at(out, "day=mon", r) + at(out, "day=tue", r) == 1.0);
  CHECK(at(out, "day=mon", 2) + at(out, "day=tue", 2) == 0.0);

  auto unseen = bare(1);
  unseen.add_column({"day", FeatureKind::categorical, {cat("sun")}});
  unseen.add_column({"x", FeatureKind::numeric, {num(0)}});
  const auto u = enc.apply(unseen);
  CHECK(at(u, "day=mon", 0) + at(u, "day=tue", 0) == 0.0);
  CHECK_FALSE(u.find_column("day=sun").has_value());

  const std::vector<std::string> bad{"x"};
  CHECK_THROWS_AS(one_hot_encode(t, bad), DataError);
}

TEST_CASE("temporal split is a half-open partition") {
  const auto t = bare(6);  // triage times 0..5
  const auto s = temporal_split(t, 3.0);
  CHECK(s.train.size() == 3);
  CHECK(s.test.size() == 3);
  CHECK(s.test.encounter(0).triage_time == 3.0);
  CHECK(temporal_split(t, -1.0).train.size() == 0);
  CHECK(temporal_split(t, 100.0).test.size() == 0);
}

TEST_CASE("percentile by linear interpolation") {
  CHECK(percentile({1, 2, 3, 4}, 0.75) == doctest::Approx(3.25));
  CHECK(percentile({5, 1, 3}, 0.5) == 3.0);
  CHECK(percentile({7}, 0.75) == 7.0);
  CHECK(percentile({1, 2}, 0.0) == 1.0);
  CHECK(percentile({1, 2}, 1.0) == 2.0);
  CHECK_THROWS_AS(percentile({}, 0.5), DataError);
}

TEST_CASE("engineered patient history") {
  // p1 visits three times; the second visit's admit decision comes before the
  // first visit's discharge.
  std::vector<Encounter> e{enc("a", "p1", 0, 1, 50), enc("b", "p1", 10, 12, 20), enc("c", "p1", 100, 101, 5),
                           enc("d", "p2", 5, 6, 30)};
  EncounterTable t(std::move(e));
  t.add_column({"lab_x", FeatureKind::numeric, {num(8), kNa, num(12), num(9)}});
  t.add_column({"lab_y", FeatureKind::numeric, {num(12), num(1), kNa, kNa}});
  t.add_column({"vit_sbp_1", FeatureKind::numeric, {num(150), num(85), num(120), kNa}});
  t.add_column({"vit_sbp_2", FeatureKind::numeric, {num(100), kNa, num(80), kNa}});
  t.add_column({"ip_diag_count", FeatureKind::numeric, {num(2), num(3), num(1), num(4)}});
  LabPercentiles ref;
  ref.p75 = {{"lab_x", 10.0}, {"lab_y", 10.0}};
  const auto out = engineer_features(t, ref);

  CHECK(at(out, "previous_encounter_count", 0) == 0.0);
  CHECK(at(out, "previous_encounter_count", 1) == 1.0);
  CHECK(at(out, "previous_encounter_count", 2) == 2.0);
  CHECK(at(out, "previous_encounter_count", 3) == 0.0);
  CHECK(is_missing(out.column("previous_encounter_most_recent_los").values[0]));
  // a is still in hospital when b's admit decision is made
  CHECK(is_missing(out.column("previous_encounter_most_recent_los").values[1]));
  CHECK(at(out, "previous_encounter_most_recent_los", 2) == 20.0);
  CHECK(at(out, "previous_lab_test_count", 2) == 3.0);
  CHECK(at(out, "previous_lab_test_uniq_count", 2) == 2.0);
  CHECK(at(out, "previous_ip_diag_count", 2) == 5.0);
  CHECK(at(out, "wait_time_to_admit", 1) == 2.0);
  // lab values {8, 12} against percentiles {10, 10}
  CHECK(at(out, "outlier_lab_result_with_percentile_75", 0) == 1.0);
  CHECK(at(out, "outlier_lab_result_with_percentile_75", 2) == 1.0);
  CHECK(at(out, "outlier_lab_result_with_percentile_75", 3) == 0.0);
  CHECK(at(out, "vit_total_bp_count", 0) == 2.0);
  CHECK(at(out, "vit_high_bp_count", 0) == 1.0);
  CHECK(at(out, "vit_low_bp_count", 1) == 1.0);
  CHECK(at(out, "vit_low_bp_count", 2) == 1.0);
  CHECK(at(out, "vit_current_visit_vital_test_count", 3) == 0.0);
  CHECK(out.column("triage_dayofweek").kind == FeatureKind::categorical);
  CHECK_THROWS_AS(engineer_features(out, ref), DataError);
}

TEST_CASE("engineered features use no future rows") {
  CohortConfig cfg;
  cfg.n_patients = 150;
  cfg.repeat_visit_probability = 0.6;
  cfg.seed = 17;
  const auto t = generate_cohort(cfg);
  const auto ref = LabPercentiles::fit(t);
  const auto full = engineer_features(t, ref);
  const auto names = engineered_feature_names();
  for (std::size_t r = 0; r < t.size(); r += 7) {
    std::vector<std::size_t> keep;
    for (std::size_t q = 0; q < t.size(); ++q) {
      if (q == r || t.encounter(q).triage_time < t.encounter(r).triage_time) keep.push_back(q);
    }
    const auto sub = engineer_features(t.select_rows(keep), ref);
    const auto pos = static_cast<std::size_t>(std::find(keep.begin(), keep.end(), r) - keep.begin());
    for (const auto& name : names) {
      CHECK(sub.column(name).values[pos] == full.column(name).values[r]);
    }
  }
}
