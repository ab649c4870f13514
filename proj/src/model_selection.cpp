#include "losflow/model_selection.hpp"

#include <algorithm>
#include <cmath>

#include "losflow/random.hpp"
#include "losflow/resample.hpp"
#include "losflow/stats.hpp"

namespace losflow {

std::string_view to_string(Resampling r) {
  switch (r) {
    case Resampling::none:
      return "none";
    case Resampling::undersample:
      return "undersample";
    case Resampling::smote:
      return "smote";
  }
  return "none";
}

Resampling parse_resampling(std::string_view text) {
  if (text == "none") return Resampling::none;
  if (text == "undersample") return Resampling::undersample;
  if (text == "smote") return Resampling::smote;
  throw DataError("unknown resampling '" + std::string(text) + "'");
}

Trainer make_trainer(const ModelSpec& spec) {
  return [spec](const Dataset& train, std::uint64_t) {
    CalibratedClassifier c;
    switch (spec.kind) {
      case ModelKind::logistic:
        c.model = train_logistic(train.features, train.labels, spec.logistic);
        break;
      case ModelKind::lda:
        c.model = train_lda(train.features, train.labels, spec.lda_regularization);
        break;
      default:
        c.model = spec.fixed;
        break;
    }
    if (spec.calibration) c.threshold = calibrate_threshold(c.model.score(train), train.labels, *spec.calibration);
    return c;
  };
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const ClassLabel> labels, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw DataError("k-fold: k must be at least 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[is_ls(labels[i]) ? 1 : 0].push_back(i);
  if (k > by_class[0].size() || k > by_class[1].size()) {
    throw DataError("k-fold: k = " + std::to_string(k) + " exceeds the smaller class count");
  }
  std::vector<std::vector<std::size_t>> folds(k);
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) folds[(offset + i) % k].push_back(rows[i]);
    offset += rows.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> sorted_rows) {
  std::vector<std::size_t> out;
  out.reserve(n - sorted_rows.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < sorted_rows.size() && sorted_rows[j] == i) {
      ++j;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

Dataset resample(const Dataset& train, Resampling r, std::size_t k_neighbors, std::uint64_t seed) {
  switch (r) {
    case Resampling::undersample:
      return undersample(train, seed);
    case Resampling::smote:
      return smote(train, k_neighbors, seed);
    case Resampling::none:
      break;
  }
  return train;
}

FoldResult evaluate(const Trainer& trainer, const Dataset& data, std::vector<std::size_t> test_rows, Resampling r,
                    std::size_t k_neighbors, std::uint64_t seed) {
  const auto train_rows = complement(data.size(), test_rows);
  const Dataset train = resample(data.select(train_rows), r, k_neighbors, derive_seed(seed, "resample"));
  const auto model = trainer(train, derive_seed(seed, "model"));
  const Dataset test = data.select(test_rows);
  const auto scores = model.model.score(test);
  FoldResult f;
  f.report = metric_report(confusion(model.labels_from_scores(scores), test.labels));
  f.auc = roc_auc(scores, test.labels);
  f.test_rows = std::move(test_rows);
  f.scores = scores;
  return f;
}

const char* const kSummaryMetrics[] = {"accuracy", "precision_ls", "precision_ss", "recall_ls", "recall_ss",
                                       "f1_ls",    "f1_ss",        "f1_weighted",  "auc"};

}  // namespace

double fold_metric(const FoldResult& fold, std::string_view name) {
  return name == "auc" ? fold.auc : fold.report.value(name);
}

CvResult kfold_cv(const Trainer& trainer, const Dataset& data, const CvOptions& options) {
  auto folds = stratified_folds(data.labels, options.k, derive_seed(options.seed, "folds"));
  CvResult result;
  result.oof_scores.assign(data.size(), 0.0);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    result.folds.push_back(evaluate(trainer, data, std::move(folds[i]), options.resampling, options.smote_neighbors,
                                    derive_seed(options.seed, "fold/" + std::to_string(i))));
  }
  for (const auto& f : result.folds) {
    for (std::size_t i = 0; i < f.test_rows.size(); ++i) result.oof_scores[f.test_rows[i]] = f.scores[i];
  }
  for (const char* name : kSummaryMetrics) {
    std::vector<double> v;
    for (const auto& f : result.folds) v.push_back(fold_metric(f, name));
    result.mean[name] = stats::mean(v);
    result.stddev[name] = stats::stddev(v);
  }
  return result;
}

TTestResult paired_5x2_ttest(const Trainer& a, const Trainer& b, const Dataset& data, std::uint64_t seed,
                             std::string_view metric, Resampling resampling) {
  double first_difference = 0.0, variance_sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    const std::string split = "5x2/" + std::to_string(i);
    auto halves = stratified_folds(data.labels, 2, derive_seed(seed, split));
    double diff[2];
    for (int j = 0; j < 2; ++j) {
      const auto run_seed = derive_seed(seed, split + "/" + std::to_string(j));
      const auto ra = evaluate(a, data, halves[j], resampling, 5, run_seed);
      const auto rb = evaluate(b, data, halves[j], resampling, 5, run_seed);
      diff[j] = fold_metric(ra, metric) - fold_metric(rb, metric);
    }
    if (i == 0) first_difference = diff[0];
    const double mean = 0.5 * (diff[0] + diff[1]);
    variance_sum += (diff[0] - mean) * (diff[0] - mean) + (diff[1] - mean) * (diff[1] - mean);
  }
  TTestResult r;
  if (variance_sum == 0.0) {
    r.t = first_difference == 0.0 ? 0.0 : std::copysign(HUGE_VAL, first_difference);
    r.p = first_difference == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = first_difference / std::sqrt(variance_sum / 5.0);
  r.p = stats::student_t_two_sided_p(r.t, 5.0);
  return r;
}

double roc_permutation_test(std::span<const double> scores_a, std::span<const double> scores_b,
                            std::span<const ClassLabel> truth, std::size_t n_permutations, std::uint64_t seed) {
  if (n_permutations < 1) throw DataError("permutation test: n_permutations must be at least 1");
  if (scores_a.size() != truth.size() || scores_b.size() != truth.size()) {
    throw DataError("permutation test: score vectors must align with truth");
  }
  const double observed = std::fabs(roc_auc(scores_a, truth) - roc_auc(scores_b, truth));
  std::vector<double> pa(truth.size()), pb(truth.size());
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < n_permutations; ++p) {
    Rng rng(derive_seed(seed, "perm/" + std::to_string(p)));
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool swap = rng.uniform() < 0.5;
      pa[i] = swap ? scores_b[i] : scores_a[i];
      pb[i] = swap ? scores_a[i] : scores_b[i];
    }
    const double stat = std::fabs(roc_auc(pa, truth) - roc_auc(pb, truth));
    if (stat >= observed - 1e-12) ++extreme;
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(n_permutations + 1);
}

}  // namespace losflow
