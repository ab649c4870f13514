#include "losflow/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "losflow/stats.hpp"

namespace losflow {

std::optional<double> scorer_value(const FeatureScore& s, std::string_view scorer) {
  if (scorer == "pearson") return s.pearson;
  if (scorer == "spearman") return s.spearman;
  if (scorer == "cramers_v") return s.cramers_v;
  if (scorer == "chi_square") return s.chi_square;
  if (scorer == "f_statistic") return s.f_statistic;
  if (scorer == "mutual_information") return s.mutual_information;
  throw DataError("unknown scorer '" + std::string(scorer) + "'");
}

std::vector<std::size_t> discretize(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw DataError("discretize: bins must be positive");
  const std::size_t n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (distinct.size() <= bins) {
      out[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin());
    } else {
      // Tied values share the bin of their first sorted position.
      const auto first = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin());
      out[i] = first * bins / n;
    }
  }
  return out;
}

namespace {

struct Contingency {
  std::vector<std::array<double, 2>> cells;  // category x {SS, LS}
  double n = 0.0;
};

Contingency tabulate(std::span<const std::size_t> category, std::span<const ClassLabel> labels) {
  Contingency t;
  std::size_t width = 0;
  for (auto c : category) width = std::max(width, c + 1);
  t.cells.assign(width, {0.0, 0.0});
  for (std::size_t i = 0; i < category.size(); ++i) t.cells[category[i]][is_ls(labels[i]) ? 1 : 0] += 1.0;
  std::erase_if(t.cells, [](const auto& row) { return row[0] + row[1] == 0.0; });
  t.n = static_cast<double>(category.size());
  return t;
}

void contingency_scores(const Contingency& t, FeatureScore& s) {
  double col[2] = {0.0, 0.0};
  for (const auto& row : t.cells) {
    col[0] += row[0];
    col[1] += row[1];
  }
  double chi = 0.0, mi = 0.0;
  for (const auto& row : t.cells) {
    const double row_total = row[0] + row[1];
    for (int c = 0; c < 2; ++c) {
      const double expected = row_total * col[c] / t.n;
      if (expected > 0.0) chi += (row[c] - expected) * (row[c] - expected) / expected;
      if (row[c] > 0.0) mi += row[c] / t.n * std::log(row[c] * t.n / (row_total * col[c]));
    }
  }
  s.chi_square = chi;
  s.mutual_information = std::max(0.0, mi);
  const double dof = static_cast<double>(std::min<std::size_t>(t.cells.size() - 1, 1));
  if (dof > 0.0) s.cramers_v = std::min(1.0, std::sqrt(chi / (t.n * dof)));
}

std::optional<double> anova_f(std::span<const double> x, std::span<const ClassLabel> labels) {
  double sum[2] = {0, 0}, count[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int g = is_ls(labels[i]) ? 1 : 0;
    sum[g] += x[i];
    count[g] += 1.0;
  }
  const double grand = (sum[0] + sum[1]) / (count[0] + count[1]);
  const double mean[2] = {sum[0] / count[0], sum[1] / count[1]};
  double within = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[is_ls(labels[i]) ? 1 : 0];
    within += d * d;
  }
  const double between = count[0] * (mean[0] - grand) * (mean[0] - grand) + count[1] * (mean[1] - grand) * (mean[1] - grand);
  if (within <= 0.0) return std::nullopt;
  return between / (within / (count[0] + count[1] - 2.0));
}

}  // namespace

std::vector<FeatureScore> feature_scores(const EncounterTable& table, std::span<const ClassLabel> labels,
                                         const FeatureScoreOptions& options) {
  if (labels.size() != table.size()) throw DataError("feature_scores: label count does not match rows");
  const auto n_ls = std::count(labels.begin(), labels.end(), ClassLabel::LS);
  if (n_ls == 0 || n_ls == static_cast<std::ptrdiff_t>(labels.size())) {
    throw DataError("feature_scores: both classes are required");
  }
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = is_ls(labels[i]) ? 1.0 : 0.0;

  std::vector<FeatureScore> out;
  for (const auto& col : table.columns()) {
    if (col.missing_count() > 0) throw DataError("feature_scores: column '" + col.name + "' has missing values");
    FeatureScore s;
    s.name = col.name;
    s.kind = col.kind;
    std::vector<std::size_t> category(col.values.size());
    if (col.kind == FeatureKind::numeric) {
      std::vector<double> x(col.values.size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::get<double>(col.values[i]);
      s.pearson = stats::pearson(x, y);
      s.spearman = stats::spearman(x, y);
      s.f_statistic = anova_f(x, labels);
      category = discretize(x, options.bins);
    } else {
      std::map<std::string, std::size_t> index;
      for (const auto& v : col.values) index.emplace(std::get<std::string>(v), 0);
      std::size_t next = 0;
      for (auto& [_, i] : index) i = next++;
      for (std::size_t i = 0; i < category.size(); ++i) category[i] = index.at(std::get<std::string>(col.values[i]));
    }
    contingency_scores(tabulate(category, labels), s);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RankedFeature> ensemble_rank(std::span<const FeatureScore> scores) {
  if (scores.empty()) throw DataError("ensemble_rank: no features");
  std::vector<double> rank_sum(scores.size(), 0.0), rank_count(scores.size(), 0.0);
  for (const char* scorer : kScorerNames) {
    std::vector<std::size_t> members;
    std::vector<double> keys;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (auto v = scorer_value(scores[i], scorer)) {
        members.push_back(i);
        keys.push_back(-std::fabs(*v));
      }
    }
    const auto ranks = stats::average_ranks(keys);
    for (std::size_t m = 0; m < members.size(); ++m) {
      rank_sum[members[m]] += ranks[m];
      rank_count[members[m]] += 1.0;
    }
  }
  std::vector<RankedFeature> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (rank_count[i] == 0.0) throw DataError("ensemble_rank: feature '" + scores[i].name + "' has no scores");
    out.push_back({scores[i].name, rank_sum[i] / rank_count[i], 0});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.mean_rank != b.mean_rank ? a.mean_rank < b.mean_rank : a.name < b.name;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

}  // namespace losflow
