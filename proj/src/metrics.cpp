#include "losflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "losflow/csv.hpp"
#include "losflow/stats.hpp"

namespace losflow {

ConfusionCounts confusion(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth) {
  if (predicted.size() != truth.size()) throw DataError("confusion: prediction and truth lengths differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = is_ls(predicted[i]), t = is_ls(truth[i]);
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double ratio(std::int64_t num, std::int64_t den, const char* name, std::vector<std::string>& undefined) {
  if (den == 0) {
    undefined.emplace_back(name);
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, const char* name, std::vector<std::string>& undefined) {
  if (p + r == 0.0) {
    undefined.emplace_back(name);
    return 0.0;
  }
  return 2.0 * p * r / (p + r);
}

void require_both_classes(std::span<const double> scores, std::span<const ClassLabel> truth, bool need_negative) {
  if (scores.size() != truth.size()) throw DataError("curve: scores and truth lengths differ");
  const auto pos = std::count(truth.begin(), truth.end(), ClassLabel::LS);
  if (pos == 0) throw DataError("curve: truth has no LS rows");
  if (need_negative && pos == static_cast<std::ptrdiff_t>(truth.size())) throw DataError("curve: truth has no SS rows");
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("curve: NaN score");
  }
}

// Cumulative (tp, fp) at each distinct threshold, highest first.
template <typename Emit>
void sweep(std::span<const double> scores, std::span<const ClassLabel> truth, Emit emit) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) is_ls(truth[order[i]]) ? ++tp : ++fp;
    emit(t, tp, fp);
  }
}

}  // namespace

MetricReport metric_report(const ConfusionCounts& c) {
  if (c.total() <= 0) throw DataError("metric_report: empty confusion matrix");
  MetricReport r;
  r.counts = c;
  auto& u = r.undefined;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.precision_ls = ratio(c.tp, c.tp + c.fp, "precision_ls", u);
  r.precision_ss = ratio(c.tn, c.tn + c.fn, "precision_ss", u);
  r.recall_ls = ratio(c.tp, c.tp + c.fn, "recall_ls", u);
  r.recall_ss = ratio(c.tn, c.tn + c.fp, "recall_ss", u);
  r.f1_ls = harmonic(r.precision_ls, r.recall_ls, "f1_ls", u);
  r.f1_ss = harmonic(r.precision_ss, r.recall_ss, "f1_ss", u);
  r.f1_weighted = (static_cast<double>(c.support_ls()) * r.f1_ls + static_cast<double>(c.support_ss()) * r.f1_ss) /
                  static_cast<double>(c.total());
  return r;
}

double MetricReport::value(std::string_view name) const {
  if (name == "accuracy") return accuracy;
  if (name == "precision_ls") return precision_ls;
  if (name == "precision_ss") return precision_ss;
  if (name == "recall_ls") return recall_ls;
  if (name == "recall_ss") return recall_ss;
  if (name == "f1_ls") return f1_ls;
  if (name == "f1_ss") return f1_ss;
  if (name == "f1_weighted") return f1_weighted;
  throw DataError("unknown metric '" + std::string(name) + "'");
}

config::Json to_json(const MetricReport& r) {
  config::Json j;
  j["accuracy"] = r.accuracy;
  j["precision_ls"] = r.precision_ls;
  j["precision_ss"] = r.precision_ss;
  j["recall_ls"] = r.recall_ls;
  j["recall_ss"] = r.recall_ss;
  j["f1_ls"] = r.f1_ls;
  j["f1_ss"] = r.f1_ss;
  j["f1_weighted"] = r.f1_weighted;
  j["counts"] = {{"tp", r.counts.tp}, {"tn", r.counts.tn}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
  j["undefined"] = r.undefined;
  return j;
}

CurvePoints roc_curve(std::span<const double> scores, std::span<const ClassLabel> truth) {
  require_both_classes(scores, truth, true);
  const auto pos = static_cast<double>(std::count(truth.begin(), truth.end(), ClassLabel::LS));
  const auto neg = static_cast<double>(truth.size()) - pos;
  CurvePoints c{CurveKind::roc, {{std::numeric_limits<double>::infinity(), 0.0, 0.0, true}}};
  sweep(scores, truth, [&](double t, std::int64_t tp, std::int64_t fp) {
    c.points.push_back({t, static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, true});
  });
  return c;
}

CurvePoints pr_curve(std::span<const double> scores, std::span<const ClassLabel> truth) {
  require_both_classes(scores, truth, false);
  const auto pos = static_cast<double>(std::count(truth.begin(), truth.end(), ClassLabel::LS));
  CurvePoints c{CurveKind::pr, {{std::numeric_limits<double>::infinity(), 0.0, 0.0, false}}};
  sweep(scores, truth, [&](double t, std::int64_t tp, std::int64_t fp) {
    c.points.push_back(
        {t, static_cast<double>(tp) / pos, static_cast<double>(tp) / static_cast<double>(tp + fp), true});
  });
  return c;
}

double auc(const CurvePoints& curve) {
  double area = 0.0;
  const CurvePoint* prev = nullptr;
  for (const auto& p : curve.points) {
    if (!p.defined) continue;
    if (prev) area += (p.x - prev->x) * (p.y + prev->y) * 0.5;
    prev = &p;
  }
  return area;
}

double roc_auc(std::span<const double> scores, std::span<const ClassLabel> truth) {
  require_both_classes(scores, truth, true);
  const auto ranks = stats::average_ranks(scores);
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (is_ls(truth[i])) {
      pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double neg = static_cast<double>(truth.size()) - pos;
  return (rank_sum - pos * (pos + 1.0) * 0.5) / (pos * neg);
}

void write_curve_csv(std::ostream& out, const CurvePoints& curve) {
  csv::write_row(out, {"threshold", "x", "y"});
  for (const auto& p : curve.points) {
    csv::write_row(out, {csv::format_double(p.threshold), csv::format_double(p.x), csv::format_double(p.y)});
  }
}

}  // namespace losflow
