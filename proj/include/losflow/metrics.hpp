#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "losflow/config.hpp"
#include "losflow/domain.hpp"

namespace losflow {

/// LS is the positive class.
ConfusionCounts confusion(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth);

/// Classification metrics derived from a confusion matrix. A ratio with a zero
/// denominator is reported as 0 and its name is listed in `undefined`.
struct MetricReport {
  double accuracy = 0.0;
  double precision_ls = 0.0;
  double precision_ss = 0.0;
  double recall_ls = 0.0;
  double recall_ss = 0.0;
  double f1_ls = 0.0;
  double f1_ss = 0.0;
  double f1_weighted = 0.0;
  ConfusionCounts counts;
  std::vector<std::string> undefined;

  /// Looks up a metric by field name ("f1_weighted", "recall_ls", ...).
  double value(std::string_view name) const;
};

MetricReport metric_report(const ConfusionCounts& counts);

config::Json to_json(const MetricReport& report);

enum class CurveKind { roc, pr };

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;
  double y = 0.0;
  bool defined = true;
};

/// Points ordered by decreasing threshold. The first point uses threshold
/// +inf (nothing predicted LS).
struct CurvePoints {
  CurveKind kind = CurveKind::roc;
  std::vector<CurvePoint> points;
};

/// x = false-positive rate, y = true-positive rate, swept over distinct scores.
CurvePoints roc_curve(std::span<const double> scores, std::span<const ClassLabel> truth);

/// x = recall, y = precision. The +inf point has recall 0 and an undefined
/// precision (reported as 0, defined = false).
CurvePoints pr_curve(std::span<const double> scores, std::span<const ClassLabel> truth);

/// Trapezoidal area over the defined points.
double auc(const CurvePoints& curve);

/// Probability that a random LS row outscores a random SS row, ties 1/2.
/// Equal to auc(roc_curve(...)); O(n log n).
double roc_auc(std::span<const double> scores, std::span<const ClassLabel> truth);

void write_curve_csv(std::ostream& out, const CurvePoints& curve);

}  // namespace losflow
