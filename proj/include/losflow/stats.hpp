#pragma once

#include <optional>
#include <span>
#include <vector>

namespace losflow::stats {

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double variance(std::span<const double> x);
double stddev(std::span<const double> x);

/// Pearson correlation; std::nullopt if either input is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, ties get the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson on average ranks.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a Student t statistic.
double student_t_two_sided_p(double t, double degrees_of_freedom);

}  // namespace losflow::stats
