#pragma once

#include <span>
#include <string>
#include <vector>

#include "losflow/domain.hpp"
#include "losflow/matrix.hpp"
#include "losflow/table.hpp"

namespace losflow {

/// Fully numeric view of an encounter table: what classifiers train and
/// predict on. Rows align across ids, features and labels.
struct Dataset {
  std::vector<std::string> ids;
  Matrix features;
  std::vector<ClassLabel> labels;
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  Dataset select(std::span<const std::size_t> rows) const;
  std::size_t count(ClassLabel label) const;

  static Dataset from_table(const EncounterTable& table, double threshold_hours = kDefaultLosThresholdHours);
};

}  // namespace losflow
