#include "losflow/dataset.hpp"

#include <algorithm>

namespace losflow {

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features = features.select_rows(rows);
  out.ids.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (auto r : rows) {
    if (!ids.empty()) out.ids.push_back(ids[r]);
    out.labels.push_back(labels[r]);
  }
  return out;
}

std::size_t Dataset::count(ClassLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

Dataset Dataset::from_table(const EncounterTable& table, double threshold_hours) {
  Dataset out;
  out.features = table.to_matrix();
  out.labels = table.labels(threshold_hours);
  out.feature_names = table.feature_names();
  out.ids.reserve(table.size());
  for (const auto& e : table.encounters()) out.ids.push_back(e.encounter_id);
  return out;
}

}  // namespace losflow
