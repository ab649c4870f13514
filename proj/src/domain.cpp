#include "losflow/domain.hpp"

#include <cmath>

namespace losflow {

std::string_view to_string(ClassLabel label) { return label == ClassLabel::LS ? "LS" : "SS"; }

ClassLabel parse_label(std::string_view text) {
  if (text == "LS") return ClassLabel::LS;
  if (text == "SS") return ClassLabel::SS;
  throw DataError("invalid class label '" + std::string(text) + "' (expected SS or LS)");
}

ClassLabel label_from_los(double los_hours, double threshold_hours) {
  if (!(los_hours > 0.0) || !(threshold_hours > 0.0)) {
    throw DataError("label_from_los: los_hours and threshold_hours must be positive");
  }
  return los_hours > threshold_hours ? ClassLabel::LS : ClassLabel::SS;
}

void Encounter::validate() const {
  if (!std::isfinite(triage_time) || !std::isfinite(admit_decision_time)) {
    throw DataError("encounter " + encounter_id + ": non-finite timestamp");
  }
  if (admit_decision_time < triage_time) {
    throw DataError("encounter " + encounter_id + ": admit_decision_time precedes triage_time");
  }
  if (!(los_hours > 0.0) || !std::isfinite(los_hours)) {
    throw DataError("encounter " + encounter_id + ": los_hours must be positive");
  }
}

std::string_view to_string(RoutingPolicy policy) {
  return policy == RoutingPolicy::strict ? "strict" : "flexible_ss";
}

RoutingPolicy parse_routing_policy(std::string_view text) {
  if (text == "flexible_ss") return RoutingPolicy::flexible_ss;
  if (text == "strict") return RoutingPolicy::strict;
  throw DataError("unknown routing policy '" + std::string(text) + "'");
}

void Scenario::validate() const {
  if ((gw_capacity && *gw_capacity < 0) || (ssu_capacity && *ssu_capacity < 0)) {
    throw DataError("scenario: capacities must be non-negative");
  }
  if (!(transfer_threshold_hours > 0.0)) {
    throw DataError("scenario: transfer_threshold_hours must be positive");
  }
  if (!(sterilization_min_hours > 0.0) || !(sterilization_max_hours > 0.0)) {
    throw DataError("scenario: sterilization durations must be positive");
  }
  if (sterilization_min_hours > sterilization_max_hours) {
    throw DataError("scenario: sterilization_min_hours exceeds sterilization_max_hours");
  }
  if (horizon_hours && !std::isfinite(*horizon_hours)) {
    throw DataError("scenario: horizon must be finite or drain");
  }
}

}  // namespace losflow
