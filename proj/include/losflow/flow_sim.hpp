#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "losflow/config.hpp"
#include "losflow/domain.hpp"

namespace losflow {

/// The simulator clock counts integer micro-hours so that residency
/// arithmetic (entry + 72 h) is exact.
inline constexpr double kTicksPerHour = 1e6;

std::int64_t to_ticks(double hours);
inline double to_hours(std::int64_t ticks) { return static_cast<double>(ticks) / kTicksPerHour; }

enum class Unit : std::uint8_t { GW = 0, SSU = 1, WA = 2 };
inline constexpr std::array<Unit, 3> kUnits = {Unit::GW, Unit::SSU, Unit::WA};

std::string_view to_string(Unit unit);

struct SimPatient {
  std::string encounter_id;
  double arrival_time = 0.0;
  double los_hours = 0.0;
  ClassLabel true_label = ClassLabel::SS;
  ClassLabel predicted_label = ClassLabel::SS;
};

/// One stay in one unit. WA stays use bed -1. exit_tick is kOpen while the
/// patient is still there at the horizon.
struct Residency {
  static constexpr std::int64_t kOpen = -1;

  Unit unit = Unit::WA;
  std::int64_t bed = -1;
  std::int64_t enter_tick = 0;
  std::int64_t exit_tick = kOpen;

  bool operator==(const Residency&) const = default;
};

enum class TraceEvent : std::uint8_t { arrival, enter, leave, queue_gw, transfer_due, discharge, sterilization_done };

std::string_view to_string(TraceEvent event);

inline constexpr std::size_t kNoPatient = static_cast<std::size_t>(-1);

struct TraceRecord {
  std::int64_t tick = 0;
  TraceEvent event = TraceEvent::arrival;
  std::size_t patient = kNoPatient;  // index into the input patients
  std::optional<Unit> unit;
  std::int64_t bed = -1;
};

struct SimTrace {
  std::vector<TraceRecord> records;
  /// Statistics window: first arrival to the horizon (or the last departure
  /// when draining).
  std::int64_t start_tick = 0;
  std::int64_t end_tick = 0;
};

struct UnitOccupancy {
  std::int64_t max_count = 0;
  double time_avg_count = 0.0;
  /// Fraction of the window with count >= 90% of capacity. Absent for
  /// unbounded or zero-capacity units.
  std::optional<double> high_utilization_rate;
};

struct OccupancyStatistics {
  std::array<UnitOccupancy, 3> units;  // indexed by Unit
  const UnitOccupancy& operator[](Unit u) const { return units[static_cast<std::size_t>(u)]; }
};

OccupancyStatistics occupancy_statistics(const SimTrace& trace, const Scenario& scenario);

struct WaitStatistics {
  /// Mean of (GW entry - GW queue entry) over every GW entrant, 0 for those
  /// who never queued. Absent with unbounded GW or no GW entrants.
  std::optional<double> avg_wait_gw;
  std::size_t gw_entrants = 0;
  /// Same mean restricted to true-LS entrants.
  std::optional<double> avg_wait_gw_ls;
  /// Mean total residency by [true label][unit] over patients who stayed in
  /// that unit at least once. Absent when nobody did.
  std::array<std::array<std::optional<double>, 3>, 2> avg_residency;
};

WaitStatistics wait_time_statistics(const SimTrace& trace, std::span<const SimPatient> patients,
                                    const Scenario& scenario);

struct SimReport {
  std::int64_t sterilizations_total = 0;
  std::array<std::int64_t, 3> sterilizations{};  // indexed by Unit
  std::optional<double> avg_wait_gw;
  std::optional<double> avg_wait_gw_ls;
  std::array<std::array<std::optional<double>, 3>, 2> avg_residency;
  OccupancyStatistics occupancy;
  std::int64_t ls_misclassified = 0;  // true LS predicted SS
  std::int64_t ss_misclassified = 0;  // true SS predicted LS
  std::int64_t wa_discharge_count = 0;
  std::array<std::int64_t, 3> discharges{};  // by unit of departure
  std::int64_t in_system_at_horizon = 0;
  std::int64_t not_arrived_by_horizon = 0;
};

struct SimResult {
  SimReport report;
  SimTrace trace;
  /// Per input patient, in order of occurrence.
  std::vector<std::vector<Residency>> histories;
};

/// Runs the event-driven patient flow model. Deterministic in (scenario,
/// patients); sterilization durations are keyed by (patient, vacancy) so
/// scenarios sharing a seed share draws.
SimResult run_simulation(const Scenario& scenario, std::span<const SimPatient> patients);

/// Report rows keyed by their table names; inapplicable values are null.
config::Json to_json(const SimReport& report);

/// Every report row name, in report order.
std::vector<std::string> report_row_names();

/// Flat (name, value) view of the report in a fixed order; absent values
/// are omitted.
std::vector<std::pair<std::string, double>> report_metrics(const SimReport& report);

Scenario scenario_from_json(const config::Reader& reader);
config::Json to_json(const Scenario& scenario);

/// CSV with header encounter_id,arrival_time,los_hours,true_label,predicted_label.
std::vector<SimPatient> load_sim_patients(std::istream& in);
std::vector<SimPatient> load_sim_patients_file(const std::string& path);
void write_sim_patients(std::ostream& out, std::span<const SimPatient> patients);

/// time,event,patient,unit,bed
void write_trace_csv(std::ostream& out, const SimTrace& trace, std::span<const SimPatient> patients);

}  // namespace losflow
