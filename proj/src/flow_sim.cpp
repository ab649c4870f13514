#include "losflow/flow_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>

#include "losflow/csv.hpp"
#include "losflow/random.hpp"

namespace losflow {

std::int64_t to_ticks(double hours) { return std::llround(hours * kTicksPerHour); }

std::string_view to_string(Unit unit) {
  switch (unit) {
    case Unit::GW:
      return "GW";
    case Unit::SSU:
      return "SSU";
    case Unit::WA:
      return "WA";
  }
  return "?";
}

std::string_view to_string(TraceEvent event) {
  switch (event) {
    case TraceEvent::arrival:
      return "arrival";
    case TraceEvent::enter:
      return "enter";
    case TraceEvent::leave:
      return "leave";
    case TraceEvent::queue_gw:
      return "queue_gw";
    case TraceEvent::transfer_due:
      return "transfer_due";
    case TraceEvent::discharge:
      return "discharge";
    case TraceEvent::sterilization_done:
      return "sterilization_done";
  }
  return "?";
}

namespace {

constexpr std::size_t idx(Unit u) { return static_cast<std::size_t>(u); }

// Lower value runs first among events at the same tick.
enum class EventKind : std::uint8_t { discharge = 0, sterilization_done = 1, transfer_due = 2, arrival = 3 };

struct Event {
  std::int64_t tick;
  EventKind kind;
  std::uint64_t seq;
  std::size_t patient;
  Unit unit;
  std::int64_t bed;

  bool operator>(const Event& o) const {
    if (tick != o.tick) return tick > o.tick;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

class Ward {
 public:
  explicit Ward(Capacity capacity) : capacity_(capacity) {
    if (capacity_) {
      for (std::int64_t b = 0; b < *capacity_; ++b) free_.insert(b);
    }
  }

  bool has_free() const { return !free_.empty() || !capacity_; }

  // Lowest free bed; unbounded wards grow when none is free.
  std::int64_t acquire() {
    if (free_.empty()) {
      if (capacity_) throw InvariantError("acquire on a full ward");
      return next_++;
    }
    const auto bed = *free_.begin();
    free_.erase(free_.begin());
    return bed;
  }

  void release(std::int64_t bed) { free_.insert(bed); }

 private:
  Capacity capacity_;
  std::set<std::int64_t> free_;
  std::int64_t next_ = 0;
};

struct PatientState {
  Unit where = Unit::WA;
  std::int64_t bed = -1;
  bool arrived = false;
  bool departed = false;
  std::uint64_t vacancies = 0;
  std::optional<std::uint64_t> gw_ticket;
  std::optional<std::uint64_t> ssu_ticket;
};

using Queue = std::set<std::pair<std::uint64_t, std::size_t>>;

class Engine {
 public:
  Engine(const Scenario& s, std::span<const SimPatient> patients)
      : s_(s),
        patients_(patients),
        gw_(s.gw_capacity),
        ssu_(s.ssu_capacity),
        state_(patients.size()),
        discharge_tick_(patients.size()),
        threshold_ticks_(to_ticks(s.transfer_threshold_hours)),
        sterilization_seed_(derive_seed(s.seed, "sterilization")) {
    result_.histories.resize(patients.size());
  }

  SimResult run() {
    std::vector<std::size_t> order(patients_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::int64_t> arrival(patients_.size());
    for (std::size_t p = 0; p < patients_.size(); ++p) {
      const auto& pt = patients_[p];
      if (!std::isfinite(pt.arrival_time) || pt.arrival_time < 0.0) {
        throw DataError("patient '" + pt.encounter_id + "': arrival_time must be a non-negative number");
      }
      if (!std::isfinite(pt.los_hours) || to_ticks(pt.los_hours) < 1) {
        throw DataError("patient '" + pt.encounter_id + "': los_hours must be positive");
      }
      arrival[p] = to_ticks(pt.arrival_time);
      discharge_tick_[p] = arrival[p] + to_ticks(pt.los_hours);
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return arrival[a] < arrival[b]; });

    const std::optional<std::int64_t> horizon =
        s_.horizon_hours ? std::optional(to_ticks(*s_.horizon_hours)) : std::nullopt;
    auto& report = result_.report;
    for (auto p : order) {
      if (horizon && arrival[p] > *horizon) {
        ++report.not_arrived_by_horizon;
        continue;
      }
      push(arrival[p], EventKind::arrival, p);
    }

    auto& trace = result_.trace;
    trace.start_tick = order.empty() ? 0 : arrival[order.front()];
    std::int64_t last_departure = trace.start_tick;

    while (!events_.empty()) {
      const auto head = events_.top();
      if (horizon && head.tick > *horizon) break;
      while (!events_.empty() && events_.top().tick == head.tick && events_.top().kind == head.kind) {
        const Event e = events_.top();
        events_.pop();
        handle(e);
        if (e.kind == EventKind::discharge) last_departure = e.tick;
      }
      dispatch(head.tick);
    }
    trace.end_tick = std::max(trace.start_tick, horizon ? *horizon : last_departure);

    for (std::size_t p = 0; p < patients_.size(); ++p) {
      if (state_[p].arrived && !state_[p].departed) ++report.in_system_at_horizon;
      if (!state_[p].arrived) continue;
      const bool t = is_ls(patients_[p].true_label), pr = is_ls(patients_[p].predicted_label);
      if (t && !pr) ++report.ls_misclassified;
      if (!t && pr) ++report.ss_misclassified;
    }
    report.sterilizations_total = report.sterilizations[0] + report.sterilizations[1] + report.sterilizations[2];
    if (!trace.records.empty()) {
      report.occupancy = occupancy_statistics(trace, s_);
      const auto waits = wait_time_statistics(trace, patients_, s_);
      report.avg_wait_gw = waits.avg_wait_gw;
      report.avg_wait_gw_ls = waits.avg_wait_gw_ls;
      report.avg_residency = waits.avg_residency;
    }
    return std::move(result_);
  }

 private:
  void push(std::int64_t tick, EventKind kind, std::size_t patient, Unit unit = Unit::WA, std::int64_t bed = -1) {
    events_.push({tick, kind, seq_++, patient, unit, bed});
  }

  void record(std::int64_t tick, TraceEvent ev, std::size_t patient, std::optional<Unit> unit = std::nullopt,
              std::int64_t bed = -1) {
    result_.trace.records.push_back({tick, ev, patient, unit, bed});
  }

  Ward& ward(Unit u) { return u == Unit::GW ? gw_ : ssu_; }

  void enter(std::size_t p, Unit u, std::int64_t t) {
    auto& st = state_[p];
    st.where = u;
    st.bed = u == Unit::WA ? -1 : ward(u).acquire();
    result_.histories[p].push_back({u, st.bed, t, Residency::kOpen});
    record(t, TraceEvent::enter, p, u, st.bed);
    if (u == Unit::SSU && is_ls(patients_[p].true_label) && t + threshold_ticks_ < discharge_tick_[p]) {
      push(t + threshold_ticks_, EventKind::transfer_due, p);
    }
  }

  void leave(std::size_t p, std::int64_t t) {
    auto& st = state_[p];
    result_.histories[p].back().exit_tick = t;
    record(t, TraceEvent::leave, p, st.where, st.bed);
    ++result_.report.sterilizations[idx(st.where)];
    if (st.where != Unit::WA) {
      const double u = keyed_uniform(sterilization_seed_, p, st.vacancies++);
      const double hours = s_.sterilization_min_hours + (s_.sterilization_max_hours - s_.sterilization_min_hours) * u;
      push(t + to_ticks(hours), EventKind::sterilization_done, kNoPatient, st.where, st.bed);
    }
    st.bed = -1;
  }

  void enqueue_gw(std::size_t p, std::int64_t t) {
    state_[p].gw_ticket = ticket_;
    gw_queue_.emplace(ticket_++, p);
    record(t, TraceEvent::queue_gw, p, Unit::GW);
  }

  void dequeue(std::size_t p) {
    auto& st = state_[p];
    if (st.gw_ticket) gw_queue_.erase({*st.gw_ticket, p});
    if (st.ssu_ticket) ssu_queue_.erase({*st.ssu_ticket, p});
    st.gw_ticket.reset();
    st.ssu_ticket.reset();
  }

  void move(std::size_t p, Unit to, std::int64_t t) {
    dequeue(p);
    leave(p, t);
    enter(p, to, t);
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::arrival:
        arrive(e.patient, e.tick);
        break;
      case EventKind::discharge: {
        const auto p = e.patient;
        const Unit from = state_[p].where;
        dequeue(p);
        leave(p, e.tick);
        record(e.tick, TraceEvent::discharge, p, from);
        ++result_.report.discharges[idx(from)];
        if (from == Unit::WA) ++result_.report.wa_discharge_count;
        state_[p].departed = true;
        break;
      }
      case EventKind::sterilization_done:
        ward(e.unit).release(e.bed);
        record(e.tick, TraceEvent::sterilization_done, kNoPatient, e.unit, e.bed);
        break;
      case EventKind::transfer_due: {
        const auto p = e.patient;
        if (state_[p].departed || state_[p].where != Unit::SSU) break;
        record(e.tick, TraceEvent::transfer_due, p, Unit::SSU, state_[p].bed);
        if (gw_.has_free()) {
          move(p, Unit::GW, e.tick);
        } else {
          enqueue_gw(p, e.tick);
        }
        break;
      }
    }
  }

  void arrive(std::size_t p, std::int64_t t) {
    auto& st = state_[p];
    st.arrived = true;
    record(t, TraceEvent::arrival, p);
    push(discharge_tick_[p], EventKind::discharge, p);
    const bool flexible = s_.routing_policy == RoutingPolicy::flexible_ss;
    if (is_ls(patients_[p].predicted_label)) {
      if (gw_.has_free()) return enter(p, Unit::GW, t);
      enter(p, Unit::WA, t);
      enqueue_gw(p, t);
      return;
    }
    if (ssu_.has_free()) return enter(p, Unit::SSU, t);
    // A free GW bed is picked up by the dispatch that follows this batch.
    enter(p, Unit::WA, t);
    st.ssu_ticket = ticket_;
    ssu_queue_.emplace(ticket_++, p);
    if (flexible) enqueue_gw(p, t);
  }

  // A free bed never coexists with a non-empty queue for it once this returns.
  void dispatch(std::int64_t t) {
    while (ssu_.has_free() && !ssu_queue_.empty()) move(ssu_queue_.begin()->second, Unit::SSU, t);
    while (gw_.has_free() && !gw_queue_.empty()) move(gw_queue_.begin()->second, Unit::GW, t);
  }

  const Scenario& s_;
  std::span<const SimPatient> patients_;
  Ward gw_;
  Ward ssu_;
  std::vector<PatientState> state_;
  std::vector<std::int64_t> discharge_tick_;
  std::int64_t threshold_ticks_;
  std::uint64_t sterilization_seed_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::uint64_t ticket_ = 0;
  Queue gw_queue_;
  Queue ssu_queue_;
  SimResult result_;
};

}  // namespace

SimResult run_simulation(const Scenario& scenario, std::span<const SimPatient> patients) {
  scenario.validate();
  return Engine(scenario, patients).run();
}

OccupancyStatistics occupancy_statistics(const SimTrace& trace, const Scenario& scenario) {
  if (trace.records.empty()) throw DataError("occupancy_statistics: empty trace");
  const std::array<Capacity, 3> cap = {scenario.gw_capacity, scenario.ssu_capacity, std::nullopt};
  std::array<std::int64_t, 3> count{}, high{};
  std::array<double, 3> area{};
  OccupancyStatistics out;
  std::int64_t last = trace.start_tick;
  const auto is_high = [&](std::size_t u) { return cap[u] && *cap[u] > 0 && count[u] * 10 >= 9 * *cap[u]; };
  const auto advance = [&](std::int64_t to) {
    to = std::min(to, trace.end_tick);
    if (to <= last) return;
    for (std::size_t u = 0; u < 3; ++u) {
      area[u] += static_cast<double>(count[u]) * static_cast<double>(to - last);
      if (is_high(u)) high[u] += to - last;
    }
    last = to;
  };
  for (const auto& r : trace.records) {
    if (r.event != TraceEvent::enter && r.event != TraceEvent::leave) continue;
    advance(r.tick);
    const auto u = idx(*r.unit);
    count[u] += r.event == TraceEvent::enter ? 1 : -1;
    out.units[u].max_count = std::max(out.units[u].max_count, count[u]);
  }
  advance(trace.end_tick);
  const double window = static_cast<double>(trace.end_tick - trace.start_tick);
  for (std::size_t u = 0; u < 3; ++u) {
    out.units[u].time_avg_count = window > 0.0 ? area[u] / window : 0.0;
    if (cap[u] && *cap[u] > 0) {
      out.units[u].high_utilization_rate = window > 0.0 ? static_cast<double>(high[u]) / window : 0.0;
    }
  }
  return out;
}

WaitStatistics wait_time_statistics(const SimTrace& trace, std::span<const SimPatient> patients,
                                    const Scenario& scenario) {
  WaitStatistics out;
  const std::size_t n = patients.size();
  std::vector<std::optional<std::int64_t>> queued(n), entered(n);
  std::vector<Unit> open_unit(n, Unit::WA);
  std::vector<std::array<std::int64_t, 3>> stay(n, {0, 0, 0});
  std::vector<std::array<bool, 3>> visited(n, {false, false, false});
  double wait_sum = 0.0, ls_wait_sum = 0.0;
  std::size_t ls_entrants = 0;
  for (const auto& r : trace.records) {
    if (r.patient == kNoPatient) continue;
    if (r.patient >= n) throw DataError("wait_time_statistics: trace refers to an unknown patient");
    const auto p = r.patient;
    switch (r.event) {
      case TraceEvent::queue_gw:
        if (!queued[p]) queued[p] = r.tick;
        break;
      case TraceEvent::enter:
        if (*r.unit == Unit::GW) {
          const double w = queued[p] ? to_hours(r.tick - *queued[p]) : 0.0;
          wait_sum += w;
          ++out.gw_entrants;
          if (is_ls(patients[p].true_label)) {
            ls_wait_sum += w;
            ++ls_entrants;
          }
        }
        queued[p].reset();
        entered[p] = r.tick;
        open_unit[p] = *r.unit;
        visited[p][idx(*r.unit)] = true;
        break;
      case TraceEvent::leave:
        stay[p][idx(*r.unit)] += r.tick - *entered[p];
        entered[p].reset();
        break;
      default:
        break;
    }
  }
  if (scenario.gw_capacity && out.gw_entrants > 0) out.avg_wait_gw = wait_sum / static_cast<double>(out.gw_entrants);
  if (scenario.gw_capacity && ls_entrants > 0) out.avg_wait_gw_ls = ls_wait_sum / static_cast<double>(ls_entrants);

  std::array<std::array<double, 3>, 2> sum{}, cnt{};
  for (std::size_t p = 0; p < n; ++p) {
    // Stays still open at the end of the window run up to it.
    if (entered[p]) stay[p][idx(open_unit[p])] += trace.end_tick - *entered[p];
    const int label = is_ls(patients[p].true_label) ? 1 : 0;
    for (std::size_t u = 0; u < 3; ++u) {
      if (!visited[p][u]) continue;
      sum[label][u] += to_hours(stay[p][u]);
      cnt[label][u] += 1.0;
    }
  }
  for (int l = 0; l < 2; ++l) {
    for (std::size_t u = 0; u < 3; ++u) {
      if (cnt[l][u] > 0.0) out.avg_residency[l][u] = sum[l][u] / cnt[l][u];
    }
  }
  return out;
}

namespace {

struct ReportRow {
  std::string name;
  std::optional<double> value;
  bool integral = false;
};

std::vector<ReportRow> report_rows(const SimReport& r) {
  std::vector<ReportRow> rows;
  const auto count = [&](std::string name, std::int64_t v) {
    rows.push_back({std::move(name), static_cast<double>(v), true});
  };
  count("total sterilization count", r.sterilizations_total);
  for (auto u : kUnits) count(std::string(to_string(u)) + " sterilization count", r.sterilizations[idx(u)]);
  rows.push_back({"avg. wait time for GW bed (hr)", r.avg_wait_gw});
  rows.push_back({"avg. LS patient wait time for GW bed (hr)", r.avg_wait_gw_ls});
  for (int l = 1; l >= 0; --l) {
    for (auto u : kUnits) {
      rows.push_back({"avg. " + std::string(l ? "LS" : "SS") + " patient time in " + std::string(to_string(u)) + " (hr)",
                      r.avg_residency[l][idx(u)]});
    }
  }
  for (auto u : kUnits) count("max. # of patients in " + std::string(to_string(u)), r.occupancy[u].max_count);
  for (auto u : kUnits) {
    rows.push_back({"avg. # of patients in " + std::string(to_string(u)), r.occupancy[u].time_avg_count});
  }
  for (auto u : {Unit::GW, Unit::SSU}) {
    rows.push_back({std::string(to_string(u)) + " ≥ 90% utilization rate", r.occupancy[u].high_utilization_rate});
  }
  count("LS misclassification count", r.ls_misclassified);
  count("SS misclassification count", r.ss_misclassified);
  count("WA discharge count", r.wa_discharge_count);
  count("GW discharge count", r.discharges[idx(Unit::GW)]);
  count("SSU discharge count", r.discharges[idx(Unit::SSU)]);
  count("in system at horizon", r.in_system_at_horizon);
  count("not arrived by horizon", r.not_arrived_by_horizon);
  return rows;
}

}  // namespace

config::Json to_json(const SimReport& report) {
  config::Json j = config::Json::object();
  for (const auto& row : report_rows(report)) {
    if (!row.value) {
      j[row.name] = nullptr;
    } else if (row.integral) {
      j[row.name] = static_cast<std::int64_t>(*row.value);
    } else {
      j[row.name] = *row.value;
    }
  }
  return j;
}

std::vector<std::string> report_row_names() {
  std::vector<std::string> names;
  for (auto& row : report_rows(SimReport{})) names.push_back(std::move(row.name));
  return names;
}

std::vector<std::pair<std::string, double>> report_metrics(const SimReport& report) {
  std::vector<std::pair<std::string, double>> out;
  for (auto& row : report_rows(report)) {
    if (row.value) out.emplace_back(std::move(row.name), *row.value);
  }
  return out;
}

Scenario scenario_from_json(const config::Reader& r) {
  r.check_schema_version(1);
  Scenario s;
  s.gw_capacity = config::capacity(r, "gw_capacity", std::nullopt);
  s.ssu_capacity = config::capacity(r, "ssu_capacity", std::nullopt);
  s.transfer_threshold_hours = r.number("transfer_threshold_hours", s.transfer_threshold_hours);
  s.sterilization_min_hours = r.number("sterilization_min_hours", s.sterilization_min_hours);
  s.sterilization_max_hours = r.number("sterilization_max_hours", s.sterilization_max_hours);
  if (r.has("routing_policy")) {
    try {
      s.routing_policy = parse_routing_policy(r.string("routing_policy"));
    } catch (const DataError& e) {
      r.fail("routing_policy", e.what());
    }
  }
  if (r.has("horizon_hours")) {
    const auto& h = r.node().at("horizon_hours");
    if (h.is_string() && h.get<std::string>() == "drain") {
      s.horizon_hours.reset();
    } else {
      s.horizon_hours = r.number("horizon_hours");
    }
  }
  s.seed = r.seed("seed", 0);
  try {
    s.validate();
  } catch (const DataError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return s;
}

config::Json to_json(const Scenario& s) {
  const auto cap = [](const Capacity& c) { return c ? config::Json(*c) : config::Json("inf"); };
  config::Json j;
  j["schema_version"] = 1;
  j["gw_capacity"] = cap(s.gw_capacity);
  j["ssu_capacity"] = cap(s.ssu_capacity);
  j["transfer_threshold_hours"] = s.transfer_threshold_hours;
  j["sterilization_min_hours"] = s.sterilization_min_hours;
  j["sterilization_max_hours"] = s.sterilization_max_hours;
  j["routing_policy"] = std::string(to_string(s.routing_policy));
  j["horizon_hours"] = s.horizon_hours ? config::Json(*s.horizon_hours) : config::Json("drain");
  j["seed"] = s.seed;
  return j;
}

std::vector<SimPatient> load_sim_patients(std::istream& in) {
  const auto doc = csv::read(in);
  const char* names[] = {"encounter_id", "arrival_time", "los_hours", "true_label", "predicted_label"};
  std::size_t col[5];
  for (int i = 0; i < 5; ++i) {
    const auto c = doc.column(names[i]);
    if (!c) throw DataError(std::string("schema error: missing required column '") + names[i] + "'");
    col[i] = *c;
  }
  std::vector<SimPatient> out;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const auto where = [&](int i) { return "row " + std::to_string(r) + ", column '" + names[i] + "'"; };
    SimPatient p;
    p.encounter_id = row[col[0]];
    const auto arrival = csv::parse_double(row[col[1]]);
    const auto los = csv::parse_double(row[col[2]]);
    if (!arrival) throw DataError(where(1) + ": expected a number");
    if (!los) throw DataError(where(2) + ": expected a number");
    p.arrival_time = *arrival;
    p.los_hours = *los;
    if (p.arrival_time < 0.0) throw DataError(where(1) + ": negative time");
    if (!(p.los_hours > 0.0)) throw DataError(where(2) + ": must be positive");
    for (int i : {3, 4}) {
      if (row[col[i]].empty()) throw DataError(where(i) + ": missing label");
      try {
        (i == 3 ? p.true_label : p.predicted_label) = parse_label(row[col[i]]);
      } catch (const DataError& e) {
        throw DataError(where(i) + ": " + e.what());
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SimPatient> load_sim_patients_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_sim_patients(in);
}

void write_sim_patients(std::ostream& out, std::span<const SimPatient> patients) {
  csv::write_row(out, {"encounter_id", "arrival_time", "los_hours", "true_label", "predicted_label"});
  for (const auto& p : patients) {
    csv::write_row(out, {p.encounter_id, csv::format_double(p.arrival_time), csv::format_double(p.los_hours),
                         std::string(to_string(p.true_label)), std::string(to_string(p.predicted_label))});
  }
}

void write_trace_csv(std::ostream& out, const SimTrace& trace, std::span<const SimPatient> patients) {
  csv::write_row(out, {"time", "event", "patient", "unit", "bed"});
  for (const auto& r : trace.records) {
    csv::write_row(out, {csv::format_double(to_hours(r.tick)), std::string(to_string(r.event)),
                         r.patient == kNoPatient ? std::string() : patients[r.patient].encounter_id,
                         r.unit ? std::string(to_string(*r.unit)) : std::string(),
                         r.bed >= 0 ? std::to_string(r.bed) : std::string()});
  }
}

}  // namespace losflow
