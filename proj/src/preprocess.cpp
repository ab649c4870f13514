#include "losflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "losflow/stats.hpp"

namespace losflow {

PruneResult drop_sparse_features(const EncounterTable& table, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw DataError("missing-ratio threshold must lie in [0,1]");
  PruneResult result{table, {}};
  for (const auto& col : table.columns()) {
    if (!(col.missing_ratio() < threshold)) {
      result.dropped.push_back(col.name);
      result.table.remove_column(col.name);
    }
  }
  return result;
}

EncounterTable count_rare_tests(const EncounterTable& target, const EncounterTable& source,
                                std::span<const std::string> dropped, const std::string& new_feature_name) {
  if (target.size() != source.size()) throw InvariantError("count_rare_tests: row counts differ");
  std::vector<const FeatureColumn*> cols;
  for (const auto& name : dropped) {
    auto idx = source.find_column(name);
    if (!idx) throw DataError("count_rare_tests: unknown dropped feature '" + name + "'");
    cols.push_back(&source.columns()[*idx]);
  }
  FeatureColumn out{new_feature_name, FeatureKind::numeric, {}};
  out.values.reserve(target.size());
  for (std::size_t r = 0; r < target.size(); ++r) {
    double present = 0.0;
    for (const auto* c : cols) present += is_missing(c->values[r]) ? 0.0 : 1.0;
    out.values.emplace_back(present);
  }
  EncounterTable result = target;
  result.add_column(std::move(out));
  return result;
}

Imputer Imputer::fit(const EncounterTable& table) {
  Imputer imp;
  for (const auto& col : table.columns()) {
    if (col.missing_count() == col.values.size()) {
      throw DataError("impute: feature '" + col.name + "' is entirely missing; drop it with drop_sparse_features");
    }
    if (col.kind == FeatureKind::numeric) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& v : col.values) {
        if (const auto* d = std::get_if<double>(&v)) {
          sum += *d;
          ++n;
        }
      }
      imp.fill[col.name] = sum / static_cast<double>(n);
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& v : col.values) {
        if (const auto* s = std::get_if<std::string>(&v)) ++counts[*s];
      }
      // std::map iterates in lexicographic order, so the first maximum wins ties.
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      imp.fill[col.name] = best->first;
    }
  }
  return imp;
}

EncounterTable Imputer::apply(const EncounterTable& table) const {
  EncounterTable out = table;
  for (const auto& col : table.columns()) {
    auto it = fill.find(col.name);
    if (it == fill.end()) continue;
    FeatureColumn filled = col;
    for (auto& v : filled.values) {
      if (is_missing(v)) v = it->second;
    }
    out.replace_column(std::move(filled));
  }
  return out;
}

EncounterTable impute(const EncounterTable& table) { return Imputer::fit(table).apply(table); }

PruneResult drop_correlated(const EncounterTable& table, double rho_threshold) {
  if (!(rho_threshold > 0.0 && rho_threshold <= 1.0)) throw DataError("rho threshold must lie in (0,1]");
  const auto& cols = table.columns();
  std::vector<bool> dropped(cols.size(), false);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (dropped[i] || cols[i].kind != FeatureKind::numeric) continue;
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      if (dropped[j] || cols[j].kind != FeatureKind::numeric) continue;
      std::vector<double> x, y;
      for (std::size_t r = 0; r < table.size(); ++r) {
        const auto* a = std::get_if<double>(&cols[i].values[r]);
        const auto* b = std::get_if<double>(&cols[j].values[r]);
        if (a && b) {
          x.push_back(*a);
          y.push_back(*b);
        }
      }
      if (auto rho = stats::pearson(x, y); rho && std::fabs(*rho) > rho_threshold) dropped[j] = true;
    }
  }
  PruneResult result{table, {}};
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (dropped[i]) {
      result.dropped.push_back(cols[i].name);
      result.table.remove_column(cols[i].name);
    }
  }
  return result;
}

OneHotEncoder OneHotEncoder::fit(const EncounterTable& table, std::span<const std::string> columns) {
  OneHotEncoder enc;
  for (const auto& name : columns) {
    const auto& col = table.column(name);
    if (col.kind != FeatureKind::categorical) throw DataError("one_hot_encode: '" + name + "' is not categorical");
    std::set<std::string> cats;
    for (const auto& v : col.values) {
      if (const auto* s = std::get_if<std::string>(&v)) cats.insert(*s);
    }
    enc.categories.emplace_back(name, std::vector<std::string>(cats.begin(), cats.end()));
  }
  return enc;
}

EncounterTable OneHotEncoder::apply(const EncounterTable& table) const {
  EncounterTable out = table;
  for (const auto& [name, cats] : categories) {
    const auto& col = table.column(name);
    if (col.kind != FeatureKind::categorical) throw DataError("one_hot_encode: '" + name + "' is not categorical");
    out.remove_column(name);
    for (const auto& cat : cats) {
      FeatureColumn block{name + "=" + cat, FeatureKind::numeric, {}};
      block.values.reserve(table.size());
      for (const auto& v : col.values) {
        const auto* s = std::get_if<std::string>(&v);
        block.values.emplace_back((s && *s == cat) ? 1.0 : 0.0);
      }
      out.add_column(std::move(block));
    }
  }
  return out;
}

EncounterTable one_hot_encode(const EncounterTable& table, std::span<const std::string> columns) {
  return OneHotEncoder::fit(table, columns).apply(table);
}

SplitResult temporal_split(const EncounterTable& table, double cutoff_hours) {
  std::vector<std::size_t> train, test;
  for (std::size_t r = 0; r < table.size(); ++r) {
    (table.encounter(r).triage_time < cutoff_hours ? train : test).push_back(r);
  }
  return {table.select_rows(train), table.select_rows(test)};
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("percentile: q must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
  return !prefix.empty() && s.compare(0, prefix.size(), prefix) == 0;
}

std::vector<std::size_t> lab_columns(const EncounterTable& table, const FeatureConventions& conv) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < table.columns().size(); ++c) {
    const auto& col = table.columns()[c];
    if (col.kind == FeatureKind::numeric && starts_with(col.name, conv.lab_prefix)) out.push_back(c);
  }
  return out;
}

const char* kDayNames[] = {"thu", "fri", "sat", "sun", "mon", "tue", "wed"};  // 1970-01-01 was a Thursday

}  // namespace

std::vector<std::string> engineered_feature_names() {
  return {"triage_dayofweek",
          "wait_time_to_admit",
          "vit_current_visit_vital_test_count",
          "previous_encounter_count",
          "previous_encounter_most_recent_los",
          "previous_lab_test_count",
          "previous_lab_test_uniq_count",
          "previous_ip_diag_count",
          "outlier_lab_result_with_percentile_75",
          "vit_total_bp_count",
          "vit_high_bp_count",
          "vit_low_bp_count"};
}

LabPercentiles LabPercentiles::fit(const EncounterTable& reference, const FeatureConventions& conventions) {
  LabPercentiles out;
  for (auto c : lab_columns(reference, conventions)) {
    const auto& col = reference.columns()[c];
    std::vector<double> observed;
    for (const auto& v : col.values) {
      if (const auto* d = std::get_if<double>(&v)) observed.push_back(*d);
    }
    if (!observed.empty()) out.p75[col.name] = percentile(std::move(observed), 0.75);
  }
  return out;
}

EncounterTable engineer_features(const EncounterTable& table, const LabPercentiles& reference,
                                 const FeatureConventions& conv) {
  const std::size_t n = table.size();
  const auto names = engineered_feature_names();
  const std::set<std::string> engineered(names.begin(), names.end());
  for (const auto& name : names) {
    if (table.find_column(name)) throw DataError("engineer_features: column '" + name + "' already exists");
  }

  const auto labs = lab_columns(table, conv);
  std::vector<std::size_t> vitals, bps;
  for (std::size_t c = 0; c < table.columns().size(); ++c) {
    const auto& name = table.columns()[c].name;
    if (engineered.count(name)) continue;
    if (starts_with(name, conv.vital_prefix)) vitals.push_back(c);
    if (table.columns()[c].kind == FeatureKind::numeric && starts_with(name, conv.bp_prefix)) bps.push_back(c);
  }
  const auto diag_idx = table.find_column(conv.diag_count_column);
  const FeatureColumn* diag = nullptr;
  if (diag_idx && table.columns()[*diag_idx].kind == FeatureKind::numeric) diag = &table.columns()[*diag_idx];

  // Rows grouped by patient, each group ordered by triage time.
  std::unordered_map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& hash = table.encounter(r).patient_hash;
    if (!hash.empty()) by_patient[hash].push_back(r);
  }
  for (auto& [_, rows] : by_patient) {
    std::stable_sort(rows.begin(), rows.end(), [&](auto a, auto b) {
      return table.encounter(a).triage_time < table.encounter(b).triage_time;
    });
  }

  std::vector<FeatureColumn> out;
  for (const auto& name : names) {
    out.push_back({name, name == "triage_dayofweek" ? FeatureKind::categorical : FeatureKind::numeric, {}});
    out.back().values.resize(n);
  }
  auto set = [&](std::size_t feature, std::size_t row, FeatureValue v) { out[feature].values[row] = std::move(v); };

  for (std::size_t r = 0; r < n; ++r) {
    const auto& e = table.encounter(r);
    const auto day = static_cast<long long>(std::floor(e.triage_time / 24.0));
    set(0, r, std::string(kDayNames[((day % 7) + 7) % 7]));
    set(1, r, e.admit_decision_time - e.triage_time);

    double vital_count = 0.0;
    for (auto c : vitals) vital_count += is_missing(table.columns()[c].values[r]) ? 0.0 : 1.0;
    set(2, r, vital_count);

    double prev_count = 0.0, prev_labs = 0.0, prev_diag = 0.0;
    std::set<std::size_t> uniq_labs;
    std::optional<double> recent_los;
    double recent_triage = -HUGE_VAL;
    if (!e.patient_hash.empty()) {
      for (auto p : by_patient[e.patient_hash]) {
        const auto& prev = table.encounter(p);
        if (!(prev.triage_time < e.triage_time)) continue;
        prev_count += 1.0;
        for (auto c : labs) {
          if (!is_missing(table.columns()[c].values[p])) {
            prev_labs += 1.0;
            uniq_labs.insert(c);
          }
        }
        if (diag) {
          if (auto v = diag->number(p)) prev_diag += *v;
        }
        const bool discharged = prev.admit_decision_time + prev.los_hours <= e.admit_decision_time;
        if (discharged && prev.triage_time >= recent_triage) {
          recent_triage = prev.triage_time;
          recent_los = prev.los_hours;
        }
      }
    }
    set(3, r, prev_count);
    set(4, r, recent_los ? FeatureValue{*recent_los} : FeatureValue{});
    set(5, r, prev_labs);
    set(6, r, static_cast<double>(uniq_labs.size()));
    set(7, r, prev_diag);

    double outliers = 0.0;
    for (auto c : labs) {
      const auto& col = table.columns()[c];
      auto it = reference.p75.find(col.name);
      if (it == reference.p75.end()) continue;
      if (auto v = col.number(r); v && *v > it->second) outliers += 1.0;
    }
    set(8, r, outliers);

    double bp_total = 0.0, bp_high = 0.0, bp_low = 0.0;
    for (auto c : bps) {
      if (auto v = table.columns()[c].number(r)) {
        bp_total += 1.0;
        if (*v > conv.high_bp) bp_high += 1.0;
        if (*v < conv.low_bp) bp_low += 1.0;
      }
    }
    set(9, r, bp_total);
    set(10, r, bp_high);
    set(11, r, bp_low);
  }

  EncounterTable result = table;
  for (auto& col : out) result.add_column(std::move(col));
  return result;
}

EncounterTable engineer_features(const EncounterTable& table, const FeatureConventions& conventions) {
  return engineer_features(table, LabPercentiles::fit(table, conventions), conventions);
}

}  // namespace losflow
