#include "losflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "losflow/cohort.hpp"
#include "losflow/csv.hpp"
#include "losflow/dataset.hpp"
#include "losflow/feature_selection.hpp"
#include "losflow/metrics.hpp"
#include "losflow/model_selection.hpp"
#include "losflow/random.hpp"
#include "losflow/stats.hpp"

namespace losflow::experiments {

namespace fs = std::filesystem;

namespace {

struct LoadedConfig {
  config::Json root;
  fs::path base_dir;
  std::uint64_t seed = 0;
};

LoadedConfig load_config(const Options& o, std::string_view command) {
  if (o.config_path.empty()) throw ConfigError(std::string(command) + ": --config is required");
  LoadedConfig c;
  c.root = config::parse_file(o.config_path.string());
  c.base_dir = o.config_path.parent_path();
  const config::Reader r(c.root, std::string(command));
  r.check_schema_version(1);
  c.seed = o.seed ? *o.seed : r.seed("seed", 0);
  return c;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const config::Json& j) { write_file(path, j.dump(2) + "\n"); }

template <typename Fn>
void write_with(const fs::path& path, Fn fn) {
  std::ostringstream os;
  fn(os);
  write_file(path, os.str());
}

std::string capacity_text(const Capacity& c) { return c ? std::to_string(*c) : std::string("inf"); }

std::string padded(std::int64_t r) {
  std::string s = std::to_string(r);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

// Rows ordered by triage time; ties keep table order.
std::vector<std::size_t> chronological(const EncounterTable& table) {
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return table.encounter(a).triage_time < table.encounter(b).triage_time;
  });
  return order;
}

}  // namespace

// --- preprocessing ---------------------------------------------------------

PreprocessOptions preprocess_options_from_json(const config::Reader& r) {
  PreprocessOptions o;
  o.engineer = r.boolean("engineer_features", o.engineer);
  o.sparse_threshold = r.number("sparse_threshold", o.sparse_threshold);
  o.rare_test_count = r.boolean("rare_test_count", o.rare_test_count);
  o.one_hot = r.boolean("one_hot", o.one_hot);
  o.correlation_threshold = r.number("correlation_threshold", o.correlation_threshold);
  if (!(o.sparse_threshold > 0.0 && o.sparse_threshold <= 1.0)) r.fail("sparse_threshold", "must lie in (0,1]");
  if (!(o.correlation_threshold > 0.0 && o.correlation_threshold <= 1.0)) {
    r.fail("correlation_threshold", "must lie in (0,1]");
  }
  return o;
}

Preprocessor Preprocessor::fit(const EncounterTable& table, const PreprocessOptions& options) {
  Preprocessor p;
  p.options = options;
  auto pruned = drop_sparse_features(table, options.sparse_threshold);
  p.dropped_sparse = pruned.dropped;
  EncounterTable t = std::move(pruned.table);
  if (options.rare_test_count) t = count_rare_tests(t, table, p.dropped_sparse, kRareTestFeature);
  p.imputer = Imputer::fit(t);
  t = p.imputer.apply(t);
  std::vector<std::string> categorical;
  for (const auto& c : t.columns()) {
    if (c.kind == FeatureKind::categorical) categorical.push_back(c.name);
  }
  if (options.one_hot) {
    p.encoder = OneHotEncoder::fit(t, categorical);
    t = p.encoder.apply(t);
  }
  p.dropped_correlated = drop_correlated(t, options.correlation_threshold).dropped;
  return p;
}

EncounterTable Preprocessor::apply(const EncounterTable& table) const {
  EncounterTable t = table;
  for (const auto& name : dropped_sparse) t.remove_column(name);
  if (options.rare_test_count) t = count_rare_tests(t, table, dropped_sparse, kRareTestFeature);
  t = imputer.apply(t);
  if (options.one_hot) t = encoder.apply(t);
  for (const auto& name : dropped_correlated) t.remove_column(name);
  return t;
}

// --- data sources ----------------------------------------------------------

EncounterTable load_data(const config::Reader& data, const fs::path& base_dir, std::uint64_t cohort_seed) {
  if (auto c = data.optional_child("cohort")) {
    auto cfg = cohort_config_from_json(*c);
    cfg.seed = cohort_seed;
    return generate_cohort(cfg);
  }
  if (data.has("csv")) {
    CsvSchema schema;
    const auto ts = data.string("timestamps", "hours");
    if (ts == "iso8601") {
      schema.timestamps = TimestampFormat::iso8601;
    } else if (ts != "hours") {
      data.fail("timestamps", "expected \"hours\" or \"iso8601\"");
    }
    return load_encounters_file(resolve(base_dir, data.string("csv")).string(), schema);
  }
  data.fail("cohort", "a data block needs either \"cohort\" or \"csv\"");
}

ClassifierSpec classifier_spec_from_json(const config::Reader& r, const fs::path& base_dir) {
  ClassifierSpec s;
  const auto kind = r.string("kind");
  if (kind == "given") {
    s.given = true;
  } else if (kind == "logistic") {
    s.kind = ModelKind::logistic;
  } else if (kind == "lda") {
    s.kind = ModelKind::lda;
  } else if (kind == "perfect") {
    s.kind = ModelKind::perfect;
  } else if (kind == "random") {
    s.kind = ModelKind::random;
  } else if (kind == "confusion_noise") {
    s.kind = ModelKind::confusion_noise;
  } else if (kind == "external") {
    s.kind = ModelKind::external;
  } else {
    r.fail("kind", "unknown classifier kind '" + kind + "'");
  }
  s.name = r.string("name", kind);
  const auto rate = [&](const char* key, double fallback) {
    const double v = r.number(key, fallback);
    if (!(v >= 0.0 && v <= 1.0)) r.fail(key, "must lie in [0,1]");
    return v;
  };
  s.p_ls = rate("p_ls", 0.5);
  s.fp_rate = rate("fp_rate", 0.0);
  s.fn_rate = rate("fn_rate", 0.0);
  s.threshold = rate("threshold", 0.5);
  if (s.kind == ModelKind::external && !s.given) s.predictions = resolve(base_dir, r.string("predictions"));
  if (auto cal = r.optional_child("calibration")) {
    CalibrationTarget t;
    const auto metric = cal->string("metric");
    if (metric == "precision") {
      t.metric = CalibrationMetric::precision;
    } else if (metric == "recall") {
      t.metric = CalibrationMetric::recall;
    } else {
      cal->fail("metric", "expected \"precision\" or \"recall\"");
    }
    t.value = cal->number("value");
    if (!(t.value >= 0.0 && t.value <= 1.0)) cal->fail("value", "must lie in [0,1]");
    s.calibration = t;
  }
  s.logistic.learning_rate = r.number("learning_rate", s.logistic.learning_rate);
  s.logistic.max_iters = static_cast<int>(r.integer("max_iters", s.logistic.max_iters));
  s.logistic.l2_penalty = r.number("l2_penalty", s.logistic.l2_penalty);
  s.logistic.tolerance = r.number("tolerance", s.logistic.tolerance);
  s.lda_regularization = r.number("regularization", s.lda_regularization);
  return s;
}

namespace {

ModelSpec model_spec(const ClassifierSpec& c, std::uint64_t seed) {
  ModelSpec m;
  m.kind = c.kind;
  m.logistic = c.logistic;
  m.lda_regularization = c.lda_regularization;
  m.calibration = c.calibration;
  switch (c.kind) {
    case ModelKind::random:
      m.fixed = random_classifier(c.p_ls, seed).model;
      break;
    case ModelKind::confusion_noise:
      m.fixed = confusion_noise_classifier(c.fp_rate, c.fn_rate, seed).model;
      break;
    case ModelKind::external:
      m.fixed = load_external_predictions_file(c.predictions.string());
      break;
    default:
      m.fixed = perfect_classifier().model;
      break;
  }
  return m;
}

CalibratedClassifier fit_classifier(const ClassifierSpec& spec, const Dataset& train, std::uint64_t seed) {
  auto c = make_trainer(model_spec(spec, seed))(train, seed);
  if (!spec.calibration) c.threshold = spec.threshold;
  return c;
}

}  // namespace

std::vector<SimPatient> build_sim_patients(const EncounterTable& table, const ClassifierSpec& spec,
                                           const PreprocessOptions& preprocess, double train_fraction,
                                           std::uint64_t classifier_seed) {
  if (spec.given) throw ConfigError("classifier.kind: \"given\" needs a patients_csv source");
  if (spec.trainable() && !(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction: trainable classifiers need a value in (0,1)");
  }
  const auto order = chronological(table);
  const std::size_t n_train = train_fraction > 0.0 ? train_count(table.size(), train_fraction) : 0;
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> sim_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  if (sim_rows.empty()) throw DataError("no encounters left to simulate");

  Dataset batch;
  CalibratedClassifier classifier;
  if (spec.trainable()) {
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(sim_rows.begin(), sim_rows.end());
    const EncounterTable engineered =
        preprocess.engineer ? engineer_features(table, LabPercentiles::fit(table.select_rows(train_rows))) : table;
    const auto train_table = engineered.select_rows(train_rows);
    const auto pre = Preprocessor::fit(train_table, preprocess);
    const auto train = Dataset::from_table(pre.apply(train_table));
    classifier = fit_classifier(spec, train, classifier_seed);
    batch = Dataset::from_table(pre.apply(engineered.select_rows(sim_rows)));
  } else {
    const auto labels = table.labels();
    for (auto r : sim_rows) {
      batch.ids.push_back(table.encounter(r).encounter_id);
      batch.labels.push_back(labels[r]);
    }
    classifier = fit_classifier(spec, batch, classifier_seed);
  }
  const auto predicted = classifier.predict(batch);
  std::vector<SimPatient> out;
  out.reserve(sim_rows.size());
  for (std::size_t i = 0; i < sim_rows.size(); ++i) {
    const auto& e = table.encounter(sim_rows[i]);
    out.push_back({e.encounter_id, e.admit_decision_time, e.los_hours, batch.labels[i], predicted[i]});
  }
  return out;
}

// --- simulation commands ---------------------------------------------------

namespace {

struct SimSetup {
  Scenario scenario;
  std::vector<ClassifierSpec> classifiers;
  PreprocessOptions preprocess;
  double train_fraction = 0.0;
  std::optional<std::vector<SimPatient>> fixed_patients;
  std::optional<config::Reader> data;
  fs::path base_dir;
  std::uint64_t seed = 0;
  std::int64_t replications = 1;
};

SimSetup sim_setup(const config::Reader& r, const LoadedConfig& cfg, const Options& o, bool many_classifiers) {
  SimSetup s;
  s.base_dir = cfg.base_dir;
  s.seed = cfg.seed;
  s.scenario = r.has("scenario") ? scenario_from_json(r.child("scenario")) : Scenario{};
  if (auto p = r.optional_child("preprocess")) s.preprocess = preprocess_options_from_json(*p);
  s.train_fraction = r.number("train_fraction", 0.0);
  if (!(s.train_fraction >= 0.0 && s.train_fraction < 1.0)) r.fail("train_fraction", "must lie in [0,1)");

  const auto data = r.child("data");
  if (data.has("patients_csv")) {
    s.fixed_patients = load_sim_patients_file(resolve(cfg.base_dir, data.string("patients_csv")).string());
  } else {
    s.data.emplace(data);
  }
  if (many_classifiers && r.has("classifiers")) {
    const auto& list = r.node().at("classifiers");
    if (!list.is_array() || list.empty()) r.fail("classifiers", "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.classifiers.push_back(
          classifier_spec_from_json(config::Reader(list[i], r.field_path("classifiers") + "[" + std::to_string(i) + "]"),
                                    cfg.base_dir));
    }
  } else if (r.has("classifier")) {
    s.classifiers.push_back(classifier_spec_from_json(r.child("classifier"), cfg.base_dir));
  }
  std::set<std::string> names;
  for (const auto& c : s.classifiers) {
    if (!names.insert(c.name).second) r.fail("classifiers", "duplicate classifier name '" + c.name + "'");
  }

  bool deterministic = true;
  for (const auto& c : s.classifiers) {
    deterministic = deterministic && (c.given || c.kind == ModelKind::perfect || c.kind == ModelKind::external);
  }
  s.replications = o.replications ? *o.replications : r.integer("replications", deterministic ? 1 : 30);
  if (s.replications < 1) r.fail("replications", "must be at least 1");
  return s;
}

std::string rep_path(std::int64_t r, std::string_view component) {
  return "rep/" + std::to_string(r) + "/" + std::string(component);
}

class PatientSource {
 public:
  explicit PatientSource(const SimSetup& s) : s_(s) {}

  std::vector<SimPatient> patients(std::int64_t rep, const ClassifierSpec& spec) {
    const auto classifier_seed = derive_seed(s_.seed, rep_path(rep, "classifier"));
    if (s_.fixed_patients) {
      if (spec.given) return *s_.fixed_patients;
      if (spec.trainable()) throw ConfigError("classifier.kind: trainable classifiers need a \"data\" table source");
      Dataset batch;
      for (const auto& p : *s_.fixed_patients) {
        batch.ids.push_back(p.encounter_id);
        batch.labels.push_back(p.true_label);
      }
      const auto predicted = fit_classifier(spec, batch, classifier_seed).predict(batch);
      auto out = *s_.fixed_patients;
      for (std::size_t i = 0; i < out.size(); ++i) out[i].predicted_label = predicted[i];
      return out;
    }
    if (rep != cached_rep_) {
      table_ = load_data(*s_.data, s_.base_dir, derive_seed(s_.seed, rep_path(rep, "cohort")));
      cached_rep_ = rep;
    }
    return build_sim_patients(table_, spec, s_.preprocess, s_.train_fraction, classifier_seed);
  }

 private:
  const SimSetup& s_;
  std::int64_t cached_rep_ = -1;
  EncounterTable table_;
};

Scenario rep_scenario(const SimSetup& s, Scenario scenario, std::int64_t rep) {
  scenario.seed = derive_seed(s.seed, rep_path(rep, "sterilization"));
  return scenario;
}

struct Summary {
  std::map<std::string, std::vector<double>> values;

  void add(const SimReport& r) {
    for (const auto& [name, v] : report_metrics(r)) values[name].push_back(v);
  }

  config::Json to_json() const {
    config::Json j = config::Json::object();
    for (const auto& [name, v] : values) {
      j[name] = {{"mean", stats::mean(v)}, {"std", stats::stddev(v)}, {"n", v.size()}};
    }
    return j;
  }
};

struct SweepRun {
  Capacity gw;
  Capacity ssu;
  std::string classifier;
  std::int64_t replication;
  SimReport report;
};

std::vector<std::string> sweep_metrics(const config::Reader& r) {
  std::vector<std::string> names;
  if (r.has("metrics")) {
    const auto& list = r.node().at("metrics");
    if (!list.is_array()) r.fail("metrics", "expected an array of report row names");
    const auto known = report_row_names();
    for (const auto& m : list) {
      if (!m.is_string()) r.fail("metrics", "expected an array of report row names");
      const auto name = m.get<std::string>();
      if (std::find(known.begin(), known.end(), name) == known.end()) r.fail("metrics", "unknown report row '" + name + "'");
      names.push_back(name);
    }
  } else {
    names = {"avg. wait time for GW bed (hr)", "total sterilization count"};
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

void write_sweep(const fs::path& out_dir, const std::vector<SweepRun>& runs, const std::vector<std::string>& metrics) {
  std::ostringstream results, summary;
  csv::write_row(results, {"gw_cap", "ssu_cap", "classifier", "replication", "metric", "value"});
  csv::write_row(summary, {"gw_cap", "ssu_cap", "classifier", "metric", "mean", "std", "n"});
  std::map<std::tuple<std::size_t, std::string>, std::vector<double>> grouped;
  std::vector<std::tuple<std::string, std::string, std::string>> group_keys;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> group_index;
  for (const auto& run : runs) {
    const auto key = std::make_tuple(capacity_text(run.gw), capacity_text(run.ssu), run.classifier);
    auto [it, inserted] = group_index.emplace(key, group_keys.size());
    if (inserted) group_keys.push_back(key);
    const auto values = report_metrics(run.report);
    for (const auto& m : metrics) {
      auto v = std::find_if(values.begin(), values.end(), [&](const auto& p) { return p.first == m; });
      if (v == values.end()) continue;
      csv::write_row(results, {std::get<0>(key), std::get<1>(key), run.classifier, std::to_string(run.replication), m,
                               csv::format_double(v->second)});
      grouped[{it->second, m}].push_back(v->second);
    }
  }
  for (std::size_t g = 0; g < group_keys.size(); ++g) {
    for (const auto& m : metrics) {
      auto it = grouped.find({g, m});
      if (it == grouped.end()) continue;
      const auto& [gw, ssu, name] = group_keys[g];
      csv::write_row(summary, {gw, ssu, name, m, csv::format_double(stats::mean(it->second)),
                               csv::format_double(stats::stddev(it->second)), std::to_string(it->second.size())});
    }
  }
  write_file(out_dir / "results.csv", results.str());
  write_file(out_dir / "summary.csv", summary.str());
}

std::vector<SweepRun> run_grid(const SimSetup& s, const std::vector<std::pair<Capacity, Capacity>>& grid) {
  PatientSource source(s);
  // Replication-major so each replication's cohort is generated once.
  std::vector<SweepRun> runs;
  for (std::int64_t rep = 0; rep < s.replications; ++rep) {
    for (const auto& spec : s.classifiers) {
      const auto patients = source.patients(rep, spec);
      for (const auto& [gw, ssu] : grid) {
        auto scenario = rep_scenario(s, s.scenario, rep);
        scenario.gw_capacity = gw;
        scenario.ssu_capacity = ssu;
        runs.push_back({gw, ssu, spec.name, rep, run_simulation(scenario, patients).report});
      }
    }
  }
  // Emission order: grid point, classifier, replication.
  std::vector<SweepRun> ordered;
  ordered.reserve(runs.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t c = 0; c < s.classifiers.size(); ++c) {
      for (std::int64_t rep = 0; rep < s.replications; ++rep) {
        const auto i = (static_cast<std::size_t>(rep) * s.classifiers.size() + c) * grid.size() + g;
        ordered.push_back(std::move(runs[i]));
      }
    }
  }
  return ordered;
}

}  // namespace

void cmd_simulate(const Options& o) {
  const auto cfg = load_config(o, "simulate");
  const config::Reader r(cfg.root, "simulate");
  auto s = sim_setup(r, cfg, o, false);
  if (s.classifiers.empty()) r.fail("classifier", "required field missing");
  const bool write_trace = r.boolean("write_trace", false);
  PatientSource source(s);
  Summary summary;
  for (std::int64_t rep = 0; rep < s.replications; ++rep) {
    const auto patients = source.patients(rep, s.classifiers.front());
    const auto result = run_simulation(rep_scenario(s, s.scenario, rep), patients);
    summary.add(result.report);
    write_json(o.out_dir / ("report_rep" + padded(rep) + ".json"), to_json(result.report));
    if (write_trace) {
      write_with(o.out_dir / ("trace_rep" + padded(rep) + ".csv"),
                 [&](std::ostream& os) { write_trace_csv(os, result.trace, patients); });
      write_with(o.out_dir / ("patients_rep" + padded(rep) + ".csv"),
                 [&](std::ostream& os) { write_sim_patients(os, patients); });
    }
  }
  config::Json j;
  j["classifier"] = s.classifiers.front().name;
  j["replications"] = s.replications;
  j["seed"] = s.seed;
  j["scenario"] = to_json(s.scenario);
  j["metrics"] = summary.to_json();
  write_json(o.out_dir / "summary.json", j);
}

void cmd_capacity_sweep(const Options& o) {
  const auto cfg = load_config(o, "capacity-sweep");
  const config::Reader r(cfg.root, "capacity-sweep");
  auto s = sim_setup(r, cfg, o, true);
  if (s.classifiers.empty()) r.fail("classifiers", "required field missing");
  const auto& grid_json = r.node().contains("grid") ? r.node().at("grid") : config::Json();
  if (!grid_json.is_array() || grid_json.empty()) r.fail("grid", "expected a non-empty array");
  std::vector<std::pair<Capacity, Capacity>> grid;
  for (std::size_t i = 0; i < grid_json.size(); ++i) {
    const config::Reader g(grid_json[i], r.field_path("grid") + "[" + std::to_string(i) + "]");
    grid.emplace_back(config::capacity(g, "gw_capacity", s.scenario.gw_capacity),
                      config::capacity(g, "ssu_capacity", s.scenario.ssu_capacity));
  }
  write_sweep(o.out_dir, run_grid(s, grid), sweep_metrics(r));
}

void cmd_fpfn_sweep(const Options& o) {
  const auto cfg = load_config(o, "fpfn-sweep");
  const config::Reader r(cfg.root, "fpfn-sweep");
  auto s = sim_setup(r, cfg, o, false);
  const auto& pairs = r.node().contains("pairs") ? r.node().at("pairs") : config::Json();
  if (!pairs.is_array() || pairs.empty()) r.fail("pairs", "expected a non-empty array");
  s.classifiers.clear();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const config::Reader p(pairs[i], r.field_path("pairs") + "[" + std::to_string(i) + "]");
    ClassifierSpec c;
    c.kind = ModelKind::confusion_noise;
    c.fp_rate = p.number("fp_rate");
    c.fn_rate = p.number("fn_rate");
    if (!(c.fp_rate >= 0.0 && c.fp_rate <= 1.0)) p.fail("fp_rate", "must lie in [0,1]");
    if (!(c.fn_rate >= 0.0 && c.fn_rate <= 1.0)) p.fail("fn_rate", "must lie in [0,1]");
    c.name = "fp=" + csv::format_double(c.fp_rate) + "/fn=" + csv::format_double(c.fn_rate);
    s.classifiers.push_back(c);
  }
  if (!o.replications && !r.has("replications")) s.replications = 30;
  write_sweep(o.out_dir, run_grid(s, {{s.scenario.gw_capacity, s.scenario.ssu_capacity}}), sweep_metrics(r));
}

// --- pipeline --------------------------------------------------------------

void cmd_pipeline(const Options& o) {
  const auto cfg = load_config(o, "pipeline");
  const config::Reader r(cfg.root, "pipeline");
  PreprocessOptions pre_opts;
  if (auto p = r.optional_child("preprocess")) pre_opts = preprocess_options_from_json(*p);

  CvOptions cv;
  cv.seed = derive_seed(cfg.seed, "cv");
  if (auto c = r.optional_child("cv")) {
    const auto k = c->integer("k", 10);
    if (k < 2) c->fail("k", "must be at least 2");
    cv.k = static_cast<std::size_t>(k);
    try {
      cv.resampling = parse_resampling(c->string("resampling", "none"));
    } catch (const DataError& e) {
      c->fail("resampling", e.what());
    }
    const auto kn = c->integer("smote_neighbors", 5);
    if (kn < 1) c->fail("smote_neighbors", "must be at least 1");
    cv.smote_neighbors = static_cast<std::size_t>(kn);
  }

  std::vector<ClassifierSpec> models;
  {
    const auto& list = r.node().contains("models") ? r.node().at("models") : config::Json();
    if (!list.is_array() || list.empty()) r.fail("models", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const config::Reader m(list[i], r.field_path("models") + "[" + std::to_string(i) + "]");
      auto spec = classifier_spec_from_json(m, cfg.base_dir);
      if (spec.given) m.fail("kind", "\"given\" is only valid for simulations");
      if (!names.insert(spec.name).second) m.fail("name", "duplicate model name '" + spec.name + "'");
      models.push_back(std::move(spec));
    }
  }
  std::size_t bins = 10;
  std::optional<std::size_t> top_k;
  if (auto f = r.optional_child("feature_selection")) {
    const auto b = f->integer("bins", 10);
    if (b < 1) f->fail("bins", "must be positive");
    bins = static_cast<std::size_t>(b);
    if (f->has("top_k")) {
      const auto k = f->integer("top_k");
      if (k < 1) f->fail("top_k", "must be positive");
      top_k = static_cast<std::size_t>(k);
    }
  }
  bool run_ttest = true;
  std::string ttest_metric = "f1_weighted";
  std::size_t permutations = 1000;
  if (auto t = r.optional_child("tests")) {
    run_ttest = t->boolean("ttest_5x2", true);
    ttest_metric = t->string("metric", ttest_metric);
    if (ttest_metric != "auc") {
      try {
        MetricReport{}.value(ttest_metric);
      } catch (const DataError& e) {
        t->fail("metric", e.what());
      }
    }
    const auto n = t->integer("permutations", 1000);
    if (n < 0) t->fail("permutations", "must be non-negative");
    permutations = static_cast<std::size_t>(n);
  }

  auto table = load_data(r.child("data"), cfg.base_dir, derive_seed(cfg.seed, "cohort"));
  if (pre_opts.engineer) table = engineer_features(table);
  const auto pre = Preprocessor::fit(table, pre_opts);
  auto prepared = pre.apply(table);
  const auto labels = prepared.labels();

  const auto scores = feature_scores(prepared, labels, {bins});
  const auto ranking = ensemble_rank(scores);
  write_with(o.out_dir / "feature_scores.csv", [&](std::ostream& os) {
    csv::Row header = {"feature", "kind"};
    for (const char* s : kScorerNames) header.emplace_back(s);
    header.insert(header.end(), {"mean_rank", "rank"});
    csv::write_row(os, header);
    for (const auto& rf : ranking) {
      const auto& fsc = *std::find_if(scores.begin(), scores.end(), [&](const auto& x) { return x.name == rf.name; });
      csv::Row row = {fsc.name, std::string(to_string(fsc.kind))};
      for (const char* s : kScorerNames) {
        const auto v = scorer_value(fsc, s);
        row.push_back(v ? csv::format_double(*v) : std::string());
      }
      row.push_back(csv::format_double(rf.mean_rank));
      row.push_back(std::to_string(rf.rank));
      csv::write_row(os, row);
    }
  });
  if (top_k && *top_k < ranking.size()) {
    for (std::size_t i = *top_k; i < ranking.size(); ++i) prepared.remove_column(ranking[i].name);
  }

  const auto data = Dataset::from_table(prepared);
  config::Json pre_json;
  pre_json["dropped_sparse"] = pre.dropped_sparse;
  pre_json["dropped_correlated"] = pre.dropped_correlated;
  pre_json["features"] = data.feature_names;
  pre_json["rows"] = data.size();
  pre_json["ls_count"] = data.count(ClassLabel::LS);
  write_json(o.out_dir / "preprocess.json", pre_json);

  std::vector<Trainer> trainers;
  std::vector<CvResult> results;
  config::Json summary = config::Json::object();
  for (const auto& m : models) {
    const auto seed = derive_seed(cfg.seed, "model/" + m.name);
    auto spec = model_spec(m, seed);
    Trainer base = make_trainer(spec);
    const double threshold = m.threshold;
    const bool calibrated = m.calibration.has_value();
    trainers.push_back([base, threshold, calibrated](const Dataset& train, std::uint64_t s) {
      auto c = base(train, s);
      if (!calibrated) c.threshold = threshold;
      return c;
    });
    results.push_back(kfold_cv(trainers.back(), data, cv));
    const auto& res = results.back();

    config::Json j;
    j["model"] = m.name;
    j["k"] = cv.k;
    j["resampling"] = std::string(to_string(cv.resampling));
    config::Json folds = config::Json::array();
    for (const auto& f : res.folds) {
      auto fj = to_json(f.report);
      fj["auc"] = f.auc;
      folds.push_back(std::move(fj));
    }
    j["folds"] = std::move(folds);
    j["mean"] = res.mean;
    j["std"] = res.stddev;
    write_json(o.out_dir / ("cv_" + m.name + ".json"), j);
    summary[m.name] = {{"mean", res.mean}, {"std", res.stddev}};

    write_with(o.out_dir / ("roc_" + m.name + ".csv"),
               [&](std::ostream& os) { write_curve_csv(os, roc_curve(res.oof_scores, data.labels)); });
    write_with(o.out_dir / ("pr_" + m.name + ".csv"),
               [&](std::ostream& os) { write_curve_csv(os, pr_curve(res.oof_scores, data.labels)); });
    write_with(o.out_dir / ("predictions_" + m.name + ".csv"),
               [&](std::ostream& os) { write_predictions(os, data.ids, res.oof_scores); });
  }
  write_json(o.out_dir / "summary.json", summary);

  write_with(o.out_dir / "tests.csv", [&](std::ostream& os) {
    csv::write_row(os, {"model_a", "model_b", "test", "statistic", "p_value"});
    for (std::size_t a = 0; a < models.size(); ++a) {
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        const auto pair_seed = derive_seed(cfg.seed, "tests/" + models[a].name + "/" + models[b].name);
        if (run_ttest) {
          const auto t = paired_5x2_ttest(trainers[a], trainers[b], data, pair_seed, ttest_metric, cv.resampling);
          csv::write_row(os, {models[a].name, models[b].name, "5x2cv_t(" + ttest_metric + ")",
                              csv::format_double(t.t), csv::format_double(t.p)});
        }
        if (permutations > 0) {
          const double stat =
              std::fabs(roc_auc(results[a].oof_scores, data.labels) - roc_auc(results[b].oof_scores, data.labels));
          const double p = roc_permutation_test(results[a].oof_scores, results[b].oof_scores, data.labels,
                                                permutations, pair_seed);
          csv::write_row(os, {models[a].name, models[b].name, "roc_permutation", csv::format_double(stat),
                              csv::format_double(p)});
        }
      }
    }
  });
}

// --- summarize / generate-cohort -------------------------------------------

void cmd_summarize(const Options& o) {
  const auto cfg = load_config(o, "summarize");
  const config::Reader r(cfg.root, "summarize");
  auto table = load_data(r.child("data"), cfg.base_dir, derive_seed(cfg.seed, "cohort"));
  if (r.boolean("engineer_features", false)) table = engineer_features(table);
  std::ostringstream os;
  csv::write_row(os, {"feature", "statistic", "value"});
  const auto emit = [&](const std::string& f, const std::string& s, double v) {
    csv::write_row(os, {f, s, csv::format_double(v)});
  };
  const auto labels = table.labels();
  const auto n = static_cast<double>(table.size());
  const auto n_ls = static_cast<double>(std::count(labels.begin(), labels.end(), ClassLabel::LS));
  emit("label", "count", n);
  emit("label", "LS_fraction", n > 0 ? n_ls / n : 0.0);
  emit("label", "SS_fraction", n > 0 ? 1.0 - n_ls / n : 0.0);

  const auto numeric_rows = [&](const std::string& name, std::vector<double> v, double missing_ratio) {
    emit(name, "count", static_cast<double>(v.size()));
    emit(name, "missing_ratio", missing_ratio);
    if (v.empty()) return;
    emit(name, "mean", stats::mean(v));
    emit(name, "std", stats::stddev(v));
    emit(name, "min", *std::min_element(v.begin(), v.end()));
    emit(name, "q25", percentile(v, 0.25));
    emit(name, "median", percentile(v, 0.5));
    emit(name, "q75", percentile(v, 0.75));
    emit(name, "max", *std::max_element(v.begin(), v.end()));
  };
  std::vector<double> los;
  for (const auto& e : table.encounters()) los.push_back(e.los_hours);
  numeric_rows("los_hours", los, 0.0);
  for (const auto& col : table.columns()) {
    if (col.kind == FeatureKind::numeric) {
      std::vector<double> v;
      for (const auto& cell : col.values) {
        if (!is_missing(cell)) v.push_back(std::get<double>(cell));
      }
      numeric_rows(col.name, std::move(v), col.missing_ratio());
    } else {
      std::map<std::string, double> freq;
      double present = 0.0;
      for (const auto& cell : col.values) {
        if (is_missing(cell)) continue;
        freq[std::get<std::string>(cell)] += 1.0;
        present += 1.0;
      }
      emit(col.name, "count", present);
      emit(col.name, "missing_ratio", col.missing_ratio());
      for (const auto& [cat, c] : freq) emit(col.name, "frequency:" + cat, c / present);
    }
  }
  write_file(o.out_dir / "summary.csv", os.str());
}

void cmd_generate_cohort(const Options& o) {
  const auto cfg = load_config(o, "generate-cohort");
  const config::Reader r(cfg.root, "generate-cohort");
  auto cohort = cohort_config_from_json(r.child("cohort"));
  cohort.seed = derive_seed(cfg.seed, "cohort");
  const auto table = generate_cohort(cohort);
  write_with(o.out_dir / "cohort.csv", [&](std::ostream& os) { write_encounters(os, table); });
  write_json(o.out_dir / "cohort_config.json", to_json(cohort));
}

int run_command(std::string_view command, const Options& options, std::ostream& err) {
  try {
    if (command == "pipeline") {
      cmd_pipeline(options);
    } else if (command == "simulate") {
      cmd_simulate(options);
    } else if (command == "capacity-sweep") {
      cmd_capacity_sweep(options);
    } else if (command == "fpfn-sweep") {
      cmd_fpfn_sweep(options);
    } else if (command == "summarize") {
      cmd_summarize(options);
    } else if (command == "generate-cohort") {
      cmd_generate_cohort(options);
    } else {
      err << "error: unknown command '" << command << "'\n";
      return 2;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const config::Json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace losflow::experiments
