#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "losflow/classifiers.hpp"
#include "losflow/config.hpp"
#include "losflow/flow_sim.hpp"
#include "losflow/preprocess.hpp"
#include "losflow/table.hpp"

namespace losflow::experiments {

/// Flags shared by every command. Command-line values override the config.
struct Options {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replications;
};

void cmd_pipeline(const Options& options);
void cmd_simulate(const Options& options);
void cmd_capacity_sweep(const Options& options);
void cmd_fpfn_sweep(const Options& options);
void cmd_summarize(const Options& options);
void cmd_generate_cohort(const Options& options);

inline constexpr const char* kCommands[] = {"pipeline",   "simulate",  "capacity-sweep",
                                            "fpfn-sweep", "summarize", "generate-cohort"};

/// Runs a command and maps failures to exit codes: 0 ok, 2 config error,
/// 3 data error, 4 internal error. Messages go to `err`.
int run_command(std::string_view command, const Options& options, std::ostream& err);

// --- building blocks, exposed for tests ---------------------------------

struct PreprocessOptions {
  bool engineer = true;
  double sparse_threshold = 0.75;
  bool rare_test_count = true;
  bool one_hot = true;
  double correlation_threshold = 0.99;
};

PreprocessOptions preprocess_options_from_json(const config::Reader& reader);

/// Sparsity pruning, imputation, one-hot encoding and correlation pruning,
/// fitted on one table and replayable on another. Feature engineering runs
/// before this, on the full table.
struct Preprocessor {
  PreprocessOptions options;
  std::vector<std::string> dropped_sparse;
  Imputer imputer;
  OneHotEncoder encoder;
  std::vector<std::string> dropped_correlated;

  static Preprocessor fit(const EncounterTable& table, const PreprocessOptions& options);
  EncounterTable apply(const EncounterTable& table) const;
};

inline constexpr const char* kRareTestFeature = "rare_test_count";

/// Encounter table from a config "data" block: {"cohort": {...}} or
/// {"csv": path, "timestamps": "hours"|"iso8601"}. Relative paths resolve
/// against `base_dir`. A cohort's seed is replaced by `cohort_seed`.
EncounterTable load_data(const config::Reader& data, const std::filesystem::path& base_dir,
                         std::uint64_t cohort_seed);

/// Classifier block of simulate and the sweeps.
struct ClassifierSpec {
  std::string name;
  ModelKind kind = ModelKind::perfect;
  bool given = false;  // use predicted labels from the patient CSV
  double p_ls = 0.5;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  std::filesystem::path predictions;
  double threshold = 0.5;
  std::optional<CalibrationTarget> calibration;
  LogisticHyper logistic;
  double lda_regularization = -1.0;

  bool trainable() const { return kind == ModelKind::logistic || kind == ModelKind::lda; }
};

ClassifierSpec classifier_spec_from_json(const config::Reader& reader, const std::filesystem::path& base_dir);

/// Simulation inputs for one replication: the encounters to simulate, with
/// predicted labels from `spec`. Trainable classifiers fit on the earliest
/// `train_fraction` of encounters by triage time and the rest are simulated.
std::vector<SimPatient> build_sim_patients(const EncounterTable& table, const ClassifierSpec& spec,
                                           const PreprocessOptions& preprocess, double train_fraction,
                                           std::uint64_t classifier_seed);

}  // namespace losflow::experiments
