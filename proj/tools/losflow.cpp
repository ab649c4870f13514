#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "losflow/experiments.hpp"

int main(int argc, char** argv) {
  using losflow::experiments::Options;

  CLI::App app{"Length-of-stay classification and patient flow experiments"};
  app.require_subcommand(1);

  Options options;
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::int64_t replications = 0;

  const std::map<std::string, std::string> about{
      {"pipeline", "Preprocess, rank features, cross-validate models and compare them"},
      {"simulate", "Run the patient flow simulation for one classifier"},
      {"capacity-sweep", "Simulate a grid of GW and SSU capacities"},
      {"fpfn-sweep", "Simulate confusion-noise classifiers at given false positive/negative rates"},
      {"summarize", "Descriptive statistics of an encounter table"},
      {"generate-cohort", "Write a synthetic encounter cohort"}};
  for (const char* name : losflow::experiments::kCommands) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--replications", replications, "Replication count (overrides the config)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto* sub = app.get_subcommands().front();
  options.config_path = config_path;
  options.out_dir = out_dir;
  if (sub->count("--seed") > 0) options.seed = seed;
  if (sub->count("--replications") > 0) options.replications = replications;
  return losflow::experiments::run_command(sub->get_name(), options, std::cerr);
}
