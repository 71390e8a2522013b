// percweb command-line runner.
//
//   percweb <experiment> [--config FILE] [--seed N] [--workers N] [--samples N] [--output FILE]
//   percweb config <experiment>          print the default config
//   percweb plot LOG [--dir DIR] [--record K]
//   percweb --selftest

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "percweb/harness.hpp"
#include "percweb/parallel.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using namespace percweb;

namespace {

extern "C" void on_sigint(int) { interrupt_flag().store(true); }

fs::path output_dir() {
  const char* env = std::getenv("PERCWEB_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path("percweb-out");
}

struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  std::uint64_t samples = 0;
  std::string output;
};

int run_experiment(Experiment exp, CLI::App& sub, const Overrides& o) {
  Json raw = Json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) {
      std::cerr << "error: cannot open " << o.config << '\n';
      return 2;
    }
    try {
      raw = Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
      std::cerr << "error: malformed JSON in " << o.config << ": " << e.what() << '\n';
      return 2;
    }
    if (raw.is_object() && raw.contains("experiment") && raw["experiment"] != to_string(exp)) {
      std::cerr << "error: config is for experiment " << raw["experiment"] << ", not "
                << to_string(exp) << '\n';
      return 2;
    }
  }
  if (!raw.is_object()) {
    std::cerr << "error: config must be a JSON object\n";
    return 2;
  }
  raw["experiment"] = to_string(exp);
  if (sub.count("--seed")) raw["master_seed"] = o.seed;
  if (sub.count("--workers")) raw["workers"] = o.workers;
  if (sub.count("--samples")) raw["n_samples"] = o.samples;
  if (sub.count("--output")) raw["output"] = o.output;

  ExperimentConfig cfg;
  try {
    cfg = parse_config(raw);
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid config\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << '\n';
    return 2;
  }
  const fs::path log = cfg.output.empty() ? output_dir() / (std::string(to_string(exp)) + ".jsonl")
                                          : fs::path(cfg.output);
  std::signal(SIGINT, on_sigint);
  RunRecord rec;
  try {
    rec = run(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  write_record(rec, log);
  std::cout << rec.results.dump(2) << '\n';
  std::cerr << (rec.complete ? "record written to " : "interrupted; partial record written to ")
            << log.string() << " (" << rec.wall_seconds << " s)\n";
  return rec.complete ? 0 : 130;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Percolation crossing, web regularity and scaling experiments"};
  bool selftest = false;
  app.add_flag("--selftest", selftest, "Run the exhaustive small-instance oracle suite");

  Overrides o;
  std::vector<std::pair<Experiment, CLI::App*>> subs;
  for (Experiment exp : all_experiments()) {
    auto* sub = app.add_subcommand(to_string(exp), std::string("Run the ") + to_string(exp) + " experiment");
    sub->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override master_seed");
    sub->add_option("--workers", o.workers, "Override workers");
    sub->add_option("--samples", o.samples, "Override n_samples");
    sub->add_option("-o,--output", o.output, "Override the JSONL log path");
    subs.emplace_back(exp, sub);
  }

  std::string config_name;
  auto* config_cmd = app.add_subcommand("config", "Print the default config of an experiment");
  config_cmd->add_option("experiment", config_name)->required();

  std::string plot_log, plot_dir;
  int plot_index = -1;
  auto* plot_cmd = app.add_subcommand("plot", "Write gnuplot scripts and data for a record");
  plot_cmd->add_option("log", plot_log, "JSONL record log")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("-d,--dir", plot_dir, "Output directory (default: next to the log)");
  plot_cmd->add_option("-r,--record", plot_index, "Record index in the log (default: last)");

  app.require_subcommand(0, 1);
  CLI11_PARSE(app, argc, argv);

  if (selftest) return percweb::oracle::run_selftest(std::cout) == 0 ? 0 : 1;

  for (auto& [exp, sub] : subs)
    if (sub->parsed()) return run_experiment(exp, *sub, o);

  if (config_cmd->parsed()) {
    try {
      std::cout << default_config(experiment_from_string(config_name)).to_json().dump(2) << '\n';
    } catch (const InvalidArgument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
    return 0;
  }

  if (plot_cmd->parsed()) {
    try {
      const auto records = read_records(plot_log);
      if (records.empty()) throw InvalidArgument("log holds no records");
      const int k = plot_index < 0 ? static_cast<int>(records.size()) - 1 : plot_index;
      if (k >= static_cast<int>(records.size())) throw InvalidArgument("record index out of range");
      const fs::path dir = plot_dir.empty() ? fs::path(plot_log).parent_path() : fs::path(plot_dir);
      for (const auto& f : emit_plots(records[static_cast<std::size_t>(k)], dir))
        std::cout << f.string() << '\n';
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }

  std::cout << app.help();
  return 0;
}
