#pragma once

// Experiment runner: strict JSON configs, run records (one JSON object per
// line), plain-text result tables and gnuplot script emission.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "percweb/error.hpp"

namespace percweb {

using Json = nlohmann::json;

inline constexpr const char* kArtifactVersion = "percweb 0.1.0";

enum class Experiment {
  crossing,
  cardy_compare,
  rg_map,
  collapse,
  web_stats,
  duality_audit,
  droplet_rotation,
  independence,
};

const char* to_string(Experiment experiment);
Experiment experiment_from_string(const std::string& name);
const std::vector<Experiment>& all_experiments();

// Every schema violation found, one message each.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::crossing;
  Json params;  // every key of the experiment, defaults filled in
  std::uint64_t n_samples = 0;
  std::uint64_t master_seed = 0;
  int workers = 1;
  std::string output;  // JSONL log path; empty means "<experiment>.jsonl" in the output dir

  // Full normalized config (params plus the common keys).
  Json to_json() const;
};

// Validates against the experiment's key set; unknown keys, wrong types and
// out-of-range values are all collected into one ConfigError.
ExperimentConfig parse_config(const Json& raw);
ExperimentConfig load_config(const std::filesystem::path& path);
// Default config for an experiment (what parse_config({"experiment": name}) gives).
ExperimentConfig default_config(Experiment experiment);

struct RunRecord {
  std::string artifact_version = kArtifactVersion;
  std::string experiment;
  Json config;
  std::string config_digest;  // 16 hex digits, excludes workers and output
  bool complete = true;
  Json results;
  std::string results_digest;
  double wall_seconds = 0.0;

  Json to_json() const;
  static RunRecord from_json(const Json& j);
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

std::string config_digest(const ExperimentConfig& config);
std::string results_digest(const Json& results);

// Runs the experiment. A raised interrupt stops sampling; the record is then
// marked incomplete and holds whatever was finished.
RunRecord run(const ExperimentConfig& config);

struct TableRow {
  std::string series;
  double delta = 0.0;
  double t = 0.0;
  double aspect = 1.0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t n = 0;
};

// One row per estimated crossing probability in the record.
std::vector<TableRow> table_rows(const RunRecord& record);

// Appends the record as one line to log_path and writes the table next to it
// (same stem, .csv). Creates parent directories.
void write_record(const RunRecord& record, const std::filesystem::path& log_path);
// Reads every record of a JSONL log.
std::vector<RunRecord> read_records(const std::filesystem::path& log_path);
void write_table(const std::vector<TableRow>& rows, std::ostream& out);

// Writes <experiment>.gp plus its data files into dir; returns the files
// written. Throws InvalidArgument for an incomplete record.
std::vector<std::filesystem::path> emit_plots(const RunRecord& record,
                                              const std::filesystem::path& dir);

}  // namespace percweb
