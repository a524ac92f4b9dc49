#pragma once
//
// Experiment orchestration: each experiment produces named threshold checks
// tagged with the acceptance criterion they support, plus a JSON details
// block. Output files are assembled on one thread.
//

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "plab/mass_limit.hpp"

namespace plab::cli {

struct Check {
  int criterion = 0;  // 0: supporting check outside the numbered criteria
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=" or "=="
  double threshold = 0.0;
  bool pass = false;
};

struct Experiment {
  std::string name;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();
  double seconds = 0.0;
  std::map<int, double> criterion_seconds;
  std::map<std::string, std::string> artifacts;  // extra output files: name -> contents

  void check(int criterion, const std::string& check_name, double value, const std::string& relation,
             double threshold);
  bool pass() const;
};

/// Parallel loop over [0, n) on `threads` workers; each index runs exactly once.
ParallelFor make_parallel_for(int threads);

const std::vector<std::string>& experiment_names();

/// Runs one experiment; throws ConfigError for unusable parameters.
Experiment run_experiment(const std::string& name, const Config& cfg, const ParallelFor& pfor);

struct RunOptions {
  std::string command;  // an experiment name or "all"
  Config config;
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;
  int threads = 1;
};

struct RunReport {
  std::vector<Experiment> experiments;
  std::string results_csv;
  int exit_code = 0;
};

/// Runs the experiments and writes results.csv, manifest.json and one JSON
/// file per experiment into options.out_dir. Failing checks are named on `err`.
RunReport execute(const RunOptions& options, std::ostream& log, std::ostream& err);

std::string format_results_csv(const std::vector<Experiment>& experiments);

}  // namespace plab::cli
