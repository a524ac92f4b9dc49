#pragma once
//
// Experiment configuration: INI-style [section] / key = value text.
//

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace plab::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpacetimeConfig {
  int dims = 1;
  int extent = 32;
  double dx = 1.0;
  int steps = 64;
  double dt = 0.5;
  std::vector<double> metric;  // spatial metric diagonal, empty = flat
};

struct Config {
  std::optional<SpacetimeConfig> spacetime;  // absent: each experiment uses its baseline lattices
  std::uint64_t seed = 1;
  std::string output = "plab_out";

  double solve_mass = 0.8;
  int solve_samples = 3;

  double proca_mass = 0.8;
  int proca_cases = 20;
  std::string proca_mode = "constrained";  // constrained | unconstrained | propagator
  std::string proca_source, proca_data, proca_test_form;  // form files, empty = generated

  double scan_m0 = 0.5;
  int scan_count = 12;
  std::vector<std::string> scan_probes{"co-closed", "closed", "generic"};
  std::vector<double> scan_masses;  // explicit list, empty = m0 * 2^-k
  bool scan_constrained = false;    // constrained data for the classical scan

  int algebra_samples = 100;
  int algebra_degree = 4;

  int weyl_dimension = 4;
  int weyl_triples = 1000;
  int weyl_pairs = 10000;
  double weyl_m0 = 0.5;

  // Every key actually read, as "section.key" -> raw text.
  std::map<std::string, std::string> echo;
};

/// Value set from the command line; validated like a file entry.
struct Override {
  std::string section, key, value;
};

/// Parses the text of a config file. `source` names it in diagnostics.
Config parse_config(std::istream& in, const std::string& source, const std::vector<Override>& overrides = {});
/// Empty path: defaults plus overrides.
Config load_config(const std::string& path, const std::vector<Override>& overrides = {});

}  // namespace plab::cli
