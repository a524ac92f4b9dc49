#include <CLI11.hpp>

#include <iostream>

#include "runner.hpp"

namespace {

// Subcommand flag bound to a config key; the value is validated by the config parser.
struct Flag {
  std::string name, section, key, help;
  std::string value;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace plab::cli;
  CLI::App app{"Lattice Proca field experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  int threads = 1;
  std::vector<Flag> globals{{"--out", "run", "output", "output directory (overrides [run].output)", ""},
                            {"--seed", "run", "seed", "RNG seed (overrides [run].seed)", ""}};
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  for (auto& f : globals) app.add_option(f.name, f.value, f.help);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"identities", "discrete form identities and epsilon contractions"},
      {"solve", "Klein-Gordon solver convergence and propagators"},
      {"proca", "Proca propagators and Cauchy data maps"},
      {"mass-scan", "zero-mass limit scan over probe classes"},
      {"algebra", "exact CCR algebra and source shifts"},
      {"weyl", "Weyl algebra products and states"},
      {"all", "every experiment in order"},
  };
  std::map<std::string, std::vector<Flag>> flags{
      {"solve",
       {{"--mass", "solve", "mass", "Klein-Gordon mass", ""}, {"--samples", "solve", "samples", "random forms per degree", ""}}},
      {"proca",
       {{"--mass", "proca", "mass", "Proca mass", ""},
        {"--source", "proca", "source", "source 1-form j (form CSV)", ""},
        {"--data", "proca", "data", "initial data (four-block CSV)", ""},
        {"--test-form", "proca", "test_form", "test 1-form F (form CSV)", ""},
        {"--mode", "proca", "mode", "constrained | unconstrained | propagator", ""},
        {"--cases", "proca", "cases", "equivalence cases", ""}}},
      {"mass-scan",
       {{"--probes", "mass-scan", "probes", "comma list of co-closed, closed, generic", ""},
        {"--masses", "mass-scan", "masses", "comma list of decreasing masses", ""},
        {"--constrained", "mass-scan", "constrained", "true | false: constrained data for the scan", ""},
        {"--m0", "mass-scan", "m0", "largest mass of the geometric list", ""},
        {"--count", "mass-scan", "count", "length of the geometric list", ""}}},
      {"algebra",
       {{"--samples", "algebra", "samples", "random elements", ""},
        {"--max-degree", "algebra", "max_degree", "largest word length", ""}}},
      {"weyl",
       {{"--dimension", "weyl", "dimension", "dimension of the presymplectic space", ""},
        {"--m0", "weyl", "m0", "critical mass of the obstruction model", ""},
        {"--triples", "weyl", "triples", "associativity triples", ""},
        {"--pairs", "weyl", "pairs", "Cauchy-Schwarz pairs", ""}}},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help)->fallthrough();
    for (auto& f : flags[name]) sub->add_option(f.name, f.value, f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunOptions opt;
  opt.command = app.get_subcommands().front()->get_name();
  opt.threads = threads;
  opt.config_path = config_path;
  std::vector<Override> overrides;
  for (const auto& f : globals)
    if (!f.value.empty()) overrides.push_back({f.section, f.key, f.value});
  for (const auto& f : flags[opt.command])
    if (!f.value.empty()) overrides.push_back({f.section, f.key, f.value});
  try {
    opt.config = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  opt.out_dir = opt.config.output;
  return execute(opt, std::cout, std::cerr).exit_code;
}
