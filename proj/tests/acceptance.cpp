// Runs every experiment and prints one verdict line per acceptance criterion.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "runner.hpp"

using namespace plab::cli;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  double runtime_limit;  // seconds, 0 = none
};

const std::vector<Criterion> criteria{
    {1, "exterior-calculus identities", 10},
    {2, "epsilon contraction identity", 1},
    {3, "wave-solver second-order convergence", 30},
    {4, "fundamental-solution contracts", 60},
    {5, "Green identity on both half spaces", 0},
    {6, "Lorenz-constraint propagation", 0},
    {7, "unconstrained vs constrained equivalence", 0},
    {8, "kappa/theta round trip", 0},
    {9, "symplectic form", 0},
    {10, "zero-mass probe classification", 300},
    {11, "limit dynamics under the data constraint", 0},
    {12, "exact CCR algebra", 60},
    {13, "source shift and dynamics ideal mapping", 0},
    {14, "Weyl algebra suite", 0},
    {15, "quantum-limit equivalence", 0},
    {16, "results.csv deterministic across runs and thread counts", 0},
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunReport run_all(const fs::path& out, int threads) {
  RunOptions opt;
  opt.command = "all";
  opt.out_dir = out.string();
  opt.threads = threads;
  std::ostringstream log, err;
  RunReport r = execute(opt, log, err);
  if (r.exit_code == 2 || r.exit_code == 3) std::cerr << err.str();
  return r;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "plab_acceptance";
  fs::remove_all(root);
  const RunReport base = run_all(root / "t1", 1);
  if (base.exit_code >= 2) return 2;

  std::map<int, std::vector<const Check*>> checks;
  std::map<int, double> seconds;
  for (const auto& e : base.experiments) {
    for (const auto& c : e.checks) checks[c.criterion].push_back(&c);
    for (const auto& [id, s] : e.criterion_seconds) seconds[id] += s;
  }

  bool all_pass = true;
  for (const auto& cr : criteria) {
    std::ostringstream detail;
    bool pass = true;
    if (cr.id == 16) {
      const std::string a = slurp(root / "t1" / "results.csv");
      int runs = 0, identical = 0;
      for (int threads : {1, 2, 4}) {
        const fs::path dir = root / ("repeat_t" + std::to_string(threads));
        const RunReport r = run_all(dir, threads);
        ++runs;
        identical += r.exit_code < 2 && !a.empty() && slurp(dir / "results.csv") == a;
      }
      pass = identical == runs;
      detail << identical << "/" << runs << " repeated runs (threads 1, 2, 4) byte-identical, " << a.size()
             << " bytes";
    } else {
      int ok = 0;
      std::vector<std::string> failed;
      for (const Check* c : checks[cr.id]) {
        if (c->pass) {
          ++ok;
        } else {
          char buf[256];
          std::snprintf(buf, sizeof buf, "%s=%.3g %s %.3g", c->name.c_str(), c->value, c->relation.c_str(),
                        c->threshold);
          failed.push_back(buf);
        }
      }
      pass = !checks[cr.id].empty() && failed.empty();
      detail << ok << "/" << checks[cr.id].size() << " checks";
      char buf[64];
      std::snprintf(buf, sizeof buf, ", %.2f s", seconds[cr.id]);
      detail << buf;
      if (cr.runtime_limit > 0) {
        std::snprintf(buf, sizeof buf, " (limit %.0f s)", cr.runtime_limit);
        detail << buf;
        if (seconds[cr.id] > cr.runtime_limit) {
          pass = false;
          detail << " runtime exceeded";
        }
      }
      for (const auto& f : failed) detail << "; " << f;
    }
    all_pass = all_pass && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << cr.id << " " << cr.title << ": " << detail.str() << "\n";
  }
  std::cout << (all_pass ? "acceptance: all criteria pass\n" : "acceptance: FAILED\n");
  return all_pass ? 0 : 1;
}
