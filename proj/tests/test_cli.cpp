#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "plab/io.hpp"
#include "plab/proca.hpp"
#include "plab/rng.hpp"
#include "runner.hpp"

using namespace plab::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("plab_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

Result run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(PLAB_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

Config parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "test.ini");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const std::string lattice = "[spacetime]\ndims = 1\nextent = 16\ndx = 1\nsteps = 32\ndt = 0.5\n";

}  // namespace

TEST_CASE("config parser reads every section and echoes the keys") {
  const Config c = parse(lattice +
                         "[run]\nseed = 9\noutput = out_dir\n[solve]\nmass = 0.6\nsamples = 2\n"
                         "[mass-scan]\nm0 = 0.25\ncount = 8\nprobes = co-closed, generic\n"
                         "[weyl]\ndimension = 3\nm0 = 0.4\n");
  REQUIRE(c.spacetime);
  CHECK(c.spacetime->extent == 16);
  CHECK(c.spacetime->steps == 32);
  CHECK(c.seed == 9);
  CHECK(c.output == "out_dir");
  CHECK(c.solve_mass == 0.6);
  CHECK(c.scan_probes == std::vector<std::string>{"co-closed", "generic"});
  CHECK(c.weyl_dimension == 3);
  CHECK(c.echo.at("mass-scan.count") == "8");
  CHECK(c.echo.at("spacetime.dx") == "1");
  CHECK_FALSE(parse("").spacetime);
}

TEST_CASE("config errors carry a line and field diagnostic") {
  CHECK(parse_error("[spacetime]\ndims = 1\nextent = 16\nsteps = 32\ndt = 0.5\n") ==
        "test.ini:1: [spacetime].dx: missing required key");
  CHECK(parse_error(lattice + "[solve]\nmas = 0.6\n") == "test.ini:8: [solve].mas: unknown key");
  CHECK(parse_error("[physics]\nx = 1\n") == "test.ini:1: [physics]: unknown section");
  CHECK(parse_error("seed = 3\n") == "test.ini:1: key 'seed' outside any section");
  CHECK(parse_error(lattice + "[run]\nseed = three\n") == "test.ini:8: [run].seed: expected a number, got 'three'");
  CHECK(parse_error("[spacetime]\ndims = 2\nextent = 16\ndx = 1\nsteps = 32\ndt = 0.5\n") ==
        "test.ini:2: [spacetime].dims: must be 1 or 3");
  CHECK(parse_error(lattice + "metric = 1, 2\n") == "test.ini:7: [spacetime].metric: needs one entry per spatial axis");
  CHECK(parse_error("[mass-scan]\ncount = 14\n").find("below 2^-12") != std::string::npos);
  CHECK(parse_error("[mass-scan]\nprobes = closed, exotic\n").find("unknown probe kind 'exotic'") != std::string::npos);
  CHECK(parse_error("[algebra]\nmax_degree = 9\n").find("at most 6") != std::string::npos);
  CHECK(parse_error("[solve]\nmass = -1\n").find("must be positive") != std::string::npos);
}

TEST_CASE("checks evaluate their relation") {
  Experiment e;
  e.check(1, "a", 1e-12, "<=", 1e-10);
  e.check(2, "b", 3.0, ">=", 2.0);
  e.check(3, "c", 0.0, "==", 0.0);
  CHECK(e.pass());
  e.check(3, "d, quoted", 1.0, "==", 0.0);
  CHECK_FALSE(e.pass());
  CHECK_THROWS_AS(e.check(1, "x", 0, "<", 1), std::invalid_argument);
  e.name = "demo";
  const std::string csv = format_results_csv({e});
  CHECK(csv.find("experiment,criterion,check,value,relation,threshold,pass\n") == 0);
  CHECK(csv.find("demo,3,\"d, quoted\",1,==,0,false\n") != std::string::npos);
}

TEST_CASE("parallel loop runs every index exactly once and propagates errors") {
  for (int threads : {1, 2, 5}) {
    const plab::ParallelFor pfor = make_parallel_for(threads);
    std::vector<std::atomic<int>> hits(97);
    pfor(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(pfor(10, [](std::size_t i) {
                      if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
  }
}

TEST_CASE("cli rejects bad configs with exit code 2") {
  const fs::path dir = scratch("config");
  const fs::path cfg = write_config(dir, "[spacetime]\ndims = 1\nextent = 16\nsteps = 32\ndt = 0.5\n");
  Result r = run("solve --config " + cfg.string() + " --out " + (dir / "o").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("[spacetime].dx") != std::string::npos);
  CHECK(r.err.find(":1:") != std::string::npos);

  write_config(dir, lattice + "[weyl]\nsize = 4\n");
  r = run("weyl --config " + cfg.string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("[weyl].size: unknown key") != std::string::npos);

  write_config(dir, "[spacetime]\ndims = 1\nextent = 16\ndx = 1\nsteps = 32\ndt = 1.5\n");
  r = run("solve --config " + cfg.string() + " --out " + (dir / "o").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("[spacetime].dt") != std::string::npos);

  CHECK(run("bogus", dir).code == 2);
  CHECK(run("", dir).code == 2);
  CHECK(run("weyl --threads 0", dir).code == 2);
  CHECK(run("weyl --config " + (dir / "missing.ini").string(), dir).code == 2);
}

TEST_CASE("cli exits 1 and names failing checks") {
  const fs::path dir = scratch("fail");
  // Seven masses are too few for the co-closed sequence to settle.
  const fs::path cfg = write_config(dir, "[mass-scan]\ncount = 7\n");
  const Result r = run("mass-scan --config " + cfg.string() + " --out " + (dir / "o").string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("FAIL mass-scan converges[co-closed]") != std::string::npos);
  CHECK(fs::exists(dir / "o" / "results.csv"));
}

TEST_CASE("mass-scan writes verdicts and a manifest") {
  const fs::path dir = scratch("scan");
  const fs::path out = dir / "o";
  const Result r = run("mass-scan --seed 4 --out " + out.string(), dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mass-scan: 10/10 checks pass") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(out / "mass-scan.json"));
  CHECK(doc["pass"] == true);
  bool found = false;
  for (const auto& p : doc["details"]["classical"]) {
    if (p["probe"] == "co-closed") {
      found = true;
      CHECK(p["converges"] == true);
      CHECK(p["records"].size() == 12);
    }
    if (p["probe"] == "generic") CHECK(p["converges"] == false);
  }
  CHECK(found);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["experiments"][0]["name"] == "mass-scan");
  CHECK(manifest["experiments"][0]["criterion_seconds"].contains("10"));
}

TEST_CASE("results.csv is identical across thread counts") {
  const fs::path dir = scratch("threads");
  const fs::path cfg = write_config(dir, lattice + "[proca]\ncases = 6\n");
  for (int t : {1, 3}) {
    const Result r = run("all --config " + cfg.string() + " --threads " + std::to_string(t) + " --out " +
                             (dir / ("t" + std::to_string(t))).string(),
                         dir);
    REQUIRE(r.code == 0);
  }
  const std::string a = slurp(dir / "t1" / "results.csv"), b = slurp(dir / "t3" / "results.csv");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("command-line overrides are validated like config entries") {
  std::istringstream is(lattice + "[proca]\nmass = 0.8\n");
  const Config c = parse_config(is, "test.ini", {{"proca", "mass", "0.6"}, {"mass-scan", "constrained", "true"}});
  CHECK(c.proca_mass == 0.6);
  CHECK(c.scan_constrained);
  CHECK(load_config("", {{"proca", "mode", "propagator"}}).proca_mode == "propagator");
  CHECK_THROWS_WITH(load_config("", {{"proca", "mode", "sideways"}}),
                    Catch::Matchers::ContainsSubstring("[proca].mode: expected constrained"));
  CHECK_THROWS_WITH(load_config("", {{"mass-scan", "masses", "0.5, 0.6"}}),
                    Catch::Matchers::ContainsSubstring("strictly decreasing"));
  CHECK_THROWS_WITH(load_config("", {{"mass-scan", "masses", "0.5, 0.1, 0.0001"}}),
                    Catch::Matchers::ContainsSubstring("at least 2^-12"));
}

TEST_CASE("solve writes its field and record") {
  const fs::path dir = scratch("solve");
  const Result r = run("solve --mass 0.7 --samples 1 --out " + (dir / "o").string(), dir);
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "o" / "solve.json"));
  const auto& rec = doc["details"]["record"];
  CHECK(rec["mass"] == 0.7);
  CHECK(rec["cfl"] == 0.5);
  CHECK(rec["residuals"]["evolution"].get<double>() <= 1e-9);
  CHECK(rec["norms"]["solution_l2"].get<double>() > 0);
  CHECK(slurp(dir / "o" / "solve_field.csv").rfind("degree,1,extents,64,32\n", 0) == 0);
}

TEST_CASE("proca runs single evaluations from form files") {
  const fs::path dir = scratch("proca");
  const auto st = plab::build_spacetime(1, 32, 1.0, 64, 0.5);
  plab::CounterRng rng(3, 0);
  const plab::Form f = plab::random_form_levels(st.geometry(), 1, 6, 57, rng);
  const plab::Form j = plab::int_delta(plab::random_form_levels(st.geometry(), 2, 8, 55, rng));
  std::ofstream(dir / "f.csv") << [&] {
    std::ostringstream os;
    plab::write_form_csv(os, f);
    return os.str();
  }();
  std::ofstream(dir / "j.csv") << [&] {
    std::ostringstream os;
    plab::write_form_csv(os, j);
    return os.str();
  }();
  const std::string files = " --source " + (dir / "j.csv").string() + " --test-form " + (dir / "f.csv").string();
  Result r = run("proca --cases 2 --mode propagator" + files + " --out " + (dir / "p").string(), dir);
  REQUIRE(r.code == 0);
  auto run_doc = nlohmann::json::parse(slurp(dir / "p" / "proca.json"))["details"]["run"];
  const plab::cplx expect = plab::pairing(j, plab::causal_propagator_G(st, 0.8, f));
  CHECK(std::abs(plab::cplx(run_doc["value"][0], run_doc["value"][1]) - expect) <= 1e-10 * std::abs(expect));
  CHECK(run_doc["residuals"]["G"].get<double>() <= 1e-8);

  r = run("proca --cases 2 --mode constrained" + files + " --out " + (dir / "c").string(), dir);
  REQUIRE(r.code == 0);
  run_doc = nlohmann::json::parse(slurp(dir / "c" / "proca.json"))["details"]["run"];
  CHECK(run_doc["residuals"]["formula_vs_evolution"].get<double>() <= 1e-8);

  // Data that violate the constraints name the failing invariant.
  const auto s = plab::cauchy_slice(st, 32);
  const plab::InitialData bad{plab::random_form(s.geometry(), 1, rng), plab::random_form(s.geometry(), 1, rng),
                              plab::random_form(s.geometry(), 0, rng), plab::random_form(s.geometry(), 0, rng), s};
  {
    std::ofstream os(dir / "d.csv");
    plab::write_initial_data(os, bad);
  }
  r = run("proca --cases 2 --data " + (dir / "d.csv").string() + files + " --out " + (dir / "v").string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("run_constraints_hold[constrained]") != std::string::npos);

  {
    plab::InitialData wrong = bad;
    wrong.an = plab::random_form(s.geometry(), 1, rng);
    std::ofstream os(dir / "w.csv");
    plab::write_initial_data(os, wrong);
  }
  r = run("proca --data " + (dir / "w.csv").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("[proca].data") != std::string::npos);

  r = run("proca --source " + (dir / "missing.csv").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("[proca].source") != std::string::npos);
  std::ofstream(dir / "junk.csv") << "not a form\n";
  r = run("proca --test-form " + (dir / "junk.csv").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("[proca].test_form") != std::string::npos);
}

TEST_CASE("mass-scan table and flags") {
  const fs::path dir = scratch("scan_flags");
  Result r = run("mass-scan --probes co-closed,generic --out " + (dir / "o").string(), dir);
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "o" / "mass-scan.csv");
  CHECK(csv.rfind("probe,mass,value_re,value_im,norm,residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 12);
  const auto doc = nlohmann::json::parse(slurp(dir / "o" / "mass-scan.json"));
  for (const auto& p : doc["details"]["classical"]) {
    CHECK(p.contains("converges"));
    CHECK(p.contains("slope"));
  }
  CHECK(run("mass-scan --constrained maybe", dir).code == 2);
  CHECK(run("mass-scan --masses 0.5,0.25", dir).code == 2);
}

TEST_CASE("weyl demo flags and spectra") {
  const fs::path dir = scratch("weyl");
  const Result r = run("weyl --dimension 6 --m0 0.3 --triples 50 --pairs 200 --out " + (dir / "o").string(), dir);
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "o" / "weyl.json"));
  CHECK(doc["details"]["positivity_spectra"].size() == 4);
  CHECK(doc["details"]["positivity_spectra"][0].size() == 6);
  CHECK(doc["details"]["obstruction"].size() == 7);
  CHECK(doc["details"]["obstruction"][3]["mass"] == 0.3);
  CHECK(run("weyl --dimension 17", dir).code == 2);
}
