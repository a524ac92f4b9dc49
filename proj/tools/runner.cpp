#include "runner.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace plab::cli {

using json = nlohmann::json;

void Experiment::check(int criterion, const std::string& check_name, double value, const std::string& relation,
                       double threshold) {
  bool ok = false;
  if (relation == "<=") {
    ok = value <= threshold;
  } else if (relation == ">=") {
    ok = value >= threshold;
  } else if (relation == "==") {
    ok = value == threshold;
  } else {
    throw std::invalid_argument("unknown relation '" + relation + "'");
  }
  checks.push_back({criterion, check_name, value, relation, threshold, ok});
}

bool Experiment::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

ParallelFor make_parallel_for(int threads) {
  if (threads <= 1) return serial_for;
  return [threads](std::size_t n, const std::function<void(std::size_t)>& body) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&]() {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  };
}

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json checks_json(const Experiment& e) {
  json out = json::array();
  for (const auto& c : e.checks)
    out.push_back({{"criterion", c.criterion}, {"check", c.name}, {"value", c.value}, {"relation", c.relation},
                   {"threshold", c.threshold}, {"pass", c.pass}});
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

}  // namespace

std::string format_results_csv(const std::vector<Experiment>& experiments) {
  std::ostringstream os;
  os << "experiment,criterion,check,value,relation,threshold,pass\n";
  for (const auto& e : experiments)
    for (const auto& c : e.checks)
      os << e.name << ',' << c.criterion << ',' << csv_field(c.name) << ',' << format_number(c.value) << ','
         << c.relation << ',' << format_number(c.threshold) << ',' << (c.pass ? "true" : "false") << '\n';
  return os.str();
}

RunReport execute(const RunOptions& options, std::ostream& log, std::ostream& err) {
  RunReport report;
  std::vector<std::string> names;
  if (options.command == "all") {
    names = experiment_names();
  } else {
    names = {options.command};
  }
  const ParallelFor pfor = make_parallel_for(options.threads);
  try {
    for (const auto& name : names) {
      report.experiments.push_back(run_experiment(name, options.config, pfor));
      const Experiment& e = report.experiments.back();
      int passed = 0;
      for (const auto& c : e.checks) passed += c.pass;
      log << e.name << ": " << passed << "/" << e.checks.size() << " checks pass (" << format_number(e.seconds)
          << " s)\n";
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    report.exit_code = 2;
    return report;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    report.exit_code = 3;
    return report;
  }

  report.results_csv = format_results_csv(report.experiments);
  if (!options.out_dir.empty()) {
    const std::filesystem::path dir(options.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      err << "error: cannot create " << dir.string() << ": " << ec.message() << "\n";
      report.exit_code = 3;
      return report;
    }
    write_file(dir / "results.csv", report.results_csv);
    json manifest{{"command", options.command},
                  {"config_path", options.config_path},
                  {"config", options.config.echo},
                  {"seed", options.config.seed},
                  {"threads", options.threads},
                  {"compiler", __VERSION__},
                  {"cplusplus", static_cast<long>(__cplusplus)},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    for (const auto& e : report.experiments) {
      json timings = json::object();
      for (const auto& [c, s] : e.criterion_seconds) timings[std::to_string(c)] = s;
      manifest["experiments"].push_back(
          {{"name", e.name}, {"pass", e.pass()}, {"seconds", e.seconds}, {"criterion_seconds", timings},
           {"checks", checks_json(e)}});
      const json doc{{"experiment", e.name}, {"pass", e.pass()}, {"checks", checks_json(e)}, {"details", e.details}};
      write_file(dir / (e.name + ".json"), doc.dump(2) + "\n");
      for (const auto& [file, text] : e.artifacts) write_file(dir / file, text);
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }

  for (const auto& e : report.experiments)
    for (const auto& c : e.checks)
      if (!c.pass) {
        err << "FAIL " << e.name << " " << c.name << ": " << format_number(c.value) << " " << c.relation << " "
            << format_number(c.threshold) << " does not hold\n";
        report.exit_code = 1;
      }
  return report;
}

}  // namespace plab::cli
