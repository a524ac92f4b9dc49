#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace plab::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"spacetime", {"dims", "extent", "dx", "steps", "dt", "metric"}},
      {"run", {"seed", "output"}},
      {"solve", {"mass", "samples"}},
      {"proca", {"mass", "cases", "mode", "source", "data", "test_form"}},
      {"mass-scan", {"m0", "count", "probes", "masses", "constrained"}},
      {"algebra", {"samples", "max_degree"}},
      {"weyl", {"dimension", "triples", "pairs", "m0"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Line numbers of "[section]" headers and "key =" lines, for diagnostics.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) {
    std::istringstream is(text);
    std::string line, section;
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        lines_.emplace(section, n);
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_.emplace(section + "." + trim(t.substr(0, eq)), n);
    }
  }
  int find(const std::string& key) const {
    auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, int> lines_;
};

class Reader {
 public:
  Reader(const pt::ptree& tree, const LineIndex& index, std::string source, Config& cfg)
      : tree_(tree), index_(index), source_(std::move(source)), cfg_(cfg) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    int line = key.empty() ? 0 : index_.find(section + "." + key);
    if (!line) line = index_.find(section);
    if (line) os << ":" << line;
    os << ": [" << section << "]";
    if (!key.empty()) os << "." << key;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  bool has_section(const std::string& section) const { return tree_.get_child_optional(section).has_value(); }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    const std::string text = trim(v->data());
    cfg_.echo[section + "." + key] = text;
    return text;
  }

  template <class T>
  bool number(const std::string& section, const std::string& key, T& out) const {
    const auto text = raw(section, key);
    if (!text) return false;
    T v{};
    const char* b = text->data();
    const char* e = b + text->size();
    const auto r = std::from_chars(b, e, v);
    if (text->empty() || r.ec != std::errc() || r.ptr != e) fail(section, key, "expected a number, got '" + *text + "'");
    out = v;
    return true;
  }

  template <class T>
  void required(const std::string& section, const std::string& key, T& out) const {
    if (!number(section, key, out)) fail(section, key, "missing required key");
  }

  template <class T>
  void positive(const std::string& section, const std::string& key, T& out) const {
    if (number(section, key, out) && !(out > 0)) fail(section, key, "must be positive");
  }

  bool boolean(const std::string& section, const std::string& key, bool& out) const {
    const auto text = raw(section, key);
    if (!text) return false;
    if (*text == "true") {
      out = true;
    } else if (*text == "false") {
      out = false;
    } else {
      fail(section, key, "expected true or false, got '" + *text + "'");
    }
    return true;
  }

  std::vector<std::string> list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    const auto text = raw(section, key);
    if (!text) return out;
    std::stringstream ss(*text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(section, key, "empty list entry");
      out.push_back(item);
    }
    return out;
  }

 private:
  const pt::ptree& tree_;
  const LineIndex& index_;
  std::string source_;
  Config& cfg_;
};

double parse_double(const Reader& r, const std::string& section, const std::string& key, const std::string& s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) r.fail(section, key, "expected a number, got '" + s + "'");
  return v;
}

}  // namespace

Config parse_config(std::istream& in, const std::string& source, const std::vector<Override>& overrides) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << source << ":" << e.line() << ": " << e.message();
    throw ConfigError(os.str());
  }
  for (const auto& o : overrides) {
    auto& sec = tree.get_child_optional(o.section) ? tree.get_child(o.section) : tree.put_child(o.section, pt::ptree());
    sec.put_child(pt::ptree::path_type(o.key, '\0'), pt::ptree(o.value));
  }
  const LineIndex index(text);
  Config cfg;
  Reader r(tree, index, source, cfg);

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      std::ostringstream os;
      os << source;
      if (int line = index.find("." + section)) os << ":" << line;
      os << ": key '" << section << "' outside any section";
      throw ConfigError(os.str());
    }
    auto known = schema().find(section);
    if (known == schema().end()) r.fail(section, "", "unknown section");
    for (const auto& [key, value] : body) {
      if (!value.empty()) r.fail(section, key, "nested keys are not supported");
      if (!known->second.count(key)) r.fail(section, key, "unknown key");
    }
  }

  if (r.has_section("spacetime")) {
    SpacetimeConfig st;
    r.required("spacetime", "dims", st.dims);
    r.required("spacetime", "extent", st.extent);
    r.required("spacetime", "dx", st.dx);
    r.required("spacetime", "steps", st.steps);
    r.required("spacetime", "dt", st.dt);
    if (st.dims != 1 && st.dims != 3) r.fail("spacetime", "dims", "must be 1 or 3");
    if (st.extent < 4) r.fail("spacetime", "extent", "must be at least 4");
    if (!(st.dx > 0)) r.fail("spacetime", "dx", "must be positive");
    if (st.steps < 16) r.fail("spacetime", "steps", "must be at least 16");
    if (!(st.dt > 0)) r.fail("spacetime", "dt", "must be positive");
    for (const auto& item : r.list("spacetime", "metric")) {
      const double v = parse_double(r, "spacetime", "metric", item);
      if (!(v > 0)) r.fail("spacetime", "metric", "entries must be positive");
      st.metric.push_back(v);
    }
    if (!st.metric.empty() && static_cast<int>(st.metric.size()) != st.dims)
      r.fail("spacetime", "metric", "needs one entry per spatial axis");
    cfg.spacetime = st;
  }

  r.number("run", "seed", cfg.seed);
  if (auto out = r.raw("run", "output")) {
    if (out->empty()) r.fail("run", "output", "must not be empty");
    cfg.output = *out;
  }

  r.positive("solve", "mass", cfg.solve_mass);
  r.positive("solve", "samples", cfg.solve_samples);
  r.positive("proca", "mass", cfg.proca_mass);
  r.positive("proca", "cases", cfg.proca_cases);
  if (auto mode = r.raw("proca", "mode")) {
    if (*mode != "constrained" && *mode != "unconstrained" && *mode != "propagator")
      r.fail("proca", "mode", "expected constrained, unconstrained or propagator, got '" + *mode + "'");
    cfg.proca_mode = *mode;
  }
  for (auto [key, out] : {std::pair{"source", &cfg.proca_source}, std::pair{"data", &cfg.proca_data},
                          std::pair{"test_form", &cfg.proca_test_form}})
    if (auto path = r.raw("proca", key)) {
      if (path->empty()) r.fail("proca", key, "must not be empty");
      *out = *path;
    }

  r.positive("mass-scan", "m0", cfg.scan_m0);
  r.positive("mass-scan", "count", cfg.scan_count);
  if (cfg.scan_count < 7) r.fail("mass-scan", "count", "needs at least 7 masses");
  if (cfg.scan_m0 * std::ldexp(1.0, -(cfg.scan_count - 1)) < 1.0 / 4096.0 * (1 - 1e-12))
    r.fail("mass-scan", "count", "smallest mass would fall below 2^-12");
  for (const auto& item : r.list("mass-scan", "masses")) {
    const double v = parse_double(r, "mass-scan", "masses", item);
    if (!(v >= 1.0 / 4096.0 * (1 - 1e-12))) r.fail("mass-scan", "masses", "masses must be at least 2^-12");
    if (!cfg.scan_masses.empty() && !(v < cfg.scan_masses.back()))
      r.fail("mass-scan", "masses", "masses must be strictly decreasing");
    cfg.scan_masses.push_back(v);
  }
  if (!cfg.scan_masses.empty() && cfg.scan_masses.size() < 7) r.fail("mass-scan", "masses", "needs at least 7 masses");
  r.boolean("mass-scan", "constrained", cfg.scan_constrained);
  if (auto probes = r.list("mass-scan", "probes"); !probes.empty()) {
    for (const auto& p : probes)
      if (p != "co-closed" && p != "closed" && p != "generic")
        r.fail("mass-scan", "probes", "unknown probe kind '" + p + "'");
    cfg.scan_probes = probes;
  }
  r.positive("algebra", "samples", cfg.algebra_samples);
  r.positive("algebra", "max_degree", cfg.algebra_degree);
  if (cfg.algebra_degree > 6) r.fail("algebra", "max_degree", "must be at most 6");
  r.positive("weyl", "dimension", cfg.weyl_dimension);
  if (cfg.weyl_dimension > 16) r.fail("weyl", "dimension", "must be at most 16");
  r.positive("weyl", "triples", cfg.weyl_triples);
  r.positive("weyl", "pairs", cfg.weyl_pairs);
  r.number("weyl", "m0", cfg.weyl_m0);
  return cfg;
}

Config load_config(const std::string& path, const std::vector<Override>& overrides) {
  if (path.empty()) {
    std::istringstream empty;
    return parse_config(empty, "command line", overrides);
  }
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_config(in, path, overrides);
}

}  // namespace plab::cli
