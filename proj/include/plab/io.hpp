#pragma once
//
// Form and initial-data serialization. CSV: a header line
// "degree,<p>,extents,<e0>,..." followed by one "re,im" line per component
// in site-major, index-minor order. Binary: magic, int32 header, doubles.
//

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "plab/cauchy.hpp"

namespace plab {

inline void write_form_csv(std::ostream& os, const Form& a) {
  const Geometry& g = a.geometry();
  os << "degree," << a.degree() << ",extents";
  for (int e : g.extent) os << ',' << e;
  os << '\n' << std::setprecision(17);
  for (const auto& v : a.data()) os << v.real() << ',' << v.imag() << '\n';
}

inline Form read_form_csv(std::istream& is, const std::shared_ptr<const Geometry>& g) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("missing form header");
  std::istringstream hs(line);
  std::string tag;
  int p = -1;
  std::getline(hs, tag, ',');
  if (tag != "degree" || !(hs >> p)) throw std::runtime_error("malformed form header '" + line + "'");
  hs.ignore(1);
  std::getline(hs, tag, ',');
  if (tag != "extents") throw std::runtime_error("malformed form header '" + line + "'");
  std::vector<int> ext;
  for (std::string tok; std::getline(hs, tok, ',');) ext.push_back(std::stoi(tok));
  if (ext != g->extent) throw std::runtime_error("form extents do not match the lattice");
  Form a(g, p);
  for (auto& v : a.data()) {
    if (!std::getline(is, line)) throw std::runtime_error("truncated form data");
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed component line '" + line + "'");
    v = {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))};
  }
  return a;
}

inline constexpr char form_magic[8] = {'P', 'L', 'A', 'B', 'F', 'O', 'R', 'M'};

inline void write_form_binary(std::ostream& os, const Form& a) {
  const Geometry& g = a.geometry();
  os.write(form_magic, sizeof form_magic);
  auto put = [&](std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
  put(a.degree());
  put(g.dims);
  for (int e : g.extent) put(e);
  os.write(reinterpret_cast<const char*>(a.data().data()),
           static_cast<std::streamsize>(a.data().size() * sizeof(cplx)));
}

inline Form read_form_binary(std::istream& is, const std::shared_ptr<const Geometry>& g) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + 8, form_magic))
    throw std::runtime_error("not a binary form stream");
  auto get = [&]() {
    std::int32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated form header");
    return static_cast<int>(v);
  };
  const int p = get();
  if (get() != g->dims) throw std::runtime_error("form dimension does not match the lattice");
  for (int a = 0; a < g->dims; ++a)
    if (get() != g->extent[a]) throw std::runtime_error("form extents do not match the lattice");
  Form a(g, p);
  if (!is.read(reinterpret_cast<char*>(a.data().data()), static_cast<std::streamsize>(a.data().size() * sizeof(cplx))))
    throw std::runtime_error("truncated form data");
  return a;
}

/// Four labeled blocks "[a0]", "[ad]", "[an]", "[adelta]", each a CSV form.
inline void write_initial_data(std::ostream& os, const InitialData& d) {
  const std::pair<const char*, const Form*> blocks[] = {{"a0", &d.a0}, {"ad", &d.ad}, {"an", &d.an}, {"adelta", &d.adelta}};
  for (const auto& [label, f] : blocks) {
    os << '[' << label << "]\n";
    write_form_csv(os, *f);
  }
}

inline InitialData read_initial_data(std::istream& is, const CauchySlice& s) {
  Form blocks[4];
  const char* labels[] = {"a0", "ad", "an", "adelta"};
  for (int k = 0; k < 4; ++k) {
    std::string line;
    if (!std::getline(is, line) || line != std::string("[") + labels[k] + "]")
      throw std::runtime_error(std::string("expected block [") + labels[k] + "]");
    blocks[k] = read_form_csv(is, s.geometry());
  }
  return InitialData{blocks[0], blocks[1], blocks[2], blocks[3], s};
}

}  // namespace plab
