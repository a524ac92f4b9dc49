#pragma once
//
// Differential forms on a Geometry: components over strictly increasing
// multi-indices, stored site-major as double complex.
//
// Exterior derivative uses forward differences, the codifferential backward
// ones, and the Hodge dual acts pointwise. With these choices d^2 = 0,
// delta^2 = 0 and <dA,B> = <A,delta B> hold to rounding.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "plab/lattice.hpp"

namespace plab {

using cplx = std::complex<double>;

/// Bitmask bookkeeping for increasing multi-indices in dimension <= 4.
struct IndexTable {
  int dims = 0;
  std::vector<std::vector<unsigned>> by_degree;  // masks, lexicographic in index tuple
  std::array<int, 16> position{};                // mask -> slot within its degree

  explicit IndexTable(int n) : dims(n), by_degree(n + 1) {
    std::vector<std::vector<int>> tuples;
    for (unsigned m = 0; m < (1u << n); ++m) {
      std::vector<int> t;
      for (int a = 0; a < n; ++a)
        if (m & (1u << a)) t.push_back(a);
      tuples.push_back(t);
    }
    for (int p = 0; p <= n; ++p) {
      std::vector<unsigned> masks;
      for (unsigned m = 0; m < (1u << n); ++m)
        if (static_cast<int>(tuples[m].size()) == p) masks.push_back(m);
      std::sort(masks.begin(), masks.end(),
                [&](unsigned a, unsigned b) { return tuples[a] < tuples[b]; });
      for (std::size_t i = 0; i < masks.size(); ++i) position[masks[i]] = static_cast<int>(i);
      by_degree[p] = masks;
    }
  }

  static const IndexTable& get(int n) {
    static const std::array<IndexTable, 5> tables{IndexTable(0), IndexTable(1), IndexTable(2),
                                                  IndexTable(3), IndexTable(4)};
    if (n < 0 || n > 4) throw std::invalid_argument("dimension must be at most 4");
    return tables[n];
  }
};

inline int popcount(unsigned m) { return __builtin_popcount(m); }

inline std::vector<int> mask_axes(unsigned m) {
  std::vector<int> out;
  for (int a = 0; m; ++a, m >>= 1)
    if (m & 1u) out.push_back(a);
  return out;
}

/// Sign of the permutation sorting the concatenation (I, J) of two disjoint
/// increasing multi-indices.
inline int shuffle_sign(unsigned I, unsigned J) {
  int inversions = 0;
  for (int a : mask_axes(I))
    for (int b : mask_axes(J))
      if (b < a) ++inversions;
  return (inversions % 2) ? -1 : 1;
}

class Form {
 public:
  Form() = default;
  Form(std::shared_ptr<const Geometry> geom, int degree) : geom_(std::move(geom)), p_(degree) {
    if (p_ < 0 || p_ > geom_->dims) throw std::invalid_argument("form degree out of range");
    ncomp_ = static_cast<int>(IndexTable::get(geom_->dims).by_degree[p_].size());
    data_.assign(static_cast<std::size_t>(geom_->sites) * ncomp_, cplx{});
  }

  int degree() const { return p_; }
  int components() const { return ncomp_; }
  const Geometry& geometry() const { return *geom_; }
  const std::shared_ptr<const Geometry>& geometry_ptr() const { return geom_; }
  long sites() const { return geom_->sites; }
  unsigned mask(int comp) const { return IndexTable::get(geom_->dims).by_degree[p_][comp]; }
  int slot(unsigned m) const { return IndexTable::get(geom_->dims).position[m]; }

  cplx& at(long site, int comp) { return data_[static_cast<std::size_t>(site) * ncomp_ + comp]; }
  const cplx& at(long site, int comp) const {
    return data_[static_cast<std::size_t>(site) * ncomp_ + comp];
  }
  /// Component for an increasing multi-index given as a mask.
  cplx& at_mask(long site, unsigned m) { return at(site, slot(m)); }
  const cplx& at_mask(long site, unsigned m) const { return at(site, slot(m)); }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  double max_abs() const {
    double m = 0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  double l2() const {
    double s = 0;
    for (const auto& v : data_) s += std::norm(v);
    return std::sqrt(s);
  }

  bool compatible(const Form& o) const { return p_ == o.p_ && *geom_ == *o.geom_; }

  Form& operator+=(const Form& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Form& operator-=(const Form& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Form& operator*=(cplx z) {
    for (auto& v : data_) v *= z;
    return *this;
  }
  friend Form operator+(Form a, const Form& b) { return a += b; }
  friend Form operator-(Form a, const Form& b) { return a -= b; }
  friend Form operator*(cplx z, Form a) { return a *= z; }
  friend Form operator*(Form a, cplx z) { return a *= z; }
  friend Form operator-(Form a) { return a *= -1.0; }

  void require_compatible(const Form& o) const {
    if (p_ != o.p_) throw std::invalid_argument("form degree mismatch");
    if (*geom_ != *o.geom_) throw std::invalid_argument("forms live on different lattices");
  }

 private:
  std::shared_ptr<const Geometry> geom_;
  int p_ = 0;
  int ncomp_ = 0;
  std::vector<cplx> data_;
};

/// Physical position of component `m` at `site`: each index axis of the
/// component sits half a cell forward along that axis.
inline std::vector<double> component_position(const Geometry& g, long site, unsigned m) {
  std::vector<double> x(g.dims);
  for (int a = 0; a < g.dims; ++a)
    x[a] = (g.coord(site, a) + ((m >> a) & 1u ? 0.5 : 0.0)) * g.spacing[a];
  return x;
}

/// Form sampled from f(mask, position).
inline Form sample_form(const std::shared_ptr<const Geometry>& g, int p,
                        const std::function<cplx(unsigned, const std::vector<double>&)>& f) {
  Form out(g, p);
  for (long s = 0; s < g->sites; ++s)
    for (int c = 0; c < out.components(); ++c) out.at(s, c) = f(out.mask(c), component_position(*g, s, out.mask(c)));
  return out;
}

enum class Difference { forward, backward };

/// One-sided difference of the component array along `axis`.
inline cplx difference(const Form& a, long site, int comp, int axis, Difference kind) {
  const Geometry& g = a.geometry();
  const double h = g.spacing[axis];
  if (kind == Difference::forward) {
    long nb = g.neighbor(site, axis, +1);
    cplx up = nb < 0 ? cplx{} : a.at(nb, comp);
    return (up - a.at(site, comp)) / h;
  }
  long nb = g.neighbor(site, axis, -1);
  cplx dn = nb < 0 ? cplx{} : a.at(nb, comp);
  return (a.at(site, comp) - dn) / h;
}

/// (dA)_K = sum_r (-1)^r D_{K_r} A_{K \ K_r}.
inline Form ext_d(const Form& a, Difference kind = Difference::forward) {
  const Geometry& g = a.geometry();
  if (a.degree() >= g.dims) throw std::invalid_argument("exterior derivative of a top form");
  Form out(a.geometry_ptr(), a.degree() + 1);
  struct Term {
    int out_comp, in_comp, axis, sign;
  };
  std::vector<Term> terms;
  for (int c = 0; c < out.components(); ++c) {
    auto axes = mask_axes(out.mask(c));
    for (std::size_t r = 0; r < axes.size(); ++r) {
      unsigned rest = out.mask(c) & ~(1u << axes[r]);
      terms.push_back({c, a.slot(rest), axes[r], (r % 2) ? -1 : 1});
    }
  }
  for (long s = 0; s < g.sites; ++s)
    for (const auto& t : terms)
      out.at(s, t.out_comp) += static_cast<double>(t.sign) * difference(a, s, t.in_comp, t.axis, kind);
  return out;
}

/// (*A)_J = sqrt|g| eps_{I J} A^I with I the complement of J.
inline Form hodge(const Form& a) {
  const Geometry& g = a.geometry();
  const unsigned full = (1u << g.dims) - 1u;
  Form out(a.geometry_ptr(), g.dims - a.degree());
  std::vector<double> factor(out.components());
  std::vector<int> src(out.components());
  for (int c = 0; c < out.components(); ++c) {
    unsigned J = out.mask(c);
    unsigned I = full & ~J;
    double raise = 1.0;
    for (int mu : mask_axes(I)) raise /= g.metric[mu];
    factor[c] = g.sqrt_abs_det * shuffle_sign(I, J) * raise;
    src[c] = a.slot(I);
  }
  for (long s = 0; s < g.sites; ++s)
    for (int c = 0; c < out.components(); ++c) out.at(s, c) = factor[c] * a.at(s, src[c]);
  return out;
}

/// delta = (-1)^{s+1+N(p-1)} * d *, with the inner d built from backward
/// differences.
inline Form int_delta(const Form& a) {
  const Geometry& g = a.geometry();
  if (a.degree() < 1) throw std::invalid_argument("codifferential of a 0-form");
  const int N = g.dims, p = a.degree();
  const int e = g.negatives + 1 + N * (p - 1);
  Form out = hodge(ext_d(hodge(a), Difference::backward));
  if (e % 2) out *= -1.0;
  return out;
}

/// Coordinate form of the codifferential, -g^{mu mu} D^-_mu A_{mu ...}.
inline Form int_delta_coordinate(const Form& a) {
  const Geometry& g = a.geometry();
  if (a.degree() < 1) throw std::invalid_argument("codifferential of a 0-form");
  Form out(a.geometry_ptr(), a.degree() - 1);
  for (int c = 0; c < out.components(); ++c) {
    unsigned I = out.mask(c);
    for (int mu = 0; mu < g.dims; ++mu) {
      if (I & (1u << mu)) continue;
      const double coef = -shuffle_sign(1u << mu, I) / g.metric[mu];
      const int src = a.slot(I | (1u << mu));
      for (long s = 0; s < g.sites; ++s)
        out.at(s, c) += coef * difference(a, s, src, mu, Difference::backward);
    }
  }
  return out;
}

/// (A ^ B)_K = sum over splits K = I u J of sign(I,J) A_I B_J.
inline Form wedge(const Form& a, const Form& b) {
  if (*a.geometry_ptr() != *b.geometry_ptr()) throw std::invalid_argument("forms live on different lattices");
  const Geometry& g = a.geometry();
  if (a.degree() + b.degree() > g.dims) throw std::invalid_argument("wedge degree exceeds dimension");
  Form out(a.geometry_ptr(), a.degree() + b.degree());
  struct Term {
    int out_comp, ia, ib, sign;
  };
  std::vector<Term> terms;
  for (int c = 0; c < out.components(); ++c) {
    unsigned K = out.mask(c);
    for (unsigned I : IndexTable::get(g.dims).by_degree[a.degree()]) {
      if ((I & K) != I) continue;
      unsigned J = K & ~I;
      terms.push_back({c, a.slot(I), b.slot(J), shuffle_sign(I, J)});
    }
  }
  for (long s = 0; s < g.sites; ++s)
    for (const auto& t : terms) out.at(s, t.out_comp) += static_cast<double>(t.sign) * a.at(s, t.ia) * b.at(s, t.ib);
  return out;
}

/// Box = delta d + d delta.
inline Form dalembert(const Form& a) {
  const int N = a.geometry().dims;
  Form out(a.geometry_ptr(), a.degree());
  if (a.degree() < N) out += int_delta(ext_d(a));
  if (a.degree() > 0) out += ext_d(int_delta(a));
  return out;
}

/// Integration region for pairings on a spacetime geometry (axis 0 = time).
struct Region {
  enum Kind { all, future, past };
  Kind kind = all;
  int t0 = 0;
  static Region whole() { return {all, 0}; }
  static Region future_of(int t) { return {future, t}; }
  static Region past_of(int t) { return {past, t}; }
};

/// Quadrature weight of a component at time index n. Components carrying a
/// time index sit at n + 1/2, the others at n.
inline double region_weight(const Region& r, bool time_component, int n) {
  if (r.kind == Region::all) return 1.0;
  double w;
  if (time_component)
    w = n >= r.t0 ? 1.0 : 0.0;
  else
    w = n > r.t0 ? 1.0 : (n == r.t0 ? 0.5 : 0.0);
  return r.kind == Region::future ? w : 1.0 - w;
}

/// <A,B> = sum over sites and increasing I of A_I B^I times the cell volume.
/// Bilinear: no complex conjugation.
inline cplx pairing(const Form& a, const Form& b, const Region& region = Region::whole()) {
  a.require_compatible(b);
  const Geometry& g = a.geometry();
  std::vector<double> raise(a.components());
  std::vector<bool> timec(a.components());
  for (int c = 0; c < a.components(); ++c) {
    raise[c] = 1.0;
    for (int mu : mask_axes(a.mask(c))) raise[c] /= g.metric[mu];
    timec[c] = (a.mask(c) & 1u) != 0;
  }
  const bool split = region.kind != Region::all;
  cplx sum{};
  for (long s = 0; s < g.sites; ++s) {
    const int n = split ? g.coord(s, 0) : 0;
    for (int c = 0; c < a.components(); ++c) {
      const double w = split ? region_weight(region, timec[c], n) : 1.0;
      if (w == 0.0) continue;
      sum += (w * raise[c]) * a.at(s, c) * b.at(s, c);
    }
  }
  return sum * g.cell_volume;
}

/// Copy of `a` with every time index outside [lo, hi] zeroed.
inline Form restrict_levels(const Form& a, int lo, int hi) {
  Form out = a;
  const Geometry& g = a.geometry();
  for (long s = 0; s < g.sites; ++s) {
    int n = g.coord(s, 0);
    if (n < lo || n > hi)
      for (int c = 0; c < a.components(); ++c) out.at(s, c) = 0;
  }
  return out;
}

/// Inclusive range of time indices carrying nonzero data; {-1,-1} if zero.
inline std::pair<int, int> time_support(const Form& a, double tol = 0.0) {
  const Geometry& g = a.geometry();
  int lo = -1, hi = -1;
  for (long s = 0; s < g.sites; ++s) {
    for (int c = 0; c < a.components(); ++c) {
      if (std::abs(a.at(s, c)) > tol) {
        int n = g.coord(s, 0);
        if (lo < 0 || n < lo) lo = n;
        hi = std::max(hi, n);
        break;
      }
    }
  }
  return {lo, hi};
}

/// Max-norm of `a` over time indices [lo, hi].
inline double max_abs_levels(const Form& a, int lo, int hi) {
  const Geometry& g = a.geometry();
  double m = 0;
  for (long s = 0; s < g.sites; ++s) {
    int n = g.coord(s, 0);
    if (n < lo || n > hi) continue;
    for (int c = 0; c < a.components(); ++c) m = std::max(m, std::abs(a.at(s, c)));
  }
  return m;
}

/// Levi-Civita symbol on N axes with s negative metric entries (unit metric
/// magnitudes). eps_{0..N-1} = +1; raised indices pick up (-1)^s.
struct LeviCivita {
  int dims;
  int negatives;

  int lower(const std::vector<int>& idx) const {
    if (static_cast<int>(idx.size()) != dims) return 0;
    std::vector<int> v = idx;
    int sign = 1;
    for (int i = 0; i < dims; ++i) {
      if (v[i] < 0 || v[i] >= dims) return 0;
      for (int j = i + 1; j < dims; ++j) {
        if (v[i] == v[j]) return 0;
        if (v[j] < v[i]) sign = -sign;
      }
    }
    return sign;
  }
  int upper(const std::vector<int>& idx) const {
    int v = lower(idx);
    return (negatives % 2) ? -v : v;
  }
};

}  // namespace plab
