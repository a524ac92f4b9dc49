#pragma once
//
// Leapfrog evolution of (Box + m^2) A = kappa for forms of any degree and the
// retarded/advanced fundamental solutions.
//
// In the interior of the window Box acts on every component as the compact
// stencil (u[n+1] - 2u[n] + u[n-1])/dt^2 - Lap_h u[n] in index space, and the
// three-level update inverts it exactly.
//

#include <sstream>
#include <stdexcept>
#include <vector>

#include "plab/cauchy.hpp"
#include "plab/forms.hpp"
#include "plab/lattice.hpp"

namespace plab {

enum class Direction { forward, backward, both };

struct EvolutionRun {
  double mass = 0.0;
  Form source;
  Form solution;
  double cfl = 0.0;
  double residual = 0.0;  // max |(Box+m^2)A - kappa| on interior levels, relative
};

/// Time levels on which discrete equations are checked: [2, T-3].
inline int interior_lo(const LatticeSpacetime&) { return 2; }
inline int interior_hi(const LatticeSpacetime& st) { return st.time_steps() - 3; }

inline Form klein_gordon_apply(const Form& a, double m) { return dalembert(a) + (m * m) * a; }

/// Relative residual of (Box+m^2)A = kappa over interior levels.
inline double wave_residual(const LatticeSpacetime& st, double m, const Form& a, const Form& kappa) {
  Form r = klein_gordon_apply(a, m) - kappa;
  const double scale = std::max({a.max_abs(), kappa.max_abs(), 1e-300});
  return max_abs_levels(r, interior_lo(st), interior_hi(st)) / scale;
}

namespace detail {

inline void require_stable(const LatticeSpacetime& st, double m) {
  if (!st.cfl_ok() || st.stability_number(m) >= 1.0) {
    std::ostringstream os;
    os << "CFL violation: ratio " << st.cfl() << ", leapfrog stability number "
       << st.stability_number(m);
    throw std::domain_error(os.str());
  }
}

inline void require_padding(const LatticeSpacetime& st, const Form& f, const char* what) {
  const int T = st.time_steps();
  const double inner = std::max(max_abs_levels(f, 0, 1), max_abs_levels(f, T - 2, T - 1));
  if (inner > 0.0) {
    std::ostringstream os;
    os << what << " touches the window edge (needs two zero levels at each end)";
    throw std::domain_error(os.str());
  }
}

/// The stencil Lap_h u - m^2 u + kappa at level n for component c.
struct LevelOperator {
  const LatticeSpacetime& st;
  double m;
  std::vector<double> inv_h_dx2;

  LevelOperator(const LatticeSpacetime& s, double mass) : st(s), m(mass) {
    for (int i = 0; i < st.spatial_dims(); ++i)
      inv_h_dx2.push_back(1.0 / (st.spatial_metric_diag()[i] * st.spatial_spacing()[i] *
                                 st.spatial_spacing()[i]));
  }

  /// u[to] = 2u[cur] - u[from] + dt^2 (Lap u - m^2 u + kappa)[cur].
  void step(Form& u, const Form* kappa, int from, int cur, int to, const std::vector<int>& comps) const {
    const Geometry& g = u.geometry();
    const double dt2 = st.time_spacing() * st.time_spacing();
    const long S = st.spatial_sites();
    const long base_cur = static_cast<long>(cur) * g.stride[0];
    const long base_from = static_cast<long>(from) * g.stride[0];
    const long base_to = static_cast<long>(to) * g.stride[0];
    for (long x = 0; x < S; ++x) {
      const long sc = base_cur + x;
      for (int c : comps) {
        const cplx uc = u.at(sc, c);
        cplx lap{};
        for (int i = 0; i < st.spatial_dims(); ++i) {
          const long up = g.neighbor(sc, i + 1, +1);
          const long dn = g.neighbor(sc, i + 1, -1);
          lap += inv_h_dx2[i] * (u.at(up, c) - 2.0 * uc + u.at(dn, c));
        }
        cplx rhs = lap - (m * m) * uc;
        if (kappa) rhs += kappa->at(sc, c);
        u.at(base_to + x, c) = 2.0 * uc - u.at(base_from + x, c) + dt2 * rhs;
      }
    }
  }
};

inline std::vector<int> all_components(const Form& f) {
  std::vector<int> v(f.components());
  for (int c = 0; c < f.components(); ++c) v[c] = c;
  return v;
}

}  // namespace detail

/// Evolves Cauchy data at slice t0 (1 <= t0 <= T-2). Spatial components are
/// seeded at t0 +- 1 by the Taylor step that reproduces the centred
/// derivative; half-level components at indices t0-1 and t0 from the
/// average and jump encoded in An and Adelta.
inline EvolutionRun evolve(const LatticeSpacetime& st, double m, const InitialData& data, const Form* source,
                           Direction dir = Direction::both) {
  detail::require_stable(st, m);
  const int T = st.time_steps();
  const int t0 = data.slice.time_index();
  if (t0 < 1 || t0 > T - 2) throw std::domain_error("evolution slice must satisfy 1 <= t0 <= T-2");
  if (!(data.slice.parent() == st)) throw std::invalid_argument("data slice is on a different lattice");
  const int p = data.degree();
  Form u(st.geometry(), p);
  if (source) {
    u.require_compatible(*source);
    detail::require_padding(st, *source, "source");
  }
  const Geometry& g = u.geometry();
  const long S = st.spatial_sites();
  const double dt = st.time_spacing();
  const CauchySlice& sl = data.slice;

  std::vector<int> vertex, half;
  for (int c = 0; c < u.components(); ++c) (u.mask(c) & 1u ? half : vertex).push_back(c);

  // Centred time derivative of spatial components: Ad + d_S An.
  Form vel = data.ad;
  if (p > 0 && p <= st.spatial_dims()) vel += d_sigma(data.an);
  // Jump of half-level components across the slice: dt (Adelta - delta_S A0).
  Form jump(sl.geometry(), p > 0 ? p - 1 : 0);
  if (p > 0) {
    jump = data.adelta;
    if (p <= st.spatial_dims()) jump -= delta_sigma(data.a0);
    jump *= dt;
  }

  detail::LevelOperator op(st, m);
  for (int c : vertex) {
    const int sc = data.a0.slot(detail::spatial_to_slice(u.mask(c)));
    for (long x = 0; x < S; ++x) u.at(detail::spacetime_site(g, t0, x), c) = data.a0.at(x, sc);
  }
  // Taylor seeds: u(t0 +- 1) = u +- dt v + dt^2/2 (Lap u - m^2 u + kappa).
  {
    Form tmp = u;
    op.step(tmp, source, t0, t0, t0 + 1, vertex);  // 2u - u + dt^2 rhs = u + dt^2 rhs
    for (int c : vertex) {
      const int sc = vel.slot(detail::spatial_to_slice(u.mask(c)));
      for (long x = 0; x < S; ++x) {
        const cplx u0 = u.at(detail::spacetime_site(g, t0, x), c);
        const cplx acc = tmp.at(detail::spacetime_site(g, t0 + 1, x), c) - u0;  // dt^2 rhs
        const cplx v = vel.at(x, sc);
        u.at(detail::spacetime_site(g, t0 + 1, x), c) = u0 + dt * v + 0.5 * acc;
        u.at(detail::spacetime_site(g, t0 - 1, x), c) = u0 - dt * v + 0.5 * acc;
      }
    }
  }
  for (int c : half) {
    const int sc = data.an.slot(detail::spatial_to_slice(u.mask(c) & ~1u));
    for (long x = 0; x < S; ++x) {
      const cplx avg = data.an.at(x, sc);
      const cplx j = jump.at(x, sc);
      u.at(detail::spacetime_site(g, t0, x), c) = avg + 0.5 * j;
      u.at(detail::spacetime_site(g, t0 - 1, x), c) = avg - 0.5 * j;
    }
  }

  if (dir != Direction::backward) {
    for (int n = t0 + 1; n <= T - 2; ++n) op.step(u, source, n - 1, n, n + 1, vertex);
    for (int n = t0; n <= T - 2; ++n) op.step(u, source, n - 1, n, n + 1, half);
  }
  if (dir != Direction::forward) {
    for (int n = t0 - 1; n >= 1; --n) op.step(u, source, n + 1, n, n - 1, vertex);
    for (int n = t0 - 1; n >= 1; --n) op.step(u, source, n + 1, n, n - 1, half);
  }
  if (dir == Direction::forward) {
    for (long x = 0; x < S; ++x)
      for (int c : vertex) u.at(detail::spacetime_site(g, t0 - 1, x), c) = 0;
  }

  EvolutionRun run;
  run.mass = m;
  run.source = source ? *source : Form(st.geometry(), p);
  run.solution = std::move(u);
  run.cfl = st.cfl();
  if (dir == Direction::both) run.residual = wave_residual(st, m, run.solution, run.source);
  return run;
}

inline EvolutionRun evolve(const LatticeSpacetime& st, double m, const InitialData& data,
                           Direction dir = Direction::both) {
  return evolve(st, m, data, nullptr, dir);
}

/// E^+ (sign > 0, retarded) or E^- (sign < 0, advanced) applied to F.
inline Form fundamental_E(const LatticeSpacetime& st, double m, const Form& f, int sign) {
  if (*f.geometry_ptr() != *st.geometry()) throw std::invalid_argument("form lives on a different lattice");
  if (m < 0) throw std::domain_error("mass must be nonnegative");
  detail::require_stable(st, m);
  detail::require_padding(st, f, "test form");
  const int T = st.time_steps();
  Form u(st.geometry(), f.degree());
  detail::LevelOperator op(st, m);
  const auto comps = detail::all_components(u);
  if (sign > 0)
    for (int n = 1; n <= T - 2; ++n) op.step(u, &f, n - 1, n, n + 1, comps);
  else
    for (int n = T - 2; n >= 1; --n) op.step(u, &f, n + 1, n, n - 1, comps);
  return u;
}

/// E = E^- - E^+.
inline Form causal_propagator_E(const LatticeSpacetime& st, double m, const Form& f) {
  return fundamental_E(st, m, f, -1) - fundamental_E(st, m, f, +1);
}

/// <A,F> for the solution with data `data` and source kappa, from
/// sum_{+-} <E^{-+}F, kappa>_{S+-} - B(data, E F).
inline cplx solve_from_data(const LatticeSpacetime& st, double m, const InitialData& data, const Form* kappa,
                            const Form& f) {
  const int t0 = data.slice.time_index();
  const Form ep = fundamental_E(st, m, f, +1);
  const Form em = fundamental_E(st, m, f, -1);
  cplx out{};
  if (kappa) {
    detail::require_padding(st, *kappa, "source");
    out += pairing(em, *kappa, Region::future_of(t0)) + pairing(ep, *kappa, Region::past_of(t0));
  }
  out -= boundary_form(data, em - ep);
  return out;
}

/// Green's identity on S+ (sign > 0) or S- (sign < 0): returns
/// |LHS - (-sign) B(A,F)| / scale where LHS = <A,(Box+m^2)F> - <F,(Box+m^2)A>.
inline double green_identity_residual(const LatticeSpacetime& st, double m, const Form& a, const Form& f,
                                      const CauchySlice& s, int sign) {
  (void)st;
  const Region r = sign > 0 ? Region::future_of(s.time_index()) : Region::past_of(s.time_index());
  const Form ka = klein_gordon_apply(a, m), kf = klein_gordon_apply(f, m);
  const cplx t1 = pairing(a, kf, r), t2 = pairing(f, ka, r);
  const cplx b = boundary_form(initial_data(a, s), f);
  const cplx lhs = t1 - t2;
  const double scale = std::max({std::abs(t1), std::abs(t2), std::abs(b), 1e-300});
  return std::abs(lhs + static_cast<double>(sign) * b) / scale;
}

/// Largest number of sites by which the support of `u` leaves the discrete
/// cone of `f`: a source at level k reaches distance j at level k+1+j
/// (retarded, sign > 0) or k-1-j (advanced). `slack` widens the cone.
/// Returns 0 when the cone is respected.
inline int cone_violation(const LatticeSpacetime& st, const Form& u, const Form& f, int sign, int slack = 0) {
  const Geometry& g = u.geometry();
  const Geometry& sg = *st.slice_geometry();
  const int T = st.time_steps();
  const long S = st.spatial_sites();
  const int D = st.spatial_dims();
  constexpr int far = 1 << 20;
  auto nonzero = [&](const Form& a, int n, long x) {
    for (int c = 0; c < a.components(); ++c)
      if (a.at(detail::spacetime_site(g, n, x), c) != cplx{}) return true;
    return false;
  };
  // Offsets of the king-move neighbourhood on the spatial torus.
  std::vector<std::vector<int>> moves{{}};
  for (int i = 0; i < D; ++i) {
    std::vector<std::vector<int>> next;
    for (const auto& m : moves)
      for (int s : {-1, 0, 1}) {
        auto v = m;
        v.push_back(s);
        next.push_back(v);
      }
    moves = std::move(next);
  }
  // Periodic max-axis distance from every site to the sources at level n.
  auto distance_to_sources = [&](int n) {
    std::vector<int> dist(S, far);
    std::vector<long> frontier;
    for (long x = 0; x < S; ++x)
      if (nonzero(f, n, x)) {
        dist[x] = 0;
        frontier.push_back(x);
      }
    for (int r = 1; !frontier.empty(); ++r) {
      std::vector<long> next;
      for (long x : frontier)
        for (const auto& mv : moves) {
          long y = x;
          for (int i = 0; i < D; ++i)
            if (mv[i]) y = sg.neighbor(y, i, mv[i]);
          if (dist[y] == far) {
            dist[y] = r;
            next.push_back(y);
          }
        }
      frontier = std::move(next);
    }
    return dist;
  };
  // reach[x] = min over sources (k, y) already passed of dist(x, y) - steps.
  std::vector<int> reach(S, far);
  int worst = 0;
  for (int i = 0; i < T; ++i) {
    const int n = sign > 0 ? i : T - 1 - i;
    for (long x = 0; x < S; ++x)
      if (nonzero(u, n, x)) worst = std::max(worst, reach[x] >= far / 2 ? far : reach[x] - slack);
    const std::vector<int> d = distance_to_sources(n);
    for (long x = 0; x < S; ++x) reach[x] = std::min(reach[x] >= far / 2 ? far : reach[x] - 1, d[x]);
  }
  return std::max(worst, 0);
}

}  // namespace plab
