#pragma once
//
// Initial-data operators on a constant-t slice. Components without a time
// index live on integer levels; components with one live on half levels
// n + 1/2 and are averaged across the slice.
//

#include <stdexcept>
#include <string>

#include "plab/forms.hpp"
#include "plab/lattice.hpp"

namespace plab {

/// Cauchy data (A0, Ad, An, Adelta) of a p-form on a slice. For p = 0 the
/// normal pieces are zero 0-forms.
struct InitialData {
  Form a0, ad, an, adelta;
  CauchySlice slice;
  int degree() const { return a0.degree(); }
};

/// Reduced pair (phi, pi) = (A0, Ad).
struct ReducedPair {
  Form phi, pi;
  CauchySlice slice;
};

namespace detail {

inline void require_slice_of(const Form& a, const CauchySlice& s) {
  if (*a.geometry_ptr() != *s.parent().geometry())
    throw std::invalid_argument("form does not live on the slice's spacetime");
}

/// Maps a spacetime mask without the time bit to the slice mask.
inline unsigned spatial_to_slice(unsigned m) { return m >> 1; }
inline unsigned slice_to_spatial(unsigned m) { return m << 1; }

inline long spacetime_site(const Geometry& g, int n, long spatial_site) {
  return static_cast<long>(n) * g.stride[0] + spatial_site;
}

/// Value of a half-level component at integer level t0: average of stored
/// indices t0-1 and t0, linear extrapolation at the window edges.
inline cplx half_level_value(const Form& a, long xs, int comp, int t0) {
  const Geometry& g = a.geometry();
  const int T = g.extent[0];
  auto v = [&](int n) { return a.at(spacetime_site(g, n, xs), comp); };
  if (t0 == 0) return 0.5 * (3.0 * v(0) - v(1));
  if (t0 == T - 1) return 0.5 * (3.0 * v(T - 2) - v(T - 3));
  return 0.5 * (v(t0 - 1) + v(t0));
}

/// Time derivative of a half-level component at integer level t0.
inline cplx half_level_derivative(const Form& a, long xs, int comp, int t0) {
  const Geometry& g = a.geometry();
  const int T = g.extent[0];
  const double dt = g.spacing[0];
  auto v = [&](int n) { return a.at(spacetime_site(g, n, xs), comp); };
  if (t0 == 0) return (-2.0 * v(0) + 3.0 * v(1) - v(2)) / dt;
  if (t0 == T - 1) return (2.0 * v(T - 2) - 3.0 * v(T - 3) + v(T - 4)) / dt;
  return (v(t0) - v(t0 - 1)) / dt;
}

}  // namespace detail

/// i* pullback: spatial components at the slice level.
inline Form rho_zero(const Form& a, const CauchySlice& s) {
  detail::require_slice_of(a, s);
  const auto& sg = s.geometry();
  if (a.degree() > sg->dims) throw std::invalid_argument("no slice form of this degree");
  Form out(sg, a.degree());
  const Geometry& g = a.geometry();
  for (int c = 0; c < out.components(); ++c) {
    const int src = a.slot(detail::slice_to_spatial(out.mask(c)));
    for (long x = 0; x < sg->sites; ++x)
      out.at(x, c) = a.at(detail::spacetime_site(g, s.time_index(), x), src);
  }
  return out;
}

/// Normal contraction n^mu A_{mu ...}, evaluated at the slice from the
/// half-level time components.
inline Form rho_n(const Form& a, const CauchySlice& s) {
  detail::require_slice_of(a, s);
  const auto& sg = s.geometry();
  if (a.degree() == 0) return Form(sg, 0);
  Form out(sg, a.degree() - 1);
  for (int c = 0; c < out.components(); ++c) {
    const int src = a.slot(detail::slice_to_spatial(out.mask(c)) | 1u);
    for (long x = 0; x < sg->sites; ++x) out.at(x, c) = detail::half_level_value(a, x, src, s.time_index());
  }
  return out;
}

/// The defining composite -*_S i* * of the normal contraction.
inline Form rho_n_composite(const Form& a, const CauchySlice& s) {
  detail::require_slice_of(a, s);
  const auto& sg = s.geometry();
  if (a.degree() == 0) return Form(sg, 0);
  const Form dual = hodge(a);
  // Spatial components of *A are duals of time components of A, so they
  // share the half-level placement.
  Form pulled(sg, dual.degree());
  for (int c = 0; c < pulled.components(); ++c) {
    const int src = dual.slot(detail::slice_to_spatial(pulled.mask(c)));
    for (long x = 0; x < sg->sites; ++x) pulled.at(x, c) = detail::half_level_value(dual, x, src, s.time_index());
  }
  return -hodge(pulled);
}

inline Form rho_d(const Form& a, const CauchySlice& s) {
  detail::require_slice_of(a, s);
  if (a.degree() >= a.geometry().dims) throw std::invalid_argument("rho_d of a top form");
  return rho_n(ext_d(a), s);
}

/// Pullback of the divergence. Equals rho_zero(int_delta(a)) away from the
/// window edges; at the edges the time derivative is one-sided.
inline Form rho_delta(const Form& a, const CauchySlice& s) {
  detail::require_slice_of(a, s);
  const auto& sg = s.geometry();
  if (a.degree() == 0) return Form(sg, 0);
  const int t0 = s.time_index();
  const int T = a.geometry().extent[0];
  if (t0 > 0 && t0 < T - 1) return rho_zero(int_delta(a), s);
  Form out(sg, a.degree() - 1);
  for (int c = 0; c < out.components(); ++c) {
    const int src = a.slot(detail::slice_to_spatial(out.mask(c)) | 1u);
    for (long x = 0; x < sg->sites; ++x) out.at(x, c) = detail::half_level_derivative(a, x, src, t0);
  }
  if (a.degree() <= sg->dims) out += int_delta(rho_zero(a, s));
  return out;
}

/// delta on the slice (backward differences, Riemannian metric h).
inline Form delta_sigma(const Form& a) { return int_delta(a); }
inline Form d_sigma(const Form& a) { return ext_d(a); }

/// Slice pairing <a,b>_S.
inline cplx slice_pairing(const Form& a, const Form& b) { return pairing(a, b); }

inline InitialData initial_data(const Form& a, const CauchySlice& s) {
  InitialData d{rho_zero(a, s), rho_d(a, s), rho_n(a, s), rho_delta(a, s), s};
  return d;
}

inline ReducedPair reduced_data(const Form& a, const CauchySlice& s) {
  return ReducedPair{rho_zero(a, s), rho_d(a, s), s};
}

/// Boundary form B(A,F) = <A0,rho_d F> + <Adelta,rho_n F> - <An,rho_delta F>
/// - <Ad,rho_0 F>.
inline cplx boundary_form(const InitialData& d, const Form& f) {
  const CauchySlice& s = d.slice;
  cplx out = slice_pairing(d.a0, rho_d(f, s)) - slice_pairing(d.ad, rho_zero(f, s));
  if (d.degree() > 0)
    out += slice_pairing(d.adelta, rho_n(f, s)) - slice_pairing(d.an, rho_delta(f, s));
  return out;
}

inline double max_abs(const InitialData& d) {
  return std::max({d.a0.max_abs(), d.ad.max_abs(), d.an.max_abs(), d.adelta.max_abs()});
}

}  // namespace plab
