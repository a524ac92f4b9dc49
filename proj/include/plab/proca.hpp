#pragma once
//
// Proca operator, its fundamental solutions, the constrained and
// unconstrained Cauchy problems, the maps between test forms and reduced
// data, and the symplectic form on data.
//

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plab/cauchy.hpp"
#include "plab/solver.hpp"

namespace plab {

/// Raised when Cauchy data violate the Proca constraints.
class ConstraintViolation : public std::runtime_error {
 public:
  ConstraintViolation(const std::string& what, double divergence_residual, double normal_residual)
      : std::runtime_error(what), divergence(divergence_residual), normal(normal_residual) {}
  double divergence;  // Adelta - rho_delta(j)/m^2
  double normal;      // m^2 An - delta_S Ad - rho_n(j)
};

inline void require_positive_mass(double m) {
  if (!(m > 0)) throw std::domain_error("Proca propagators need m > 0");
}

/// (delta d + m^2) A.
inline Form proca_apply(const Form& a, double m) {
  Form out = (m * m) * a;
  if (a.degree() < a.geometry().dims) out += int_delta(ext_d(a));
  return out;
}

/// G^{+-} F = E^{+-}(F + d delta F / m^2), equal to (1 + d delta / m^2) E^{+-} F
/// on interior levels.
inline Form fundamental_G(const LatticeSpacetime& st, double m, const Form& f, int sign) {
  require_positive_mass(m);
  if (f.degree() != 1) throw std::invalid_argument("Proca propagators act on 1-forms");
  return fundamental_E(st, m, f + (1.0 / (m * m)) * ext_d(int_delta(f)), sign);
}

/// G = G^- - G^+.
inline Form causal_propagator_G(const LatticeSpacetime& st, double m, const Form& f) {
  return fundamental_G(st, m, f, -1) - fundamental_G(st, m, f, +1);
}

inline Form proca_source_term(const Form& j, double m) {
  return j + (1.0 / (m * m)) * ext_d(int_delta(j));
}

struct ConstraintResiduals {
  double divergence = 0.0;  // relative
  double normal = 0.0;      // relative
};

/// Residuals of Adelta = rho_delta(j)/m^2 and m^2 An - delta_S Ad = rho_n(j).
inline ConstraintResiduals constraint_residuals(double m, const Form& j, const InitialData& d) {
  const CauchySlice& s = d.slice;
  const double m2 = m * m;
  const Form rj_delta = rho_delta(j, s), rj_n = rho_n(j, s);
  const Form r1 = d.adelta - (1.0 / m2) * rj_delta;
  const Form dsad = delta_sigma(d.ad);
  const Form r2 = m2 * d.an - dsad - rj_n;
  const double s1 = std::max({d.adelta.max_abs(), rj_delta.max_abs() / m2, 1e-300});
  const double s2 = std::max({m2 * d.an.max_abs(), dsad.max_abs(), rj_n.max_abs(), 1e-300});
  return {r1.max_abs() / s1, r2.max_abs() / s2};
}

/// Completes reduced data (phi, pi) to full data obeying both constraints.
inline InitialData constrained_data(double m, const Form& j, const ReducedPair& r) {
  require_positive_mass(m);
  const CauchySlice& s = r.slice;
  const double m2 = m * m;
  Form an = (1.0 / m2) * (delta_sigma(r.pi) + rho_n(j, s));
  Form ad = (1.0 / m2) * rho_delta(j, s);
  return InitialData{r.phi, r.pi, an, ad, s};
}

struct ProcaRun {
  double mass = 0.0;
  Form source;
  Form solution;
  std::vector<double> constraint_history;  // max |delta A - delta j / m^2| per level
  cplx value{};          // <A,F> from the smeared formula
  cplx value_direct{};   // <A,F> from the evolved field
  double proca_residual = 0.0;
};

/// Per-level max of |delta A - delta j / m^2|.
inline std::vector<double> constraint_monitor(const LatticeSpacetime& st, double m, const Form& a,
                                              const Form& j) {
  Form c = int_delta(a) - (1.0 / (m * m)) * int_delta(j);
  std::vector<double> out(st.time_steps());
  for (int n = 0; n < st.time_steps(); ++n) out[n] = max_abs_levels(c, n, n);
  return out;
}

/// Constrained Cauchy problem: data must satisfy both constraints to
/// tolerance `tol` (relative), otherwise ConstraintViolation names the failing
/// equation(s).
inline ProcaRun solve_proca_constrained(const LatticeSpacetime& st, double m, const Form& j,
                                        const InitialData& data, const Form& f, double tol = 1e-10) {
  require_positive_mass(m);
  const ConstraintResiduals res = constraint_residuals(m, j, data);
  if (res.divergence > tol || res.normal > tol) {
    std::ostringstream os;
    os << "Cauchy data violate the Proca constraints:";
    if (res.divergence > tol) os << " [Adelta = rho_delta(j)/m^2 residual " << res.divergence << "]";
    if (res.normal > tol) os << " [m^2 An - delta_S Ad = rho_n(j) residual " << res.normal << "]";
    throw ConstraintViolation(os.str(), res.divergence, res.normal);
  }
  const Form kappa = proca_source_term(j, m);
  ProcaRun run;
  run.mass = m;
  run.source = j;
  run.value = solve_from_data(st, m, data, &kappa, f);
  run.solution = evolve(st, m, data, &kappa).solution;
  run.value_direct = pairing(run.solution, f);
  run.constraint_history = constraint_monitor(st, m, run.solution, j);
  Form r = proca_apply(run.solution, m) - j;
  run.proca_residual = max_abs_levels(r, interior_lo(st), interior_hi(st)) /
                       std::max({run.solution.max_abs() * m * m, j.max_abs(), 1e-300});
  return run;
}

/// Evolves data without checking the constraints (used for negative controls).
inline Form evolve_proca_unchecked(const LatticeSpacetime& st, double m, const Form& j, const InitialData& data) {
  const Form kappa = proca_source_term(j, m);
  return evolve(st, m, data, &kappa).solution;
}

/// <A,F> = sum_{+-} <j, G^{-+} F>_{S+-} - <phi, rho_d G F> + <pi, rho_0 G F>.
inline cplx solve_proca_unconstrained(const LatticeSpacetime& st, double m, const Form& j, const ReducedPair& r,
                                      const Form& f) {
  require_positive_mass(m);
  const int t0 = r.slice.time_index();
  const Form gp = fundamental_G(st, m, f, +1);
  const Form gm = fundamental_G(st, m, f, -1);
  const Form g = gm - gp;
  cplx out = pairing(j, gm, Region::future_of(t0)) + pairing(j, gp, Region::past_of(t0));
  out -= slice_pairing(r.phi, rho_d(g, r.slice));
  out += slice_pairing(r.pi, rho_zero(g, r.slice));
  return out;
}

/// kappa_m(F) = (rho_0 G F, rho_d G F).
inline ReducedPair kappa_map(const LatticeSpacetime& st, double m, const Form& f, const CauchySlice& s) {
  const Form g = causal_propagator_G(st, m, f);
  return ReducedPair{rho_zero(g, s), rho_d(g, s), s};
}

/// Quintic smoothstep: 0 for t <= a, 1 for t >= b.
inline double smoothstep5(double t, double a, double b) {
  if (t <= a) return 0.0;
  if (t >= b) return 1.0;
  const double x = (t - a) / (b - a);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

struct ThetaResult {
  Form f;
  Form field;        // source-free solution A with data (phi, pi)
  double leak = 0.0; // relative size of the discarded edge terms outside the cutoff band
};

/// theta_m(phi, pi) = -(delta d + m^2)(chi A), chi rising from 0 at level
/// t_minus to 1 at level t_plus. Only the band where chi varies (plus the
/// stencil width) is kept; elsewhere the expression vanishes up to rounding
/// except at the window edges, where the zero extension is not a solution.
inline ThetaResult theta_map(const LatticeSpacetime& st, double m, const ReducedPair& r, int t_minus, int t_plus) {
  require_positive_mass(m);
  const int T = st.time_steps();
  const int t0 = r.slice.time_index();
  if (!(t_minus < t_plus) || t_minus - 2 < 2 || t_plus + 2 > T - 3 || t0 < 1 || t0 > T - 2)
    throw std::domain_error("window too short for the cutoff slices");
  const Form zero(st.geometry(), 1);
  const InitialData data = constrained_data(m, zero, r);
  ThetaResult out;
  out.field = evolve(st, m, data).solution;
  const double dt = st.time_spacing();
  Form chi_a = out.field;
  const Geometry& g = chi_a.geometry();
  for (long s = 0; s < g.sites; ++s) {
    const int n = g.coord(s, 0);
    for (int c = 0; c < chi_a.components(); ++c) {
      const double t = (n + ((chi_a.mask(c) & 1u) ? 0.5 : 0.0)) * dt;
      chi_a.at(s, c) *= smoothstep5(t, t_minus * dt, t_plus * dt);
    }
  }
  Form full = -proca_apply(chi_a, m);
  out.f = restrict_levels(full, t_minus - 2, t_plus + 2);
  const Form rest = full - out.f;
  out.leak = max_abs_levels(rest, 2, T - 3) / std::max(out.f.max_abs(), 1e-300);
  return out;
}

/// Symplectic form on reduced data, normalised so that
/// symplectic_form(kappa(F), kappa(F')) = <F, G F'>:
/// <pi2, phi1>_S - <phi2, pi1>_S.
inline cplx symplectic_form(const ReducedPair& d1, const ReducedPair& d2) {
  if (d1.slice != d2.slice) throw std::invalid_argument("data live on different slices");
  return slice_pairing(d2.pi, d1.phi) - slice_pairing(d2.phi, d1.pi);
}

}  // namespace plab
