#pragma once
//
// Zero-mass-limit experiments on Proca observables.
//

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plab/proca.hpp"

namespace plab {

enum class ProbeKind { co_closed, closed, generic };

inline std::string to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::co_closed: return "co-closed";
    case ProbeKind::closed: return "closed";
    case ProbeKind::generic: return "generic";
  }
  return "?";
}

inline ProbeKind probe_kind_from_string(const std::string& s) {
  if (s == "co-closed") return ProbeKind::co_closed;
  if (s == "closed") return ProbeKind::closed;
  if (s == "generic") return ProbeKind::generic;
  throw std::invalid_argument("unknown probe kind '" + s + "'");
}

struct Probe {
  std::string label;
  ProbeKind kind;
  Form f;
};

/// Smooth bump supported on time levels [lo, hi], periodic Gaussian profile
/// in every spatial direction.
inline double bump_profile(const LatticeSpacetime& st, const std::vector<double>& x, int lo, int hi,
                           double width, double phase) {
  const double dt = st.time_spacing();
  const double a = lo * dt, b = hi * dt;
  if (x[0] <= a || x[0] >= b) return 0.0;
  const double s = std::sin(M_PI * (x[0] - a) / (b - a));
  double v = s * s * s * s;
  for (int i = 0; i < st.spatial_dims(); ++i) {
    const double L = st.spatial_extent()[i] * st.spatial_spacing()[i];
    const double c = 0.5 * L + phase * (i + 1);
    double d = std::fmod(std::abs(x[i + 1] - c), L);
    d = std::min(d, L - d);
    v *= std::exp(-d * d / (2.0 * width * width));
  }
  return v;
}

/// Probe forms: co-closed as delta H for a compact 2-form bump H, closed as
/// d chi for a compact 0-form bump chi, generic as a raw time-component bump.
/// Supports sit inside [lo, hi] which must leave two zero levels at each end.
inline Probe make_probe(ProbeKind kind, const LatticeSpacetime& st, int lo, int hi, double width = 3.0,
                        double phase = 0.0) {
  const auto g = st.geometry();
  if (lo < 3 || hi > st.time_steps() - 4) throw std::domain_error("probe support too close to the window edge");
  Probe p{to_string(kind), kind, Form(g, 1)};
  switch (kind) {
    case ProbeKind::co_closed: {
      Form h = sample_form(g, 2, [&](unsigned m, const std::vector<double>& x) {
        return cplx{bump_profile(st, x, lo, hi, width, phase) * (m == 3u ? 1.0 : 0.5), 0.0};
      });
      p.f = int_delta(h);
      break;
    }
    case ProbeKind::closed: {
      Form chi = sample_form(g, 0, [&](unsigned, const std::vector<double>& x) {
        return cplx{bump_profile(st, x, lo, hi, width, phase), 0.0};
      });
      p.f = ext_d(chi);
      break;
    }
    case ProbeKind::generic: {
      p.f = sample_form(g, 1, [&](unsigned m, const std::vector<double>& x) {
        return cplx{m == 1u ? bump_profile(st, x, lo, hi, width, phase) : 0.0, 0.0};
      });
      break;
    }
  }
  return p;
}

/// m_k = m0 2^{-k}, k = 0..count-1.
inline std::vector<double> geometric_masses(double m0, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(m0 * std::ldexp(1.0, -k));
  return out;
}

inline constexpr double smallest_mass = 1.0 / 4096.0;

inline void require_masses(const std::vector<double>& masses) {
  if (masses.empty()) throw std::invalid_argument("mass list is empty");
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0)) throw std::domain_error("masses must be positive");
    if (masses[i] < smallest_mass * (1 - 1e-12)) throw std::domain_error("masses below 2^-12 are not supported");
    if (i && !(masses[i] < masses[i - 1])) throw std::invalid_argument("masses must be decreasing");
  }
}

/// Sequence convergence heuristic: some run of five successive differences
/// shrinks by >= 1.5 each and the last difference is <= 1e-4 * scale.
/// Differences at the rounding floor count as shrinking; the floor is
/// 1e-12 * scale, amplified by 1/m^2 when masses are given because the
/// propagators carry that factor.
struct ConvergenceVerdict {
  bool converges = false;
  double last_difference = 0.0;
  int longest_shrinking_run = 0;
};

inline ConvergenceVerdict assess_convergence(const std::vector<cplx>& values, double scale,
                                             const std::vector<double>& masses = {}) {
  ConvergenceVerdict v;
  if (values.size() < 2) return v;
  std::vector<double> diffs;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) diffs.push_back(std::abs(values[k] - values[k + 1]));
  v.last_difference = diffs.back();
  auto floor = [&](std::size_t k) {
    const double m = k + 1 < masses.size() ? masses[k + 1] : 1.0;
    return 1e-12 * scale * std::max(1.0, 1.0 / (m * m));
  };
  int run = 0;
  for (std::size_t k = 1; k < diffs.size(); ++k) {
    const bool shrinks = diffs[k] <= floor(k) || diffs[k] * 1.5 <= diffs[k - 1];
    run = shrinks ? run + 1 : 0;
    v.longest_shrinking_run = std::max(v.longest_shrinking_run, run);
  }
  v.converges = v.longest_shrinking_run >= 5 && v.last_difference <= 1e-4 * scale;
  return v;
}

/// Least-squares slope of log y against log(1/m) over the last `tail` entries.
inline double fit_divergence_exponent(const std::vector<double>& masses, const std::vector<double>& y, int tail) {
  const std::size_t n = masses.size();
  const std::size_t k0 = n > static_cast<std::size_t>(tail) ? n - tail : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t k = k0; k < n; ++k) {
    const double X = std::log(1.0 / masses[k]), Y = std::log(y[k]);
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++cnt;
  }
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

/// L2 norm over interior time levels.
inline double interior_l2(const LatticeSpacetime& st, const Form& a) {
  return restrict_levels(a, interior_lo(st), interior_hi(st)).l2();
}

struct MassRecord {
  double mass = 0.0;
  cplx value{};              // <A_m, F>
  double g_norm = 0.0;       // ||G_m F||
  double obstruction = 0.0;  // ||E_m d delta F|| / m^2
  double kappa_norm = 0.0;   // ||kappa_m(F)||
};

struct ProbeScan {
  Probe probe;
  std::vector<MassRecord> records;
  ConvergenceVerdict verdict;
  double slope = 0.0;  // fitted exponent of ||G_m F|| vs 1/m
  double scale = 1.0;
};

struct MassScan {
  std::vector<double> masses;
  std::vector<ProbeScan> probes;
};

/// Scale for observables: |data| * |F| * slice volume, bounded below by the
/// source pairing magnitude.
inline double observable_scale(const LatticeSpacetime& st, const Form& j, const ReducedPair& r, const Form& f) {
  const double data = std::max({r.phi.l2(), r.pi.l2(), 1e-300});
  double s = data * f.l2() * st.volume_element();
  s = std::max(s, j.l2() * f.l2() * st.volume_element());
  return std::max(s, 1e-300);
}

/// One mass, one probe.
inline MassRecord scan_point(const LatticeSpacetime& st, const Form& j, const ReducedPair& r, const Form& f,
                             double m) {
  MassRecord rec;
  rec.mass = m;
  rec.value = solve_proca_unconstrained(st, m, j, r, f);
  const Form g = causal_propagator_G(st, m, f);
  rec.g_norm = interior_l2(st, g);
  const Form ddf = ext_d(int_delta(f));
  rec.obstruction = interior_l2(st, causal_propagator_E(st, m, ddf)) / (m * m);
  const ReducedPair k{rho_zero(g, r.slice), rho_d(g, r.slice), r.slice};
  rec.kappa_norm = std::hypot(k.phi.l2(), k.pi.l2());
  return rec;
}

using ParallelFor = std::function<void(std::size_t, const std::function<void(std::size_t)>&)>;

inline void serial_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

inline MassScan classical_scan(const LatticeSpacetime& st, const Form& j, const ReducedPair& r,
                               const std::vector<Probe>& probes, const std::vector<double>& masses,
                               const ParallelFor& pfor = serial_for, int slope_tail = 6) {
  require_masses(masses);
  MassScan scan;
  scan.masses = masses;
  for (const auto& p : probes) {
    ProbeScan ps;
    ps.probe = p;
    ps.records.resize(masses.size());
    pfor(masses.size(), [&](std::size_t k) { ps.records[k] = scan_point(st, j, r, p.f, masses[k]); });
    ps.scale = observable_scale(st, j, r, p.f);
    std::vector<cplx> vals;
    std::vector<double> norms;
    for (const auto& rec : ps.records) {
      vals.push_back(rec.value);
      norms.push_back(std::max(rec.g_norm, 1e-300));
    }
    ps.verdict = assess_convergence(vals, ps.scale, masses);
    ps.slope = fit_divergence_exponent(masses, norms, slope_tail);
    scan.probes.push_back(std::move(ps));
  }
  return scan;
}

struct DynamicsRecord {
  double mass = 0.0;
  double residual = 0.0;  // |<A_m, delta d F> - <j,F>| / scale
  cplx remainder{};       // sum <j, E^{-+} d delta F>_{S+-} + <Ad, rho_0 E d delta F>
};

struct DynamicsCheck {
  std::vector<DynamicsRecord> records;
  cplx source_pairing{};  // <j, F>
  double scale = 1.0;
  double conservation = 0.0;      // ||delta j|| / ||j||
  double data_constraint = 0.0;   // ||rho_n j + delta_S Ad|| / scale
};

/// Maxwell-dynamics check. With `require_constraints` the preconditions
/// delta j = 0 and rho_n j = -delta_S Ad are enforced to 1e-10 (relative).
inline DynamicsCheck limit_dynamics_check(const LatticeSpacetime& st, const Form& j, const ReducedPair& r,
                                          const Form& f, const std::vector<double>& masses,
                                          bool require_constraints = true, const ParallelFor& pfor = serial_for) {
  require_masses(masses);
  DynamicsCheck out;
  const double jscale = std::max(j.max_abs(), 1e-300);
  out.conservation = j.max_abs() > 0 ? int_delta(j).max_abs() / jscale : 0.0;
  const Form rnj = rho_n(j, r.slice);
  const Form dsad = delta_sigma(r.pi);
  out.data_constraint = (rnj + dsad).max_abs() / std::max({rnj.max_abs(), dsad.max_abs(), 1e-300});
  if (require_constraints) {
    if (out.conservation > 1e-10)
      throw std::domain_error("precondition failed: source not conserved (delta j != 0)");
    if (out.data_constraint > 1e-10)
      throw std::domain_error("precondition failed: data constraint rho_n j = -delta_S Ad");
  }
  out.source_pairing = pairing(j, f);
  const Form ddf = int_delta(ext_d(f));
  const Form dd_rev = ext_d(int_delta(f));
  out.scale = std::max(std::abs(out.source_pairing), observable_scale(st, j, r, f));
  out.records.resize(masses.size());
  const int t0 = r.slice.time_index();
  pfor(masses.size(), [&](std::size_t k) {
    const double m = masses[k];
    DynamicsRecord rec;
    rec.mass = m;
    const cplx v = solve_proca_unconstrained(st, m, j, r, ddf);
    rec.residual = std::abs(v - out.source_pairing) / out.scale;
    const Form ep = fundamental_E(st, m, dd_rev, +1), em = fundamental_E(st, m, dd_rev, -1);
    rec.remainder = pairing(j, em, Region::future_of(t0)) + pairing(j, ep, Region::past_of(t0)) +
                    slice_pairing(r.pi, rho_zero(em - ep, r.slice));
    out.records[k] = rec;
  });
  return out;
}

struct QuantumRecord {
  double mass = 0.0;
  cplx degree0{};          // sum <j, G^{-+}F>_{S+-}, optionally minus <pi, rho_0 G F>
  ReducedPair datum;       // kappa_m(F)
  double datum_norm = 0.0;
};

struct QuantumCheck {
  std::vector<QuantumRecord> records;
  ConvergenceVerdict degree0_verdict;
  ConvergenceVerdict datum_verdict;
  bool converges = false;
  double datum_slope = 0.0;
};

/// Degree-0 coefficient and degree-1 datum of phi_{m,j}(F) in the
/// initial-data representation; both must Cauchy-converge.
inline QuantumCheck quantum_limit_check(const LatticeSpacetime& st, const Form& j, const Form& f,
                                        const std::vector<double>& masses, const CauchySlice& s,
                                        const Form* lorenz_pi = nullptr, const ParallelFor& pfor = serial_for) {
  require_masses(masses);
  QuantumCheck out;
  out.records.resize(masses.size(), QuantumRecord{0.0, {}, ReducedPair{Form(), Form(), s}, 0.0});
  const int t0 = s.time_index();
  pfor(masses.size(), [&](std::size_t k) {
    const double m = masses[k];
    const Form gp = fundamental_G(st, m, f, +1), gm = fundamental_G(st, m, f, -1);
    const Form g = gm - gp;
    QuantumRecord rec{m, {}, ReducedPair{rho_zero(g, s), rho_d(g, s), s}, 0.0};
    rec.degree0 = pairing(j, gm, Region::future_of(t0)) + pairing(j, gp, Region::past_of(t0));
    if (lorenz_pi) rec.degree0 -= slice_pairing(*lorenz_pi, rho_zero(g, s));
    rec.datum_norm = std::hypot(rec.datum.phi.l2(), rec.datum.pi.l2());
    out.records[k] = std::move(rec);
  });
  std::vector<cplx> d0, phis;
  std::vector<double> norms;
  double scale0 = std::max(j.l2() * f.l2() * st.volume_element(), 1e-300);
  double scale1 = 1e-300;
  for (const auto& r : out.records) {
    d0.push_back(r.degree0);
    norms.push_back(std::max(r.datum_norm, 1e-300));
    scale1 = std::max(scale1, r.datum_norm);
  }
  scale1 = std::max(scale1, f.l2());
  // Cauchy convergence of the datum: distances between consecutive data.
  std::vector<cplx> dist{0.0};
  double acc = 0;
  for (std::size_t k = 1; k < out.records.size(); ++k) {
    const auto& a = out.records[k - 1].datum;
    const auto& b = out.records[k].datum;
    acc += std::hypot((a.phi - b.phi).l2(), (a.pi - b.pi).l2());
    dist.push_back(acc);
  }
  out.degree0_verdict = assess_convergence(d0, scale0, masses);
  out.datum_verdict = assess_convergence(dist, scale1, masses);
  out.converges = out.degree0_verdict.converges && out.datum_verdict.converges;
  out.datum_slope = fit_divergence_exponent(masses, norms, 6);
  return out;
}

/// Fitted constant C in ||E_m F - E_m' F|| <= C |m^2 - m'^2| over consecutive
/// masses (largest ratio).
inline double propagator_continuity_constant(const LatticeSpacetime& st, const Form& f,
                                             const std::vector<double>& masses) {
  double c = 0;
  Form prev = causal_propagator_E(st, masses[0], f);
  for (std::size_t k = 1; k < masses.size(); ++k) {
    Form cur = causal_propagator_E(st, masses[k], f);
    const double dm2 = std::abs(masses[k - 1] * masses[k - 1] - masses[k] * masses[k]);
    c = std::max(c, interior_l2(st, prev - cur) / (dm2 * std::max(f.l2(), 1e-300)));
    prev = std::move(cur);
  }
  return c;
}

/// E_0(F, F') = <F, E_0 F'>.
inline cplx massless_commutator(const LatticeSpacetime& st, const Form& f, const Form& fp) {
  return pairing(f, causal_propagator_E(st, 0.0, fp));
}

}  // namespace plab
