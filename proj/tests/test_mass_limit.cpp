#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "plab/mass_limit.hpp"
#include "support.hpp"

using namespace plab;
using plab::testing::rel;

namespace {

struct Setup {
  LatticeSpacetime st = build_spacetime(1, 32, 1.0, 64, 0.5);
  CauchySlice s = cauchy_slice(st, 24);
  Form k;  // 2-form potential of the source
  Form j;
  std::vector<Probe> probes;
  std::vector<double> masses = geometric_masses(0.5, 12);
  Setup() {
    k = sample_form(st.geometry(), 2, [&](unsigned, const std::vector<double>& x) {
      return cplx{bump_profile(st, x, 6, 50, 4.0, 1.3), 0.0};
    });
    j = int_delta(k);
    for (ProbeKind kind : {ProbeKind::co_closed, ProbeKind::closed, ProbeKind::generic})
      probes.push_back(make_probe(kind, st, 8, 40));
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

ReducedPair free_data(const CauchySlice& s, std::uint64_t seed) {
  CounterRng rng(seed, 1);
  return testing::random_pair(s, 1, rng);
}

// Relative least-squares residual of delta F against delta d chi over 0-forms
// chi supported on levels [2, T-3].
double hodge_residual(const LatticeSpacetime& st, const Form& f) {
  const auto g = st.geometry();
  const int T = st.time_steps();
  const long S = st.spatial_sites();
  const long rows = g->sites;
  const long cols = (T - 4) * S;
  Eigen::MatrixXd a(rows, cols);
  for (long c = 0; c < cols; ++c) {
    Form chi(g, 0);
    chi.at(2 * S + c, 0) = 1.0;
    const Form col = int_delta(ext_d(chi));
    for (long r = 0; r < rows; ++r) a(r, c) = col.at(r, 0).real();
  }
  const Form df = int_delta(f);
  Eigen::VectorXd b(rows);
  for (long r = 0; r < rows; ++r) b(r) = df.at(r, 0).real();
  if (b.norm() == 0.0) return 0.0;
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  return (a * x - b).norm() / b.norm();
}

// Massless version of the unconstrained solution formula.
cplx massless_value(const LatticeSpacetime& st, const Form& j, const ReducedPair& r, const Form& f) {
  const int t0 = r.slice.time_index();
  const Form ep = fundamental_E(st, 0.0, f, +1), em = fundamental_E(st, 0.0, f, -1);
  const Form e = em - ep;
  return pairing(j, em, Region::future_of(t0)) + pairing(j, ep, Region::past_of(t0)) -
         slice_pairing(r.phi, rho_d(e, r.slice)) + slice_pairing(r.pi, rho_zero(e, r.slice));
}

}  // namespace

TEST_CASE("probe classes agree with a dense Hodge-split oracle") {
  const auto st = build_spacetime(1, 12, 1.0, 32, 0.5);
  const Probe co = make_probe(ProbeKind::co_closed, st, 6, 25, 2.0);
  const Probe cl = make_probe(ProbeKind::closed, st, 6, 25, 2.0);
  const Probe ge = make_probe(ProbeKind::generic, st, 6, 25, 2.0);
  CHECK(int_delta(co.f).max_abs() <= 1e-14 * co.f.max_abs());
  CHECK(ext_d(cl.f).max_abs() <= 1e-14 * cl.f.max_abs());
  CHECK(hodge_residual(st, cl.f) <= 1e-10);
  CHECK(hodge_residual(st, ge.f) >= 0.1);
  CHECK(int_delta(ge.f).l2() / ge.f.l2() >= 0.1);
  // t is a massless solution, so <F, dt> obstructs delta F = delta d chi.
  Form dt(st.geometry(), 1);
  for (long s = 0; s < dt.sites(); ++s) dt.at_mask(s, 1u) = 1.0;
  CHECK(std::abs(pairing(ge.f, dt)) > 0.1 * ge.f.l2());
  CHECK(std::abs(pairing(cl.f, dt)) <= 1e-12 * cl.f.l2());
  CHECK(std::abs(pairing(co.f, dt)) <= 1e-12 * co.f.l2());
}

TEST_CASE("probe construction validates its window and names") {
  const auto st = testing::small_1d();
  CHECK_THROWS_AS(make_probe(ProbeKind::generic, st, 2, 20), std::domain_error);
  CHECK_THROWS_AS(make_probe(ProbeKind::generic, st, 5, st.time_steps() - 3), std::domain_error);
  for (ProbeKind k : {ProbeKind::co_closed, ProbeKind::closed, ProbeKind::generic})
    CHECK(probe_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(probe_kind_from_string("exact"), std::invalid_argument);
  const Probe p = make_probe(ProbeKind::generic, st, 5, 20);
  CHECK(time_support(p.f).first >= 5);
  CHECK(time_support(p.f).second <= 20);
}

TEST_CASE("mass lists are validated") {
  CHECK(geometric_masses(0.5, 3) == std::vector<double>{0.5, 0.25, 0.125});
  CHECK_NOTHROW(require_masses(geometric_masses(1.0, 13)));
  CHECK_THROWS_AS(require_masses(geometric_masses(1.0, 14)), std::domain_error);
  CHECK_THROWS_AS(require_masses({}), std::invalid_argument);
  CHECK_THROWS_AS(require_masses({0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(require_masses({0.5, -0.1}), std::domain_error);
}

TEST_CASE("convergence heuristic on synthetic sequences") {
  std::vector<cplx> geometric, harmonic, diverging, flat;
  for (int k = 0; k < 16; ++k) {
    geometric.push_back(1.0 + std::ldexp(1.0, -k));
    harmonic.push_back(1.0 / (k + 1.0));
    diverging.push_back(std::ldexp(1.0, 2 * k));
    flat.push_back(3.0);
  }
  CHECK(assess_convergence(geometric, 1.0).converges);
  CHECK_FALSE(assess_convergence(harmonic, 1.0).converges);
  CHECK_FALSE(assess_convergence(diverging, 1.0).converges);
  const ConvergenceVerdict v = assess_convergence(flat, 1.0);
  CHECK(v.converges);
  CHECK(v.last_difference == 0.0);
  // Noise at the amplified rounding floor still counts as converged.
  const std::vector<double> masses = geometric_masses(0.5, 12);
  std::vector<cplx> noisy;
  for (std::size_t k = 0; k < masses.size(); ++k)
    noisy.push_back(1.0 + ((k % 2) ? 1.0 : -1.0) * 0.4e-12 / (masses[k] * masses[k]));
  CHECK(assess_convergence(noisy, 1.0, masses).converges);
  CHECK_FALSE(assess_convergence(noisy, 1.0).converges);
  CHECK_FALSE(assess_convergence({1.0}, 1.0).converges);
}

TEST_CASE("divergence exponent fit recovers exact power laws") {
  const std::vector<double> masses = geometric_masses(0.5, 10);
  for (double p : {0.0, 1.0, 2.0, 3.5}) {
    std::vector<double> y;
    for (double m : masses) y.push_back(7.0 * std::pow(m, -p));
    CHECK(fit_divergence_exponent(masses, y, 6) == Catch::Approx(p).margin(1e-10));
  }
}

TEST_CASE("classical scan: probes split by convergence and divergence rate") {
  const Setup& b = setup();
  const ReducedPair r = free_data(b.s, 7);
  const MassScan scan = classical_scan(b.st, b.j, r, b.probes, b.masses);
  REQUIRE(scan.probes.size() == 3);
  const auto& co = scan.probes[0];
  const auto& cl = scan.probes[1];
  const auto& ge = scan.probes[2];
  CHECK(co.verdict.converges);
  CHECK(cl.verdict.converges);
  CHECK_FALSE(ge.verdict.converges);
  CHECK(ge.slope == Catch::Approx(2.0).margin(0.05));
  CHECK(co.slope <= 0.1);
  // Co-closed limit equals the massless formula up to O(m^2).
  const double m = b.masses.back();
  CHECK(std::abs(co.records.back().value - massless_value(b.st, b.j, r, co.probe.f)) <= 10 * m * m * co.scale);
  // Generic: m^2 ||G F|| tends to ||E_0 d delta F||.
  const double e0 = interior_l2(b.st, causal_propagator_E(b.st, 0.0, ext_d(int_delta(ge.probe.f))));
  CHECK(ge.records.back().g_norm * m * m == Catch::Approx(e0).epsilon(1e-3));
  CHECK(ge.records.back().obstruction * m * m == Catch::Approx(e0).epsilon(1e-3));
  for (const auto& rec : co.records) CHECK(rec.obstruction * rec.mass * rec.mass <= 1e-14 * co.probe.f.l2());
}

TEST_CASE("closed probes see only the source once the source vanishes") {
  const Setup& b = setup();
  const Form zero(b.st.geometry(), 1);
  const MassScan scan = classical_scan(b.st, zero, free_data(b.s, 7), {b.probes[1]}, b.masses);
  for (const auto& rec : scan.probes[0].records) CHECK(std::abs(rec.value) <= 1e-6 * scan.probes[0].scale);
}

TEST_CASE("parallel and serial scans are identical") {
  const Setup& b = setup();
  const ReducedPair r = free_data(b.s, 9);
  const ParallelFor reversed = [](std::size_t n, const std::function<void(std::size_t)>& body) {
    for (std::size_t i = n; i-- > 0;) body(i);
  };
  const MassScan a = classical_scan(b.st, b.j, r, b.probes, b.masses);
  const MassScan c = classical_scan(b.st, b.j, r, b.probes, b.masses, reversed);
  for (std::size_t p = 0; p < a.probes.size(); ++p)
    for (std::size_t k = 0; k < b.masses.size(); ++k) CHECK(a.probes[p].records[k].value == c.probes[p].records[k].value);
}

TEST_CASE("limit dynamics hold under the constraints and fail without them") {
  const Setup& b = setup();
  CounterRng rng(11, 1);
  const ReducedPair rc{random_form(b.s.geometry(), 1, rng), rho_n(b.k, b.s), b.s};
  const Form& f = b.probes[2].f;
  const DynamicsCheck dyn = limit_dynamics_check(b.st, b.j, rc, f, b.masses);
  CHECK(dyn.conservation <= 1e-12);
  CHECK(dyn.data_constraint <= 1e-12);
  CHECK(dyn.source_pairing == pairing(b.j, f));
  for (std::size_t k = 1; k < dyn.records.size(); ++k) CHECK(dyn.records[k].residual < dyn.records[k - 1].residual);
  CHECK(dyn.records.back().residual <= 1e-6);
  for (const auto& rec : dyn.records) CHECK(std::abs(rec.remainder) <= 1e-9 * dyn.scale);

  const ReducedPair rf = free_data(b.s, 7);
  CHECK_THROWS_WITH(limit_dynamics_check(b.st, b.j, rf, f, b.masses),
                    Catch::Matchers::ContainsSubstring("data constraint rho_n j = -delta_S Ad"));
  CounterRng rj(13, 1);
  const Form loose = random_form_levels(b.st.geometry(), 1, 6, 50, rj);
  CHECK_THROWS_WITH(limit_dynamics_check(b.st, loose, rc, f, b.masses),
                    Catch::Matchers::ContainsSubstring("source not conserved"));
  const DynamicsCheck neg = limit_dynamics_check(b.st, b.j, rf, f, b.masses, false);
  CHECK(neg.records.back().residual >= 1e-2);
  CHECK(neg.records.back().residual == Catch::Approx(neg.records[neg.records.size() - 2].residual).epsilon(1e-3));
}

TEST_CASE("quantum limit follows the classical classification") {
  const Setup& b = setup();
  const QuantumCheck co = quantum_limit_check(b.st, b.j, b.probes[0].f, b.masses, b.s);
  const QuantumCheck cl = quantum_limit_check(b.st, b.j, b.probes[1].f, b.masses, b.s);
  const QuantumCheck ge = quantum_limit_check(b.st, b.j, b.probes[2].f, b.masses, b.s);
  CHECK(co.converges);
  CHECK(cl.converges);
  CHECK_FALSE(ge.converges);
  CHECK(ge.datum_slope == Catch::Approx(2.0).margin(0.05));
  // Datum of a co-closed probe tends to the massless one.
  const Form e0 = causal_propagator_E(b.st, 0.0, b.probes[0].f);
  const auto& last = co.records.back().datum;
  const double dist = std::hypot((last.phi - rho_zero(e0, b.s)).l2(), (last.pi - rho_d(e0, b.s)).l2());
  CHECK(dist <= 1e-5 * co.records.back().datum_norm);
}

TEST_CASE("propagators depend Lipschitz-continuously on m^2") {
  const Setup& b = setup();
  const double c = propagator_continuity_constant(b.st, b.probes[2].f, b.masses);
  CHECK(std::isfinite(c));
  CHECK(c > 0.0);
  // Independent estimate from the two smallest masses.
  const std::size_t n = b.masses.size();
  const double m1 = b.masses[n - 2], m2 = b.masses[n - 1];
  const Form diff = causal_propagator_E(b.st, m1, b.probes[2].f) - causal_propagator_E(b.st, m2, b.probes[2].f);
  CHECK(interior_l2(b.st, diff) <= c * (m1 * m1 - m2 * m2) * b.probes[2].f.l2() * (1 + 1e-12));
}

TEST_CASE("massless commutator is the symplectic limit in 3+1 dimensions") {
  const auto st = build_spacetime(3, 8, 1.0, 32, 0.4);
  const auto s = cauchy_slice(st, 16);
  const Probe a = make_probe(ProbeKind::co_closed, st, 6, 20, 1.5, 0.0);
  const Probe c = make_probe(ProbeKind::co_closed, st, 10, 26, 1.2, 1.0);
  const cplx e0 = massless_commutator(st, a.f, c.f);
  const double scale = a.f.l2() * c.f.l2() * st.volume_element();
  CHECK(std::abs(e0) >= 1e-3 * scale);
  const double m = smallest_mass;
  const cplx w = symplectic_form(kappa_map(st, m, a.f, s), kappa_map(st, m, c.f, s));
  CHECK(std::abs(w - e0) <= 1e-4 * scale);
  CHECK(std::abs(massless_commutator(st, a.f, c.f) + massless_commutator(st, c.f, a.f)) <= 1e-12 * scale);
}
