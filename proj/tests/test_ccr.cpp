#include <catch_amalgamated.hpp>

#include <set>

#include "plab/ccr.hpp"
#include "plab/field_algebra.hpp"
#include "support.hpp"

using namespace plab;
using namespace plab::ccr;

namespace {

using Q = QQi;
using E = Element<Q>;

// Antisymmetric rational pairing on ids 0..5.
Q pairing_q(int a, int b) { return QQi::frac(a - b, a + b + 1); }
const PairingOracle<Q> G = pairing_q;

long pick(CounterRng& rng, long n) { return rng.integer(0, n - 1); }

E gen(int id) { return E::generator(id); }

E random_element(CounterRng& rng, int max_degree, int ids = 5, int terms = 4) {
  E out;
  for (int t = 0; t < terms; ++t) {
    const int n = static_cast<int>(pick(rng, max_degree + 1));
    Word w;
    for (int k = 0; k < n; ++k) w.push_back(static_cast<int>(pick(rng, ids)));
    const long re = static_cast<long>(pick(rng, 9)) - 4, im = static_cast<long>(pick(rng, 5)) - 2;
    out.add(w, QQi(mpq_class(re, 1 + static_cast<long>(pick(rng, 3))), mpq_class(im, 2)));
  }
  return out;
}

// Every terminal element reachable by any reduction order.
void all_normal_forms(const E& a, std::set<std::string>& out) {
  bool moved = false;
  for (const auto& [w, c] : a.terms())
    for (auto k : inversions(w)) {
      moved = true;
      all_normal_forms(reduce_step(a, w, k, G), out);
    }
  if (!moved) out.insert(serialize(a));
}

E nf(const E& a) { return ccr_normal_form(a, G); }

}  // namespace

TEST_CASE("word order and element bookkeeping") {
  CHECK(WordOrder{}(Word{5}, Word{0, 0}));
  CHECK(WordOrder{}(Word{0, 1}, Word{1, 0}));
  E a = gen(1) + gen(2);
  a -= gen(1);
  CHECK(a == gen(2));
  CHECK(a.degree() == 1);
  CHECK(E().degree() == -1);
  CHECK((Q(0) * a).is_zero());
  const E b = bu_mul(gen(3), gen(4)) + E::scalar(Q(2));
  CHECK(b.part(2) == bu_mul(gen(3), gen(4)));
  CHECK(b.part(0) == E::scalar(Q(2)));
  CHECK(b.coefficient({3, 4}) == Q(1));
  CHECK(b.coefficient({4, 3}) == Q(0));
}

TEST_CASE("products respect the degree cap") {
  E w = E::unit();
  for (int k = 0; k < 8; ++k) w = bu_mul(w, gen(k % 3));
  CHECK(w.degree() == 8);
  CHECK_THROWS_AS(bu_mul(w, gen(0)), std::length_error);
  CHECK_NOTHROW(bu_mul(w, gen(0), 9));
}

TEST_CASE("generator commutators are central scalars") {
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      const E c = nf(commutator(gen(a), gen(b)));
      CHECK(c == E::scalar(ScalarTraits<Q>::i() * pairing_q(a, b)));
      for (int d = 0; d < 5; ++d) CHECK(nf(commutator(c, gen(d))).is_zero());
    }
}

TEST_CASE("normal form is idempotent and sorted") {
  CounterRng rng(201, 0);
  for (int k = 0; k < 50; ++k) {
    const E a = random_element(rng, 4);
    const E n = nf(a);
    CHECK(is_normal(n));
    CHECK(nf(n) == n);
    CHECK(nf(a - n).is_zero());
  }
}

TEST_CASE("normal form is independent of the reduction order") {
  CounterRng rng(203, 0);
  for (int k = 0; k < 100; ++k) {
    const E a = random_element(rng, 4);
    CounterRng choice(205, static_cast<std::uint64_t>(k));
    const E b = ccr_normal_form_with(a, G, [&](std::size_t n) { return static_cast<std::size_t>(pick(choice, static_cast<long>(n))); });
    CHECK(b == nf(a));
  }
}

TEST_CASE("every reduction order reaches the same normal form up to degree 3") {
  std::vector<Word> words;
  for (int n = 2; n <= 3; ++n) {
    Word w(n, 0);
    while (true) {
      words.push_back(w);
      int k = n - 1;
      while (k >= 0 && w[k] == 3) w[k--] = 0;
      if (k < 0) break;
      ++w[k];
    }
  }
  for (const Word& w : words) {
    std::set<std::string> results;
    const E a = E::monomial(w, Q(1));
    all_normal_forms(a, results);
    INFO("word size " << w.size());
    CHECK(results.size() == 1);
    CHECK(*results.begin() == serialize(nf(a)));
  }
  // Sums of words, where moves on different terms interleave.
  CounterRng rng(207, 0);
  for (int k = 0; k < 30; ++k) {
    std::set<std::string> results;
    const E a = random_element(rng, 3, 4, 3);
    all_normal_forms(a, results);
    CHECK(results.size() == 1);
  }
}

TEST_CASE("normal form is a homomorphism of the quotient") {
  CounterRng rng(209, 0);
  for (int k = 0; k < 40; ++k) {
    const E a = random_element(rng, 3), b = random_element(rng, 3);
    CHECK(nf(bu_mul(nf(a), nf(b))) == nf(bu_mul(a, b)));
    CHECK(nf(nf(a) + b) == nf(a + b));
  }
}

TEST_CASE("star is an involutive antihomomorphism compatible with the ideal") {
  CounterRng rng(211, 0);
  for (int k = 0; k < 40; ++k) {
    const E a = random_element(rng, 3), b = random_element(rng, 3);
    CHECK(bu_star(bu_star(a)) == a);
    CHECK(bu_star(bu_mul(a, b)) == bu_mul(bu_star(b), bu_star(a)));
    CHECK(nf(bu_star(a)) == nf(bu_star(nf(a))));
  }
  // The ideal generators are mapped into the ideal.
  const IdealTerm<Q> t{Q(1), {2}, 3, 1, {0}};
  CHECK(nf(bu_star(expand(t, G))).is_zero());
}

TEST_CASE("symmetric decomposition is exact") {
  CounterRng rng(213, 0);
  for (int k = 0; k < 40; ++k) {
    const E a = random_element(rng, 4);
    const Decomposition<Q> d = symmetrize_decompose(a, G);
    CHECK(d.symmetric + d.ideal_element(G) == a);
    CHECK(symmetrize(d.symmetric) == d.symmetric);
    for (const auto& t : d.ideal) CHECK(nf(expand(t, G)).is_zero());
  }
}

TEST_CASE("degree-2 symmetric decomposition by hand") {
  const E a = bu_mul(gen(0), gen(1));
  const Decomposition<Q> d = symmetrize_decompose(a, G);
  const Q half = QQi::frac(1, 2);
  const E sym = half * (bu_mul(gen(0), gen(1)) + bu_mul(gen(1), gen(0)));
  const E expected = sym + E::scalar(half * ScalarTraits<Q>::i() * pairing_q(0, 1));
  CHECK(d.symmetric == expected);
  REQUIRE(d.ideal.size() == 1);
  CHECK(d.ideal_element(G) == half * (bu_mul(gen(0), gen(1)) - bu_mul(gen(1), gen(0)) -
                                      E::scalar(ScalarTraits<Q>::i() * pairing_q(0, 1))));
  CHECK_THROWS_AS(symmetrize_decompose(E::monomial(Word(7, 1), Q(1)), G), std::length_error);
}

TEST_CASE("the ideal has no symmetric top-degree part") {
  CounterRng rng(215, 0);
  std::vector<E> samples;
  for (int k = 0; k < 50; ++k) {
    E e;
    for (int t = 0; t < 3; ++t) {
      Word u, v;
      for (auto n = pick(rng, 2); n > 0; --n) u.push_back(static_cast<int>(pick(rng, 5)));
      for (auto n = pick(rng, 2); n > 0; --n) v.push_back(static_cast<int>(pick(rng, 5)));
      const int a = static_cast<int>(pick(rng, 5)), b = static_cast<int>(pick(rng, 5));
      e += expand(IdealTerm<Q>{Q(static_cast<long>(pick(rng, 7)) - 3), u, a, b, v}, G);
    }
    samples.push_back(e);
  }
  CHECK(symmetric_ideal_violations(samples) == 0);
  CHECK(symmetric_ideal_violations(std::vector<E>{bu_mul(gen(0), gen(1))}) == 1);
}

TEST_CASE("source shifts invert each other and descend to the quotient") {
  const std::function<Q(int)> phi = [](int id) { return QQi::frac(id + 2, 3); };
  CounterRng rng(217, 0);
  for (int k = 0; k < 30; ++k) {
    const E a = random_element(rng, 3);
    CHECK(gamma_shift(gamma_shift(a, phi, +1), phi, -1) == a);
    CHECK(nf(gamma_shift(nf(a), phi, +1)) == nf(gamma_shift(a, phi, +1)));
  }
  CHECK(gamma_shift(E::scalar(Q(5)), phi, +1) == E::scalar(Q(5)));
  CHECK(gamma_shift(gen(1), phi, +1) == gen(1) - E::scalar(phi(1)));
  CHECK_THROWS_AS(gamma_shift(gen(1), phi, 0), std::invalid_argument);
}

TEST_CASE("dynamics quotient replaces kernel generators") {
  const std::function<std::optional<Q>(int)> rule = [](int id) -> std::optional<Q> {
    if (id == 3) return Q(0);
    if (id == 4) return QQi::frac(1, 2);
    return std::nullopt;
  };
  const E a = bu_mul(gen(4), gen(1)) + bu_mul(gen(3), gen(2)) + gen(0);
  CHECK(dynamics_reduce(a, rule) == QQi::frac(1, 2) * gen(1) + gen(0));
}

TEST_CASE("serialization round trips exact and floating coefficients") {
  CounterRng rng(219, 0);
  for (int k = 0; k < 20; ++k) {
    const E a = random_element(rng, 4);
    CHECK(deserialize<Q>(serialize(a)) == a);
  }
  using C = std::complex<double>;
  Element<C> f;
  f.add({1, 0, 2}, C{0.1, -1.0 / 3.0});
  f.add({}, C{2.5, 0});
  CHECK(deserialize<C>(serialize(f)) == f);
  CHECK_THROWS_AS(deserialize<Q>("2 1 0 : 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(deserialize<Q>("1 1 0 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(deserialize<Q>("1 x 0 : 1\n"), std::invalid_argument);
}

TEST_CASE("Proca field algebra: oracle, kernel and dynamics relation") {
  const auto st = testing::small_1d();
  const auto s = cauchy_slice(st, 15);
  const double m = 0.8;
  CounterRng rng(221, 0);
  ProcaFieldAlgebra alg(st, m, s);
  const Form f0 = random_form_levels(st.geometry(), 1, 5, 26, rng);
  const Form f1 = random_form_levels(st.geometry(), 1, 5, 26, rng);
  const Form h = random_form_levels(st.geometry(), 1, 6, 25, rng);
  const int a = alg.add_generator(f0), b = alg.add_generator(f1);
  const int k = alg.add_generator(proca_apply(h, m));
  const auto g = alg.oracle();
  CHECK(testing::rel(g(a, b), pairing(f0, causal_propagator_G(st, m, f1))) <= 1e-10);
  CHECK(std::abs(g(a, b) + g(b, a)) <= 1e-12 * std::abs(g(a, b)));

  const Form j = int_delta(random_form_levels(st.geometry(), 2, 6, 25, rng));
  const auto rule = alg.kernel_rule(j);
  CHECK_FALSE(rule(a).has_value());
  REQUIRE(rule(k).has_value());
  CHECK(testing::rel(*rule(k), pairing(j, h)) <= 1e-9);

  using C = cplx;
  const Element<C> x = bu_mul(Element<C>::generator(k), Element<C>::generator(a));
  const Element<C> r = dynamics_reduce(x, rule);
  CHECK(r.degree() == 1);
  CHECK(testing::rel(r.coefficient({a}), pairing(j, h)) <= 1e-9);

  // Shifting by the source maps the j-dynamics onto the source-free one.
  const auto rule0 = alg.kernel_rule(Form(st.geometry(), 1));
  const std::function<C(int)> phi = [&](int id) { return pairing(j, fundamental_G(st, m, alg.payload(id), +1)); };
  const Element<C> y = bu_mul(Element<C>::generator(k), Element<C>::generator(k)) + Element<C>::generator(k);
  const Element<C> lhs = dynamics_reduce(gamma_shift(y, phi, -1), rule0);
  const Element<C> rhs = dynamics_reduce(y, rule);
  CHECK(lhs.degree() == 0);
  CHECK(testing::rel(lhs.coefficient({}), rhs.coefficient({})) <= 1e-9);
  CHECK_THROWS_AS(ProcaFieldAlgebra(st, 0.0, s), std::domain_error);
}
