#pragma once
//
// Tensor algebra over abstract generators with the CCR and dynamics
// relations realised as rewriting. Coefficients are exact complex rationals
// (QQi) or complex<double>, fixed per computation by the template argument.
//

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "plab/rational.hpp"

namespace plab::ccr {

using Word = std::vector<int>;

/// Words ordered by length, then lexicographically.
struct WordOrder {
  bool operator()(const Word& a, const Word& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

inline constexpr int default_product_cap = 8;
inline constexpr int default_symmetrize_cap = 6;

template <class S>
class Element {
 public:
  using T = ScalarTraits<S>;
  using Terms = std::map<Word, S, WordOrder>;

  Element() = default;
  static Element scalar(const S& c) {
    Element e;
    e.add(Word{}, c);
    return e;
  }
  static Element unit() { return scalar(T::one()); }
  static Element generator(int id) { return monomial(Word{id}, T::one()); }
  static Element monomial(Word w, const S& c) {
    Element e;
    e.add(std::move(w), c);
    return e;
  }

  /// Adds c * w, merging like terms and dropping zeros.
  void add(const Word& w, const S& c) {
    if (T::is_zero(c)) return;
    auto it = terms_.find(w);
    if (it == terms_.end()) {
      terms_.emplace(w, c);
      return;
    }
    it->second += c;
    if (T::is_zero(it->second)) terms_.erase(it);
  }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const { return terms_.empty() ? -1 : static_cast<int>(terms_.rbegin()->first.size()); }

  S coefficient(const Word& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? T::zero() : it->second;
  }

  /// Homogeneous degree-n part.
  Element part(int n) const {
    Element e;
    for (const auto& [w, c] : terms_)
      if (static_cast<int>(w.size()) == n) e.terms_.emplace(w, c);
    return e;
  }

  Element& operator+=(const Element& o) {
    for (const auto& [w, c] : o.terms_) add(w, c);
    return *this;
  }
  Element& operator-=(const Element& o) {
    for (const auto& [w, c] : o.terms_) add(w, -c);
    return *this;
  }
  friend Element operator+(Element a, const Element& b) { return a += b; }
  friend Element operator-(Element a, const Element& b) { return a -= b; }
  friend Element operator*(const S& s, const Element& a) {
    Element e;
    if (T::is_zero(s)) return e;
    for (const auto& [w, c] : a.terms_) e.add(w, s * c);
    return e;
  }
  friend bool operator==(const Element& a, const Element& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const Element& a, const Element& b) { return !(a == b); }

 private:
  Terms terms_;
};

/// Antisymmetric pairing on generator ids.
template <class S>
using PairingOracle = std::function<S(int, int)>;

/// Graded product: concatenation of words.
template <class S>
Element<S> bu_mul(const Element<S>& a, const Element<S>& b, int cap = default_product_cap) {
  if (a.degree() + b.degree() > cap) throw std::length_error("product degree exceeds cap");
  Element<S> out;
  for (const auto& [u, x] : a.terms())
    for (const auto& [v, y] : b.terms()) {
      Word w = u;
      w.insert(w.end(), v.begin(), v.end());
      out.add(w, x * y);
    }
  return out;
}

/// Conjugate coefficients and reverse words; generators are real.
template <class S>
Element<S> bu_star(const Element<S>& a) {
  Element<S> out;
  for (const auto& [w, c] : a.terms()) out.add(Word(w.rbegin(), w.rend()), ScalarTraits<S>::conj(c));
  return out;
}

template <class S>
Element<S> commutator(const Element<S>& a, const Element<S>& b) {
  return bu_mul(a, b) - bu_mul(b, a);
}

/// Positions k with w[k] > w[k+1].
inline std::vector<std::size_t> inversions(const Word& w) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + 1 < w.size(); ++k)
    if (w[k] > w[k + 1]) out.push_back(k);
  return out;
}

/// One rewrite of the term `w` at position k: u a b v -> u b a v + i G(a,b) u v.
template <class S>
Element<S> reduce_step(const Element<S>& a, const Word& w, std::size_t k, const PairingOracle<S>& g) {
  const S c = a.coefficient(w);
  if (ScalarTraits<S>::is_zero(c)) throw std::invalid_argument("no such term");
  if (k + 1 >= w.size() || !(w[k] > w[k + 1])) throw std::invalid_argument("not an inversion");
  Element<S> out = a;
  out.add(w, -c);
  Word swapped = w;
  std::swap(swapped[k], swapped[k + 1]);
  out.add(swapped, c);
  Word shorter;
  shorter.insert(shorter.end(), w.begin(), w.begin() + k);
  shorter.insert(shorter.end(), w.begin() + k + 2, w.end());
  out.add(shorter, c * ScalarTraits<S>::i() * g(w[k], w[k + 1]));
  return out;
}

/// Normal form modulo the CCR ideal: every word sorted ascending. Reduces
/// the leftmost inversion of the highest remaining term first.
template <class S>
Element<S> ccr_normal_form(const Element<S>& a, const PairingOracle<S>& g) {
  Element<S> cur = a;
  while (true) {
    const Word* pick = nullptr;
    std::size_t pos = 0;
    for (auto it = cur.terms().rbegin(); it != cur.terms().rend(); ++it) {
      auto inv = inversions(it->first);
      if (!inv.empty()) {
        pick = &it->first;
        pos = inv.front();
        break;
      }
    }
    if (!pick) return cur;
    const Word w = *pick;
    cur = reduce_step(cur, w, pos, g);
  }
}

/// Normal form using an arbitrary choice among all pending rewrites.
/// `choose(n)` returns an index in [0, n).
template <class S>
Element<S> ccr_normal_form_with(const Element<S>& a, const PairingOracle<S>& g,
                                const std::function<std::size_t(std::size_t)>& choose) {
  Element<S> cur = a;
  while (true) {
    std::vector<std::pair<Word, std::size_t>> moves;
    for (const auto& [w, c] : cur.terms())
      for (auto k : inversions(w)) moves.emplace_back(w, k);
    if (moves.empty()) return cur;
    const auto& [w, k] = moves[choose(moves.size()) % moves.size()];
    cur = reduce_step(cur, w, k, g);
  }
}

template <class S>
bool is_normal(const Element<S>& a) {
  for (const auto& [w, c] : a.terms())
    if (!inversions(w).empty()) return false;
  return true;
}

/// Dynamics quotient: each generator g with rule(g) = s is replaced by the
/// scalar s (s = 0 kills it); generators with rule(g) empty are kept.
template <class S>
Element<S> dynamics_reduce(const Element<S>& a, const std::function<std::optional<S>(int)>& rule) {
  Element<S> out;
  std::map<int, std::optional<S>> cache;
  auto lookup = [&](int id) -> const std::optional<S>& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, rule(id)).first;
    return it->second;
  };
  for (const auto& [w, c] : a.terms()) {
    Word kept;
    S coef = c;
    for (int id : w) {
      const auto& s = lookup(id);
      if (s) {
        coef *= *s;
      } else {
        kept.push_back(id);
      }
    }
    out.add(kept, coef);
  }
  return out;
}

/// Source shift: the homomorphism g -> g - sign * phi(g) 1.
template <class S>
Element<S> gamma_shift(const Element<S>& a, const std::function<S(int)>& phi, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("direction must be +1 or -1");
  Element<S> out;
  for (const auto& [w, c] : a.terms()) {
    Element<S> prod = Element<S>::scalar(c);
    for (int id : w) {
      Element<S> factor = Element<S>::generator(id);
      factor.add(Word{}, ScalarTraits<S>::from_int(-sign) * phi(id));
      prod = bu_mul(prod, factor, static_cast<int>(w.size()));
    }
    out += prod;
  }
  return out;
}

/// Per-degree average over all permutations of every word.
template <class S>
Element<S> symmetrize(const Element<S>& a, int cap = default_symmetrize_cap) {
  using T = ScalarTraits<S>;
  Element<S> out;
  for (const auto& [w, c] : a.terms()) {
    if (static_cast<int>(w.size()) > cap) throw std::length_error("symmetrization degree exceeds cap");
    std::vector<std::size_t> perm(w.size());
    std::iota(perm.begin(), perm.end(), 0);
    long count = 1;
    for (std::size_t k = 2; k <= w.size(); ++k) count *= static_cast<long>(k);
    const S weight = c * T::inverse_int(count);
    do {
      Word p(w.size());
      for (std::size_t k = 0; k < w.size(); ++k) p[k] = w[perm[k]];
      out.add(p, weight);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return out;
}

/// coef * u (a b - b a - i G(a,b)) v, a generator of the CCR ideal.
template <class S>
struct IdealTerm {
  S coef;
  Word left;
  int a, b;
  Word right;
};

template <class S>
Element<S> expand(const IdealTerm<S>& t, const PairingOracle<S>& g) {
  Word ab = t.left, ba = t.left, uv = t.left;
  ab.push_back(t.a);
  ab.push_back(t.b);
  ba.push_back(t.b);
  ba.push_back(t.a);
  ab.insert(ab.end(), t.right.begin(), t.right.end());
  ba.insert(ba.end(), t.right.begin(), t.right.end());
  uv.insert(uv.end(), t.right.begin(), t.right.end());
  Element<S> e;
  e.add(ab, t.coef);
  e.add(ba, -t.coef);
  e.add(uv, -t.coef * ScalarTraits<S>::i() * g(t.a, t.b));
  return e;
}

template <class S>
struct Decomposition {
  Element<S> symmetric;
  std::vector<IdealTerm<S>> ideal;

  Element<S> ideal_element(const PairingOracle<S>& g) const {
    Element<S> e;
    for (const auto& t : ideal) e += expand(t, g);
    return e;
  }
};

/// a = symmetric + sum of CCR ideal generators. Each word w is telescoped to
/// every permutation by adjacent transpositions; each transposition emits an
/// ideal generator and a lower-degree contraction, which is decomposed
/// recursively.
template <class S>
Decomposition<S> symmetrize_decompose(const Element<S>& a, const PairingOracle<S>& g,
                                      int cap = default_symmetrize_cap) {
  using T = ScalarTraits<S>;
  if (a.degree() > cap) throw std::length_error("symmetrization degree exceeds cap");
  Decomposition<S> out;
  using Key = std::tuple<Word, int, int, Word>;
  std::map<Key, S> ideal;
  Element<S> pending = a;
  for (int n = a.degree(); n >= 0; --n) {
    const Element<S> layer = pending.part(n);
    pending -= layer;
    out.symmetric += symmetrize(layer, cap);
    if (n < 2) continue;
    Element<S> lower;
    for (const auto& [w, c] : layer.terms()) {
      long count = 1;
      for (int k = 2; k <= n; ++k) count *= k;
      const S weight = c * T::inverse_int(count);
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        // Bubble-sort the identity arrangement into perm; cur holds positions.
        std::vector<int> cur(n);
        std::iota(cur.begin(), cur.end(), 0);
        std::vector<int> target_rank(n);
        for (int k = 0; k < n; ++k) target_rank[perm[k]] = k;
        bool swapped = true;
        while (swapped) {
          swapped = false;
          for (int k = 0; k + 1 < n; ++k) {
            if (target_rank[cur[k]] > target_rank[cur[k + 1]]) {
              Word u, v;
              for (int q = 0; q < k; ++q) u.push_back(w[cur[q]]);
              for (int q = k + 2; q < n; ++q) v.push_back(w[cur[q]]);
              const int x = w[cur[k]], y = w[cur[k + 1]];
              if (x != y) {
                // w_cur - w_next = u (xy - yx) v = u gen(x,y) v + i G(x,y) u v.
                auto [it, fresh] = ideal.try_emplace(Key{u, x, y, v}, weight);
                if (!fresh) it->second += weight;
                Word uv = u;
                uv.insert(uv.end(), v.begin(), v.end());
                lower.add(uv, weight * T::i() * g(x, y));
              }
              std::swap(cur[k], cur[k + 1]);
              swapped = true;
            }
          }
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    pending += lower;
  }
  for (auto& [k, c] : ideal) {
    if (T::is_zero(c)) continue;
    const auto& [u, x, y, v] = k;
    out.ideal.push_back(IdealTerm<S>{c, u, x, y, v});
  }
  return out;
}

/// Top-degree part of symmetrize(e) for each sample element of the ideal
/// must vanish. Returns the number of samples with a nonzero top degree.
template <class S>
int symmetric_ideal_violations(const std::vector<Element<S>>& samples, int cap = default_symmetrize_cap) {
  int bad = 0;
  for (const auto& e : samples) {
    if (e.is_zero()) continue;
    if (!symmetrize(e.part(e.degree()), cap).is_zero()) ++bad;
  }
  return bad;
}

/// Text form: one term per line, "<degree> <re> <im> : g1 g2 ...".
template <class S>
std::string serialize(const Element<S>& a) {
  std::ostringstream os;
  for (const auto& [w, c] : a.terms()) {
    os << w.size() << ' ' << ScalarTraits<S>::to_string(c) << " :";
    for (int id : w) os << ' ' << id;
    os << '\n';
  }
  return os.str();
}

template <class S>
Element<S> deserialize(const std::string& text) {
  Element<S> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::size_t degree = 0;
    std::string re, im, colon;
    if (!(ls >> degree >> re >> im >> colon) || colon != ":")
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected '<degree> <re> <im> : ids'");
    Word w;
    std::string tok;
    while (ls >> tok) {
      try {
        w.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": bad generator id '" + tok + "'");
      }
    }
    if (w.size() != degree)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": degree tag does not match word length");
    out.add(w, ScalarTraits<S>::parse(re, im));
  }
  return out;
}

}  // namespace plab::ccr
