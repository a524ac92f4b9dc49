#pragma once

#include <cmath>
#include <complex>

#include "plab/cauchy.hpp"
#include "plab/rng.hpp"

namespace plab::testing {

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double rel(const Form& a, const Form& b) { return (a - b).max_abs() / std::max({a.max_abs(), b.max_abs(), 1e-300}); }

/// Random form vanishing on the two outermost levels at each end.
inline Form compact_random(const LatticeSpacetime& st, int p, CounterRng& rng) {
  return random_form_levels(st.geometry(), p, 2, st.time_steps() - 3, rng);
}

inline ReducedPair random_pair(const CauchySlice& s, int p, CounterRng& rng) {
  return ReducedPair{random_form(s.geometry(), p, rng), random_form(s.geometry(), p, rng), s};
}

inline LatticeSpacetime small_1d() { return build_spacetime(1, 16, 1.0, 32, 0.5); }
inline LatticeSpacetime small_3d() { return build_spacetime(3, 6, 1.0, 16, 0.4); }
inline LatticeSpacetime curved_1d() { return build_spacetime(1, 12, 0.8, 24, 0.3, {2.0}); }
inline LatticeSpacetime curved_3d() { return build_spacetime(3, 5, 1.0, 14, 0.3, {1.0, 2.0, 0.5}); }

}  // namespace plab::testing
