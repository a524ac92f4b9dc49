#pragma once
//
// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter), so results do not depend on scheduling.
//

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>

#include "plab/forms.hpp"

namespace plab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed) ^ splitmix64(~stream * 0x632be59bd9b4e019ULL)) {}

  std::uint64_t bits(std::uint64_t counter) const { return splitmix64(key_ ^ splitmix64(counter)); }
  std::uint64_t next_bits() { return bits(counter_++); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_bits() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [lo, hi].
  long integer(long lo, long hi) { return lo + static_cast<long>(next_bits() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  std::complex<double> complex_normal() { return {normal(), normal()}; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Random complex form with unit-normal components.
inline Form random_form(const std::shared_ptr<const Geometry>& g, int p, CounterRng& rng) {
  Form a(g, p);
  for (auto& v : a.data()) v = rng.complex_normal();
  return a;
}

/// Random form supported on time levels [lo, hi].
inline Form random_form_levels(const std::shared_ptr<const Geometry>& g, int p, int lo, int hi, CounterRng& rng) {
  return restrict_levels(random_form(g, p, rng), lo, hi);
}

}  // namespace plab
