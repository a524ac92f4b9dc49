#pragma once
//
// Numeric bridge between the CCR algebra and Proca data: generators carry
// test 1-forms, the pairing is the smeared causal propagator, kernel
// membership is decided by kappa_m.
//

#include <complex>
#include <optional>
#include <vector>

#include "plab/ccr.hpp"
#include "plab/proca.hpp"

namespace plab {

class ProcaFieldAlgebra {
 public:
  ProcaFieldAlgebra(LatticeSpacetime st, double m, CauchySlice slice)
      : st_(std::move(st)), m_(m), slice_(std::move(slice)) {
    require_positive_mass(m);
  }

  int add_generator(const Form& f) {
    payloads_.push_back(f);
    data_.push_back(kappa_map(st_, m_, f, slice_));
    return static_cast<int>(payloads_.size()) - 1;
  }

  const Form& payload(int id) const { return payloads_.at(id); }
  const ReducedPair& datum(int id) const { return data_.at(id); }
  std::size_t size() const { return payloads_.size(); }

  /// G_m(F_a, F_b) from reduced data.
  ccr::PairingOracle<cplx> oracle() const {
    return [this](int a, int b) { return symplectic_form(data_.at(a), data_.at(b)); };
  }

  /// Generators whose datum vanishes (relative `tol`) lie in the image of
  /// (delta d + m^2); they become the scalar <j, G^+ F>.
  std::function<std::optional<cplx>(int)> kernel_rule(const Form& j, double tol = 1e-9) const {
    return [this, j, tol](int id) -> std::optional<cplx> {
      const Form& f = payloads_.at(id);
      const ReducedPair& k = data_.at(id);
      const double scale = std::max(f.l2(), 1e-300);
      if (std::hypot(k.phi.l2(), k.pi.l2()) > tol * scale) return std::nullopt;
      return pairing(j, fundamental_G(st_, m_, f, +1));
    };
  }

 private:
  LatticeSpacetime st_;
  double m_;
  CauchySlice slice_;
  std::vector<Form> payloads_;
  std::vector<ReducedPair> data_;
};

}  // namespace plab
