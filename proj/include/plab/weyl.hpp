#pragma once
//
// Finite-dimensional Weyl algebra: twisted products, involution, states
// built from dominating symmetric forms, and a mock family in which the
// dynamics kernel jumps at one mass.
//

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace plab::weyl {

using cplx = std::complex<double>;
using Vec = std::vector<double>;

inline constexpr int max_dimension = 16;

class PreSymplecticSpace {
 public:
  explicit PreSymplecticSpace(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
    if (sigma_.rows() != sigma_.cols()) throw std::invalid_argument("sigma must be square");
    if (sigma_.rows() < 1 || sigma_.rows() > max_dimension) throw std::invalid_argument("dimension must be in [1, 16]");
    if (sigma_ != -sigma_.transpose()) throw std::invalid_argument("sigma must be exactly antisymmetric");
  }
  int dimension() const { return static_cast<int>(sigma_.rows()); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }

  double operator()(const Vec& f, const Vec& g) const {
    check(f);
    check(g);
    double s = 0;
    for (int i = 0; i < dimension(); ++i)
      for (int j = 0; j < dimension(); ++j) s += f[i] * sigma_(i, j) * g[j];
    return s;
  }

  void check(const Vec& f) const {
    if (static_cast<int>(f.size()) != dimension()) throw std::invalid_argument("vector does not live in this space");
  }

 private:
  Eigen::MatrixXd sigma_;
};

inline Vec add(const Vec& a, const Vec& b) {
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

inline Vec scale(double s, const Vec& a) {
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = s * a[i] + 0.0;
  return c;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Finite combination sum_k c_k W(F_k).
class WeylCombination {
 public:
  WeylCombination() = default;
  explicit WeylCombination(int dim) : dim_(dim) {}
  static WeylCombination unit(int dim) { return symbol(Vec(dim, 0.0)); }
  static WeylCombination symbol(const Vec& f, cplx c = 1.0) {
    WeylCombination w(static_cast<int>(f.size()));
    w.add(f, c);
    return w;
  }

  void add(Vec f, cplx c) {
    if (dim_ < 0) dim_ = static_cast<int>(f.size());
    if (static_cast<int>(f.size()) != dim_) throw std::invalid_argument("space mismatch");
    for (auto& x : f) x += 0.0;  // normalises -0.0
    if (c == 0.0) return;
    auto it = terms_.find(f);
    if (it == terms_.end()) {
      terms_.emplace(std::move(f), c);
      return;
    }
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }

  int dimension() const { return dim_; }
  const std::map<Vec, cplx>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  WeylCombination& operator+=(const WeylCombination& o) {
    for (const auto& [f, c] : o.terms_) add(f, c);
    return *this;
  }
  WeylCombination& operator-=(const WeylCombination& o) {
    for (const auto& [f, c] : o.terms_) add(f, -c);
    return *this;
  }
  friend WeylCombination operator+(WeylCombination a, const WeylCombination& b) { return a += b; }
  friend WeylCombination operator-(WeylCombination a, const WeylCombination& b) { return a -= b; }
  friend WeylCombination operator*(cplx s, const WeylCombination& a) {
    WeylCombination w(a.dim_);
    for (const auto& [f, c] : a.terms_) w.add(f, s * c);
    return w;
  }

 private:
  int dim_ = -1;
  std::map<Vec, cplx> terms_;
};

/// Largest coefficient difference after matching symbols exactly.
inline double max_difference(const WeylCombination& a, const WeylCombination& b) {
  double m = 0;
  const WeylCombination d = a - b;
  for (const auto& [f, c] : d.terms()) m = std::max(m, std::abs(c));
  return m;
}

/// W(F) W(G) = exp(-i sigma(F,G)/2) W(F+G), extended bilinearly.
inline WeylCombination weyl_mul(const WeylCombination& a, const WeylCombination& b, const PreSymplecticSpace& s) {
  if (a.dimension() != s.dimension() && !a.is_zero()) throw std::invalid_argument("space mismatch");
  if (b.dimension() != s.dimension() && !b.is_zero()) throw std::invalid_argument("space mismatch");
  WeylCombination out(s.dimension());
  for (const auto& [f, x] : a.terms())
    for (const auto& [g, y] : b.terms()) out.add(add(f, g), x * y * std::polar(1.0, -0.5 * s(f, g)));
  return out;
}

/// W(F)* = W(-F), coefficients conjugated.
inline WeylCombination weyl_star(const WeylCombination& a) {
  WeylCombination out(a.dimension());
  for (const auto& [f, c] : a.terms()) out.add(scale(-1.0, f), std::conj(c));
  return out;
}

/// Lambda with sigma(F,F') = <Lambda F, F'>.
inline Eigen::MatrixXd lambda_matrix(const PreSymplecticSpace& s) { return s.sigma().transpose(); }

inline double operator_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

/// s = ||Lambda|| * identity.
inline Eigen::MatrixXd dominating_form(const PreSymplecticSpace& s) {
  const int n = s.dimension();
  return operator_norm(lambda_matrix(s)) * Eigen::MatrixXd::Identity(n, n);
}

inline double quadratic(const Eigen::MatrixXd& s, const Vec& f) {
  const Eigen::Map<const Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(f.size()));
  return v.dot(s * v);
}

inline double bilinear(const Eigen::MatrixXd& s, const Vec& f, const Vec& g) {
  const Eigen::Map<const Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::Map<const Eigen::VectorXd> w(g.data(), static_cast<Eigen::Index>(g.size()));
  return v.dot(s * w);
}

/// True when sigma(F,F')^2 <= s(F,F) s(F',F') for all F, F'.
inline bool dominates(const Eigen::MatrixXd& s, const PreSymplecticSpace& sp, double tol = 1e-12) {
  const int n = sp.dimension();
  if (s.rows() != n || s.cols() != n) return false;
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > tol * (1.0 + s.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  const auto& ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.minCoeff() < -tol * top) return false;
  const Eigen::MatrixXd v = es.eigenvectors();
  const Eigen::MatrixXd sig = v.transpose() * sp.sigma() * v;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool ni = ev(i) <= tol * top, nj = ev(j) <= tol * top;
      if ((ni || nj) && std::abs(sig(i, j)) > tol * (1.0 + sp.sigma().cwiseAbs().maxCoeff())) return false;
    }
  Eigen::MatrixXd scaled = sig;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool ni = ev(i) <= tol * top, nj = ev(j) <= tol * top;
      scaled(i, j) = (ni || nj) ? 0.0 : sig(i, j) / std::sqrt(ev(i) * ev(j));
    }
  return operator_norm(scaled) <= 1.0 + 1e-10;
}

using StateFunction = std::function<cplx(const Vec&)>;

/// F -> exp(-s(F,F)/2); s must dominate sigma.
inline StateFunction exponential_state(const Eigen::MatrixXd& s, const PreSymplecticSpace& sp) {
  if (!dominates(s, sp)) throw std::invalid_argument("s does not dominate sigma");
  return [s](const Vec& f) { return cplx(std::exp(-0.5 * quadratic(s, f)), 0.0); };
}

/// F -> exp(i l(F)), the state composed with a phase automorphism.
inline StateFunction character(const StateFunction& c, const Vec& l) {
  return [c, l](const Vec& f) { return c(f) * std::polar(1.0, dot(l, f)); };
}

/// Product state for the sum of two forms.
inline StateFunction product_state(const StateFunction& a, const StateFunction& b) {
  return [a, b](const Vec& f) { return a(f) * b(f); };
}

inline cplx expectation(const StateFunction& c, const WeylCombination& a) {
  cplx s = 0;
  for (const auto& [f, x] : a.terms()) s += x * c(f);
  return s;
}

/// M_ij = exp(i sigma(F_i,F_j)/2) C(F_j - F_i).
inline Eigen::MatrixXcd positivity_matrix(const StateFunction& c, const PreSymplecticSpace& sp,
                                          const std::vector<Vec>& fs) {
  const auto n = static_cast<Eigen::Index>(fs.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = std::polar(1.0, 0.5 * sp(fs[i], fs[j])) * c(add(fs[j], scale(-1.0, fs[i])));
  return m;
}

inline double min_eigenvalue(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  return es.eigenvalues().minCoeff();
}

/// Three-dimensional family on (q, p, z): sigma(q,p) = 1 and
/// sigma(q,z) = m - m0, so e_z spans the radical exactly at m0. The dynamics
/// kernel is span{e_z} at m0 and trivial elsewhere.
class ObstructionMock {
 public:
  explicit ObstructionMock(double m0) : m0_(m0) {}
  double m0() const { return m0_; }

  PreSymplecticSpace space(double m) const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
    s(0, 1) = 1.0;
    s(1, 0) = -1.0;
    s(0, 2) = m - m0_;
    s(2, 0) = -(m - m0_);
    return PreSymplecticSpace(s);
  }

  /// Representative of the class [F]_m.
  Vec quotient(const Vec& f, double m) const {
    Vec g = f;
    if (m == m0_) g[2] = 0.0;
    return g;
  }

 private:
  double m0_;
};

struct ObstructionPoint {
  double mass = 0.0;
  double norm_proxy = 0.0;  // sup over the state catalog of sqrt(omega(K*K))
  bool exact_zero = false;  // K(m) has no terms
};

/// sup over exponential states (multiples of the dominating form) composed
/// with phase characters along `direction`; the phase grid is refined by
/// golden-section search around the best grid point.
inline double norm_proxy(const WeylCombination& k, const PreSymplecticSpace& sp, const Vec& direction,
                         int phase_grid = 64) {
  if (k.is_zero()) return 0.0;
  const WeylCombination kk = weyl_mul(weyl_star(k), k, sp);
  const double base = std::max(operator_norm(lambda_matrix(sp)), 1e-6);
  const double d2 = dot(direction, direction);
  double best = 0.0;
  for (double mult : {1.0, 2.0, 4.0}) {
    const auto c = exponential_state(mult * base * Eigen::MatrixXd::Identity(sp.dimension(), sp.dimension()), sp);
    auto value = [&](double theta) {
      const Vec l = d2 > 0 ? scale(theta / d2, direction) : Vec(sp.dimension(), 0.0);
      return expectation(character(c, l), kk).real();
    };
    double arg = 0.0, top = -1e300;
    for (int g = 0; g < phase_grid; ++g) {
      const double theta = 2.0 * M_PI * g / phase_grid;
      const double v = value(theta);
      if (v > top) {
        top = v;
        arg = theta;
      }
    }
    double a = arg - 2.0 * M_PI / phase_grid, b = arg + 2.0 * M_PI / phase_grid;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
      const double x1 = b - r * (b - a), x2 = a + r * (b - a);
      if (value(x1) > value(x2)) {
        b = x2;
      } else {
        a = x1;
      }
    }
    top = std::max(top, value(0.5 * (a + b)));
    best = std::max(best, top);
  }
  return std::sqrt(std::max(best, 0.0));
}

/// Norm trace of K(m) = W([F]_m) - W([H]_m) over a mass grid.
inline std::vector<ObstructionPoint> dynamics_ideal_obstruction(const ObstructionMock& mock, const Vec& f,
                                                                const Vec& h, const std::vector<double>& masses) {
  std::vector<ObstructionPoint> out;
  for (double m : masses) {
    const PreSymplecticSpace sp = mock.space(m);
    const Vec fq = mock.quotient(f, m), hq = mock.quotient(h, m);
    const WeylCombination k = WeylCombination::symbol(fq) - WeylCombination::symbol(hq);
    ObstructionPoint p;
    p.mass = m;
    p.exact_zero = k.is_zero();
    p.norm_proxy = norm_proxy(k, sp, add(fq, scale(-1.0, hq)));
    out.push_back(p);
  }
  return out;
}

}  // namespace plab::weyl
