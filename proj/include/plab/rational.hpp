#pragma once
//
// Exact complex rationals over GMP, plus the scalar traits the algebra
// modules use to stay generic over exact and floating coefficients.
//

#include <gmpxx.h>

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace plab {

struct QQi {
  mpq_class re{0}, im{0};

  QQi() = default;
  QQi(long r) : re(r) {}
  QQi(mpq_class r, mpq_class i = 0) : re(std::move(r)), im(std::move(i)) {
    re.canonicalize();
    im.canonicalize();
  }
  static QQi frac(long num, long den) { return QQi(mpq_class(num, den)); }

  QQi& operator+=(const QQi& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  QQi& operator-=(const QQi& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  QQi& operator*=(const QQi& o) {
    mpq_class r = re * o.re - im * o.im;
    mpq_class i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
  }
  QQi& operator/=(const QQi& o) {
    const mpq_class n = o.re * o.re + o.im * o.im;
    if (n == 0) throw std::domain_error("division by zero rational");
    mpq_class r = (re * o.re + im * o.im) / n;
    mpq_class i = (im * o.re - re * o.im) / n;
    re = std::move(r);
    im = std::move(i);
    return *this;
  }
  friend QQi operator+(QQi a, const QQi& b) { return a += b; }
  friend QQi operator-(QQi a, const QQi& b) { return a -= b; }
  friend QQi operator*(QQi a, const QQi& b) { return a *= b; }
  friend QQi operator/(QQi a, const QQi& b) { return a /= b; }
  friend QQi operator-(const QQi& a) { return QQi(-a.re, -a.im); }
  friend bool operator==(const QQi& a, const QQi& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const QQi& a, const QQi& b) { return !(a == b); }
};

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<QQi> {
  static constexpr bool exact = true;
  static QQi zero() { return QQi(); }
  static QQi one() { return QQi(1); }
  static QQi i() { return QQi(0, 1); }
  static QQi from_int(long n) { return QQi(n); }
  static QQi inverse_int(long n) { return QQi::frac(1, n); }
  static QQi conj(const QQi& a) { return QQi(a.re, -a.im); }
  static bool is_zero(const QQi& a) { return a.re == 0 && a.im == 0; }
  static double magnitude(const QQi& a) { return std::abs(a.re.get_d()) + std::abs(a.im.get_d()); }
  static std::string to_string(const QQi& a) { return a.re.get_str() + " " + a.im.get_str(); }
  static QQi parse(const std::string& re, const std::string& im) {
    mpq_class r, i;
    if (r.set_str(re, 10) != 0 || i.set_str(im, 10) != 0)
      throw std::invalid_argument("bad rational coefficient '" + re + " " + im + "'");
    return QQi(r, i);
  }
};

template <>
struct ScalarTraits<std::complex<double>> {
  using C = std::complex<double>;
  static constexpr bool exact = false;
  static C zero() { return 0.0; }
  static C one() { return 1.0; }
  static C i() { return {0.0, 1.0}; }
  static C from_int(long n) { return static_cast<double>(n); }
  static C inverse_int(long n) { return 1.0 / static_cast<double>(n); }
  static C conj(const C& a) { return std::conj(a); }
  static bool is_zero(const C& a) { return a == 0.0; }
  static double magnitude(const C& a) { return std::abs(a); }
  static std::string to_string(const C& a) {
    std::ostringstream os;
    os.precision(17);
    os << a.real() << " " << a.imag();
    return os.str();
  }
  static C parse(const std::string& re, const std::string& im) {
    try {
      return {std::stod(re), std::stod(im)};
    } catch (const std::exception&) {
      throw std::invalid_argument("bad coefficient '" + re + " " + im + "'");
    }
  }
};

}  // namespace plab
