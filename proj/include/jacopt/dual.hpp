#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "jacopt/error.hpp"

namespace jacopt {

/// Vector-forward dual number: a value plus p directional derivatives.
///
/// An empty `deriv` stands for the zero vector, so constants can be written
/// as `Dual(3.0)` inside generic user code. Every operation computes the
/// value component with exactly the floating-point operations the plain
/// `double` path uses.
struct Dual {
  double value = 0.0;
  std::vector<double> deriv;

  Dual() = default;
  Dual(double v) : value(v) {}  // NOLINT: implicit on purpose, mirrors double
  Dual(double v, std::vector<double> d) : value(v), deriv(std::move(d)) {}

  std::size_t width() const { return deriv.size(); }
};

namespace dual_detail {

// ca*a + cb*b over derivative vectors where empty means zero.
inline std::vector<double> lincomb(double ca, const std::vector<double>& a, double cb,
                                   const std::vector<double>& b) {
  if (a.empty() && b.empty()) return {};
  const std::size_t p = a.empty() ? b.size() : a.size();
  std::vector<double> out(p, 0.0);
  if (!a.empty()) {
    for (std::size_t k = 0; k < p; ++k) out[k] = ca * a[k];
  }
  if (!b.empty()) {
    for (std::size_t k = 0; k < p; ++k) out[k] += cb * b[k];
  }
  return out;
}

inline std::vector<double> scaled(double c, const std::vector<double>& a) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = c * a[k];
  return out;
}

}  // namespace dual_detail

inline Dual operator+(const Dual& a) { return a; }
inline Dual operator-(const Dual& a) { return {-a.value, dual_detail::scaled(-1.0, a.deriv)}; }

inline Dual operator+(const Dual& a, const Dual& b) {
  return {a.value + b.value, dual_detail::lincomb(1.0, a.deriv, 1.0, b.deriv)};
}
inline Dual operator-(const Dual& a, const Dual& b) {
  return {a.value - b.value, dual_detail::lincomb(1.0, a.deriv, -1.0, b.deriv)};
}
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.value * b.value, dual_detail::lincomb(b.value, a.deriv, a.value, b.deriv)};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  if (b.value == 0.0) throw EvalFault("division by zero");
  const double q = a.value / b.value;
  // (a/b)' = (a' - q b') / b
  return {q, dual_detail::lincomb(1.0 / b.value, a.deriv, -q / b.value, b.deriv)};
}

inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }
inline Dual& operator/=(Dual& a, const Dual& b) { return a = a / b; }

inline bool operator<(const Dual& a, const Dual& b) { return a.value < b.value; }
inline bool operator>(const Dual& a, const Dual& b) { return a.value > b.value; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.value <= b.value; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.value >= b.value; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value; }

// Unary elementary functions: value f(u), derivative f'(u) u'.
inline Dual chain(const Dual& u, double f, double fprime) {
  return {f, dual_detail::scaled(fprime, u.deriv)};
}

inline Dual sqrt(const Dual& u) {
  if (u.value < 0.0) throw EvalFault("sqrt of a negative number");
  const double s = std::sqrt(u.value);
  if (s == 0.0) {
    for (double d : u.deriv) {
      if (d != 0.0) throw EvalFault("sqrt is not differentiable at zero");
    }
    return {s, std::vector<double>(u.deriv.size(), 0.0)};
  }
  return chain(u, s, 0.5 / s);
}
inline Dual exp(const Dual& u) {
  const double e = std::exp(u.value);
  return chain(u, e, e);
}
inline Dual log(const Dual& u) {
  if (u.value <= 0.0) throw EvalFault("log of a nonpositive number");
  return chain(u, std::log(u.value), 1.0 / u.value);
}
inline Dual sin(const Dual& u) { return chain(u, std::sin(u.value), std::cos(u.value)); }
inline Dual cos(const Dual& u) { return chain(u, std::cos(u.value), -std::sin(u.value)); }
inline Dual tan(const Dual& u) {
  const double t = std::tan(u.value);
  return chain(u, t, 1.0 + t * t);
}
/// d|u| = sign(u) du with sign(0) = 0.
inline Dual abs(const Dual& u) {
  const double sgn = u.value > 0.0 ? 1.0 : (u.value < 0.0 ? -1.0 : 0.0);
  return chain(u, std::fabs(u.value), sgn);
}

/// Integer power by repeated squaring. Used for both scalar types so values
/// agree bit-for-bit and polynomial derivatives stay exact.
template <typename T>
T ipow(const T& base, long exponent) {
  if (exponent == 0) return T(1.0);
  const bool invert = exponent < 0;
  unsigned long e = invert ? static_cast<unsigned long>(-exponent) : static_cast<unsigned long>(exponent);
  T result(1.0);
  T b = base;
  bool first = true;
  while (e > 0) {
    if (e & 1UL) {
      if (first) {
        result = b;
        first = false;
      } else {
        result = result * b;
      }
    }
    e >>= 1;
    if (e > 0) b = b * b;
  }
  if (invert) {
    if (value_of(result) == 0.0) throw EvalFault("division by zero in negative power");
    return T(1.0) / result;
  }
  return result;
}

/// Real power in exp/log form; the base must be positive.
template <typename T>
T rpow(const T& base, double exponent) {
  using std::exp;
  using std::log;
  if (value_of(base) <= 0.0) throw EvalFault("real power of a nonpositive base");
  return exp(T(exponent) * log(base));
}

}  // namespace jacopt
