#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "jacopt/expr.hpp"
#include "jacopt/function_set.hpp"
#include "jacopt/problem.hpp"

namespace fixtures {

using jacopt::Expr;
using jacopt::FunctionSet;
using jacopt::ProblemSpec;

inline std::string data_path(const std::string& name) { return std::string(JACOPT_DATA_DIR) + "/" + name; }

// The four-variable problem:
//   minimize   3x1 + (x1+x2+x3)^2 + 5x4
//   subject to 4x2 + 2x3 >= 0, x1 + x2^2 + x3^2 = 2, x2^4 + x3^4 + x4 = 4,
//              x1 >= 0, x4 >= 0, starting from (1,1,1,1).
inline std::vector<Expr> toy_rows() {
  const Expr x1 = Expr::var(0), x2 = Expr::var(1), x3 = Expr::var(2), x4 = Expr::var(3);
  auto c = [](double v) { return Expr::constant(v); };
  return {
      c(3) * x1 + Expr::pow(x1 + x2 + x3, 2) + c(5) * x4,
      c(4) * x2 + c(2) * x3,
      x1 + Expr::pow(x2, 2) + Expr::pow(x3, 2),
      Expr::pow(x2, 4) + Expr::pow(x3, 4) + x4,
  };
}

inline FunctionSet toy_functions() { return FunctionSet(4, toy_rows()); }

/// The same functions as a host callback.
inline FunctionSet toy_callback() {
  return FunctionSet::from_callback(4, 4, [](auto x, auto F) {
    const auto s = x[0] + x[1] + x[2];
    F[0] = 3.0 * x[0] + s * s + 5.0 * x[3];
    F[1] = 4.0 * x[1] + 2.0 * x[2];
    F[2] = x[0] + x[1] * x[1] + x[2] * x[2];
    F[3] = x[1] * x[1] * x[1] * x[1] + x[2] * x[2] * x[2] * x[2] + x[3];
  });
}

inline ProblemSpec toy_spec(std::size_t obj_row = 1) {
  ProblemSpec spec = jacopt::default_spec(4, 4, "toyprob");
  const double inf = 1.0e20;
  spec.obj_row = obj_row;
  spec.x0 = {1, 1, 1, 1};
  spec.xlow = {0, -inf, -inf, 0};
  spec.xupp = {inf, inf, inf, inf};
  spec.Flow = {-inf, 0, 2, 4};
  spec.Fupp = {inf, inf, 2, 4};
  spec.var_names = {"x1", "x2", "x3", "x4"};
  return spec;
}

// ---------------------------------------------------------------------------
// Local-pattern trap: g(t) = t + A (rho^2 - (t-c)^2)^2 / rho^3 inside the
// bump |t - c| < rho, g(t) = t outside. The structure probes land outside
// the bump, where dg/dt = 1, while x0 sits inside it.

struct Trap {
  static constexpr double A = 0.5;
  static constexpr double rho = 0.03;
  static constexpr double c = 1.015;
  static constexpr double target_t = 1.02;  // root of g(t) = g(1.02)

  template <typename T>
  static T g(const T& t) {
    const T s = t - c;
    const double sv = jacopt::value_of(s);
    if (std::fabs(sv) >= rho) return t;
    const T w = rho * rho - s * s;
    return t + A * w * w / (rho * rho * rho);
  }

  static double dg(double t) {
    const double s = t - c;
    if (std::fabs(s) >= rho) return 1.0;
    return 1.0 - 4.0 * A * s * (rho * rho - s * s) / (rho * rho * rho);
  }
};

/// minimize (x1 - 2)^2 + x2 subject to g(x2) = g(1.02), from x0 = (0, 1).
inline FunctionSet trap_functions() {
  return FunctionSet::from_callback(2, 2, [](auto x, auto F) {
    F[0] = (x[0] - 2.0) * (x[0] - 2.0) + x[1];
    F[1] = Trap::g(x[1]);
  });
}

inline ProblemSpec trap_spec() {
  ProblemSpec spec = jacopt::default_spec(2, 2, "trap");
  spec.x0 = {0.0, 1.0};
  const double target = Trap::g(Trap::target_t);
  spec.Flow = {-1e20, target};
  spec.Fupp = {1e20, target};
  return spec;
}

// ---------------------------------------------------------------------------
// Random corpus of smooth polynomial/transcendental function sets. Every
// expression is defined on all of R^n, so any point is a valid evaluation
// point. Rows are linear with probability 0.3.

struct CorpusProblem {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<Expr> rows;
  FunctionSet funcs;
  std::vector<bool> linear;  // by construction
};

class CorpusGenerator {
 public:
  explicit CorpusGenerator(std::uint64_t seed) : rng_(seed) {}

  CorpusProblem next() {
    CorpusProblem p;
    p.seed = rng_();
    p.n = uniform_size(1, 8);
    const std::size_t neF = uniform_size(1, 8);
    for (std::size_t i = 0; i < neF; ++i) {
      const bool lin = coin(0.3);
      p.rows.push_back(lin ? linear_row(p.n) : nonlinear_row(p.n));
      p.linear.push_back(lin);
    }
    p.funcs = FunctionSet(p.n, p.rows);
    return p;
  }

  std::vector<double> point(std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng_);
    return x;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t uniform_size(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  double coef() {
    const double v = std::uniform_real_distribution<double>(0.25, 3.0)(rng_);
    return coin(0.5) ? v : -v;
  }
  Expr var(std::size_t n) { return Expr::var(uniform_size(0, n - 1)); }

  Expr linear_row(std::size_t n) {
    Expr row = Expr::constant(coef());
    const std::size_t terms = uniform_size(1, std::min<std::size_t>(n, 4));
    for (std::size_t t = 0; t < terms; ++t) row = row + Expr::constant(coef()) * var(n);
    return row;
  }

  Expr argument(std::size_t n) {
    Expr a = Expr::constant(coef()) * var(n);
    if (n > 1 && coin(0.5)) a = a + Expr::constant(coef()) * var(n);
    return a;
  }

  Expr nonlinear_term(std::size_t n) {
    using jacopt::Op;
    const Expr v = var(n);
    switch (uniform_size(0, 11)) {
      case 0: return Expr::pow(v, static_cast<long>(uniform_size(2, 4)));
      case 1: return v * var(n);
      case 2: return Expr::unary(Op::Sin, argument(n));
      case 3: return Expr::unary(Op::Cos, argument(n));
      case 4: return Expr::unary(Op::Exp, Expr::constant(0.3) * argument(n));
      case 5: return Expr::unary(Op::Log, Expr::constant(1.0) + Expr::pow(argument(n), 2));
      case 6: return Expr::unary(Op::Sqrt, Expr::constant(1.0) + Expr::pow(v, 2));
      case 7: return Expr::constant(1.0) / (Expr::constant(2.0) + Expr::pow(v, 2));
      case 8: return Expr::pow_real(Expr::constant(1.0) + Expr::pow(v, 2), 1.5);
      case 9: return Expr::unary(Op::Tan, Expr::constant(0.2) * v);
      case 10: return -Expr::pow(v, 3) * var(n);
      default: return Expr::unary(Op::Sin, v) * Expr::unary(Op::Exp, Expr::constant(0.2) * var(n));
    }
  }

  Expr nonlinear_row(std::size_t n) {
    Expr row = Expr::constant(coef()) * nonlinear_term(n);
    const std::size_t terms = uniform_size(0, 3);
    for (std::size_t t = 0; t < terms; ++t) {
      if (coin(0.4)) {
        row = row + Expr::constant(coef()) * var(n);
      } else {
        row = row + Expr::constant(coef()) * nonlinear_term(n);
      }
    }
    return row;
  }

  std::mt19937_64 rng_;
};

}  // namespace fixtures
