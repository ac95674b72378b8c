#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "jacopt/dual.hpp"
#include "jacopt/expr.hpp"

namespace jacopt {

/// The vector of problem functions F: R^n -> R^neF.
///
/// Either an expression forest (the file-driven path) or a host callback
/// that is generic over the scalar type, e.g.
///
///     auto f = FunctionSet::from_callback(2, 1, [](auto x, auto F) {
///       F[0] = x[0] * x[1];
///     });
///
/// where `x` is a span of const T and `F` a span of T for T in {double, Dual}.
class FunctionSet {
 public:
  using RealKernel = std::function<void(std::span<const double>, std::span<double>)>;
  using DualKernel = std::function<void(std::span<const Dual>, std::span<Dual>)>;

  FunctionSet() = default;

  /// Throws DimensionError if a row references a variable index >= n.
  FunctionSet(std::size_t n, std::vector<Expr> rows);

  FunctionSet(std::size_t n, std::size_t neF, RealKernel real, DualKernel dual);

  template <typename Fn>
  static FunctionSet from_callback(std::size_t n, std::size_t neF, Fn fn) {
    return FunctionSet(
        n, neF, [fn](std::span<const double> x, std::span<double> F) { fn(x, F); },
        [fn](std::span<const Dual> x, std::span<Dual> F) { fn(x, F); });
  }

  std::size_t n() const { return n_; }
  std::size_t neF() const { return neF_; }
  bool has_expressions() const { return !rows_.empty(); }
  const std::vector<Expr>& rows() const { return rows_; }

  /// Rows are evaluated independently; a failing row raises EvalFault
  /// carrying its index. `kinks`, when given, is told about Abs arguments
  /// near zero (expression rows only).
  void eval(std::span<const double> x, std::span<double> F, KinkObserver* kinks = nullptr) const;
  void eval(std::span<const Dual> x, std::span<Dual> F, KinkObserver* kinks = nullptr) const;

 private:
  std::size_t n_ = 0;
  std::size_t neF_ = 0;
  std::vector<Expr> rows_;
  RealKernel real_;
  DualKernel dual_;
};

std::vector<double> eval_rows(const FunctionSet& funcs, std::span<const double> x);
std::vector<Dual> eval_rows(const FunctionSet& funcs, std::span<const Dual> x);

}  // namespace jacopt
