#include "jacopt/function_set.hpp"

#include <cmath>
#include <string>

#include "jacopt/error.hpp"

namespace jacopt {

namespace {

template <typename T>
void eval_impl(const FunctionSet& funcs, const std::vector<Expr>& rows,
               const std::function<void(std::span<const T>, std::span<T>)>& kernel,
               std::span<const T> x, std::span<T> F, KinkObserver* kinks) {
  if (x.size() != funcs.n()) {
    throw DimensionError("point has " + std::to_string(x.size()) + " components, expected " +
                         std::to_string(funcs.n()));
  }
  if (F.size() != funcs.neF()) {
    throw DimensionError("output has " + std::to_string(F.size()) + " components, expected " +
                         std::to_string(funcs.neF()));
  }
  if (!rows.empty()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      try {
        F[i] = evaluate<T>(rows[i], x, kinks);
      } catch (const EvalFault& fault) {
        if (fault.row() != EvalFault::npos) throw;
        throw EvalFault(fault.what(), i);
      }
    }
    return;
  }
  kernel(x, F);
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (!std::isfinite(value_of(F[i]))) throw EvalFault("non-finite function value", i);
  }
}

}  // namespace

FunctionSet::FunctionSet(std::size_t n, std::vector<Expr> rows)
    : n_(n), neF_(rows.size()), rows_(std::move(rows)) {
  if (rows_.empty()) throw DimensionError("function set needs at least one row");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (arity(rows_[i]) > n_) {
      throw DimensionError("row " + std::to_string(i + 1) + " references a variable beyond n=" +
                           std::to_string(n_));
    }
  }
}

FunctionSet::FunctionSet(std::size_t n, std::size_t neF, RealKernel real, DualKernel dual)
    : n_(n), neF_(neF), real_(std::move(real)), dual_(std::move(dual)) {
  if (n_ == 0 || neF_ == 0) throw DimensionError("function set needs n >= 1 and neF >= 1");
}

void FunctionSet::eval(std::span<const double> x, std::span<double> F, KinkObserver* kinks) const {
  eval_impl<double>(*this, rows_, real_, x, F, kinks);
}

void FunctionSet::eval(std::span<const Dual> x, std::span<Dual> F, KinkObserver* kinks) const {
  eval_impl<Dual>(*this, rows_, dual_, x, F, kinks);
}

std::vector<double> eval_rows(const FunctionSet& funcs, std::span<const double> x) {
  std::vector<double> F(funcs.neF());
  funcs.eval(x, F);
  return F;
}

std::vector<Dual> eval_rows(const FunctionSet& funcs, std::span<const Dual> x) {
  std::vector<Dual> F(funcs.neF());
  funcs.eval(x, F);
  return F;
}

}  // namespace jacopt
