#include "jacopt/ad.hpp"

#include <string>

#include "jacopt/error.hpp"

namespace jacopt {

SeedMatrix SeedMatrix::identity(std::size_t n) {
  std::vector<std::size_t> cols(n);
  for (std::size_t j = 0; j < n; ++j) cols[j] = j;
  return unit_columns(n, std::move(cols));
}

SeedMatrix SeedMatrix::unit_columns(std::size_t n, std::vector<std::size_t> cols) {
  if (cols.size() > n) throw DimensionError("seed matrix has more columns than rows");
  for (std::size_t c : cols) {
    if (c >= n) throw DimensionError("unit seed column index out of range");
  }
  SeedMatrix S;
  S.n_ = n;
  S.p_ = cols.size();
  S.unit_ = true;
  S.cols_ = std::move(cols);
  return S;
}

SeedMatrix SeedMatrix::dense(std::size_t n, std::size_t p, std::vector<double> colmajor) {
  if (p > n) throw DimensionError("seed matrix has more columns than rows");
  if (colmajor.size() != n * p) throw DimensionError("seed matrix storage has the wrong size");
  SeedMatrix S;
  S.n_ = n;
  S.p_ = p;
  S.unit_ = false;
  S.dense_ = std::move(colmajor);
  return S;
}

double SeedMatrix::at(std::size_t row, std::size_t col) const {
  if (unit_) return cols_[col] == row ? 1.0 : 0.0;
  return dense_[col * n_ + row];
}

std::vector<double> SeedMatrix::seed_of(std::size_t j) const {
  std::vector<double> s(p_, 0.0);
  if (unit_) {
    for (std::size_t k = 0; k < p_; ++k) {
      if (cols_[k] == j) s[k] = 1.0;
    }
  } else {
    for (std::size_t k = 0; k < p_; ++k) s[k] = dense_[k * n_ + j];
  }
  return s;
}

JacobianProduct jacobian_times_seed(const FunctionSet& funcs, std::span<const double> x,
                                    const SeedMatrix& S, SweepCounter* counter, double kink_tol) {
  if (x.size() != funcs.n() || S.n() != funcs.n()) {
    throw DimensionError("jacobian_times_seed: dimension mismatch (x " + std::to_string(x.size()) +
                         ", S rows " + std::to_string(S.n()) + ", n " +
                         std::to_string(funcs.n()) + ")");
  }
  const std::size_t p = S.p();
  JacobianProduct out;
  out.JS = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(funcs.neF()), static_cast<Eigen::Index>(p));
  KinkObserver kinks{kink_tol, false};

  if (p == 0) {
    out.F.resize(funcs.neF());
    funcs.eval(x, out.F, &kinks);
    out.near_kink = kinks.hit;
    return out;
  }

  std::vector<Dual> xd(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) xd[j] = Dual(x[j], S.seed_of(j));
  std::vector<Dual> Fd(funcs.neF());
  funcs.eval(std::span<const Dual>(xd), std::span<Dual>(Fd), &kinks);

  out.F.resize(Fd.size());
  for (std::size_t i = 0; i < Fd.size(); ++i) {
    out.F[i] = Fd[i].value;
    // An empty derivative vector means the row did not depend on x.
    for (std::size_t k = 0; k < Fd[i].deriv.size(); ++k) {
      out.JS(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = Fd[i].deriv[k];
    }
  }
  out.near_kink = kinks.hit;
  if (counter) {
    ++counter->sweeps;
    counter->last_width = p;
    counter->total_components += p;
  }
  return out;
}

JacobianProduct full_jacobian(const FunctionSet& funcs, std::span<const double> x,
                              SweepCounter* counter, double kink_tol) {
  return jacobian_times_seed(funcs, x, SeedMatrix::identity(funcs.n()), counter, kink_tol);
}

}  // namespace jacopt
