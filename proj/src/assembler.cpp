#include "jacopt/assembler.hpp"

#include "jacopt/error.hpp"

namespace jacopt {

Eigen::MatrixXd SparseJacobian::to_dense() const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(neF), static_cast<Eigen::Index>(n));
  for (const auto& t : entries) {
    J(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  }
  return J;
}

SeedMatrix build_seed(const StructurePattern& pattern) {
  return SeedMatrix::unit_columns(pattern.n(), pattern.nonlinear_vars());
}

ConstantCache init_cache(const StructurePattern& pattern) {
  ConstantCache cache;
  for (std::size_t i = 0; i < pattern.neF(); ++i) {
    for (std::size_t j = 0; j < pattern.n(); ++j) {
      const EntryClass& c = pattern.at(i, j);
      if (c.kind == EntryKind::Constant) cache.entries.push_back({i, j, c.value});
    }
  }
  return cache;
}

Assembly assemble(const FunctionSet& funcs, std::span<const double> x,
                  const StructurePattern& pattern, const ConstantCache& cache,
                  const SeedMatrix& seed, SweepCounter* counter, double kink_tol) {
  if (pattern.n() != funcs.n() || pattern.neF() != funcs.neF()) {
    throw DimensionError("assemble: pattern does not match the function set");
  }
  if (!seed.is_unit() || seed.columns() != pattern.nonlinear_vars()) {
    throw CheckError("assemble: seed matrix was not built from this pattern");
  }
  // seed column of each nonlinear variable
  std::vector<std::size_t> column_of(pattern.n(), 0);
  for (std::size_t k = 0; k < seed.p(); ++k) column_of[seed.columns()[k]] = k;

  JacobianProduct prod = jacobian_times_seed(funcs, x, seed, counter, kink_tol);

  Assembly out;
  out.F = std::move(prod.F);
  out.near_kink = prod.near_kink;
  out.J.neF = pattern.neF();
  out.J.n = pattern.n();
  out.J.entries.reserve(pattern.nnz());
  std::size_t next_constant = 0;
  for (std::size_t i = 0; i < pattern.neF(); ++i) {
    for (std::size_t j = 0; j < pattern.n(); ++j) {
      switch (pattern.at(i, j).kind) {
        case EntryKind::Zero:
          break;
        case EntryKind::Constant: {
          if (next_constant >= cache.entries.size() || cache.entries[next_constant].row != i ||
              cache.entries[next_constant].col != j) {
            throw CheckError("assemble: constant cache does not cover the pattern");
          }
          out.J.entries.push_back(cache.entries[next_constant++]);
          break;
        }
        case EntryKind::Nonlinear:
          out.J.entries.push_back(
              {i, j, prod.JS(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(column_of[j]))});
          break;
      }
    }
  }
  if (next_constant != cache.entries.size()) {
    throw CheckError("assemble: constant cache has entries outside the pattern");
  }
  return out;
}

JacobianAssembler::JacobianAssembler(const FunctionSet& funcs, StructurePattern pattern)
    : funcs_(&funcs),
      pattern_(std::move(pattern)),
      seed_(build_seed(pattern_)),
      cache_(init_cache(pattern_)) {}

}  // namespace jacopt
