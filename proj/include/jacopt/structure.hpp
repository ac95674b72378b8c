#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jacopt/function_set.hpp"
#include "jacopt/problem.hpp"

namespace jacopt {

enum class EntryKind { Zero, Constant, Nonlinear };

const char* to_string(EntryKind kind);

struct EntryClass {
  EntryKind kind = EntryKind::Zero;
  double value = 0.0;  // meaningful for Constant only

  static EntryClass zero() { return {EntryKind::Zero, 0.0}; }
  static EntryClass constant(double v) { return {EntryKind::Constant, v}; }
  static EntryClass nonlinear() { return {EntryKind::Nonlinear, 0.0}; }
};

/// Classification of every Jacobian entry, with the derived row and column
/// sets kept in sync by refresh().
class StructurePattern {
 public:
  StructurePattern() = default;
  StructurePattern(std::size_t neF, std::size_t n, double tau);
  /// `grid` is row-major, neF*n entries.
  StructurePattern(std::size_t neF, std::size_t n, double tau, std::vector<EntryClass> grid);

  std::size_t neF() const { return neF_; }
  std::size_t n() const { return n_; }
  /// Classification tolerance used to build the pattern.
  double tau() const { return tau_; }

  const EntryClass& at(std::size_t i, std::size_t j) const { return grid_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, EntryClass c);

  /// Rows with no Nonlinear entry, ascending.
  const std::vector<std::size_t>& linear_rows() const { return linear_rows_; }
  /// Columns with at least one Nonlinear entry, ascending.
  const std::vector<std::size_t>& nonlinear_vars() const { return nonlinear_vars_; }

  std::size_t nnz() const { return nnz_; }
  std::size_t count(EntryKind kind) const;

  std::array<std::vector<double>, 2> probe_points;

 private:
  void refresh();

  std::size_t neF_ = 0;
  std::size_t n_ = 0;
  double tau_ = 0.0;
  std::vector<EntryClass> grid_;
  std::vector<std::size_t> linear_rows_;
  std::vector<std::size_t> nonlinear_vars_;
  std::size_t nnz_ = 0;
};

/// Probe point k (1 or 2) around x0. Both points come from one stream
/// seeded by (opts.rngSeed, round) so that they are reproducible and differ
/// in every component by at least a tenth of the perturbation radius.
std::vector<double> perturb(std::span<const double> x0, int k, const Options& opts, int round = 0);

/// Two-point classification from Jacobians J1, J2 evaluated at the probes.
StructurePattern classify_entries(const Eigen::MatrixXd& J1, const Eigen::MatrixXd& J2);

/// Classifies J(x) by comparing full Jacobians at two random perturbations
/// of x0. A probe point whose evaluation faults triggers one fresh pair of
/// draws; a second fault raises ProbeError.
StructurePattern probe_structure(const FunctionSet& funcs, std::span<const double> x0,
                                 const Options& opts);

struct BlockPartition {
  std::vector<std::size_t> nonlinear_rows;
  std::vector<std::size_t> linear_rows;
  std::vector<std::size_t> nonlinear_vars;
  std::vector<std::size_t> linear_vars;
};

/// Row/column split such that every entry outside
/// nonlinear_rows x nonlinear_vars is constant. No permutation is applied.
BlockPartition block_partition(const StructurePattern& pattern);

/// One line `i j CLASS [value]` per non-Zero entry, 1-based, row-major.
std::string dump_structure(const StructurePattern& pattern);

}  // namespace jacopt
