#include <doctest.h>

#include "jacopt/assembler.hpp"
#include "jacopt/error.hpp"
#include "support/fixtures.hpp"

using namespace jacopt;

namespace {

StructurePattern toy_pattern() {
  return probe_structure(fixtures::toy_functions(), std::vector<double>{1, 1, 1, 1}, Options{});
}

}  // namespace

TEST_CASE("seed and cache for the fixture") {
  const StructurePattern p = toy_pattern();
  const SeedMatrix S = build_seed(p);
  CHECK(S.n() == 4);
  CHECK(S.p() == 3);
  CHECK(S.columns() == std::vector<std::size_t>{0, 1, 2});
  const ConstantCache c = init_cache(p);
  const std::vector<Triplet> expect{{0, 3, 5.0}, {1, 1, 4.0}, {1, 2, 2.0}, {2, 0, 1.0}, {3, 3, 1.0}};
  CHECK(c.entries == expect);
}

TEST_CASE("assembled Jacobian equals the full one") {
  const FunctionSet f = fixtures::toy_functions();
  const JacobianAssembler jac(f, toy_pattern());
  const std::vector<double> x{0.3, -0.7, 1.9, 2.0};
  SweepCounter counter;
  const Assembly a = jac(x, &counter);
  CHECK(counter.sweeps == 1);
  CHECK(counter.last_width == 3);
  CHECK(a.J.nnz() == 12);
  const auto full = full_jacobian(f, x);
  CHECK(a.J.to_dense() == full.JS);
  CHECK(a.F == full.F);
  for (std::size_t k = 1; k < a.J.entries.size(); ++k) {
    const auto& p = a.J.entries[k - 1];
    const auto& q = a.J.entries[k];
    CHECK((p.row < q.row || (p.row == q.row && p.col < q.col)));
  }
}

TEST_CASE("a pattern without nonlinear entries needs no sweep") {
  SymbolTable s{{"x", 0}, {"y", 1}};
  FunctionSet f(2, {parse_function("2*x - y", s), parse_function("x + 1", s)});
  const JacobianAssembler jac(f, probe_structure(f, std::vector<double>{0, 0}, Options{}));
  SweepCounter counter;
  const Assembly a = jac(std::vector<double>{3, 4}, &counter);
  CHECK(counter.sweeps == 0);
  CHECK(a.F == std::vector<double>{2, 4});
  CHECK(a.J.nnz() == 3);
}

TEST_CASE("assemble rejects inconsistent inputs") {
  const FunctionSet f = fixtures::toy_functions();
  const StructurePattern p = toy_pattern();
  const std::vector<double> x{1, 1, 1, 1};
  const ConstantCache cache = init_cache(p);
  CHECK_THROWS_AS(assemble(f, x, p, cache, SeedMatrix::unit_columns(4, {0, 1}), nullptr), CheckError);
  ConstantCache short_cache = cache;
  short_cache.entries.pop_back();
  CHECK_THROWS_AS(assemble(f, x, p, short_cache, build_seed(p), nullptr), CheckError);
}
