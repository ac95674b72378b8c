#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "jacopt/ad.hpp"
#include "jacopt/error.hpp"
#include "jacopt/io.hpp"
#include "jacopt/pipeline.hpp"
#include "jacopt/structure.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace jacopt;

namespace {

std::vector<double> as_point(const ParsedProblem& p, const std::optional<std::vector<double>>& x) {
  std::vector<double> v = x ? *x : p.spec.x0;
  if (v.size() != p.spec.n) throw DimensionError("expected " + std::to_string(p.spec.n) + " values");
  return v;
}

py::dict structure_dict(const StructurePattern& pat) {
  py::list entries;
  for (std::size_t i = 0; i < pat.neF(); ++i) {
    for (std::size_t j = 0; j < pat.n(); ++j) {
      const EntryClass& e = pat.at(i, j);
      if (e.kind == EntryKind::Zero) continue;
      entries.append(py::make_tuple(i, j, to_string(e.kind), e.value));
    }
  }
  return py::dict("entries"_a = entries, "linear_rows"_a = pat.linear_rows(),
                  "nonlinear_vars"_a = pat.nonlinear_vars(), "nnz"_a = pat.nnz(),
                  "constant"_a = pat.count(EntryKind::Constant), "nonlinear"_a = pat.count(EntryKind::Nonlinear),
                  "zero"_a = pat.count(EntryKind::Zero));
}

py::dict solution_dict(const PipelineResult& run) {
  py::dict out("passed_check"_a = run.check.passed, "check_failures"_a = run.check.failures,
               "warnings"_a = run.warnings, "structure"_a = structure_dict(run.pattern));
  if (!run.solution) return out;
  const Solution& s = *run.solution;
  py::list trace;
  for (const auto& r : s.trace) {
    trace.append(py::dict("iter"_a = r.iter, "merit"_a = r.merit, "merit_before"_a = r.merit_before,
                          "penalty"_a = r.penalty, "feasibility"_a = r.feasibility,
                          "optimality"_a = r.optimality, "step"_a = r.step, "elastic"_a = r.elastic,
                          "x"_a = r.x));
  }
  out["exit"] = to_string(s.exit);
  out["exit_code"] = exit_code(s.exit);
  out["message"] = s.message;
  out["x"] = s.x;
  out["F"] = s.F;
  out["Fmul"] = s.Fmul;
  out["objective"] = s.objective;
  out["violation"] = s.violation;
  out["kkt"] = s.kkt;
  out["majors"] = s.majors;
  out["evals"] = s.evals;
  out["trace"] = trace;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonlinear programs with probed Jacobian structure";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<BoundError>(m, "BoundError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<Options>(m, "Options")
      .def(py::init<>())
      .def_readwrite("inf_bound", &Options::infBnd)
      .def_readwrite("feas_tol", &Options::feasTol)
      .def_readwrite("opt_tol", &Options::optTol)
      .def_readwrite("major_iter_limit", &Options::majorIterLimit)
      .def_readwrite("fd_step", &Options::fdStep)
      .def_readwrite("check_tol", &Options::checkTol)
      .def_readwrite("probe_scale", &Options::probeScale)
      .def_readwrite("seed", &Options::rngSeed)
      .def_readwrite("retry_budget", &Options::retryBudget);

  m.def(
      "parse_specs",
      [](const std::string& text, const Options& base) { return parse_specs_file(text, base).options; },
      "text"_a, "base"_a = Options{});

  py::class_<ParsedProblem>(m, "Problem")
      .def_static(
          "from_text", [](const std::string& text, const Options& opts) { return parse_problem_file(text, opts); },
          "text"_a, "options"_a = Options{})
      .def_static(
          "from_file",
          [](const std::string& path, const Options& opts) { return parse_problem_file(read_text_file(path), opts); },
          "path"_a, "options"_a = Options{})
      .def_property_readonly("name", [](const ParsedProblem& p) { return p.spec.name; })
      .def_property_readonly("n", [](const ParsedProblem& p) { return p.spec.n; })
      .def_property_readonly("neF", [](const ParsedProblem& p) { return p.spec.neF; })
      .def_property_readonly("variables", [](const ParsedProblem& p) { return p.spec.var_names; })
      .def_property(
          "obj_row", [](const ParsedProblem& p) { return p.spec.obj_row; },
          [](ParsedProblem& p, std::size_t r) { p.spec.obj_row = r; })
      .def_property(
          "x0", [](const ParsedProblem& p) { return p.spec.x0; },
          [](ParsedProblem& p, const std::vector<double>& x) { p.spec.x0 = as_point(p, x); })
      .def_property_readonly("xlow", [](const ParsedProblem& p) { return p.spec.xlow; })
      .def_property_readonly("xupp", [](const ParsedProblem& p) { return p.spec.xupp; })
      .def_property_readonly("Flow", [](const ParsedProblem& p) { return p.spec.Flow; })
      .def_property_readonly("Fupp", [](const ParsedProblem& p) { return p.spec.Fupp; })
      .def("to_text", [](const ParsedProblem& p) { return render_problem_file(p.spec, p.funcs); })
      .def(
          "evaluate",
          [](const ParsedProblem& p, std::optional<std::vector<double>> x) {
            return eval_rows(p.funcs, as_point(p, x));
          },
          "x"_a = py::none())
      .def(
          "jacobian",
          [](const ParsedProblem& p, std::optional<std::vector<double>> x) -> Eigen::MatrixXd {
            return full_jacobian(p.funcs, as_point(p, x)).JS;
          },
          "x"_a = py::none())
      .def(
          "probe_structure",
          [](const ParsedProblem& p, const Options& opts) {
            return structure_dict(probe_structure(p.funcs, p.spec.x0, opts));
          },
          "options"_a = Options{})
      .def(
          "check",
          [](const ParsedProblem& p, const Options& opts) {
            return solution_dict(run_pipeline(p.spec, p.funcs, opts, {}, true));
          },
          "options"_a = Options{})
      .def(
          "solve",
          [](const ParsedProblem& p, const Options& opts, std::function<int(int, std::vector<double>)> monitor) {
            SolveHooks hooks;
            if (monitor) {
              hooks.monitor = [&monitor](int status, std::span<const double> x) {
                return monitor(status, std::vector<double>(x.begin(), x.end()));
              };
            }
            return solution_dict(run_pipeline(p.spec, p.funcs, opts, hooks));
          },
          "options"_a = Options{}, "monitor"_a = nullptr)
      .def(
          "print_file",
          [](const ParsedProblem& p, const Options& opts) {
            std::ostringstream os;
            write_print_file(os, run_pipeline(p.spec, p.funcs, opts));
            return os.str();
          },
          "options"_a = Options{});
}
