#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "jacopt/error.hpp"
#include "jacopt/io.hpp"
#include "jacopt/pipeline.hpp"

namespace jacopt {

namespace {

/// Discards everything written to it.
class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solve a smooth nonlinear program with probed Jacobian structure", "jacopt"};
  std::string problem_path;
  std::string specs_path;
  std::string print_path;
  std::string summary = "-";
  bool print_structure = false;
  bool check_only = false;
  std::optional<std::uint64_t> seed;

  app.add_option("problem", problem_path, "Problem file")->required();
  app.add_option("--specs", specs_path, "Options (specs) file");
  app.add_option("--print", print_path, "Write the print file to PATH");
  app.add_option("--summary", summary, "Summary stream: - (terminal), PATH or off");
  app.add_flag("--print-structure", print_structure, "Write the classified Jacobian entries to stdout");
  app.add_option("--seed", seed, "Random seed for the structure probes");
  app.add_flag("--check-only", check_only, "Stop after the derivative check");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  Options opts;
  std::unique_ptr<std::ostream> summary_file;
  std::ofstream print_file;
  NullBuffer null_buffer;
  std::ostream null_stream(&null_buffer);
  std::ostream* summary_stream = &out;

  std::optional<ParsedProblem> parsed;
  std::vector<std::string> spec_warnings;
  std::string current = specs_path;
  try {
    if (!specs_path.empty()) {
      SpecsResult specs = parse_specs_file(read_text_file(specs_path), opts);
      opts = specs.options;
      spec_warnings = std::move(specs.warnings);
    }
    if (seed) opts.rngSeed = *seed;
    std::string why;
    if (!options_valid(opts, &why)) {
      err << "invalid options: " << why << "\n";
      return kExitUsage;
    }
    current = problem_path;
    parsed = parse_problem_file(read_text_file(problem_path), opts);

    if (summary == "off") {
      summary_stream = &null_stream;
    } else if (summary != "-") {
      summary_file = std::make_unique<std::ofstream>(summary);
      if (!*summary_file) throw IoError("Error while opening file " + summary);
      summary_stream = summary_file.get();
    }
    if (!print_path.empty()) {
      print_file.open(print_path);
      if (!print_file) throw IoError("Error while opening file " + print_path);
    }
  } catch (const IoError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << current << ": " << e.what() << "\n";
    return kExitUsage;
  }
  for (const auto& w : spec_warnings) err << specs_path << ": " << w << "\n";

  PipelineResult run;
  try {
    run = run_pipeline(parsed->spec, parsed->funcs, opts, {}, check_only);
  } catch (const ProbeError& e) {
    err << "structure probe failed: " << e.what() << "\n";
    return exit_code(ExitStatus::EvalError);
  } catch (const CheckError& e) {
    err << "derivative check failed: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  if (print_structure) out << dump_structure(run.pattern);
  write_summary(*summary_stream, run);
  if (print_file.is_open()) {
    write_print_file(print_file, run);
    print_file.flush();
    if (!print_file) {
      err << "Error while writing file " << print_path << "\n";
      return kExitUsage;
    }
  }

  if (!run.check.passed) return kExitCheckFailed;
  if (!run.solution) return 0;
  return exit_code(run.solution->exit);
}

}  // namespace jacopt
