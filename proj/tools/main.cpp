#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "rnamf/error.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

int exit_code(const rnamf::Error& e) {
  const std::string k = e.kind();
  if (k == "argument") return kUsage;
  if (k == "parse" || k == "dataset" || k == "stale_model" || k == "shape" || k == "invalid_parameter" ||
      k == "domain" || k == "unsupported_level")
    return kValidation;
  return kRuntime;
}

int report(const std::string& kind, const std::string& message, int code) {
  const nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rnamf::cli;
  CLI::App app{"Recursive non-additive multi-fidelity emulation and active learning", "rnamf"};
  app.require_subcommand(1);

  DesignArgs design;
  auto* c_design = app.add_subcommand("design", "Nested space-filling design, optionally evaluated on a builtin problem");
  c_design->add_option("--problem", design.problem, "Builtin problem (perdikaris, park, branin, borehole, currin, franke)");
  c_design->add_option("--dim", design.dim, "Input dimension when no problem is given");
  c_design->add_option("--sizes", design.sizes, "Points per level, lowest fidelity first")->delimiter(',');
  c_design->add_option("--costs", design.costs, "Per-level costs for the dataset file")->delimiter(',');
  c_design->add_option("--seed", design.seed, "Design seed");
  c_design->add_option("-o,--output", design.output, "Output file (stdout when omitted)");

  std::string validate_path;
  auto* c_validate = app.add_subcommand("validate", "Load and check a dataset file");
  c_validate->add_option("dataset", validate_path, "Dataset JSON")->required();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit an emulator to a dataset");
  c_fit->add_option("dataset", fit.dataset, "Dataset JSON")->required();
  c_fit->add_option("-c,--config", fit.config, "Run configuration JSON");
  c_fit->add_option("--kernel", fit.kernel, "sqexp, matern15 or matern25");
  c_fit->add_option("--seed", fit.seed, "Optimizer seed");
  c_fit->add_option("-o,--output", fit.output, "Emulator file");
  c_fit->add_option("--report", fit.report, "Fit report (stdout when omitted)");

  PredictArgs predict;
  auto* c_predict = app.add_subcommand("predict", "Posterior mean, variance and per-level contributions");
  c_predict->add_option("emulator", predict.emulator, "Emulator file")->required();
  c_predict->add_option("--dataset", predict.dataset, "Dataset JSON (default: the path recorded at fit time)");
  c_predict->add_option("--points", predict.points, "Points as CSV or JSON array of arrays");
  c_predict->add_option("--grid", predict.grid, "Regular grid with n points per coordinate over the dataset bounds");
  c_predict->add_option("--mc-samples", predict.mc_samples, "Monte Carlo samples for three-level contributions");
  c_predict->add_option("-o,--output", predict.output, "CSV file (stdout when omitted)");

  AlArgs al;
  auto* c_al = app.add_subcommand("al", "Budgeted active learning run");
  c_al->add_option("dataset", al.dataset, "Initial dataset JSON")->required();
  c_al->add_option("-c,--config", al.config, "Run configuration JSON");
  c_al->add_option("--builtin", al.builtin, "Use a builtin problem as the simulator");
  c_al->add_option("--adapter", al.adapters, "Simulator command (once for all levels, or once per level)");
  c_al->add_option("--strategy", al.strategy, "ALD, ALM, ALC or ALMC");
  c_al->add_option("--budget", al.budget, "Total cost budget");
  c_al->add_option("--seed", al.seed, "Run seed");
  c_al->add_option("-o,--output", al.output, "Updated dataset file");
  c_al->add_option("--trace", al.trace, "Trace CSV");
  c_al->add_option("--cache", al.cache, "Adapter evaluation cache");
  c_al->add_option("--test-points", al.test_points, "Test points for builtin RMSE/CRPS columns (0 disables)");

  BenchmarkArgs bench;
  auto* c_bench = app.add_subcommand("benchmark", "Repeated emulation or active learning experiment");
  c_bench->add_option("-c,--config", bench.config, "Run configuration JSON");
  c_bench->add_option("--problem", bench.problem, "Builtin problem");
  c_bench->add_option("--reps", bench.reps, "Repetitions");
  c_bench->add_option("--jobs", bench.jobs, "Worker threads");
  c_bench->add_option("--results", bench.results, "Per-repetition CSV");
  c_bench->add_option("--summary", bench.summary, "Summary JSON");
  c_bench->add_option("--curves", bench.curves, "Metric-vs-cost CSV (al mode)");
  c_bench->add_option("--svg", bench.svg, "Metric-vs-cost chart (al mode)");
  c_bench->add_flag("-q,--quiet", bench.quiet, "No progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kUsage);
  }

  try {
    if (*c_design) return cmd_design(design);
    if (*c_validate) return cmd_validate(validate_path);
    if (*c_fit) return cmd_fit(fit);
    if (*c_predict) return cmd_predict(predict);
    if (*c_al) return cmd_al(al);
    if (*c_bench) return cmd_benchmark(bench);
  } catch (const rnamf::Error& e) {
    return report(e.kind(), e.what(), exit_code(e));
  } catch (const std::exception& e) {
    return report("runtime", e.what(), kRuntime);
  }
  return kUsage;
}
