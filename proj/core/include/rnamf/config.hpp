#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rnamf/active_learning.hpp"
#include "rnamf/gp.hpp"
#include "rnamf/io.hpp"
#include "rnamf/kernels.hpp"

namespace rnamf {

struct OutputPaths {
  std::string emulator;
  std::string report;
  std::string trace;
  std::string dataset;
  std::string cache;
  std::string results;
  std::string summary;
  std::string curves;
  std::string svg;
};

struct BenchmarkSection {
  std::string problem;
  std::vector<Eigen::Index> sizes;  // empty: problem defaults
  int reps = 20;
  std::string mode = "emulation";   // emulation | al
  int test_points = 1000;
  bool baseline = true;
  bool svg = true;
  int jobs = 1;
};

// Run configuration file. Every section is optional; unknown keys are rejected.
//   {"kernel": "sqexp", "seed": 0,
//    "fit": {"restarts", "max_iters", "grad_tol", "jitter"},
//    "strategy": "ALMC", "budget": 80, "costs": [1, 3],
//    "alc": {"integration_points", "imputations"}, "ald": {"mc_samples"},
//    "acquisition": {"n_starts", "max_iters", "grid_points", "grid_fallback", "perturb_scale"},
//    "adapter": {"timeout_s"},
//    "benchmark": {"problem", "sizes", "reps", "mode", "test_points", "baseline", "svg", "jobs"},
//    "outputs": {"emulator", "report", "trace", "dataset", "cache", "results", "summary", "curves", "svg"}}
struct RunConfig {
  KernelKind kernel = KernelKind::SqExp;
  std::uint64_t seed = 0;
  FitOptions fit;
  Strategy strategy = Strategy::ALMC;
  double budget = 0.0;
  std::optional<std::vector<double>> costs;
  AlcOptions alc;
  AldOptions ald;
  AcquisitionOptions acquisition;
  double adapter_timeout_s = 300.0;
  BenchmarkSection benchmark;
  OutputPaths outputs;
};

RunConfig parse_run_config(const io::Json& j);
RunConfig load_run_config(const std::string& path);
io::Json run_config_to_json(const RunConfig& config);

}  // namespace rnamf
