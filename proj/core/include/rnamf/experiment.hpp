#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/active_learning.hpp"
#include "rnamf/io.hpp"
#include "rnamf/problems.hpp"

namespace rnamf {

enum class ExperimentMode { Emulation, ActiveLearning };

ExperimentMode parse_experiment_mode(const std::string& s);
std::string to_string(ExperimentMode mode);

struct ExperimentConfig {
  std::string problem;
  KernelKind kind = KernelKind::SqExp;
  std::vector<Eigen::Index> sizes;  // empty: problem defaults
  int reps = 20;
  std::uint64_t seed = 0;
  ExperimentMode mode = ExperimentMode::Emulation;
  Strategy strategy = Strategy::ALMC;
  double budget = 0.0;
  std::vector<double> costs;  // empty: problem defaults
  int test_points = 1000;
  bool baseline = true;  // single-level GP on the top-level points only
  FitOptions fit;
  SelectOptions select;
  int jobs = 1;
};

// Seeds of repetition `rep`: design, test points, fit, loop.
struct RepSeeds {
  std::uint64_t design, test, fit, loop;
};
RepSeeds rep_seeds(std::uint64_t seed, int rep);

struct ExperimentRow {
  int rep = 0;
  std::string method;  // "rna", "hf_gp", "al_<strategy>"
  bool ok = true;
  std::string error;
  double rmse = 0.0;
  double crps = 0.0;
  double seconds = 0.0;
  // Active learning only.
  std::optional<double> initial_rmse;
  std::optional<double> accrued_cost;
  std::optional<int> steps;
};

struct CurvePoint {
  int rep = 0;
  int step = 0;
  int level = 0;  // 0 for the initial fit
  double cost = 0.0;
  double rmse = 0.0;
  double crps = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ExperimentRow> rows;     // ordered by rep, then method
  std::vector<CurvePoint> curves;      // ordered by rep, then step
};

// Throws ArgumentError for reps < 1 or an unknown problem. Failed repetitions
// are recorded as rows with ok = false.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::function<void(const ExperimentRow&)>& on_row = {});

struct Quantiles {
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};
// Linear interpolation between order statistics. Throws ArgumentError when empty.
Quantiles quantiles(std::vector<double> values);

std::string rows_csv(const ExperimentResult& result);
std::string curves_csv(const ExperimentResult& result);
io::Json summary_json(const ExperimentResult& result);

// Median polyline and min-max band of `metric` ("rmse" or "crps") against
// accrued cost, each repetition held constant between steps.
std::string curves_svg(const ExperimentResult& result, const std::string& metric);

// Uniform points in the box, one per row.
Eigen::MatrixXd uniform_points(const Box& box, Eigen::Index n, std::uint64_t seed);

}  // namespace rnamf
