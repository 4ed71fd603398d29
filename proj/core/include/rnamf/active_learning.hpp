#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/dataset.hpp"
#include "rnamf/emulator.hpp"

namespace rnamf {

enum class Strategy { ALD, ALM, ALC, ALMC };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

class CostModel {
 public:
  // Positive, strictly increasing per-level costs.
  explicit CostModel(std::vector<double> per_level);

  int levels() const { return static_cast<int>(per_level_.size()); }
  double cost(int level) const;
  double cumulative(int level) const;
  const std::vector<double>& per_level() const { return per_level_; }

 private:
  std::vector<double> per_level_;
  std::vector<double> cumulative_;
};

struct LevelCurve {
  int level = 0;
  double best_value = 0.0;
  Eigen::VectorXd argmax;
};

struct AcquisitionResult {
  Strategy strategy = Strategy::ALM;
  int level = 1;
  Eigen::VectorXd location;
  double criterion_value = 0.0;
  std::vector<LevelCurve> per_level;
  double cost_charged = 0.0;
};

struct AcquisitionOptions {
  int n_starts = 0;          // 0: 10 * d
  int max_iters = 30;
  bool grid_fallback = true;
  int grid_points = 0;       // per axis; 0: 201 for d = 1, 21 for d = 2
  double perturb_scale = 0.05;
  std::uint64_t seed = 0;
};

struct AlcOptions {
  int integration_points = 1000;
  int imputations = 100;
  std::uint64_t seed = 0;
};

struct AldOptions {
  int mc_samples = 10000;  // three-level decomposition only
  std::uint64_t seed = 0;
};

// V_l(x) / cumulative(l).
double ald_criterion(const RnaEmulator& emu, const Eigen::VectorXd& x, int level, const CostModel& costs,
                     const AldOptions& options = {});

// sigma*^2_l(x) / cumulative(l).
double alm_criterion(const RnaEmulator& emu, const Eigen::VectorXd& x, int level, const CostModel& costs);

// Fixed integration sample and imputation noise shared by every candidate in one acquisition.
class AlcContext {
 public:
  AlcContext(const RnaEmulator& emu, const Box& box, const AlcOptions& options);
  AlcContext(const RnaEmulator& emu, Eigen::MatrixXd integration_points, int imputations, std::uint64_t seed);

  // Mean over integration points of sigma*^2_L minus its imputation average after
  // observing x at levels 1..level. 0 for a point already in the level-l design.
  double variance_reduction(const Eigen::VectorXd& x, int level) const;

  const Eigen::MatrixXd& integration_points() const { return points_; }
  const Eigen::VectorXd& base_variance() const { return base_var_; }
  // Standard normal draws, imputations x levels; row j drives imputation j.
  const Eigen::MatrixXd& imputation_noise() const { return noise_; }

 private:
  const RnaEmulator* emu_;
  Eigen::MatrixXd points_;
  Eigen::VectorXd base_var_;
  Eigen::MatrixXd noise_;  // imputations x levels
  // level-1 quantities at the integration points (rank-one update path)
  Eigen::MatrixXd unit_points_;  // d x M
  Eigen::MatrixXd kinv_k1_;      // n_1 x M
  Eigen::VectorXd mean1_, var1_;
};

// Delta sigma^2_L(l, x) / cumulative(l), clamped at 0.
double alc_criterion(const AlcContext& context, const Eigen::VectorXd& x, int level, const CostModel& costs);
double alc_criterion(const RnaEmulator& emu, const Eigen::VectorXd& x, int level, const CostModel& costs,
                     const Eigen::MatrixXd& integration_points, int imputations, std::uint64_t seed);

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool used_fallback = false;
  std::string warning;
};

// Multistart local ascent (random starts plus perturbed anchor points) with a
// grid pass for d <= 2. Points where `excluded` is true score -inf.
OptimizeResult optimize_acquisition(const std::function<double(const Eigen::VectorXd&)>& criterion, const Box& box,
                                    const AcquisitionOptions& options, const Eigen::MatrixXd& anchors = {},
                                    const std::function<bool(const Eigen::VectorXd&)>& excluded = {});

struct SelectOptions {
  AcquisitionOptions acquisition;
  AlcOptions alc;
  AldOptions ald;
  int max_level = 0;  // 0: all levels
};

// Argmax over levels 1..max_level of the strategy's criterion.
AcquisitionResult select_acquisition(Strategy strategy, const RnaEmulator& emu, const CostModel& costs,
                                     const Box& box, const SelectOptions& options);

// Two stage: x* = argmax sigma*^2_L, then l* = argmax_l Delta sigma^2_L(l, x*) / cumulative(l).
AcquisitionResult almc_select(const RnaEmulator& emu, const CostModel& costs, const Box& box,
                              const SelectOptions& options);

// Re-chooses the level among 1..max_level from the per-level diagnostics.
AcquisitionResult restrict_levels(const AcquisitionResult& result, int max_level, const CostModel& costs);

using Simulator = std::function<double(int level, const Eigen::VectorXd& x)>;

struct TestOracle {
  Eigen::MatrixXd points;  // rows
  Eigen::VectorXd truth;   // top-level outputs
};

struct AlRecord {
  int step = 0;
  Strategy strategy = Strategy::ALM;
  int level = 1;
  Eigen::VectorXd location;
  bool imputed = false;
  std::vector<double> outputs;  // levels 1..level
  double criterion_value = 0.0;
  double accrued_cost = 0.0;
  std::optional<double> rmse;
  std::optional<double> crps;
};

struct AlTrace {
  std::vector<AlRecord> records;
  std::optional<double> initial_rmse;
  std::optional<double> initial_crps;
  MultiFidelityDataset dataset;  // final
  bool aborted = false;
  std::string error;
};

struct AlOptions {
  FitOptions fit;
  SelectOptions select;
  std::uint64_t seed = 0;
  int max_steps = 0;  // 0: unlimited
  // Called after every completed step.
  std::function<void(const AlRecord&, const RnaEmulator&)> on_step;
};

// Budgeted loop: select, simulate levels 1..l*, insert, refit (warm started).
AlTrace al_loop(const Simulator& simulator, const MultiFidelityDataset& initial, Strategy strategy,
                const CostModel& costs, double budget, KernelKind kind, const AlOptions& options = {},
                const std::optional<TestOracle>& oracle = std::nullopt);

}  // namespace rnamf
