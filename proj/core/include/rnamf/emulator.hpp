#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/dataset.hpp"
#include "rnamf/gp.hpp"

namespace rnamf {

struct PosteriorMoments {
  double mean = 0.0;
  double var = 0.0;
  std::optional<std::vector<double>> decomposition;
  bool extrapolated = false;
};

// One recursive step through a level-l model (l >= 2) for an uncertain
// previous-level output f ~ N(prev_mean, prev_var):
//   between = Var_f(E[f_l | f]),  within = E_f(Var[f_l | f]).
struct RecursiveStep {
  double mean = 0.0;
  double between = 0.0;
  double within = 0.0;
  bool clamped = false;
  double var() const { return between + within; }
};

RecursiveStep recursive_step(const LevelModel& model, const Eigen::Ref<const Eigen::VectorXd>& x_unit,
                             double prev_mean, double prev_var);

struct McEstimate {
  double mean = 0.0;
  double var = 0.0;
  double mean_se = 0.0;
  double var_se = 0.0;
};

struct Decomposition {
  std::vector<double> v;          // V_1 .. V_L
  std::vector<double> std_error;  // Monte Carlo standard errors (0 for closed-form terms)
  double total_var = 0.0;         // closed-form sigma*^2_L
  double sum_std_error = 0.0;     // standard error of the summed Monte Carlo terms
};

class RnaEmulator {
 public:
  static RnaEmulator fit(const MultiFidelityDataset& data, KernelKind kind, const FitOptions& options = {},
                         const std::vector<LengthscaleVector>* warm_starts = nullptr);

  // Rebuilds caches from stored hyperparameters (no optimization).
  static RnaEmulator from_hyperparameters(const MultiFidelityDataset& data, KernelKind kind,
                                          const std::vector<LengthscaleVector>& scales, double jitter);
  // Per-level starting jitter (e.g. the values a previous fit settled on).
  static RnaEmulator from_hyperparameters(const MultiFidelityDataset& data, KernelKind kind,
                                          const std::vector<LengthscaleVector>& scales,
                                          const std::vector<double>& jitters);

  int levels() const { return static_cast<int>(models_.size()); }
  int dim() const { return static_cast<int>(lo_.size()); }
  KernelKind kind() const { return kind_; }
  const LevelModel& level_model(int level) const;
  const MultiFidelityDataset& dataset() const { return *data_; }
  std::vector<LengthscaleVector> scales() const;

  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  bool in_fitted_box(const Eigen::VectorXd& x) const;
  // Level-1 design bounding box used for input scaling.
  Box fitted_box() const;
  // Row of the level's design at x (unit max-norm within tol), or -1.
  Eigen::Index find_design_row(int level, const Eigen::VectorXd& x, double tol) const;

  PosteriorMoments predict(const Eigen::VectorXd& x, int level) const;
  // Moment-matched (mean, var) for levels 1..level.
  std::vector<Moments> predict_path(const Eigen::VectorXd& x, int level) const;

  McEstimate mc_posterior_oracle(const Eigen::VectorXd& x, int level, int n_samples, std::uint64_t seed) const;

  // L = 2 closed form. L = 3: V_3 closed form; V_1, V_2 by antithetic Monte Carlo over the
  // f_1-driven part of the moment-matched f_2, so the sum estimates sigma*^2_3.
  Decomposition variance_decomposition(const Eigen::VectorXd& x, int mc_samples = 10000,
                                       std::uint64_t seed = 0) const;

  double scaling_factor(const Eigen::VectorXd& x, int level) const;

  // Hypothetical observation at levels 1..level with outputs ys (no refit).
  // Levels whose design already holds x (within 1e-10 in unit coordinates) are left unchanged.
  RnaEmulator with_observation(int level, const Eigen::VectorXd& x, const std::vector<double>& ys) const;

  // Number of negative variances clamped to zero so far.
  std::uint64_t clamp_count() const { return clamps_->load(); }

 private:
  RnaEmulator() = default;
  static RnaEmulator assemble(const MultiFidelityDataset& data, KernelKind kind);
  static Eigen::MatrixXd level_design(const MultiFidelityDataset& data, const Eigen::VectorXd& lo,
                                      const Eigen::VectorXd& span, int level);
  void check_level(int level) const;

  std::shared_ptr<const MultiFidelityDataset> data_;
  KernelKind kind_ = KernelKind::SqExp;
  Eigen::VectorXd lo_;
  Eigen::VectorXd span_;
  std::vector<LevelModel> models_;
  std::shared_ptr<std::atomic<std::uint64_t>> clamps_ = std::make_shared<std::atomic<std::uint64_t>>(0);
};

}  // namespace rnamf
