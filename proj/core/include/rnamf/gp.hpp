#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/kernels.hpp"
#include "rnamf/linalg.hpp"

namespace rnamf {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

// One fitted level. Level 1 uses plain inputs; levels >= 2 use augmented rows
// (x, y_{l-1}) with the previous-level output in the last column.
struct LevelModel {
  int level_index = 1;
  KernelKind kind = KernelKind::SqExp;
  LengthscaleVector scales;
  double alpha = 0.0;
  double tau_sq = 1.0;
  double jitter = kDefaultJitter;
  double nll = 0.0;
  Eigen::MatrixXd design;
  Eigen::VectorXd outputs;
  Eigen::MatrixXd chol;
  Eigen::MatrixXd kinv;
  Eigen::VectorXd kinv_resid;

  Eigen::Index n() const { return design.rows(); }
  bool augmented() const { return scales.augmented(); }
  Eigen::Index input_dim() const { return scales.input_dim(); }

  // Profiles alpha and tau^2 at the given scales and caches the factors.
  static LevelModel build(int level_index, KernelKind kind, const LengthscaleVector& scales,
                          Eigen::MatrixXd design, Eigen::VectorXd outputs, double jitter = kDefaultJitter);

  // Same hyperparameters with one extra observation; caches updated by bordering.
  LevelModel augmented_with(const Eigen::VectorXd& z, double y) const;
};

struct NllResult {
  double value = 0.0;
  double alpha_hat = 0.0;
  double tau_sq_hat = 0.0;
};

NllResult neg_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, KernelKind kind,
                             const LengthscaleVector& scales, double jitter = kDefaultJitter);

// Same value; fills the gradient with respect to log lengthscales when non-null.
NllResult neg_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, KernelKind kind,
                             const LengthscaleVector& scales, double jitter, Eigen::VectorXd* grad_log_scales);

struct FitOptions {
  int restarts = 5;
  int max_iters = 200;
  double grad_tol = 1e-6;
  // Log-space bounds on the packed lengthscales; defaults derived from the data.
  std::optional<Eigen::VectorXd> log_lower;
  std::optional<Eigen::VectorXd> log_upper;
  std::uint64_t rng_seed = 0;
  double jitter = kDefaultJitter;
  bool analytic_gradient = true;
  // Extra starting points (packed lengthscales, natural scale).
  std::vector<Eigen::VectorXd> warm_starts;
};

// Default log-space bounds: characteristic length in [1e-2 D, 1e2 D] per
// coordinate, D the coordinate's data range; theta = length^2 for SqExp.
std::pair<Eigen::VectorXd, Eigen::VectorXd> default_log_bounds(const Eigen::MatrixXd& design, KernelKind kind);

LevelModel fit_level(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, KernelKind kind,
                     const FitOptions& options, bool augmented, int level_index = 1);

Moments conditional_moments(const LevelModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

}  // namespace rnamf
