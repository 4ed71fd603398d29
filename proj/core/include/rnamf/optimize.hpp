#pragma once

#include <functional>

#include <Eigen/Dense>

namespace rnamf {

// Objective returning the value; when `grad` is non-null it must be filled.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
using ScalarObjective = std::function<double(const Eigen::VectorXd& x)>;

struct MinimizeOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;
  // Stop when an accepted step improves the value by less than f_rel_tol * max(1, |f|); 0 disables.
  double f_rel_tol = 0.0;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Projected quasi-Newton (BFGS) descent with Armijo backtracking on the box
// [lo, hi]. Convergence when the projected gradient has max-norm <= grad_tol.
MinimizeResult minimize_box(const SmoothObjective& f, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            const MinimizeOptions& options = {});

// Central differences, one-sided next to the bounds.
Eigen::VectorXd fd_gradient(const ScalarObjective& f, const Eigen::VectorXd& x, double fx,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double rel_step = 1e-6);

SmoothObjective with_fd_gradient(ScalarObjective f, Eigen::VectorXd lo, Eigen::VectorXd hi,
                                 double rel_step = 1e-6);

}  // namespace rnamf
