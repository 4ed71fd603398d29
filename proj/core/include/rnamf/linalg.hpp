#pragma once

#include <Eigen/Dense>

namespace rnamf {

inline constexpr double kDefaultJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-4;

struct JitteredCholesky {
  Eigen::MatrixXd lower;  // L with L L^T = K + jitter I
  double jitter = 0.0;
};

// `k` must carry a unit diagonal without jitter. Jitter starts at `jitter` and
// is escalated by x10 up to `max_jitter`; ConditioningError when all fail.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, double jitter = kDefaultJitter,
                                   double max_jitter = kMaxJitter);

// Inverse of [[A, b], [b^T, c]] given A^{-1}.
Eigen::MatrixXd bordered_inverse(const Eigen::MatrixXd& a_inv, const Eigen::VectorXd& b, double c);

// Cholesky factor of [[A, b], [b^T, c]] given the factor of A.
Eigen::MatrixXd bordered_cholesky(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b, double c);

// Inverse of L L^T from the lower factor.
Eigen::MatrixXd inverse_from_cholesky(const Eigen::MatrixXd& lower);

}  // namespace rnamf
