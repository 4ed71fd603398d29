#include "rnamf/linalg.hpp"

#include <cmath>
#include <string>

#include "rnamf/error.hpp"

namespace rnamf {

namespace {

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto& m = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!(m(i, i) > 0.0) || !std::isfinite(m(i, i))) return false;
  }
  return true;
}

}  // namespace

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, double jitter, double max_jitter) {
  if (k.rows() != k.cols() || k.rows() == 0) throw ShapeError("cholesky: matrix must be square and nonempty");
  if (!k.allFinite()) throw ConditioningError("cholesky: matrix has non-finite entries", jitter);
  double j = jitter;
  const Eigen::Index n = k.rows();
  while (true) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (factor_ok(llt)) return {llt.matrixL(), j};
    if (j >= max_jitter) break;
    j = (j == 0.0) ? kDefaultJitter : std::min(j * 10.0, max_jitter);
  }
  throw ConditioningError("cholesky failed for " + std::to_string(n) + "x" + std::to_string(n) +
                              " matrix even with jitter " + std::to_string(j),
                          j);
}

Eigen::MatrixXd bordered_inverse(const Eigen::MatrixXd& a_inv, const Eigen::VectorXd& b, double c) {
  const Eigen::Index n = a_inv.rows();
  if (a_inv.cols() != n || b.size() != n) throw ShapeError("bordered_inverse: shape mismatch");
  const Eigen::VectorXd v = a_inv * b;
  const double schur = c - b.dot(v);
  if (!(schur > 0.0)) throw ConditioningError("bordered_inverse: non-positive Schur complement", 0.0);
  Eigen::MatrixXd out(n + 1, n + 1);
  out.topLeftCorner(n, n) = a_inv + v * v.transpose() / schur;
  out.topRightCorner(n, 1) = -v / schur;
  out.bottomLeftCorner(1, n) = -v.transpose() / schur;
  out(n, n) = 1.0 / schur;
  return out;
}

Eigen::MatrixXd bordered_cholesky(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b, double c) {
  const Eigen::Index n = lower.rows();
  if (lower.cols() != n || b.size() != n) throw ShapeError("bordered_cholesky: shape mismatch");
  const Eigen::VectorXd w = lower.triangularView<Eigen::Lower>().solve(b);
  const double d2 = c - w.squaredNorm();
  if (!(d2 > 0.0)) throw ConditioningError("bordered_cholesky: non-positive pivot", 0.0);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, n + 1);
  out.topLeftCorner(n, n) = lower;
  out.bottomLeftCorner(1, n) = w.transpose();
  out(n, n) = std::sqrt(d2);
  return out;
}

Eigen::MatrixXd inverse_from_cholesky(const Eigen::MatrixXd& lower) {
  const Eigen::Index n = lower.rows();
  Eigen::MatrixXd linv = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

}  // namespace rnamf
