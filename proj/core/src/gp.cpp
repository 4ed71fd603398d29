#include "rnamf/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rnamf/error.hpp"
#include "rnamf/optimize.hpp"
#include "rnamf/random.hpp"

namespace rnamf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tau_floor(const Eigen::VectorXd& y) {
  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  return 1e-12 * (var > 0.0 ? var : std::max(1.0, mean * mean));
}

void check_shapes(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, const LengthscaleVector& scales) {
  if (design.rows() != outputs.size()) throw ShapeError("design rows and outputs differ in length");
  const Eigen::Index expected = scales.input_dim() + (scales.augmented() ? 1 : 0);
  if (design.cols() != expected) {
    throw ShapeError("design has " + std::to_string(design.cols()) + " columns, lengthscales expect " +
                     std::to_string(expected));
  }
}

struct Profile {
  double alpha;
  double tau_sq;
  bool floored;
  Eigen::VectorXd resid_solve;  // K^{-1}(y - alpha 1)
};

Profile profile(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd kinv1 = llt.solve(ones);
  const Eigen::VectorXd kinvy = llt.solve(y);
  Profile p;
  p.alpha = ones.dot(kinvy) / ones.dot(kinv1);
  p.resid_solve = kinvy - p.alpha * kinv1;
  const double q = (y.array() - p.alpha).matrix().dot(p.resid_solve) / static_cast<double>(n);
  const double fl = tau_floor(y);
  p.floored = !(q > fl);
  p.tau_sq = p.floored ? fl : q;
  return p;
}

}  // namespace

LevelModel LevelModel::build(int level_index, KernelKind kind, const LengthscaleVector& scales,
                             Eigen::MatrixXd design, Eigen::VectorXd outputs, double jitter) {
  scales.validate();
  check_shapes(design, outputs, scales);
  if (design.rows() < 1) throw ShapeError("level model needs at least one observation");
  LevelModel m;
  m.level_index = level_index;
  m.kind = kind;
  m.scales = scales;
  m.design = std::move(design);
  m.outputs = std::move(outputs);
  const Eigen::MatrixXd k = cov_matrix(kind, m.design, scales, 0.0);
  const JitteredCholesky jc = jittered_cholesky(k, jitter);
  m.jitter = jc.jitter;
  m.chol = jc.lower;
  Eigen::MatrixXd kj = k;
  kj.diagonal().array() += m.jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(kj);
  const Profile p = profile(llt, m.outputs);
  m.alpha = p.alpha;
  m.tau_sq = p.tau_sq;
  m.kinv_resid = p.resid_solve;
  m.kinv = inverse_from_cholesky(m.chol);
  const double n = static_cast<double>(m.n());
  m.nll = m.n() < 2 ? kInf : 0.5 * n * std::log(m.tau_sq) + m.chol.diagonal().array().log().sum();
  return m;
}

LevelModel LevelModel::augmented_with(const Eigen::VectorXd& z, double y) const {
  if (z.size() != design.cols()) throw ShapeError("augmented_with: input arity mismatch");
  const Eigen::VectorXd k = cross_cov(kind, design, z, scales);
  LevelModel m = *this;
  m.chol = bordered_cholesky(chol, k, 1.0 + jitter);
  m.kinv = bordered_inverse(kinv, k, 1.0 + jitter);
  m.design.conservativeResize(n() + 1, Eigen::NoChange);
  m.design.row(n()) = z.transpose();
  m.outputs.conservativeResize(n() + 1);
  m.outputs[n()] = y;
  m.kinv_resid = m.kinv * (m.outputs.array() - alpha).matrix();
  return m;
}

NllResult neg_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, KernelKind kind,
                             const LengthscaleVector& scales, double jitter) {
  return neg_log_likelihood(design, outputs, kind, scales, jitter, nullptr);
}

NllResult neg_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, KernelKind kind,
                             const LengthscaleVector& scales, double jitter, Eigen::VectorXd* grad) {
  scales.validate();
  check_shapes(design, outputs, scales);
  const Eigen::Index n = design.rows();
  const Eigen::Index p = scales.input_dim() + (scales.augmented() ? 1 : 0);
  if (grad) grad->setZero(p);
  if (n < 2) {
    NllResult r;
    r.value = kInf;
    r.alpha_hat = n == 1 ? outputs[0] : 0.0;
    r.tau_sq_hat = 0.0;
    return r;
  }
  const Eigen::MatrixXd k = cov_matrix(kind, design, scales, 0.0);
  Eigen::MatrixXd kj = k;
  kj.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(kj);
  if (llt.info() != Eigen::Success) throw ConditioningError("likelihood: covariance not positive definite", jitter);
  const Eigen::MatrixXd lower = llt.matrixL();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lower(i, i) > 0.0)) throw ConditioningError("likelihood: covariance not positive definite", jitter);
  }
  const Profile pr = profile(llt, outputs);
  NllResult r;
  r.alpha_hat = pr.alpha;
  r.tau_sq_hat = pr.tau_sq;
  r.value = 0.5 * static_cast<double>(n) * std::log(pr.tau_sq) + lower.diagonal().array().log().sum();
  if (grad) {
    Eigen::MatrixXd w = inverse_from_cholesky(lower);
    if (!pr.floored) w -= pr.resid_solve * pr.resid_solve.transpose() / pr.tau_sq;
    const Eigen::Index d = scales.input_dim();
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) {
        const double c = w(a, b) * k(a, b);
        if (c == 0.0) continue;
        for (Eigen::Index j = 0; j < d; ++j) {
          (*grad)[j] += c * dlog_psi_dlog_theta(kind, design(a, j), design(b, j), scales.input_scales[j]);
        }
        if (scales.augmented()) {
          (*grad)[d] += c * dlog_psi_dlog_theta(kind, design(a, d), design(b, d), *scales.output_scale);
        }
      }
    }
  }
  return r;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> default_log_bounds(const Eigen::MatrixXd& design, KernelKind kind) {
  const Eigen::Index p = design.cols();
  Eigen::VectorXd lo(p), hi(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double range = design.rows() > 0 ? design.col(j).maxCoeff() - design.col(j).minCoeff() : 0.0;
    if (!(range > 0.0) || !std::isfinite(range)) range = 1.0;
    const double power = kind == KernelKind::SqExp ? 2.0 : 1.0;
    lo[j] = power * std::log(1e-2 * range);
    hi[j] = power * std::log(1e2 * range);
  }
  return {lo, hi};
}

namespace {

Eigen::VectorXd median_heuristic(const Eigen::MatrixXd& design, KernelKind kind) {
  const Eigen::Index n = design.rows(), p = design.cols();
  Eigen::VectorXd out(p);
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index j = 0; j < p; ++j) {
    dist.clear();
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) {
        const double v = std::abs(design(a, j) - design(b, j));
        if (v > 0.0) dist.push_back(v);
      }
    }
    double med = 1.0;
    if (!dist.empty()) {
      auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
      std::nth_element(dist.begin(), mid, dist.end());
      med = *mid;
    }
    out[j] = kind == KernelKind::SqExp ? med * med : med;
  }
  return out;
}

}  // namespace

LevelModel fit_level(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs, KernelKind kind,
                     const FitOptions& options, bool augmented, int level_index) {
  if (options.restarts < 1) throw InvalidParameter("restarts must be >= 1");
  if (design.rows() != outputs.size()) throw ShapeError("design rows and outputs differ in length");
  if (design.rows() < 2) throw FitError("level " + std::to_string(level_index) + ": need at least 2 observations");
  if (augmented && design.cols() < 2) throw ShapeError("augmented design needs at least 2 columns");
  const Eigen::Index p = design.cols();

  auto [lo, hi] = default_log_bounds(design, kind);
  if (options.log_lower) lo = *options.log_lower;
  if (options.log_upper) hi = *options.log_upper;
  if (lo.size() != p || hi.size() != p) throw ShapeError("lengthscale bound size mismatch");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(lo[j] < hi[j])) throw InvalidParameter("lengthscale bounds require lo < hi");
  }

  auto objective = [&](const Eigen::VectorXd& logt, Eigen::VectorXd* grad) -> double {
    const LengthscaleVector s = LengthscaleVector::unpack(logt.array().exp().matrix(), augmented);
    try {
      Eigen::VectorXd g;
      const NllResult r = neg_log_likelihood(design, outputs, kind, s, options.jitter, grad ? &g : nullptr);
      if (grad) *grad = g;
      return r.value;
    } catch (const ConditioningError&) {
      return kInf;
    }
  };
  SmoothObjective smooth;
  if (options.analytic_gradient) {
    smooth = objective;
  } else {
    smooth = with_fd_gradient([&](const Eigen::VectorXd& x) { return objective(x, nullptr); }, lo, hi);
  }

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(median_heuristic(design, kind).array().log().matrix().cwiseMax(lo).cwiseMin(hi));
  if (options.restarts > 1) starts.push_back(0.5 * (lo + hi));
  for (const auto& w : options.warm_starts) {
    if (w.size() == p && (w.array() > 0.0).all()) starts.push_back(w.array().log().matrix().cwiseMax(lo).cwiseMin(hi));
  }
  Rng rng(options.rng_seed);
  for (int r = 2; r < options.restarts; ++r) {
    Eigen::VectorXd s(p);
    for (Eigen::Index j = 0; j < p; ++j) s[j] = rng.uniform(lo[j], hi[j]);
    starts.push_back(s);
  }

  MinimizeOptions mo;
  mo.max_iters = options.max_iters;
  mo.grad_tol = options.grad_tol;
  std::optional<MinimizeResult> best;
  for (const auto& s : starts) {
    const MinimizeResult r = minimize_box(smooth, s, lo, hi, mo);
    if (std::isfinite(r.value) && (!best || r.value < best->value)) best = r;
  }
  if (!best) {
    std::ostringstream os;
    os << "level " << level_index << ": all " << starts.size() << " restarts failed; attempted log-scales:";
    for (const auto& s : starts) os << " [" << s.transpose() << "]";
    throw FitError(os.str());
  }
  const LengthscaleVector scales = LengthscaleVector::unpack(best->x.array().exp().matrix(), augmented);
  try {
    return LevelModel::build(level_index, kind, scales, design, outputs, options.jitter);
  } catch (const ConditioningError& e) {
    throw FitError("level " + std::to_string(level_index) + ": " + e.what());
  }
}

Moments conditional_moments(const LevelModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != model.design.cols()) {
    throw ShapeError("conditional_moments: input has " + std::to_string(z.size()) + " entries, model expects " +
                     std::to_string(model.design.cols()));
  }
  const Eigen::VectorXd k = cross_cov(model.kind, model.design, z, model.scales);
  const Eigen::VectorXd w = model.chol.triangularView<Eigen::Lower>().solve(k);
  Moments m;
  m.mean = model.alpha + k.dot(model.kinv_resid);
  m.var = std::max(0.0, model.tau_sq * (1.0 - w.squaredNorm()));
  return m;
}

}  // namespace rnamf
