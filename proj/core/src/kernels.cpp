#include "rnamf/kernels.hpp"

#include <cmath>

#include "rnamf/error.hpp"

namespace rnamf {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kSqrt5 = 2.2360679774997896964;

void check_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InvalidParameter("lengthscale must be positive and finite, got " + std::to_string(theta));
  }
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::SqExp: return "sqexp";
    case KernelKind::Matern15: return "matern15";
    case KernelKind::Matern25: return "matern25";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "sqexp" || name == "se" || name == "SqExp") return KernelKind::SqExp;
  if (name == "matern15" || name == "matern1.5" || name == "Matern15") return KernelKind::Matern15;
  if (name == "matern25" || name == "matern2.5" || name == "Matern25") return KernelKind::Matern25;
  throw InvalidParameter("unknown kernel kind '" + std::string(name) + "'");
}

LengthscaleVector::LengthscaleVector(Eigen::VectorXd inputs, std::optional<double> output)
    : input_scales(std::move(inputs)), output_scale(output) {}

Eigen::VectorXd LengthscaleVector::packed() const {
  Eigen::VectorXd out(input_scales.size() + (output_scale ? 1 : 0));
  out.head(input_scales.size()) = input_scales;
  if (output_scale) out[input_scales.size()] = *output_scale;
  return out;
}

LengthscaleVector LengthscaleVector::unpack(const Eigen::VectorXd& all, bool augmented) {
  if (augmented) {
    if (all.size() < 2) throw ShapeError("augmented lengthscale vector needs at least 2 entries");
    return {all.head(all.size() - 1), all[all.size() - 1]};
  }
  return {all, std::nullopt};
}

void LengthscaleVector::validate() const {
  for (Eigen::Index j = 0; j < input_scales.size(); ++j) check_theta(input_scales[j]);
  if (output_scale) check_theta(*output_scale);
}

double psi(KernelKind kind, double x, double xp, double theta) {
  check_theta(theta);
  if (!std::isfinite(x) || !std::isfinite(xp)) throw InvalidParameter("kernel inputs must be finite");
  const double d = x - xp;
  switch (kind) {
    case KernelKind::SqExp: return std::exp(-d * d / theta);
    case KernelKind::Matern15: {
      const double a = kSqrt3 * std::abs(d) / theta;
      return (1.0 + a) * std::exp(-a);
    }
    case KernelKind::Matern25: {
      const double a = kSqrt5 * std::abs(d) / theta;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

double dlog_psi_dlog_theta(KernelKind kind, double x, double xp, double theta) {
  const double d = x - xp;
  switch (kind) {
    case KernelKind::SqExp: return d * d / theta;
    case KernelKind::Matern15: {
      const double a = kSqrt3 * std::abs(d) / theta;
      return a * a / (1.0 + a);
    }
    case KernelKind::Matern25: {
      const double a = kSqrt5 * std::abs(d) / theta;
      return a * a * (1.0 + a) / (3.0 + 3.0 * a + a * a);
    }
  }
  return 0.0;
}

double kernel_input(KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& xp, const LengthscaleVector& scales) {
  const auto d = scales.input_dim();
  if (x.size() != d || xp.size() != d) {
    throw ShapeError("kernel_input: dimension mismatch (" + std::to_string(x.size()) + ", " +
                     std::to_string(xp.size()) + ") vs " + std::to_string(d) + " scales");
  }
  double k = 1.0;
  for (Eigen::Index j = 0; j < d; ++j) k *= psi(kind, x[j], xp[j], scales.input_scales[j]);
  return k;
}

double kernel_augmented(KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& z,
                        const Eigen::Ref<const Eigen::VectorXd>& zp, const LengthscaleVector& scales) {
  if (!scales.output_scale) throw InvalidParameter("kernel_augmented requires an output scale");
  const auto d = scales.input_dim();
  if (z.size() != d + 1 || zp.size() != d + 1) throw ShapeError("kernel_augmented: dimension mismatch");
  return kernel_input(kind, z.head(d), zp.head(d), scales) *
         psi(kind, z[d], zp[d], *scales.output_scale);
}

double kernel(KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b, const LengthscaleVector& scales) {
  return scales.augmented() ? kernel_augmented(kind, a, b, scales) : kernel_input(kind, a, b, scales);
}

Eigen::MatrixXd cov_matrix(KernelKind kind, const Eigen::MatrixXd& points,
                           const LengthscaleVector& scales, double jitter) {
  const auto n = points.rows();
  if (n == 0) throw ShapeError("cov_matrix: empty point set");
  if (!(jitter >= 0.0)) throw InvalidParameter("jitter must be nonnegative");
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0 + jitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = kernel(kind, points.row(i).transpose(), points.row(j).transpose(), scales);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::VectorXd cross_cov(KernelKind kind, const Eigen::MatrixXd& points,
                          const Eigen::Ref<const Eigen::VectorXd>& z, const LengthscaleVector& scales) {
  Eigen::VectorXd k(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) k[i] = kernel(kind, points.row(i).transpose(), z, scales);
  return k;
}

}  // namespace rnamf
