#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace rnamf {

enum class KernelKind { SqExp, Matern15, Matern25 };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

// Lengthscales for one level. The length parameter theta divides the squared
// distance for SqExp, exp(-(x - x')^2 / theta), and the absolute distance for
// the Matern kinds, e.g. (1 + sqrt(3)|x - x'|/theta) exp(-sqrt(3)|x - x'|/theta).
struct LengthscaleVector {
  Eigen::VectorXd input_scales;
  std::optional<double> output_scale;

  LengthscaleVector() = default;
  LengthscaleVector(Eigen::VectorXd inputs, std::optional<double> output = std::nullopt);

  Eigen::Index input_dim() const { return input_scales.size(); }
  bool augmented() const { return output_scale.has_value(); }
  // Input scales followed by the output scale when present.
  Eigen::VectorXd packed() const;
  static LengthscaleVector unpack(const Eigen::VectorXd& all, bool augmented);
  void validate() const;
};

double psi(KernelKind kind, double x, double xp, double theta);

// d/d(log theta) of psi, divided by psi.
double dlog_psi_dlog_theta(KernelKind kind, double x, double xp, double theta);

double kernel_input(KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& xp, const LengthscaleVector& scales);

// z = (x, y) with y the last coordinate.
double kernel_augmented(KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& z,
                        const Eigen::Ref<const Eigen::VectorXd>& zp, const LengthscaleVector& scales);

// Kernel on plain (cols == input dim) or augmented (cols == input dim + 1) rows.
double kernel(KernelKind kind, const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b, const LengthscaleVector& scales);

Eigen::MatrixXd cov_matrix(KernelKind kind, const Eigen::MatrixXd& points,
                           const LengthscaleVector& scales, double jitter);

Eigen::VectorXd cross_cov(KernelKind kind, const Eigen::MatrixXd& points,
                          const Eigen::Ref<const Eigen::VectorXd>& z, const LengthscaleVector& scales);

}  // namespace rnamf
