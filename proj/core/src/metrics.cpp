#include "rnamf/metrics.hpp"

#include <cmath>
#include <numbers>

#include "rnamf/error.hpp"
#include "rnamf/normal.hpp"

namespace rnamf {

double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size()) throw ShapeError("rmse: length mismatch");
  if (truth.size() == 0) throw ShapeError("rmse: empty input");
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.size()));
}

double crps_gaussian(double mean, double sd, double truth) {
  if (!(sd >= 0.0)) throw InvalidParameter("crps: negative standard deviation");
  if (sd == 0.0) return std::abs(truth - mean);
  const double z = (truth - mean) / sd;
  return sd * (z * (2.0 * normal::cdf(z) - 1.0) + 2.0 * normal::pdf(z) - 1.0 / std::sqrt(std::numbers::pi));
}

double crps(const std::vector<PosteriorMoments>& forecasts, const Eigen::VectorXd& truth) {
  if (static_cast<Eigen::Index>(forecasts.size()) != truth.size()) throw ShapeError("crps: length mismatch");
  if (forecasts.empty()) throw ShapeError("crps: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    if (forecasts[i].var < 0.0) throw InvalidParameter("crps: negative variance");
    s += crps_gaussian(forecasts[i].mean, std::sqrt(forecasts[i].var), truth[static_cast<Eigen::Index>(i)]);
  }
  return s / static_cast<double>(forecasts.size());
}

}  // namespace rnamf
