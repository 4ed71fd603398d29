#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rnamf/emulator.hpp"

namespace rnamf {

double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

// Gaussian CRPS for a single forecast N(mean, sd^2); |truth - mean| when sd == 0.
double crps_gaussian(double mean, double sd, double truth);

// Mean Gaussian CRPS over forecasts.
double crps(const std::vector<PosteriorMoments>& forecasts, const Eigen::VectorXd& truth);

}  // namespace rnamf
