#pragma once

#include <cmath>
#include <numbers>

namespace rnamf::normal {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

inline double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

// exp(x^2) * erfc(x)
inline double erfcx(double x) {
  if (x < 26.0) return std::exp(x * x) * std::erfc(x);
  const double ix2 = 1.0 / (x * x);
  const double series =
      1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * (-1.875 + ix2 * 6.5625)));
  return series / (x * std::sqrt(std::numbers::pi));
}

// exp(t^2 / 2) * Phi(t), bounded for t -> -inf
inline double scaled_cdf(double t) { return 0.5 * erfcx(-t * kInvSqrt2); }

// Phi(b) - Phi(a) for a <= b without cancellation in the tails.
inline double interval_prob(double a, double b) {
  if (a > 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  if (b < 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  return 1.0 - 0.5 * std::erfc(-a * kInvSqrt2) - 0.5 * std::erfc(b * kInvSqrt2);
}

}  // namespace rnamf::normal
