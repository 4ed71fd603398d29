#pragma once

#include "rnamf/kernels.hpp"

namespace rnamf {

// xi = E[psi(f, y; theta)] for f ~ N(mean, var).
double expected_psi(KernelKind kind, double mean, double var, double y, double theta);

// zeta = E[psi(f, yi; theta) psi(f, yk; theta)] for f ~ N(mean, var).
double expected_psi_product(KernelKind kind, double mean, double var, double yi, double yk, double theta);

namespace detail {

// int_0^inf v^k exp(-a v - v^2/2) dv for k = 0..kmax (kmax <= 4).
void tilted_half_moments(double a, int kmax, double* out);

}  // namespace detail

}  // namespace rnamf
