#include "rnamf/expectations.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "rnamf/error.hpp"
#include "rnamf/normal.hpp"

namespace rnamf {

namespace {

constexpr int kMaxDeg = 4;
using Poly = std::array<double, kMaxDeg + 1>;  // ascending coefficients

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kSqrt5 = 2.2360679774997896964;

constexpr std::array<std::array<double, kMaxDeg + 1>, kMaxDeg + 1> kBinom{{
    {1, 0, 0, 0, 0},
    {1, 1, 0, 0, 0},
    {1, 2, 1, 0, 0},
    {1, 3, 3, 1, 0},
    {1, 4, 6, 4, 1},
}};

struct MaternPoly {
  Poly p{};    // psi = p(u) exp(-c u), u = |f - y|
  int deg = 0;
  double c = 0.0;
};

MaternPoly matern_poly(KernelKind kind, double theta) {
  MaternPoly m;
  if (kind == KernelKind::Matern15) {
    m.c = kSqrt3 / theta;
    m.p = {1.0, m.c, 0, 0, 0};
    m.deg = 1;
  } else {
    m.c = kSqrt5 / theta;
    m.p = {1.0, m.c, m.c * m.c / 3.0, 0, 0};
    m.deg = 2;
  }
  return m;
}

// Coefficients of p(u + shift).
Poly shifted(const Poly& p, int deg, double shift) {
  Poly out{};
  for (int k = 0; k <= deg; ++k) {
    double pw = 1.0;
    for (int j = k; j >= 0; --j) {
      out[j] += p[k] * kBinom[k][j] * pw;
      pw *= shift;
    }
  }
  return out;
}

Poly multiply(const Poly& a, int da, const Poly& b, int db) {
  Poly out{};
  for (int i = 0; i <= da; ++i)
    for (int j = 0; j <= db; ++j) out[i + j] += a[i] * b[j];
  return out;
}

// Coefficients of p(-u).
Poly reflected(const Poly& p, int deg) {
  Poly out = p;
  for (int k = 1; k <= deg; k += 2) out[k] = -out[k];
  return out;
}

// int_0^inf q(u) exp(-lambda u) N(u; delta, s^2) du
double tilted_half_line(const Poly& q, int deg, double lambda, double delta, double s) {
  const double t = (delta - lambda * s * s) / s;
  std::array<double, kMaxDeg + 1> jk{};
  double pref;
  if (t >= 0.0) {
    // Partial moments of N(0,1) over (-t, inf), then moments of N(t,1) over (0, inf).
    pref = std::exp(-lambda * delta + 0.5 * lambda * lambda * s * s);
    const double big_phi = normal::cdf(t), small_phi = normal::pdf(t);
    std::array<double, kMaxDeg + 1> m{};
    m[0] = big_phi;
    m[1] = small_phi;
    double mt = 1.0;  // (-t)^(j-1)
    for (int j = 2; j <= deg; ++j) {
      mt *= -t;
      m[j] = (j - 1) * m[j - 2] + mt * small_phi;
    }
    for (int k = 0; k <= deg; ++k) {
      double acc = 0.0, tp = 1.0;
      for (int j = k; j >= 0; --j) {
        acc += kBinom[k][j] * tp * m[j];
        tp *= t;
      }
      jk[k] = acc;
    }
  } else {
    pref = normal::kInvSqrt2Pi * std::exp(-0.5 * (delta / s) * (delta / s));
    detail::tilted_half_moments(-t, deg, jk.data());
  }
  double total = 0.0, sp = 1.0;
  for (int k = 0; k <= deg; ++k) {
    total += q[k] * sp * jk[k];
    sp *= s;
  }
  return pref * total;
}

// int_0^width q(w) N(w; delta, s^2) dw
double interval_integral(const Poly& q, int deg, double delta, double s, double width) {
  const double w0 = std::min(std::max(delta, 0.0), width);
  const Poly qs = shifted(q, deg, w0);  // q(w0 + v')
  const double lo = -delta / s, hi = (width - delta) / s;
  // v' = (delta - w0) + s v; moments of v over [lo, hi].
  std::array<double, kMaxDeg + 1> n{};
  const double plo = normal::pdf(lo), phi_hi = normal::pdf(hi);
  n[0] = normal::interval_prob(lo, hi);
  n[1] = plo - phi_hi;
  double lp = 1.0, hp = 1.0;
  for (int j = 2; j <= deg; ++j) {
    lp *= lo;
    hp *= hi;
    n[j] = (j - 1) * n[j - 2] + lp * plo - hp * phi_hi;
  }
  const double off = delta - w0;
  double total = 0.0;
  for (int k = 0; k <= deg; ++k) {
    double acc = 0.0, op = 1.0;
    for (int j = k; j >= 0; --j) {
      acc += kBinom[k][j] * op * std::pow(s, j) * n[j];
      op *= off;
    }
    total += qs[k] * acc;
  }
  return total;
}

void check(double var, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw InvalidParameter("lengthscale must be positive and finite");
  if (!(var >= 0.0) || !std::isfinite(var)) throw InvalidParameter("variance must be nonnegative and finite");
}

}  // namespace

namespace detail {

void tilted_half_moments(double a, int kmax, double* out) {
  if (a > 10.0) {
    // Asymptotic expansion: sum_m (-1/2)^m (k+2m)! / (m! a^(k+2m+1)).
    double fact = 1.0;
    for (int k = 0; k <= kmax; ++k) {
      if (k > 0) fact *= k;
      double term = fact / std::pow(a, k + 1);
      double sum = term;
      for (int m = 0; m < 200; ++m) {
        const double next = term * -0.5 * (k + 2.0 * m + 1.0) * (k + 2.0 * m + 2.0) / ((m + 1.0) * a * a);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      }
      out[k] = sum;
    }
    return;
  }
  // The forward recurrence loses about 2k digits of a; extended precision keeps
  // k <= 4 below 1e-12 relative up to the series threshold.
  const long double al = a;
  const long double m0 = std::sqrt(std::numbers::pi_v<long double> / 2.0L) * std::exp(al * al / 2.0L) *
                         std::erfc(al / std::sqrt(2.0L));
  long double prev = m0, cur = 1.0L - al * m0;
  out[0] = static_cast<double>(m0);
  if (kmax >= 1) out[1] = static_cast<double>(cur);
  for (int k = 2; k <= kmax; ++k) {
    const long double next = (k - 1) * prev - al * cur;
    prev = cur;
    cur = next;
    out[k] = static_cast<double>(cur);
  }
}

}  // namespace detail

double expected_psi(KernelKind kind, double mean, double var, double y, double theta) {
  check(var, theta);
  if (var == 0.0) return psi(kind, mean, y, theta);
  if (kind == KernelKind::SqExp) {
    const double d = y - mean;
    return std::exp(-d * d / (theta + 2.0 * var)) / std::sqrt(1.0 + 2.0 * var / theta);
  }
  const MaternPoly mp = matern_poly(kind, theta);
  const double s = std::sqrt(var);
  const double delta = mean - y;
  return tilted_half_line(mp.p, mp.deg, mp.c, delta, s) + tilted_half_line(mp.p, mp.deg, mp.c, -delta, s);
}

double expected_psi_product(KernelKind kind, double mean, double var, double yi, double yk, double theta) {
  check(var, theta);
  if (var == 0.0) return psi(kind, mean, yi, theta) * psi(kind, mean, yk, theta);
  if (kind == KernelKind::SqExp) {
    const double ybar = 0.5 * (yi + yk) - mean;
    const double dy = yi - yk;
    return std::exp(-ybar * ybar / (0.5 * theta + 2.0 * var) - dy * dy / (2.0 * theta)) /
           std::sqrt(1.0 + 4.0 * var / theta);
  }
  if (yi > yk) std::swap(yi, yk);
  const MaternPoly mp = matern_poly(kind, theta);
  const double s = std::sqrt(var);
  const double width = yk - yi;
  const Poly tail = multiply(shifted(mp.p, mp.deg, width), mp.deg, mp.p, mp.deg);  // p(u + width) p(u)
  const Poly inner = multiply(mp.p, mp.deg, shifted(reflected(mp.p, mp.deg), mp.deg, -width), mp.deg);  // p(w) p(width - w)
  const int deg = 2 * mp.deg;
  const double scale = std::exp(-mp.c * width);
  const double above = tilted_half_line(tail, deg, 2.0 * mp.c, mean - yk, s);
  const double below = tilted_half_line(tail, deg, 2.0 * mp.c, yi - mean, s);
  const double middle = width > 0.0 ? interval_integral(inner, deg, mean - yi, s, width) : 0.0;
  return scale * (above + below + middle);
}

}  // namespace rnamf
