#include "rnamf/optimize.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "rnamf/error.hpp"

namespace rnamf {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

MinimizeResult minimize_box(const SmoothObjective& f, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            const MinimizeOptions& options) {
  const Eigen::Index n = x0.size();
  if (lo.size() != n || hi.size() != n) throw ShapeError("minimize_box: bound size mismatch");
  MinimizeResult res;
  res.x = clamp(x0, lo, hi);
  Eigen::VectorXd g(n);
  res.value = f(res.x, &g);
  if (!std::isfinite(res.value) || !g.allFinite()) {
    res.value = std::numeric_limits<double>::infinity();
    return res;
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;

  for (res.iterations = 0; res.iterations < options.max_iters; ++res.iterations) {
    const Eigen::VectorXd pg = projected_gradient(res.x, g, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d = -(h * g);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] == 0.0) d[i] = 0.0;
    }
    if (g.dot(d) >= 0.0) {
      h.setIdentity();
      h_is_identity = true;
      d = -pg;
    }
    double t = 1.0;
    if (h_is_identity) t = std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>());

    bool accepted = false;
    Eigen::VectorXd xn, gn(n);
    double fn = 0.0;
    for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
      xn = clamp(res.x + t * d, lo, hi);
      if ((xn - res.x).lpNorm<Eigen::Infinity>() == 0.0) break;
      fn = f(xn, nullptr);
      if (std::isfinite(fn) && fn <= res.value + 1e-4 * g.dot(xn - res.x)) {
        fn = f(xn, &gn);
        accepted = std::isfinite(fn) && gn.allFinite();
        break;
      }
    }
    if (!accepted) {
      if (h_is_identity) break;
      h.setIdentity();
      h_is_identity = true;
      continue;
    }
    const Eigen::VectorXd s = xn - res.x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    const double prev = res.value;
    res.x = xn;
    res.value = fn;
    g = gn;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
      h_is_identity = false;
    }
    if (s.lpNorm<Eigen::Infinity>() < 1e-12 && prev - fn <= 1e-15 * std::max(1.0, std::abs(fn))) break;
    if (options.f_rel_tol > 0.0 && prev - fn <= options.f_rel_tol * std::max(1.0, std::abs(fn))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Eigen::VectorXd fd_gradient(const ScalarObjective& f, const Eigen::VectorXd& x, double fx,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    const bool up = x[i] + h <= hi[i];
    const bool down = x[i] - h >= lo[i];
    if (up && down) {
      xp[i] = x[i] + h;
      const double fp = f(xp);
      xp[i] = x[i] - h;
      const double fm = f(xp);
      g[i] = (fp - fm) / (2.0 * h);
    } else if (up) {
      xp[i] = x[i] + h;
      g[i] = (f(xp) - fx) / h;
    } else if (down) {
      xp[i] = x[i] - h;
      g[i] = (fx - f(xp)) / h;
    } else {
      g[i] = 0.0;
    }
    xp[i] = x[i];
  }
  return g;
}

SmoothObjective with_fd_gradient(ScalarObjective f, Eigen::VectorXd lo, Eigen::VectorXd hi, double rel_step) {
  // remembers the last value so a gradient request at a just-evaluated point costs no extra call
  auto last_x = std::make_shared<Eigen::VectorXd>();
  auto last_v = std::make_shared<double>(0.0);
  return [f = std::move(f), lo = std::move(lo), hi = std::move(hi), rel_step, last_x, last_v](
             const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    double v;
    if (last_x->size() == x.size() && *last_x == x) {
      v = *last_v;
    } else {
      v = f(x);
      *last_x = x;
      *last_v = v;
    }
    if (grad && std::isfinite(v)) *grad = fd_gradient(f, x, v, lo, hi, rel_step);
    return v;
  };
}

}  // namespace rnamf
