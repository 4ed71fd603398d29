#include "rnamf/emulator.hpp"

#include <cmath>

#include "rnamf/error.hpp"
#include "rnamf/expectations.hpp"
#include "rnamf/random.hpp"

namespace rnamf {

RecursiveStep recursive_step(const LevelModel& model, const Eigen::Ref<const Eigen::VectorXd>& x_unit,
                             double prev_mean, double prev_var) {
  if (!model.augmented()) throw ArgumentError("recursive_step requires an augmented (level >= 2) model");
  const Eigen::Index d = model.input_dim();
  if (x_unit.size() != d) throw ShapeError("recursive_step: input dimension mismatch");
  RecursiveStep out;
  if (!(prev_var > 0.0)) {
    Eigen::VectorXd z(d + 1);
    z.head(d) = x_unit;
    z[d] = prev_mean;
    const Moments m = conditional_moments(model, z);
    out.mean = m.mean;
    out.within = m.var;
    return out;
  }
  const Eigen::Index n = model.n();
  const double theta_y = *model.scales.output_scale;
  Eigen::VectorXd p(n), xi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 1.0;
    for (Eigen::Index j = 0; j < d && v > 0.0; ++j) v *= psi(model.kind, x_unit[j], model.design(i, j), model.scales.input_scales[j]);
    p[i] = v;
    xi[i] = v > 0.0 ? expected_psi(model.kind, prev_mean, prev_var, model.design(i, d), theta_y) : 0.0;
  }
  const Eigen::VectorXd m = p.cwiseProduct(xi);
  const Eigen::VectorXd& r = model.kinv_resid;
  out.mean = model.alpha + m.dot(r);

  double between = 0.0, trace = 0.0;
  const bool sqexp = model.kind == KernelKind::SqExp;
  const double se_scale = 1.0 / std::sqrt(1.0 + 4.0 * prev_var / theta_y);
  const double se_inv_mid = 1.0 / (0.5 * theta_y + 2.0 * prev_var);
  const double se_inv_diff = 1.0 / (2.0 * theta_y);
  const auto y = model.design.col(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p[i] == 0.0) continue;
    for (Eigen::Index k = 0; k <= i; ++k) {
      const double pp = p[i] * p[k];
      if (pp < 1e-300) continue;
      double zeta;
      if (sqexp) {
        const double mid = 0.5 * (y[i] + y[k]) - prev_mean;
        const double diff = y[i] - y[k];
        zeta = se_scale * std::exp(-mid * mid * se_inv_mid - diff * diff * se_inv_diff);
      } else {
        zeta = expected_psi_product(model.kind, prev_mean, prev_var, y[i], y[k], theta_y);
      }
      const double c = pp * (zeta - xi[i] * xi[k]);
      const double w = i == k ? 1.0 : 2.0;
      between += w * c * r[i] * r[k];
      trace += w * c * model.kinv(i, k);
    }
  }
  const Eigen::VectorXd lm = model.chol.triangularView<Eigen::Lower>().solve(m);
  double within = model.tau_sq * (1.0 - lm.squaredNorm() - trace);
  if (between < 0.0) {
    out.clamped = out.clamped || between < -1e-12 * model.tau_sq;
    between = 0.0;
  }
  if (within < 0.0) {
    out.clamped = out.clamped || within < -1e-12 * model.tau_sq;
    within = 0.0;
  }
  out.between = between;
  out.within = within;
  return out;
}

Eigen::MatrixXd RnaEmulator::level_design(const MultiFidelityDataset& data, const Eigen::VectorXd& lo,
                                          const Eigen::VectorXd& span, int level) {
  const Eigen::MatrixXd& x = data.designs[static_cast<std::size_t>(level - 1)];
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd z(n, level == 1 ? d : d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    z.row(i).head(d) = ((x.row(i).transpose() - lo).cwiseQuotient(span)).transpose();
    if (level > 1) z(i, d) = data.outputs[static_cast<std::size_t>(level - 2)][i];
  }
  return z;
}

RnaEmulator RnaEmulator::assemble(const MultiFidelityDataset& data, KernelKind kind) {
  data.validate();
  RnaEmulator e;
  e.data_ = std::make_shared<const MultiFidelityDataset>(data);
  e.kind_ = kind;
  const Eigen::MatrixXd& x1 = data.designs.front();
  e.lo_ = x1.colwise().minCoeff().transpose();
  e.span_ = (x1.colwise().maxCoeff().transpose() - e.lo_);
  for (Eigen::Index j = 0; j < e.span_.size(); ++j) {
    if (!(e.span_[j] > 0.0)) e.span_[j] = 1.0;
  }
  return e;
}

RnaEmulator RnaEmulator::fit(const MultiFidelityDataset& data, KernelKind kind, const FitOptions& options,
                             const std::vector<LengthscaleVector>* warm_starts) {
  RnaEmulator e = assemble(data, kind);
  for (int l = 1; l <= data.levels(); ++l) {
    FitOptions lo = options;
    lo.rng_seed = derive_seed(options.rng_seed, static_cast<std::uint64_t>(l));
    if (warm_starts && static_cast<int>(warm_starts->size()) >= l) {
      lo.warm_starts.push_back((*warm_starts)[static_cast<std::size_t>(l - 1)].packed());
    }
    const Eigen::MatrixXd z = level_design(data, e.lo_, e.span_, l);
    try {
      e.models_.push_back(fit_level(z, data.outputs[static_cast<std::size_t>(l - 1)], kind, lo, l > 1, l));
    } catch (const FitError& err) {
      throw FitError(std::string("level ") + std::to_string(l) + ": " + err.what());
    }
  }
  return e;
}

RnaEmulator RnaEmulator::from_hyperparameters(const MultiFidelityDataset& data, KernelKind kind,
                                              const std::vector<LengthscaleVector>& scales, double jitter) {
  return from_hyperparameters(data, kind, scales, std::vector<double>(scales.size(), jitter));
}

RnaEmulator RnaEmulator::from_hyperparameters(const MultiFidelityDataset& data, KernelKind kind,
                                              const std::vector<LengthscaleVector>& scales,
                                              const std::vector<double>& jitters) {
  RnaEmulator e = assemble(data, kind);
  if (static_cast<int>(scales.size()) != data.levels()) throw ShapeError("one lengthscale vector per level required");
  if (jitters.size() != scales.size()) throw ShapeError("one jitter value per level required");
  for (int l = 1; l <= data.levels(); ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    if (scales[i].augmented() != (l > 1) || scales[i].input_dim() != data.dim)
      throw ShapeError("level " + std::to_string(l) + ": lengthscale vector has the wrong form");
    e.models_.push_back(LevelModel::build(l, kind, scales[i], level_design(data, e.lo_, e.span_, l), data.outputs[i], jitters[i]));
  }
  return e;
}

const LevelModel& RnaEmulator::level_model(int level) const {
  check_level(level);
  return models_[static_cast<std::size_t>(level - 1)];
}

std::vector<LengthscaleVector> RnaEmulator::scales() const {
  std::vector<LengthscaleVector> out;
  for (const auto& m : models_) out.push_back(m.scales);
  return out;
}

void RnaEmulator::check_level(int level) const {
  if (level < 1 || level > levels()) {
    throw ArgumentError("level " + std::to_string(level) + " out of range 1.." + std::to_string(levels()));
  }
}

Eigen::VectorXd RnaEmulator::to_unit(const Eigen::VectorXd& x) const {
  if (x.size() != lo_.size()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " coordinates, expected " + std::to_string(lo_.size()));
  }
  return (x - lo_).cwiseQuotient(span_);
}

bool RnaEmulator::in_fitted_box(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd u = to_unit(x);
  return (u.array() >= -1e-12).all() && (u.array() <= 1.0 + 1e-12).all();
}

std::vector<Moments> RnaEmulator::predict_path(const Eigen::VectorXd& x, int level) const {
  check_level(level);
  const Eigen::VectorXd u = to_unit(x);
  std::vector<Moments> path;
  path.reserve(static_cast<std::size_t>(level));
  path.push_back(conditional_moments(models_[0], u));
  for (int l = 2; l <= level; ++l) {
    const RecursiveStep s = recursive_step(models_[static_cast<std::size_t>(l - 1)], u, path.back().mean, path.back().var);
    if (s.clamped) clamps_->fetch_add(1);
    path.push_back({s.mean, s.var()});
  }
  return path;
}

PosteriorMoments RnaEmulator::predict(const Eigen::VectorXd& x, int level) const {
  const auto path = predict_path(x, level);
  PosteriorMoments pm;
  pm.mean = path.back().mean;
  pm.var = path.back().var;
  pm.extrapolated = !in_fitted_box(x);
  return pm;
}

McEstimate RnaEmulator::mc_posterior_oracle(const Eigen::VectorXd& x, int level, int n_samples,
                                            std::uint64_t seed) const {
  check_level(level);
  if (n_samples < 2) throw ArgumentError("mc_posterior_oracle needs at least 2 samples");
  const Eigen::VectorXd u = to_unit(x);
  const Eigen::Index d = u.size();
  const Moments m1 = conditional_moments(models_[0], u);
  Rng rng(seed);
  Eigen::VectorXd z(d + 1);
  z.head(d) = u;
  std::vector<double> samples(static_cast<std::size_t>(n_samples));
  for (auto& f : samples) {
    f = m1.mean + std::sqrt(m1.var) * rng.normal();
    for (int l = 2; l <= level; ++l) {
      z[d] = f;
      const Moments ml = conditional_moments(models_[static_cast<std::size_t>(l - 1)], z);
      f = ml.mean + std::sqrt(ml.var) * rng.normal();
    }
  }
  const double n = static_cast<double>(n_samples);
  double mean = 0.0;
  for (double f : samples) mean += f;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double f : samples) {
    const double c = (f - mean) * (f - mean);
    m2 += c;
    m4 += c * c;
  }
  McEstimate out;
  out.mean = mean;
  out.var = m2 / (n - 1.0);
  out.mean_se = std::sqrt(out.var / n);
  const double m2n = m2 / n;
  out.var_se = std::sqrt(std::max(0.0, m4 / n - m2n * m2n) / n);
  return out;
}

Decomposition RnaEmulator::variance_decomposition(const Eigen::VectorXd& x, int mc_samples,
                                                  std::uint64_t seed) const {
  const int L = levels();
  if (L > 3) throw UnsupportedLevel("variance decomposition is supported for at most 3 levels");
  const Eigen::VectorXd u = to_unit(x);
  Decomposition out;
  const Moments m1 = conditional_moments(models_[0], u);
  if (L == 1) {
    out.v = {m1.var};
    out.std_error = {0.0};
    out.total_var = m1.var;
    return out;
  }
  const RecursiveStep s2 = recursive_step(models_[1], u, m1.mean, m1.var);
  if (L == 2) {
    out.v = {s2.between, s2.within};
    out.std_error = {0.0, 0.0};
    out.total_var = s2.var();
    return out;
  }
  const RecursiveStep s3 = recursive_step(models_[2], u, s2.mean, s2.var());
  out.total_var = s3.var();
  if (mc_samples < 2) throw ArgumentError("variance decomposition needs at least 2 Monte Carlo samples");
  const double alpha3 = models_[2].alpha;
  const int pairs = std::max(1, mc_samples / 2);
  Rng rng(seed);
  // Moment-matched f_2 = mu*_2 + a + b with a ~ N(0, V_1 of level 2) carried
  // from f_1 and b ~ N(0, V_2 of level 2) from W_2; sampled over a.
  // Per antithetic pair: a = mean of J^2 + between, b = mean of J, c = mean of between.
  std::vector<double> a(static_cast<std::size_t>(pairs)), b(a.size()), c(a.size());
  const double s1 = std::sqrt(s2.between);
  for (int p = 0; p < pairs; ++p) {
    const double eps = rng.normal();
    double sa = 0.0, sb = 0.0, sc = 0.0;
    for (double sign : {1.0, -1.0}) {
      const RecursiveStep st = recursive_step(models_[2], u, s2.mean + sign * s1 * eps, s2.within);
      const double j = st.mean - alpha3;
      sa += j * j + st.between;
      sb += j;
      sc += st.between;
    }
    a[static_cast<std::size_t>(p)] = 0.5 * sa;
    b[static_cast<std::size_t>(p)] = 0.5 * sb;
    c[static_cast<std::size_t>(p)] = 0.5 * sc;
  }
  const double np = static_cast<double>(pairs);
  auto mean_of = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e;
    return s / np;
  };
  const double ma = mean_of(a), mb = mean_of(b), mc = mean_of(c);
  // V_1 = E[J^2] - E[J]^2 with J^2 = (J^2 + between) - between.
  const double v1 = (ma - mc) - mb * mb;
  const double v2 = mc;
  // Standard errors by the delta method over pairs.
  double var_v1 = 0.0, var_v2 = 0.0, var_sum = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const double g1 = (a[i] - c[i] - ma + mc) - 2.0 * mb * (b[i] - mb);
    const double g2 = c[i] - mc;
    const double gs = (a[i] - ma) - 2.0 * mb * (b[i] - mb);
    var_v1 += g1 * g1;
    var_v2 += g2 * g2;
    var_sum += gs * gs;
  }
  const double denom = np * std::max(1.0, np - 1.0);
  out.v = {std::max(0.0, v1), std::max(0.0, v2), s3.within};
  out.std_error = {std::sqrt(var_v1 / denom), std::sqrt(var_v2 / denom), 0.0};
  out.sum_std_error = std::sqrt(var_sum / denom);
  return out;
}

double RnaEmulator::scaling_factor(const Eigen::VectorXd& x, int level) const {
  check_level(level);
  if (level < 2) throw ArgumentError("scaling factor is defined for levels >= 2");
  const auto path = predict_path(x, level - 1);
  const double mu = path.back().mean, var = path.back().var;
  if (!(var > 0.0)) return 1.0;
  const LevelModel& m = models_[static_cast<std::size_t>(level - 1)];
  const double theta = *m.scales.output_scale;
  if (kind_ == KernelKind::SqExp) return std::sqrt(theta / (theta + 2.0 * var));
  const Eigen::Index d = m.input_dim();
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < m.n(); ++i) {
    const double at_mean = psi(kind_, mu, m.design(i, d), theta);
    if (at_mean < 1e-300) continue;
    sum += expected_psi(kind_, mu, var, m.design(i, d), theta) / at_mean;
    ++count;
  }
  if (count == 0) return 1.0;
  return std::min(1.0, sum / count);
}

Box RnaEmulator::fitted_box() const { return Box{lo_, lo_ + span_}; }

Eigen::Index RnaEmulator::find_design_row(int level, const Eigen::VectorXd& x, double tol) const {
  check_level(level);
  const Eigen::VectorXd u = to_unit(x);
  const auto& design = models_[static_cast<std::size_t>(level - 1)].design;
  const Eigen::Index d = u.size();
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    if ((design.row(i).head(d).transpose() - u).cwiseAbs().maxCoeff() <= tol) return i;
  return -1;
}

RnaEmulator RnaEmulator::with_observation(int level, const Eigen::VectorXd& x, const std::vector<double>& ys) const {
  check_level(level);
  if (static_cast<int>(ys.size()) < level) throw ArgumentError("with_observation: need one output per level");
  const Eigen::VectorXd u = to_unit(x);
  const Eigen::Index d = u.size();
  RnaEmulator e = *this;
  for (int l = 1; l <= level; ++l) {
    Eigen::VectorXd z(l == 1 ? d : d + 1);
    z.head(d) = u;
    if (l > 1) z[d] = ys[static_cast<std::size_t>(l - 2)];
    auto& model = e.models_[static_cast<std::size_t>(l - 1)];
    if (find_design_row(l, x, 1e-10) >= 0) continue;
    model = model.augmented_with(z, ys[static_cast<std::size_t>(l - 1)]);
  }
  return e;
}

}  // namespace rnamf
