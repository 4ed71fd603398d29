#include "rnamf/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rnamf/error.hpp"
#include "rnamf/metrics.hpp"
#include "rnamf/optimize.hpp"
#include "rnamf/random.hpp"

namespace rnamf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDuplicateTol = 1e-8;

Eigen::VectorXd clip(const Eigen::VectorXd& x, const Box& box) { return x.cwiseMax(box.lower).cwiseMin(box.upper); }

Eigen::MatrixXd grid_points(const Box& box, int per_axis) {
  const Eigen::Index d = box.dim();
  Eigen::Index total = 1;
  for (Eigen::Index j = 0; j < d; ++j) total *= per_axis;
  Eigen::MatrixXd g(total, d);
  for (Eigen::Index i = 0; i < total; ++i) {
    Eigen::Index rest = i;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(rest % per_axis) / (per_axis - 1);
      g(i, j) = box.lower[j] + t * (box.upper[j] - box.lower[j]);
      rest /= per_axis;
    }
  }
  return g;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::ALD: return "ALD";
    case Strategy::ALM: return "ALM";
    case Strategy::ALC: return "ALC";
    case Strategy::ALMC: return "ALMC";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "ALD") return Strategy::ALD;
  if (up == "ALM") return Strategy::ALM;
  if (up == "ALC") return Strategy::ALC;
  if (up == "ALMC") return Strategy::ALMC;
  throw ArgumentError("unknown strategy '" + name + "' (expected ALD, ALM, ALC or ALMC)");
}

CostModel::CostModel(std::vector<double> per_level) : per_level_(std::move(per_level)) {
  if (per_level_.empty()) throw InvalidParameter("cost model needs at least one level");
  double sum = 0.0;
  for (std::size_t i = 0; i < per_level_.size(); ++i) {
    const double c = per_level_[i];
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("costs must be positive and finite");
    if (i > 0 && !(c > per_level_[i - 1])) throw InvalidParameter("costs must be strictly increasing across levels");
    sum += c;
    cumulative_.push_back(sum);
  }
}

double CostModel::cost(int level) const {
  if (level < 1 || level > levels()) throw ArgumentError("cost: level out of range");
  return per_level_[static_cast<std::size_t>(level - 1)];
}

double CostModel::cumulative(int level) const {
  if (level < 1 || level > levels()) throw ArgumentError("cumulative cost: level out of range");
  return cumulative_[static_cast<std::size_t>(level - 1)];
}

double ald_criterion(const RnaEmulator& emu, const Eigen::VectorXd& x, int level, const CostModel& costs,
                     const AldOptions& options) {
  if (level < 1 || level > emu.levels()) throw ArgumentError("ald: level out of range");
  const Decomposition dec = emu.variance_decomposition(x, options.mc_samples, options.seed);
  return std::max(0.0, dec.v[static_cast<std::size_t>(level - 1)]) / costs.cumulative(level);
}

double alm_criterion(const RnaEmulator& emu, const Eigen::VectorXd& x, int level, const CostModel& costs) {
  return std::max(0.0, emu.predict(x, level).var) / costs.cumulative(level);
}

AlcContext::AlcContext(const RnaEmulator& emu, const Box& box, const AlcOptions& options)
    : AlcContext(emu, [&] {
        if (options.integration_points < 1) throw ArgumentError("alc: integration sample is empty");
        Rng rng(derive_seed(options.seed, 1));
        Eigen::MatrixXd pts(options.integration_points, box.dim());
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
          for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = rng.uniform(box.lower[j], box.upper[j]);
        return pts;
      }(), options.imputations, options.seed) {}

AlcContext::AlcContext(const RnaEmulator& emu, Eigen::MatrixXd integration_points, int imputations,
                       std::uint64_t seed)
    : emu_(&emu), points_(std::move(integration_points)) {
  if (points_.rows() == 0) throw ArgumentError("alc: integration sample is empty");
  if (points_.cols() != emu.dim()) throw ShapeError("alc: integration points have wrong dimension");
  if (imputations < 1) throw ArgumentError("alc: need at least one imputation");
  const Eigen::Index m = points_.rows();
  const LevelModel& m1 = emu.level_model(1);
  base_var_.resize(m);
  unit_points_.resize(emu.dim(), m);
  kinv_k1_.resize(m1.n(), m);
  mean1_.resize(m);
  var1_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd x = points_.row(i).transpose();
    base_var_[i] = emu.predict(x, emu.levels()).var;
    unit_points_.col(i) = emu.to_unit(x);
    const Eigen::VectorXd k = cross_cov(m1.kind, m1.design, unit_points_.col(i), m1.scales);
    kinv_k1_.col(i) = m1.kinv * k;
    const Moments mo = conditional_moments(m1, unit_points_.col(i));
    mean1_[i] = mo.mean;
    var1_[i] = mo.var;
  }
  Rng rng(derive_seed(seed, 2));
  noise_.resize(imputations, emu.levels());
  for (Eigen::Index j = 0; j < noise_.rows(); ++j)
    for (Eigen::Index s = 0; s < noise_.cols(); ++s) noise_(j, s) = rng.normal();
}

// The level-1 part of a hypothetical observation is a rank-one update of the
// level-1 posterior at every integration point; levels 2..l are bordered once
// per imputation. When only level 1 is observed, integration points whose
// level-1 moments do not move keep their base variance exactly.
double AlcContext::variance_reduction(const Eigen::VectorXd& x, int level) const {
  const RnaEmulator& emu = *emu_;
  if (level < 1 || level > emu.levels()) throw ArgumentError("alc: level out of range");
  if (emu.find_design_row(level, x, kDuplicateTol) >= 0) return 0.0;
  const int L = emu.levels();
  const LevelModel& m1 = emu.level_model(1);
  const Eigen::VectorXd u = emu.to_unit(x);
  const Eigen::Index d = u.size();
  const Eigen::Index nimp = noise_.rows();
  std::vector<Eigen::Index> known(static_cast<std::size_t>(level));
  for (int s = 1; s <= level; ++s) known[static_cast<std::size_t>(s - 1)] = emu.find_design_row(s, x, 1e-10);

  // imputed outputs and bordered models, one set per imputation
  const Moments at_x = conditional_moments(m1, u);
  Eigen::MatrixXd ys(nimp, level);
  std::vector<std::vector<LevelModel>> bordered(static_cast<std::size_t>(nimp));
  Eigen::VectorXd z(d + 1);
  z.head(d) = u;
  for (Eigen::Index j = 0; j < nimp; ++j) {
    for (int s = 1; s <= level; ++s) {
      const LevelModel& model = emu.level_model(s);
      const Eigen::Index row = known[static_cast<std::size_t>(s - 1)];
      if (row >= 0) {
        ys(j, s - 1) = model.outputs[row];
        continue;
      }
      Moments m = at_x;
      if (s > 1) {
        z[d] = ys(j, s - 2);
        m = conditional_moments(model, z);
      }
      ys(j, s - 1) = m.mean + std::sqrt(std::max(0.0, m.var)) * noise_(j, s - 1);
    }
    auto& chain = bordered[static_cast<std::size_t>(j)];
    for (int s = 2; s <= level; ++s) {
      const LevelModel& model = emu.level_model(s);
      if (known[static_cast<std::size_t>(s - 1)] >= 0) {
        chain.push_back(model);
        continue;
      }
      z[d] = ys(j, s - 2);
      try {
        chain.push_back(model.augmented_with(z, ys(j, s - 1)));
      } catch (const ConditioningError&) {
        return 0.0;
      }
    }
  }

  Eigen::VectorXd b, kb;
  double schur = 1.0;
  const bool update1 = known[0] < 0;
  if (update1) {
    b = cross_cov(m1.kind, m1.design, u, m1.scales);
    kb = m1.kinv * b;
    schur = 1.0 + m1.jitter - b.dot(kb);
    if (!(schur > 0.0)) return 0.0;
  }
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(nimp);
  if (update1) shift = ys.col(0).array() - at_x.mean;
  const double max_shift = nimp > 0 ? shift.cwiseAbs().maxCoeff() : 0.0;

  double total = 0.0;
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    double gain = 0.0, new_var = var1_[i];
    if (update1) {
      const double c = kernel_input(m1.kind, unit_points_.col(i), u, m1.scales) - kinv_k1_.col(i).dot(b);
      gain = c / schur;
      new_var = std::max(0.0, var1_[i] - m1.tau_sq * c * gain);
    }
    const double mu = mean1_[i];
    if (level == 1) {
      const double ulp = std::nextafter(std::abs(mu), std::numeric_limits<double>::infinity()) - std::abs(mu);
      if (new_var == var1_[i] && std::abs(gain) * max_shift < 0.5 * ulp) {
        total += base_var_[i];
        continue;
      }
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nimp; ++j) {
      double mean = mu + gain * shift[j];
      double var = new_var;
      const auto& chain = bordered[static_cast<std::size_t>(j)];
      for (int l = 2; l <= L; ++l) {
        const LevelModel& model = l <= level ? chain[static_cast<std::size_t>(l - 2)] : emu.level_model(l);
        const RecursiveStep st = recursive_step(model, unit_points_.col(i), mean, var);
        mean = st.mean;
        var = st.var();
      }
      acc += var;
    }
    total += acc / static_cast<double>(nimp);
  }
  return base_var_.mean() - total / static_cast<double>(points_.rows());
}

double alc_criterion(const AlcContext& context, const Eigen::VectorXd& x, int level, const CostModel& costs) {
  return std::max(0.0, context.variance_reduction(x, level)) / costs.cumulative(level);
}

double alc_criterion(const RnaEmulator& emu, const Eigen::VectorXd& x, int level, const CostModel& costs,
                     const Eigen::MatrixXd& integration_points, int imputations, std::uint64_t seed) {
  const AlcContext ctx(emu, integration_points, imputations, seed);
  return alc_criterion(ctx, x, level, costs);
}

OptimizeResult optimize_acquisition(const std::function<double(const Eigen::VectorXd&)>& criterion, const Box& box,
                                    const AcquisitionOptions& options, const Eigen::MatrixXd& anchors,
                                    const std::function<bool(const Eigen::VectorXd&)>& excluded) {
  const Eigen::Index d = box.dim();
  if (d == 0) throw ShapeError("acquisition box is empty");
  if (!((box.upper - box.lower).array() >= 0.0).all()) throw InvalidParameter("acquisition box has lower > upper");
  const Eigen::VectorXd span = box.upper - box.lower;

  auto raw = [&](const Eigen::VectorXd& x) {
    try {
      const double v = criterion(x);
      return std::isfinite(v) ? v : kNegInf;
    } catch (const Error&) {
      return kNegInf;
    }
  };
  auto score = [&](const Eigen::VectorXd& x) {
    if (excluded && excluded(x)) return kNegInf;
    return raw(x);
  };

  OptimizeResult best{box.lower, kNegInf, false, {}};
  auto consider = [&](const Eigen::VectorXd& x, double v) {
    if (v > best.value) best = {x, v, false, {}};
  };

  Rng rng(options.seed);
  const int n_starts = options.n_starts > 0 ? options.n_starts : static_cast<int>(10 * d);
  std::vector<Eigen::VectorXd> starts;
  const auto n_anchor = std::min<Eigen::Index>(anchors.rows(), n_starts / 2);
  if (n_anchor > 0) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(anchors.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    rng.shuffle(idx.begin(), idx.end());
    for (Eigen::Index k = 0; k < n_anchor; ++k) {
      Eigen::VectorXd x = anchors.row(idx[static_cast<std::size_t>(k)]).transpose();
      for (Eigen::Index j = 0; j < d; ++j) x[j] += options.perturb_scale * span[j] * rng.normal();
      starts.push_back(clip(x, box));
    }
  }
  while (static_cast<int>(starts.size()) < n_starts) {
    Eigen::VectorXd x(d);
    for (Eigen::Index j = 0; j < d; ++j) x[j] = rng.uniform(box.lower[j], box.upper[j]);
    starts.push_back(x);
  }

  OptimizeResult grid_best{box.lower, kNegInf, true, {}};
  if (options.grid_fallback && d <= 2) {
    const int per_axis = options.grid_points > 0 ? options.grid_points : (d == 1 ? 201 : 21);
    const Eigen::MatrixXd g = grid_points(box, per_axis);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const Eigen::VectorXd x = g.row(i).transpose();
      const double v = score(x);
      if (v > grid_best.value) grid_best = {x, v, true, {}};
    }
    if (std::isfinite(grid_best.value)) starts.push_back(grid_best.x);
  }

  // local ascent in unit coordinates of the box
  MinimizeOptions mopts;
  mopts.max_iters = options.max_iters;
  mopts.grad_tol = 1e-5;
  mopts.f_rel_tol = 1e-9;
  const Eigen::VectorXd safe_span = span.cwiseMax(1e-300);
  const Eigen::VectorXd u_lo = Eigen::VectorXd::Zero(d), u_hi = Eigen::VectorXd::Ones(d);
  auto from_unit = [&](const Eigen::VectorXd& u) { return clip(box.lower + u.cwiseProduct(span), box); };
  for (const auto& x0 : starts) {
    const double v0 = raw(x0);
    if (!std::isfinite(v0)) continue;
    consider(x0, score(x0));
    const double scale = std::max(std::abs(v0), 1e-300);
    ScalarObjective neg = [&](const Eigen::VectorXd& u) {
      const double v = raw(from_unit(u));
      return std::isfinite(v) ? -v / scale : std::numeric_limits<double>::infinity();
    };
    try {
      const Eigen::VectorXd u0 = ((x0 - box.lower).cwiseQuotient(safe_span)).cwiseMax(0.0).cwiseMin(1.0);
      const MinimizeResult r = minimize_box(with_fd_gradient(neg, u_lo, u_hi), u0, u_lo, u_hi, mopts);
      const Eigen::VectorXd x = from_unit(r.x);
      consider(x, score(x));
    } catch (const Error&) {
    }
  }

  if (!std::isfinite(best.value)) {
    if (!std::isfinite(grid_best.value)) throw Error("acquisition optimization failed: no finite criterion value");
    grid_best.warning = "all local starts failed; returning the best grid point";
    return grid_best;
  }
  return best;
}

namespace {

Eigen::MatrixXd anchor_points(const RnaEmulator& emu) { return emu.dataset().designs.front(); }

std::function<bool(const Eigen::VectorXd&)> duplicate_guard(const RnaEmulator& emu, int level) {
  return [&emu, level](const Eigen::VectorXd& x) { return emu.find_design_row(level, x, kDuplicateTol) >= 0; };
}

int top_level(const RnaEmulator& emu, const SelectOptions& options) {
  const int L = emu.levels();
  return options.max_level > 0 ? std::min(options.max_level, L) : L;
}

AcquisitionResult choose(Strategy strategy, std::vector<LevelCurve> curves, const CostModel& costs) {
  AcquisitionResult res;
  res.strategy = strategy;
  res.per_level = std::move(curves);
  const LevelCurve* best = nullptr;
  for (const auto& c : res.per_level)
    if (!best || c.best_value > best->best_value) best = &c;
  if (!best) throw Error("acquisition produced no candidate level");
  res.level = best->level;
  res.location = best->argmax;
  res.criterion_value = best->best_value;
  res.cost_charged = costs.cumulative(res.level);
  return res;
}

}  // namespace

AcquisitionResult almc_select(const RnaEmulator& emu, const CostModel& costs, const Box& box,
                              const SelectOptions& options) {
  const int L = emu.levels();
  if (costs.levels() != L) throw ArgumentError("cost model level count does not match the emulator");
  AcquisitionOptions aopts = options.acquisition;
  const int maxl = top_level(emu, options);
  // x* must still be new at the highest level we may acquire
  const OptimizeResult stage1 = optimize_acquisition(
      [&](const Eigen::VectorXd& x) { return emu.predict(x, L).var; }, box, aopts, anchor_points(emu),
      duplicate_guard(emu, maxl));
  std::vector<LevelCurve> curves;
  if (L == 1) {
    curves.push_back({1, stage1.value / costs.cumulative(1), stage1.x});
    return choose(Strategy::ALMC, std::move(curves), costs);
  }
  const AlcContext ctx(emu, box, options.alc);
  for (int l = 1; l <= maxl; ++l) {
    const bool present = emu.find_design_row(l, stage1.x, kDuplicateTol) >= 0;
    curves.push_back({l, present ? -std::numeric_limits<double>::infinity() : alc_criterion(ctx, stage1.x, l, costs),
                      stage1.x});
  }
  return choose(Strategy::ALMC, std::move(curves), costs);
}

AcquisitionResult select_acquisition(Strategy strategy, const RnaEmulator& emu, const CostModel& costs,
                                     const Box& box, const SelectOptions& options) {
  if (costs.levels() != emu.levels()) throw ArgumentError("cost model level count does not match the emulator");
  if (strategy == Strategy::ALMC) return almc_select(emu, costs, box, options);
  std::optional<AlcContext> ctx;
  if (strategy == Strategy::ALC) ctx.emplace(emu, box, options.alc);
  const Eigen::MatrixXd anchors = anchor_points(emu);
  std::vector<LevelCurve> curves;
  for (int l = 1; l <= top_level(emu, options); ++l) {
    std::function<double(const Eigen::VectorXd&)> crit;
    switch (strategy) {
      case Strategy::ALD:
        crit = [&, l](const Eigen::VectorXd& x) { return ald_criterion(emu, x, l, costs, options.ald); };
        break;
      case Strategy::ALM:
        crit = [&, l](const Eigen::VectorXd& x) { return alm_criterion(emu, x, l, costs); };
        break;
      default:
        crit = [&, l](const Eigen::VectorXd& x) { return alc_criterion(*ctx, x, l, costs); };
        break;
    }
    AcquisitionOptions aopts = options.acquisition;
    aopts.seed = derive_seed(options.acquisition.seed, static_cast<std::uint64_t>(l));
    const OptimizeResult r = optimize_acquisition(crit, box, aopts, anchors, duplicate_guard(emu, l));
    curves.push_back({l, r.value, r.x});
  }
  return choose(strategy, std::move(curves), costs);
}

AcquisitionResult restrict_levels(const AcquisitionResult& result, int max_level, const CostModel& costs) {
  std::vector<LevelCurve> allowed;
  for (const auto& c : result.per_level)
    if (c.level <= max_level) allowed.push_back(c);
  AcquisitionResult r = choose(result.strategy, std::move(allowed), costs);
  r.per_level = result.per_level;
  return r;
}

namespace {

void score(const RnaEmulator& emu, const TestOracle& oracle, std::optional<double>& rmse_out,
           std::optional<double>& crps_out) {
  const int L = emu.levels();
  std::vector<PosteriorMoments> preds;
  Eigen::VectorXd means(oracle.points.rows());
  for (Eigen::Index i = 0; i < oracle.points.rows(); ++i) {
    preds.push_back(emu.predict(oracle.points.row(i).transpose(), L));
    means[i] = preds.back().mean;
  }
  rmse_out = rmse(means, oracle.truth);
  crps_out = crps(preds, oracle.truth);
}

}  // namespace

AlTrace al_loop(const Simulator& simulator, const MultiFidelityDataset& initial, Strategy strategy,
                const CostModel& costs, double budget, KernelKind kind, const AlOptions& options,
                const std::optional<TestOracle>& oracle) {
  if (!(budget >= 0.0)) throw InvalidParameter("budget must be nonnegative");
  initial.validate();
  if (costs.levels() != initial.levels()) throw ArgumentError("cost model level count does not match the dataset");
  if (oracle && oracle->points.rows() != oracle->truth.size()) throw ShapeError("test oracle size mismatch");

  AlTrace trace;
  trace.dataset = initial;
  MultiFidelityDataset& data = trace.dataset;
  const int L = data.levels();

  FitOptions fit = options.fit;
  fit.rng_seed = derive_seed(options.seed, 0);
  RnaEmulator emu = RnaEmulator::fit(data, kind, fit);
  const Box box = data.bounds.value_or(emu.fitted_box());
  if (oracle) score(emu, *oracle, trace.initial_rmse, trace.initial_crps);

  double accrued = 0.0;
  for (int step = 1; options.max_steps <= 0 || step <= options.max_steps; ++step) {
    const double remaining = budget - accrued;
    int affordable = 0;
    for (int l = 1; l <= L; ++l)
      if (costs.cumulative(l) <= remaining * (1.0 + 1e-12)) affordable = l;
    if (affordable == 0) break;

    const std::uint64_t step_seed = derive_seed(options.seed, static_cast<std::uint64_t>(step));
    SelectOptions sel = options.select;
    sel.max_level = 0;
    sel.acquisition.seed = derive_seed(step_seed, 1);
    sel.alc.seed = derive_seed(step_seed, 2);
    sel.ald.seed = derive_seed(step_seed, 3);

    AlRecord rec;
    rec.step = step;
    rec.strategy = strategy;
    try {
      AcquisitionResult res = select_acquisition(strategy, emu, costs, box, sel);
      if (res.level > affordable) {
        if (strategy == Strategy::ALMC) {
          sel.max_level = affordable;
          res = almc_select(emu, costs, box, sel);
        } else {
          res = restrict_levels(res, affordable, costs);
        }
      }
      rec.level = res.level;
      rec.location = res.location;
      rec.criterion_value = res.criterion_value;
      rec.imputed = strategy == Strategy::ALC || strategy == Strategy::ALMC;
      for (int s = 1; s <= res.level; ++s) {
        const Eigen::Index row = data.find_row(s, res.location, 1e-12);
        rec.outputs.push_back(row >= 0 ? data.outputs[static_cast<std::size_t>(s - 1)][row]
                                       : simulator(s, res.location));
      }
      data.insert(res.level, res.location, rec.outputs);
      data.validate();
      const std::vector<LengthscaleVector> warm = emu.scales();
      fit.rng_seed = derive_seed(step_seed, 4);
      emu = RnaEmulator::fit(data, kind, fit, &warm);
    } catch (const std::exception& e) {
      trace.aborted = true;
      trace.error = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    accrued += costs.cumulative(rec.level);
    rec.accrued_cost = accrued;
    if (oracle) score(emu, *oracle, rec.rmse, rec.crps);
    trace.records.push_back(rec);
    if (options.on_step) options.on_step(trace.records.back(), emu);
  }
  return trace;
}

}  // namespace rnamf
