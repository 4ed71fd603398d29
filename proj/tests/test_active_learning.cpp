#include <cmath>

#include <gtest/gtest.h>

#include "rnamf/active_learning.hpp"
#include "rnamf/error.hpp"
#include "rnamf/experiment.hpp"
#include "rnamf/gp.hpp"
#include "rnamf/problems.hpp"
#include "rnamf/random.hpp"

using namespace rnamf;

namespace {

struct Fixture {
  SyntheticProblem problem;
  MultiFidelityDataset data;
  RnaEmulator emu;
};

Fixture fitted(const std::string& name, KernelKind kind = KernelKind::SqExp, std::uint64_t seed = 1) {
  auto p = problem_by_name(name);
  auto data = make_dataset(p, nested_design(p.default_sizes, p.dim, seed), {});
  FitOptions opt;
  opt.restarts = 2;
  auto emu = RnaEmulator::fit(data, kind, opt);
  return {std::move(p), std::move(data), std::move(emu)};
}

// Refit-free ALC by explicit imputation and with_observation, sharing the context's noise.
double generic_reduction(const RnaEmulator& emu, const AlcContext& ctx, const Eigen::VectorXd& x, int level) {
  const int L = emu.levels(), d = emu.dim();
  if (emu.find_design_row(level, x, 1e-8) >= 0) return 0.0;
  const Eigen::VectorXd u = emu.to_unit(x);
  const auto& pts = ctx.integration_points();
  const auto& noise = ctx.imputation_noise();
  double future = 0.0;
  for (Eigen::Index j = 0; j < noise.rows(); ++j) {
    std::vector<double> ys;
    for (int s = 1; s <= level; ++s) {
      const Eigen::Index row = emu.find_design_row(s, x, 1e-10);
      if (row >= 0) {
        ys.push_back(emu.level_model(s).outputs[row]);
        continue;
      }
      Moments m;
      if (s == 1) {
        m = conditional_moments(emu.level_model(1), u);
      } else {
        Eigen::VectorXd z(d + 1);
        z.head(d) = u;
        z[d] = ys.back();
        m = conditional_moments(emu.level_model(s), z);
      }
      ys.push_back(m.mean + std::sqrt(m.var) * noise(j, s - 1));
    }
    const auto next = emu.with_observation(level, x, ys);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) sum += next.predict(pts.row(i).transpose(), L).var;
    future += sum / static_cast<double>(pts.rows());
  }
  return ctx.base_variance().mean() - future / static_cast<double>(noise.rows());
}

}  // namespace

TEST(CostModel, CumulativeAndValidation) {
  const CostModel c({1, 3, 10});
  EXPECT_EQ(c.cost(2), 3.0);
  EXPECT_EQ(c.cumulative(1), 1.0);
  EXPECT_EQ(c.cumulative(2), 4.0);
  EXPECT_EQ(c.cumulative(3), 14.0);
  EXPECT_THROW(c.cumulative(4), ArgumentError);
  EXPECT_THROW(CostModel({1, 1}), InvalidParameter);
  EXPECT_THROW(CostModel({0, 1}), InvalidParameter);
  EXPECT_THROW(CostModel({}), InvalidParameter);
}

TEST(Strategy, ParseRoundTrip) {
  for (auto s : {Strategy::ALD, Strategy::ALM, Strategy::ALC, Strategy::ALMC}) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("ALX"), ArgumentError);
}

TEST(Criteria, AlmAndAldScaleByCumulativeCost) {
  const auto f = fitted("perdikaris");
  const CostModel costs({1, 3});
  for (double x : {0.05, 0.42, 0.93}) {
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, x);
    const auto dec = f.emu.variance_decomposition(v);
    EXPECT_NEAR(ald_criterion(f.emu, v, 1, costs), std::max(0.0, dec.v[0]) / 1.0, 1e-15);
    EXPECT_NEAR(ald_criterion(f.emu, v, 2, costs), std::max(0.0, dec.v[1]) / 4.0, 1e-15);
    EXPECT_NEAR(alm_criterion(f.emu, v, 2, costs), f.emu.predict(v, 2).var / 4.0, 1e-15);
  }
}

TEST(Criteria, NearZeroAtTrainingPoints) {
  const auto f = fitted("perdikaris");
  const CostModel costs({1, 3});
  AlcContext ctx(f.emu, *f.data.bounds, AlcOptions{200, 20, 1});
  const double tau2 = f.emu.level_model(2).tau_sq;
  for (Eigen::Index i = 0; i < f.data.size(2); ++i) {
    const Eigen::VectorXd x = f.data.designs[1].row(i).transpose();
    EXPECT_LE(alm_criterion(f.emu, x, 2, costs), 1e-6 * tau2);
    EXPECT_LE(ald_criterion(f.emu, x, 2, costs), 1e-6 * tau2);
    EXPECT_EQ(alc_criterion(ctx, x, 2, costs), 0.0);
    EXPECT_EQ(alc_criterion(ctx, x, 1, costs), 0.0);
  }
}

TEST(Alc, FastPathMatchesGenericImputation) {
  for (const char* name : {"perdikaris", "currin", "branin"}) {
    for (auto kind : {KernelKind::SqExp, KernelKind::Matern25}) {
      const auto f = fitted(name, kind);
      const AlcContext ctx(f.emu, *f.data.bounds, AlcOptions{60, 8, 3});
      const double tau2 = f.emu.level_model(f.emu.levels()).tau_sq;
      Rng rng(5);
      for (int t = 0; t < 3; ++t) {
        for (int level = 1; level <= f.emu.levels(); ++level) {
          Eigen::VectorXd u(f.problem.dim);
          for (int j = 0; j < f.problem.dim; ++j) u[j] = rng.uniform();
          Eigen::VectorXd x = f.problem.bounds.from_unit(u);
          if (t == 2) x = f.data.designs[0].row(f.data.size(1) - 1).transpose();
          const double fast = ctx.variance_reduction(x, level);
          EXPECT_NEAR(fast, generic_reduction(f.emu, ctx, x, level), 1e-8 * tau2)
              << name << " " << to_string(kind) << " level " << level;
        }
      }
    }
  }
}

TEST(Alc, ReductionIsNonnegative) {
  const auto f = fitted("currin");
  const AlcContext ctx(f.emu, *f.data.bounds, AlcOptions{200, 30, 2});
  const double tau2 = f.emu.level_model(2).tau_sq;
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Vector2d x(rng.uniform(), rng.uniform());
    for (int l = 1; l <= 2; ++l) EXPECT_GE(ctx.variance_reduction(x, l), -1e-6 * tau2);
  }
}

TEST(OptimizeAcquisition, FindsQuadraticPeak) {
  const Box box{Eigen::Vector2d(-1, -1), Eigen::Vector2d(2, 2)};
  const Eigen::Vector2d peak(0.3, 1.4);
  AcquisitionOptions opt;
  opt.seed = 4;
  const auto r = optimize_acquisition([&](const Eigen::VectorXd& x) { return -(x - peak).squaredNorm(); }, box, opt);
  EXPECT_LE((r.x - peak).norm(), 1e-3);
  EXPECT_FALSE(r.used_fallback);

  const Eigen::Vector2d corner(2, -1);
  const auto edge = optimize_acquisition([&](const Eigen::VectorXd& x) { return -(x - Eigen::Vector2d(3, -2)).squaredNorm(); },
                                         box, opt);
  EXPECT_LE((edge.x - corner).norm(), 1e-3);
}

TEST(OptimizeAcquisition, ConstantCriterionAndExclusion) {
  const Box box = Box::unit(1);
  AcquisitionOptions opt;
  const auto r = optimize_acquisition([](const Eigen::VectorXd&) { return 0.25; }, box, opt);
  EXPECT_TRUE(box.contains(r.x));
  EXPECT_EQ(r.value, 0.25);
  const auto ex = optimize_acquisition([](const Eigen::VectorXd& x) { return -std::abs(x[0] - 0.5); }, box, opt, {},
                                       [](const Eigen::VectorXd& x) { return std::abs(x[0] - 0.5) < 0.1; });
  EXPECT_GE(std::abs(ex.x[0] - 0.5), 0.1 - 1e-12);
  EXPECT_NEAR(std::abs(ex.x[0] - 0.5), 0.1, 0.01);
}

TEST(Almc, StageOneMaximizesTopLevelVariance) {
  const auto f = fitted("perdikaris");
  const CostModel costs({1, 3});
  SelectOptions opt;
  opt.alc = AlcOptions{200, 20, 1};
  const auto r = almc_select(f.emu, costs, *f.data.bounds, opt);
  double best = 0.0;
  for (int i = 0; i <= 2000; ++i) best = std::max(best, f.emu.predict(Eigen::VectorXd::Constant(1, i / 2000.0), 2).var);
  EXPECT_GE(f.emu.predict(r.location, 2).var, best * (1 - 1e-3));
  EXPECT_TRUE(r.level == 1 || r.level == 2);
  EXPECT_EQ(r.cost_charged, costs.cumulative(r.level));
  ASSERT_EQ(r.per_level.size(), 2u);
}

TEST(Almc, ChosenLevelNeverHoldsTheLocation) {
  const auto f = fitted("perdikaris");
  const CostModel costs({1, 3});
  SelectOptions opt;
  opt.alc = AlcOptions{100, 10, 2};
  for (int maxl : {1, 2}) {
    opt.max_level = maxl;
    const auto r = almc_select(f.emu, costs, *f.data.bounds, opt);
    EXPECT_LE(r.level, maxl);
    EXPECT_LT(f.emu.find_design_row(r.level, r.location, 1e-8), 0);
    for (const auto& c : r.per_level) {
      if (f.emu.find_design_row(c.level, r.location, 1e-8) >= 0) {
        EXPECT_TRUE(std::isinf(c.best_value));
      }
    }
  }
}

TEST(SelectAcquisition, MaxLevelRestricts) {
  const auto f = fitted("perdikaris");
  const CostModel costs({1, 3});
  SelectOptions opt;
  opt.max_level = 1;
  const auto r = select_acquisition(Strategy::ALM, f.emu, costs, *f.data.bounds, opt);
  EXPECT_EQ(r.level, 1);
  EXPECT_EQ(r.cost_charged, 1.0);
}

TEST(AlLoop, ZeroBudgetDoesNothing) {
  const auto p = perdikaris();
  const auto data = make_dataset(p, nested_design({13, 8}, 1, 1), {1, 3});
  auto sim = [&](int l, const Eigen::VectorXd& x) { return p.evaluate(l, x); };
  const auto t = al_loop(sim, data, Strategy::ALM, CostModel({1, 3}), 0.0, KernelKind::SqExp);
  EXPECT_TRUE(t.records.empty());
  EXPECT_FALSE(t.aborted);
  EXPECT_EQ(t.dataset.size(1), 13);
  EXPECT_THROW(al_loop(sim, data, Strategy::ALM, CostModel({1, 3}), -1.0, KernelKind::SqExp), InvalidParameter);
}

TEST(AlLoop, RespectsBudgetKeepsNestingAndIsDeterministic) {
  const auto p = perdikaris();
  const auto data = make_dataset(p, nested_design({13, 8}, 1, 2), {1, 3});
  int calls = 0;
  auto sim = [&](int l, const Eigen::VectorXd& x) {
    ++calls;
    return p.evaluate(l, x);
  };
  AlOptions opt;
  opt.fit.restarts = 2;
  opt.select.alc = AlcOptions{100, 10, 0};
  opt.seed = 6;
  TestOracle oracle{uniform_points(p.bounds, 200, 3), Eigen::VectorXd()};
  oracle.truth.resize(oracle.points.rows());
  for (Eigen::Index i = 0; i < oracle.points.rows(); ++i) oracle.truth[i] = p.evaluate(2, oracle.points.row(i).transpose());

  for (auto strategy : {Strategy::ALM, Strategy::ALMC}) {
    calls = 0;
    const auto a = al_loop(sim, data, strategy, CostModel({1, 3}), 11.0, KernelKind::SqExp, opt, oracle);
    ASSERT_FALSE(a.aborted) << a.error;
    ASSERT_FALSE(a.records.empty());
    EXPECT_LE(a.records.back().accrued_cost, 11.0);
    EXPECT_GT(a.records.back().accrued_cost, 11.0 - 4.0);
    EXPECT_TRUE(validate_nested(a.dataset.designs).empty());
    EXPECT_NO_THROW(a.dataset.validate());
    ASSERT_TRUE(a.initial_rmse.has_value());
    for (const auto& r : a.records) {
      ASSERT_TRUE(r.rmse.has_value());
      EXPECT_EQ(static_cast<int>(r.outputs.size()), r.level);
      EXPECT_TRUE(p.bounds.contains(r.location));
    }
    EXPECT_LE(calls, 11);

    const auto b = al_loop(sim, data, strategy, CostModel({1, 3}), 11.0, KernelKind::SqExp, opt, oracle);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      EXPECT_EQ(a.records[i].level, b.records[i].level);
      EXPECT_EQ(a.records[i].location, b.records[i].location);
      EXPECT_EQ(*a.records[i].rmse, *b.records[i].rmse);
    }
  }
}
