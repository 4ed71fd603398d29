#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "rnamf/error.hpp"
#include "rnamf/experiment.hpp"
#include "rnamf/metrics.hpp"
#include "rnamf/normal.hpp"
#include "rnamf/problems.hpp"
#include "rnamf/random.hpp"

using namespace rnamf;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// int (F(t) - 1{t >= y})^2 dt for the N(mu, sd^2) forecast
double crps_quadrature(double mu, double sd, double y) {
  using boost::math::quadrature::gauss_kronrod;
  auto below = [&](double t) { return std::pow(normal::cdf((t - mu) / sd), 2); };
  auto above = [&](double t) { return std::pow(1.0 - normal::cdf((t - mu) / sd), 2); };
  const double lo = std::min(mu, y) - 40 * sd, hi = std::max(mu, y) + 40 * sd;
  return gauss_kronrod<double, 61>::integrate(below, lo, y, 15, 1e-13) +
         gauss_kronrod<double, 61>::integrate(above, y, hi, 15, 1e-13);
}

}  // namespace

TEST(Problems, HandValues) {
  EXPECT_NEAR(perdikaris().evaluate(1, vec({0.25})), 0.0, 1e-15);
  EXPECT_NEAR(perdikaris().evaluate(2, vec({1.0 / 16})), -1.3517136, 1e-7);
  EXPECT_NEAR(perdikaris().evaluate(2, vec({1.0 / 16})), 1.0 / 16 - std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(branin().evaluate(3, vec({std::numbers::pi, 2.275})), 0.397887, 1e-6);
}

TEST(Problems, CurrinLowFidelityIsFourPointAverage) {
  const auto p = currin();
  for (double x1 : {0.2, 0.55, 0.9}) {
    for (double x2 : {0.05, 0.3, 0.8}) {
      const double avg = 0.25 * (p.raw(2, vec({x1 + 0.05, x2 + 0.05})) + p.raw(2, vec({x1 + 0.05, x2 - 0.05})) +
                                 p.raw(2, vec({x1 - 0.05, x2 + 0.05})) + p.raw(2, vec({x1 - 0.05, x2 - 0.05})));
      EXPECT_NEAR(p.evaluate(1, vec({x1, x2})), avg, 1e-12);
    }
  }
}

TEST(Problems, FrankeComposition) {
  const auto p = franke();
  const auto x = vec({0.3, 0.7});
  EXPECT_NEAR(p.evaluate(3, x), std::sin(2 * std::numbers::pi * (p.evaluate(2, x) - 1.0)), 1e-15);
}

TEST(Problems, DomainAndShapeErrors) {
  EXPECT_THROW(perdikaris().evaluate(1, vec({1.5})), DomainError);
  EXPECT_THROW(perdikaris().evaluate(3, vec({0.5})), ArgumentError);
  EXPECT_THROW(park().evaluate(1, vec({0.5})), ShapeError);
  EXPECT_THROW(borehole().evaluate(1, Eigen::VectorXd::Constant(8, 0.01)), DomainError);
  EXPECT_THROW(problem_by_name("rosenbrock"), ArgumentError);
}

TEST(Problems, AllFamiliesDefinedOnTheirDomain) {
  for (const auto& name : problem_names()) {
    const auto p = problem_by_name(name);
    EXPECT_EQ(static_cast<int>(p.default_sizes.size()), p.levels);
    EXPECT_EQ(static_cast<int>(p.default_costs.size()), p.levels);
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd u(p.dim);
      for (int j = 0; j < p.dim; ++j) u[j] = rng.uniform();
      for (int l = 1; l <= p.levels; ++l) EXPECT_TRUE(std::isfinite(p.evaluate(l, p.bounds.from_unit(u)))) << name;
    }
  }
}

TEST(Problems, DatasetsReproduceAugmentationValues) {
  for (const auto& name : problem_names()) {
    const auto p = problem_by_name(name);
    const auto data = make_dataset(p, nested_design(p.default_sizes, p.dim, 2), {});
    for (int l = 2; l <= p.levels; ++l) {
      for (Eigen::Index i = 0; i < data.size(l); ++i) {
        EXPECT_EQ(data.outputs[static_cast<std::size_t>(l - 2)][i],
                  p.evaluate(l - 1, data.designs[static_cast<std::size_t>(l - 1)].row(i).transpose()));
      }
    }
  }
}

TEST(Metrics, Rmse) {
  const Eigen::Vector3d t(1, 2, 3);
  EXPECT_EQ(rmse(t, t), 0.0);
  EXPECT_NEAR(rmse(t.array() + 0.7, t), 0.7, 1e-15);
  Rng rng(3);
  Eigen::VectorXd a(50), b(50);
  double s = 0;
  for (int i = 0; i < 50; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  EXPECT_NEAR(rmse(a, b), std::sqrt(s / 50), 1e-14);
  EXPECT_THROW(rmse(a, t), ShapeError);
}

TEST(Metrics, CrpsHandValues) {
  EXPECT_EQ(crps_gaussian(1.5, 0.0, 1.5), 0.0);
  EXPECT_EQ(crps_gaussian(1.5, 0.0, 2.0), 0.5);
  EXPECT_NEAR(crps_gaussian(0.3, 1.0, 0.3), 0.2336950, 1e-7);
  EXPECT_NEAR(crps_gaussian(0.3, 1.0, 0.3), 2 * normal::pdf(0) - 1 / std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_THROW(crps_gaussian(0, -1, 0), InvalidParameter);
}

TEST(Metrics, CrpsMatchesQuadrature) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const double mu = rng.uniform(-5, 5), sd = std::exp(rng.uniform(-3, 2)), y = mu + sd * rng.uniform(-6, 6);
    const double c = crps_gaussian(mu, sd, y);
    EXPECT_GE(c, 0.0);
    EXPECT_NEAR(c, crps_quadrature(mu, sd, y), 1e-5);
  }
}

TEST(Metrics, CrpsMean) {
  std::vector<PosteriorMoments> f(2);
  f[0].mean = 0;
  f[0].var = 1;
  f[1].mean = 1;
  f[1].var = 0;
  EXPECT_NEAR(crps(f, Eigen::Vector2d(0, 3)), 0.5 * (0.2336950 + 2.0), 1e-7);
}

TEST(Experiment, SingleRepetitionPerdikaris) {
  ExperimentConfig c;
  c.problem = "perdikaris";
  c.sizes = {13, 8};
  c.reps = 1;
  c.seed = 5;
  const auto r = run_experiment(c);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].method, "rna");
  EXPECT_EQ(r.rows[1].method, "hf_gp");
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.ok) << row.error;
    EXPECT_TRUE(std::isfinite(row.rmse) && std::isfinite(row.crps));
    EXPECT_GE(row.crps, 0.0);
  }
}

TEST(Experiment, DeterministicRows) {
  ExperimentConfig c;
  c.problem = "currin";
  c.reps = 2;
  c.seed = 11;
  c.test_points = 200;
  const auto a = run_experiment(c), b = run_experiment(c);
  ASSERT_EQ(a.rows.size(), 4u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].rep, b.rows[i].rep);
    EXPECT_EQ(a.rows[i].rmse, b.rows[i].rmse);
    EXPECT_EQ(a.rows[i].crps, b.rows[i].crps);
  }
  c.jobs = 2;
  const auto par = run_experiment(c);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].rmse, par.rows[i].rmse);
}

TEST(Experiment, ArgumentErrors) {
  ExperimentConfig c;
  c.problem = "perdikaris";
  c.reps = 0;
  EXPECT_THROW(run_experiment(c), ArgumentError);
  c.reps = 1;
  c.problem = "nope";
  EXPECT_THROW(run_experiment(c), ArgumentError);
  c.problem = "perdikaris";
  c.sizes = {10, 5, 2};
  EXPECT_THROW(run_experiment(c), ArgumentError);
}

TEST(Experiment, ParkActiveLearningStaysWithinBudget) {
  ExperimentConfig c;
  c.problem = "park";
  c.mode = ExperimentMode::ActiveLearning;
  c.strategy = Strategy::ALM;
  c.costs = {1, 3};
  c.budget = 130;
  c.reps = 1;
  c.seed = 3;
  c.test_points = 200;
  c.baseline = false;
  c.select.acquisition.n_starts = 4;
  c.select.acquisition.max_iters = 10;
  c.fit.restarts = 2;
  const auto r = run_experiment(c);
  ASSERT_EQ(r.rows.size(), 1u);
  ASSERT_TRUE(r.rows[0].ok) << r.rows[0].error;
  EXPECT_LE(*r.rows[0].accrued_cost, 130.0);
  EXPECT_GT(*r.rows[0].accrued_cost, 130.0 - 4.0);
  ASSERT_FALSE(r.curves.empty());
  double prev = 0.0;
  for (const auto& p : r.curves) {
    EXPECT_GE(p.cost, prev);
    prev = p.cost;
  }
  EXPECT_LE(r.curves.back().cost, 130.0);
  const std::string csv = curves_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rep,step,level,cost,rmse,crps");
  const std::string svg = curves_svg(r, "rmse");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}

TEST(Experiment, SummaryAndQuantiles) {
  const auto q = quantiles({4, 1, 3, 2, 5});
  EXPECT_EQ(q.min, 1);
  EXPECT_EQ(q.q25, 2);
  EXPECT_EQ(q.median, 3);
  EXPECT_EQ(q.max, 5);
  EXPECT_NEAR(quantiles({1, 2}).median, 1.5, 1e-15);
  EXPECT_THROW(quantiles({}), ArgumentError);

  ExperimentConfig c;
  c.problem = "perdikaris";
  c.reps = 3;
  c.seed = 2;
  c.test_points = 100;
  const auto r = run_experiment(c);
  const std::string csv = rows_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rep,method,ok,rmse,crps,seconds,initial_rmse,accrued_cost,steps,error");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  const auto s = summary_json(r);
  EXPECT_EQ(s.dump().find("\"rna\"") != std::string::npos, true);
}

TEST(Experiment, UniformPointsInsideBox) {
  const auto b = borehole().bounds;
  const auto pts = uniform_points(b, 500, 9);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) EXPECT_TRUE(b.contains(pts.row(i).transpose()));
  EXPECT_EQ(pts, uniform_points(b, 500, 9));
}
