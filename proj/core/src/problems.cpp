#include "rnamf/problems.hpp"

#include <cmath>
#include <numbers>

#include "rnamf/error.hpp"

namespace rnamf {

namespace {

constexpr double kPi = std::numbers::pi;

Box make_box(std::initializer_list<std::pair<double, double>> ranges) {
  Box b{Eigen::VectorXd(static_cast<Eigen::Index>(ranges.size())), Eigen::VectorXd(static_cast<Eigen::Index>(ranges.size()))};
  Eigen::Index j = 0;
  for (const auto& [lo, hi] : ranges) {
    b.lower[j] = lo;
    b.upper[j] = hi;
    ++j;
  }
  return b;
}

double park_high(const Eigen::VectorXd& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  const double c = (x2 + x3 * x3) * x4;
  const double first = x1 == 0.0 ? 0.5 * std::sqrt(c) : 0.5 * x1 * (std::sqrt(1.0 + c / (x1 * x1)) - 1.0);
  return first + (x1 + 3.0 * x4) * std::exp(1.0 + std::sin(x3));
}

double branin_high(double x1, double x2) {
  const double a = -1.275 * x1 * x1 / (kPi * kPi) + 5.0 * x1 / kPi + x2 - 6.0;
  return a * a + (10.0 - 5.0 / (4.0 * kPi)) * std::cos(x1) + 10.0;
}

double branin_mid(double x1, double x2) {
  const double f3 = branin_high(x1, x2);
  if (!(f3 >= 0.0)) throw DomainError("branin: negative argument under the square root");
  return 10.0 * std::sqrt(f3) + 2.0 * (x1 - 0.5) - 3.0 * (3.0 * x2 - 1.0) - 1.0;
}

double borehole_level(int level, const Eigen::VectorXd& x) {
  const double rw = x[0], r = x[1], tu = x[2], hu = x[3], tl = x[4], hl = x[5], l = x[6], kw = x[7];
  const double lr = std::log(r / rw);
  const double mid = 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl;
  if (level == 1) return 2.0 * kPi * tu * (hu - hl) / (lr * (1.0 + mid));
  return 5.0 * tu * (hu - hl) / (lr * (1.5 + mid));
}

double currin_high(double x1, double x2) {
  const double a = 1.0 - std::exp(-1.0 / (2.0 * x2));
  return a * (2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0) /
         (100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0);
}

double franke_base(double x1, double x2) {
  const double a = 9.0 * x1, b = 9.0 * x2;
  return 0.75 * std::exp(-(a - 2) * (a - 2) / 4.0 - (b - 2) * (b - 2) / 4.0) +
         0.75 * std::exp(-(a + 1) * (a + 1) / 49.0 - (b + 1) / 10.0) +
         0.5 * std::exp(-(a - 7) * (a - 7) / 4.0 - (b - 3) * (b - 3) / 4.0) -
         0.2 * std::exp(-(a - 4) * (a - 4) - (b - 7) * (b - 7));
}

}  // namespace

double SyntheticProblem::evaluate(int level, const Eigen::VectorXd& x) const {
  if (level < 1 || level > levels) throw ArgumentError(name + ": level out of range");
  if (x.size() != dim) throw ShapeError(name + ": input has wrong dimension");
  if (!bounds.contains(x, 1e-12)) throw DomainError(name + ": input outside the domain");
  return raw(level, x);
}

SyntheticProblem perdikaris() {
  SyntheticProblem p;
  p.name = "perdikaris";
  p.dim = 1;
  p.levels = 2;
  p.bounds = make_box({{0.0, 1.0}});
  p.default_sizes = {13, 8};
  p.default_costs = {1.0, 3.0};
  p.raw = [](int level, const Eigen::VectorXd& x) {
    const double f1 = std::sin(8.0 * kPi * x[0]);
    return level == 1 ? f1 : (x[0] - std::sqrt(2.0)) * f1 * f1;
  };
  return p;
}

SyntheticProblem park() {
  SyntheticProblem p;
  p.name = "park";
  p.dim = 4;
  p.levels = 2;
  p.bounds = make_box({{0, 1}, {0, 1}, {0, 1}, {0, 1}});
  p.default_sizes = {40, 20};
  p.default_costs = {1.0, 3.0};
  p.raw = [](int level, const Eigen::VectorXd& x) {
    const double f2 = park_high(x);
    if (level == 2) return f2;
    return f2 + std::sin(x[0]) / 10.0 * f2 - 2.0 * x[0] + x[1] * x[1] + x[2] * x[2] + 0.5;
  };
  return p;
}

SyntheticProblem branin() {
  SyntheticProblem p;
  p.name = "branin";
  p.dim = 2;
  p.levels = 3;
  p.bounds = make_box({{-5.0, 10.0}, {0.0, 15.0}});
  p.default_sizes = {20, 15, 10};
  p.default_costs = {1.0, 3.0, 9.0};
  p.raw = [](int level, const Eigen::VectorXd& x) {
    switch (level) {
      case 3: return branin_high(x[0], x[1]);
      case 2: return branin_mid(x[0], x[1]);
      default: return branin_mid(1.2 * (x[0] + 2.0), 1.2 * (x[1] + 2.0)) - 3.0 * x[1] + 1.0;
    }
  };
  return p;
}

SyntheticProblem borehole() {
  SyntheticProblem p;
  p.name = "borehole";
  p.dim = 8;
  p.levels = 2;
  p.bounds = make_box({{0.05, 0.15},
                       {100.0, 50000.0},
                       {63070.0, 115600.0},
                       {990.0, 1110.0},
                       {63.1, 116.0},
                       {700.0, 820.0},
                       {1120.0, 1680.0},
                       {9855.0, 12045.0}});
  p.default_sizes = {60, 30};
  p.default_costs = {1.0, 3.0};
  p.raw = borehole_level;
  return p;
}

SyntheticProblem currin() {
  SyntheticProblem p;
  p.name = "currin";
  p.dim = 2;
  p.levels = 2;
  p.bounds = make_box({{0, 1}, {0, 1}});
  p.default_sizes = {20, 10};
  p.default_costs = {1.0, 3.0};
  p.raw = [](int level, const Eigen::VectorXd& x) {
    const double x1 = x[0], x2 = x[1];
    if (level == 2) return currin_high(x1, x2);
    const double lo2 = std::max(0.0, x2 - 0.05);
    return 0.25 * (currin_high(x1 + 0.05, x2 + 0.05) + currin_high(x1 + 0.05, lo2)) +
           0.25 * (currin_high(x1 - 0.05, x2 + 0.05) + currin_high(x1 - 0.05, lo2));
  };
  return p;
}

SyntheticProblem franke() {
  SyntheticProblem p;
  p.name = "franke";
  p.dim = 2;
  p.levels = 3;
  p.bounds = make_box({{0, 1}, {0, 1}});
  p.default_sizes = {20, 15, 10};
  p.default_costs = {1.0, 3.0, 9.0};
  p.raw = [](int level, const Eigen::VectorXd& x) {
    const double f1 = franke_base(x[0], x[1]);
    if (level == 1) return f1;
    const double f2 = std::exp(-1.4 * f1) * std::cos(3.5 * kPi * f1);
    if (level == 2) return f2;
    return std::sin(2.0 * kPi * (f2 - 1.0));
  };
  return p;
}

std::vector<std::string> problem_names() { return {"perdikaris", "park", "branin", "borehole", "currin", "franke"}; }

SyntheticProblem problem_by_name(const std::string& name) {
  if (name == "perdikaris") return perdikaris();
  if (name == "park") return park();
  if (name == "branin") return branin();
  if (name == "borehole") return borehole();
  if (name == "currin") return currin();
  if (name == "franke") return franke();
  throw ArgumentError("unknown problem '" + name + "'");
}

MultiFidelityDataset make_dataset(const SyntheticProblem& problem, const NestedDesign& design,
                                  const std::vector<double>& costs) {
  if (static_cast<int>(design.designs.size()) != problem.levels) throw ArgumentError("design level count mismatch");
  MultiFidelityDataset data;
  data.dim = problem.dim;
  data.bounds = problem.bounds;
  data.costs = costs.empty() ? problem.default_costs : costs;
  for (int l = 1; l <= problem.levels; ++l) {
    const Eigen::MatrixXd x = problem.bounds.from_unit_rows(design.designs[static_cast<std::size_t>(l - 1)]);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = problem.evaluate(l, x.row(i).transpose());
    data.designs.push_back(x);
    data.outputs.push_back(y);
  }
  data.validate();
  return data;
}

}  // namespace rnamf
