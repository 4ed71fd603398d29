#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/dataset.hpp"
#include "rnamf/design.hpp"

namespace rnamf {

// Synthetic multi-fidelity family; level 1 is the cheapest, level L the most accurate.
struct SyntheticProblem {
  std::string name;
  int dim = 0;
  int levels = 0;
  Box bounds;
  std::vector<Eigen::Index> default_sizes;
  std::vector<double> default_costs;
  std::function<double(int level, const Eigen::VectorXd& x)> raw;  // no bounds check

  // Throws DomainError outside the bounds.
  double evaluate(int level, const Eigen::VectorXd& x) const;
};

SyntheticProblem perdikaris();
SyntheticProblem park();
SyntheticProblem branin();
SyntheticProblem borehole();
SyntheticProblem currin();
SyntheticProblem franke();

std::vector<std::string> problem_names();
SyntheticProblem problem_by_name(const std::string& name);

// Evaluates the problem on a unit-cube nested design mapped to its bounds.
MultiFidelityDataset make_dataset(const SyntheticProblem& problem, const NestedDesign& design,
                                  const std::vector<double>& costs);

}  // namespace rnamf
