#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rnamf {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd from_unit_rows(const Eigen::MatrixXd& u) const;
  static Box unit(Eigen::Index d);
};

struct NestingViolation {
  int level = 0;          // 1-based level of the offending row
  Eigen::Index row = 0;   // 0-based row index within that level
  std::string reason;
};

// Checks X_{l+1} subset of X_l row-wise with x_i^[l+1] = x_i^[l], i < n_{l+1}.
// One entry per offending row.
std::vector<NestingViolation> validate_nested(const std::vector<Eigen::MatrixXd>& designs, double tol = 1e-12);

// Nested multi-fidelity data; level l is index l-1.
struct MultiFidelityDataset {
  int dim = 0;
  std::vector<Eigen::MatrixXd> designs;
  std::vector<Eigen::VectorXd> outputs;
  std::vector<double> costs;
  std::optional<Box> bounds;

  int levels() const { return static_cast<int>(designs.size()); }
  Eigen::Index size(int level) const { return designs.at(static_cast<std::size_t>(level - 1)).rows(); }

  // Throws DatasetError naming the offending level/row.
  void validate() const;

  // Row index of x at the level (max-norm within tol), or -1.
  Eigen::Index find_row(int level, const Eigen::VectorXd& x, double tol = 1e-12) const;

  // Adds x at levels 1..level with outputs ys[0..level-1], keeping nested rows first.
  // A level that already holds x keeps its stored row and output, moved into place.
  void insert(int level, const Eigen::VectorXd& x, const std::vector<double>& ys);
};

}  // namespace rnamf
