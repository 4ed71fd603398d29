#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rnamf/dataset.hpp"

namespace rnamf {

struct NestedDesign {
  int dim = 0;
  std::vector<Eigen::Index> sizes;
  std::vector<Eigen::MatrixXd> designs;  // unit hypercube, nested rows first
};

// Latin hypercube in [0,1]^d with one point per stratum of width 1/n per coordinate.
Eigen::MatrixXd lhs(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

double min_pairwise_distance(const Eigen::MatrixXd& points);

// Maximin LHS for level 1 (best of `maximin_candidates` draws), then greedy
// farthest-point subsets for each higher level (best of `maximin_candidates` starts).
NestedDesign nested_design(const std::vector<Eigen::Index>& sizes, Eigen::Index d, std::uint64_t seed,
                           int maximin_candidates = 20);

std::vector<NestingViolation> validate_nested(const NestedDesign& design);

}  // namespace rnamf
