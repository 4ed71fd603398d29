#include "rnamf/design.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "rnamf/error.hpp"
#include "rnamf/random.hpp"

namespace rnamf {

Eigen::MatrixXd lhs(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ArgumentError("lhs requires n >= 1 and d >= 1");
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      double u;
      do {
        u = rng.uniform();
      } while (u <= 0.0);
      x(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u) / static_cast<double>(n);
    }
  }
  return x;
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index k = 0; k < i; ++k) best = std::min(best, (points.row(i) - points.row(k)).norm());
  return best;
}

namespace {

// Greedy farthest-point selection of k rows among `pool` (indices into x).
std::vector<Eigen::Index> farthest_point_subset(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& pool,
                                                std::size_t k, std::size_t start) {
  std::vector<Eigen::Index> chosen{pool[start]};
  std::vector<double> dist(pool.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> used(pool.size(), false);
  used[start] = true;
  while (chosen.size() < k) {
    const Eigen::Index last = chosen.back();
    std::size_t arg = pool.size();
    double best = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      dist[i] = std::min(dist[i], (x.row(pool[i]) - x.row(last)).norm());
      if (dist[i] > best) {
        best = dist[i];
        arg = i;
      }
    }
    used[arg] = true;
    chosen.push_back(pool[arg]);
  }
  return chosen;
}

double subset_min_distance(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t k = 0; k < i; ++k) best = std::min(best, (x.row(idx[i]) - x.row(idx[k])).norm());
  return best;
}

}  // namespace

NestedDesign nested_design(const std::vector<Eigen::Index>& sizes, Eigen::Index d, std::uint64_t seed,
                           int maximin_candidates) {
  if (sizes.empty()) throw ArgumentError("nested_design: sizes must be nonempty");
  if (maximin_candidates < 1) throw ArgumentError("nested_design: maximin_candidates must be >= 1");
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    if (sizes[l] < 1) throw ArgumentError("nested_design: sizes must be >= 1");
    if (l > 0 && sizes[l] > sizes[l - 1]) throw ArgumentError("nested_design: sizes must be non-increasing");
  }
  Eigen::MatrixXd x1;
  double best = -1.0;
  for (int c = 0; c < maximin_candidates; ++c) {
    Eigen::MatrixXd cand = lhs(sizes[0], d, derive_seed(seed, static_cast<std::uint64_t>(c)));
    const double md = sizes[0] > 1 ? min_pairwise_distance(cand) : 0.0;
    if (md > best) {
      best = md;
      x1 = std::move(cand);
    }
  }
  // order[0..n_l) are the level-l rows of x1, nested rows first.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(sizes[0]));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0xabcdefULL));
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const auto k = static_cast<std::size_t>(sizes[l]);
    const auto n_prev = static_cast<std::size_t>(sizes[l - 1]);
    if (k == n_prev) continue;
    const std::vector<Eigen::Index> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_prev));
    std::vector<Eigen::Index> best_subset;
    double best_md = -1.0;
    for (int c = 0; c < maximin_candidates; ++c) {
      const std::size_t start = static_cast<std::size_t>(rng.uniform_int(n_prev));
      auto subset = farthest_point_subset(x1, pool, k, start);
      const double md = k > 1 ? subset_min_distance(x1, subset) : 0.0;
      if (md > best_md) {
        best_md = md;
        best_subset = std::move(subset);
      }
    }
    std::vector<Eigen::Index> reordered = best_subset;
    for (auto i : pool) {
      if (std::find(best_subset.begin(), best_subset.end(), i) == best_subset.end()) reordered.push_back(i);
    }
    std::copy(reordered.begin(), reordered.end(), order.begin());
  }
  NestedDesign out;
  out.dim = static_cast<int>(d);
  out.sizes = sizes;
  for (auto n : sizes) {
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) = x1.row(order[static_cast<std::size_t>(i)]);
    out.designs.push_back(std::move(x));
  }
  return out;
}

std::vector<NestingViolation> validate_nested(const NestedDesign& design) {
  return validate_nested(design.designs);
}

}  // namespace rnamf
