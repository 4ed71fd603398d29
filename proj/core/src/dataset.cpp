#include "rnamf/dataset.hpp"

#include <cmath>

#include "rnamf/error.hpp"

namespace rnamf {

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
  }
  return true;
}

Eigen::VectorXd Box::from_unit(const Eigen::VectorXd& u) const {
  return lower + (upper - lower).cwiseProduct(u);
}

Eigen::MatrixXd Box::from_unit_rows(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd out(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) out.row(i) = from_unit(u.row(i).transpose()).transpose();
  return out;
}

Box Box::unit(Eigen::Index d) { return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)}; }

namespace {

bool rows_match(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index k, double tol) {
  return ((a.row(i) - b.row(k)).cwiseAbs().array() <= tol).all();
}

}  // namespace

std::vector<NestingViolation> validate_nested(const std::vector<Eigen::MatrixXd>& designs, double tol) {
  std::vector<NestingViolation> out;
  for (std::size_t l = 1; l < designs.size(); ++l) {
    const Eigen::MatrixXd& lower = designs[l - 1];
    const Eigen::MatrixXd& upper = designs[l];
    const int level = static_cast<int>(l) + 1;
    if (upper.cols() != lower.cols()) {
      out.push_back({level, 0, "dimension differs from level " + std::to_string(level - 1)});
      continue;
    }
    if (upper.rows() > lower.rows()) {
      out.push_back({level, lower.rows(), "level has more rows than level " + std::to_string(level - 1)});
    }
    for (Eigen::Index i = 0; i < upper.rows(); ++i) {
      if (i < lower.rows() && rows_match(upper, i, lower, i, tol)) continue;
      bool found = false;
      for (Eigen::Index k = 0; k < lower.rows() && !found; ++k) found = rows_match(upper, i, lower, k, tol);
      out.push_back({level, i,
                     found ? "row present in level " + std::to_string(level - 1) + " but not at the same index"
                           : "row has no match in level " + std::to_string(level - 1)});
    }
  }
  return out;
}

void MultiFidelityDataset::validate() const {
  const int L = levels();
  if (L < 1) throw DatasetError("dataset has no levels");
  if (dim < 1) throw DatasetError("dataset dimension must be >= 1");
  if (static_cast<int>(outputs.size()) != L) throw DatasetError("outputs count differs from designs count");
  if (static_cast<int>(costs.size()) != L) throw DatasetError("costs count differs from level count");
  for (int l = 0; l < L; ++l) {
    const auto& x = designs[static_cast<std::size_t>(l)];
    const auto& y = outputs[static_cast<std::size_t>(l)];
    if (x.cols() != dim) throw DatasetError("level " + std::to_string(l + 1) + ": design has wrong dimension");
    if (x.rows() < 1) throw DatasetError("level " + std::to_string(l + 1) + ": empty design");
    if (y.size() != x.rows()) throw DatasetError("level " + std::to_string(l + 1) + ": outputs/design length mismatch");
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (!x.row(i).allFinite() || !std::isfinite(y[i])) {
        throw DatasetError("level " + std::to_string(l + 1) + ", row " + std::to_string(i) + ": non-finite value");
      }
    }
    if (!(costs[static_cast<std::size_t>(l)] > 0.0)) throw DatasetError("costs must be positive");
    if (l > 0 && !(costs[static_cast<std::size_t>(l)] > costs[static_cast<std::size_t>(l - 1)])) {
      throw DatasetError("costs must be strictly increasing");
    }
  }
  if (bounds) {
    if (bounds->dim() != dim || bounds->upper.size() != dim) throw DatasetError("bounds have wrong dimension");
    for (int j = 0; j < dim; ++j) {
      if (!(bounds->lower[j] < bounds->upper[j])) throw DatasetError("bounds require lower < upper");
    }
  }
  const auto violations = validate_nested(designs);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw DatasetError("nesting violation at level " + std::to_string(v.level) + ", row " + std::to_string(v.row) +
                       ": " + v.reason);
  }
}

Eigen::Index MultiFidelityDataset::find_row(int level, const Eigen::VectorXd& x, double tol) const {
  const auto& xs = designs.at(static_cast<std::size_t>(level - 1));
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    if ((xs.row(i).transpose() - x).cwiseAbs().maxCoeff() <= tol) return i;
  return -1;
}

void MultiFidelityDataset::insert(int level, const Eigen::VectorXd& x, const std::vector<double>& ys) {
  if (level < 1 || level > levels()) throw ArgumentError("insert: level out of range");
  if (x.size() != dim) throw ShapeError("insert: point has wrong dimension");
  if (static_cast<int>(ys.size()) < level) throw ArgumentError("insert: need one output per level up to the target");
  if (find_row(level, x, 1e-12) >= 0) throw ArgumentError("insert: point already present at the target level");
  const Eigen::Index pos = size(level);
  for (int s = 0; s < level; ++s) {
    auto& xs = designs[static_cast<std::size_t>(s)];
    auto& ysv = outputs[static_cast<std::size_t>(s)];
    const Eigen::Index n = xs.rows();
    const Eigen::Index existing = find_row(s + 1, x, 1e-12);
    if (existing >= 0) {
      // already simulated here: rotate the row into the nested position
      for (Eigen::Index i = existing; i > pos; --i) {
        xs.row(i).swap(xs.row(i - 1));
        std::swap(ysv[i], ysv[i - 1]);
      }
      continue;
    }
    Eigen::MatrixXd nx(n + 1, dim);
    Eigen::VectorXd ny(n + 1);
    nx.topRows(pos) = xs.topRows(pos);
    ny.head(pos) = ysv.head(pos);
    nx.row(pos) = x.transpose();
    ny[pos] = ys[static_cast<std::size_t>(s)];
    nx.bottomRows(n - pos) = xs.bottomRows(n - pos);
    ny.tail(n - pos) = ysv.tail(n - pos);
    xs = std::move(nx);
    ysv = std::move(ny);
  }
}

}  // namespace rnamf
