#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "rnamf/error.hpp"
#include "rnamf/kernels.hpp"
#include "rnamf/linalg.hpp"
#include "rnamf/random.hpp"

using namespace rnamf;

namespace {

constexpr KernelKind kKinds[] = {KernelKind::SqExp, KernelKind::Matern15, KernelKind::Matern25};

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::MatrixXd random_spd(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST(Psi, HandValues) {
  EXPECT_DOUBLE_EQ(psi(KernelKind::SqExp, 0, 0, 1), 1.0);
  EXPECT_NEAR(psi(KernelKind::SqExp, 0, 1, 1), 0.3678794, 1e-7);
  EXPECT_NEAR(psi(KernelKind::Matern15, 0, 1, 1), 0.4833577, 1e-7);
  EXPECT_NEAR(psi(KernelKind::Matern25, 0, 1, 1), 0.5239941, 1e-7);
  EXPECT_NEAR(psi(KernelKind::Matern25, 0, 1, 1), (1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0)), 1e-15);
}

TEST(Psi, ThetaDividesSquaredDistanceForSqExp) {
  EXPECT_NEAR(psi(KernelKind::SqExp, 0, 2, 4), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(psi(KernelKind::Matern15, 0, 2, 2), psi(KernelKind::Matern15, 0, 1, 1), 1e-15);
}

TEST(Psi, RejectsBadTheta) {
  for (auto k : kKinds) {
    EXPECT_THROW(psi(k, 0, 1, 0.0), InvalidParameter);
    EXPECT_THROW(psi(k, 0, 1, -1.0), InvalidParameter);
    EXPECT_THROW(psi(k, 0, 1, std::numeric_limits<double>::infinity()), InvalidParameter);
    EXPECT_THROW(psi(k, 0, 1, std::nan("")), InvalidParameter);
  }
}

TEST(Psi, SymmetricBoundedMonotone) {
  Rng rng(3);
  for (auto k : kKinds) {
    for (int t = 0; t < 200; ++t) {
      const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3), th = rng.uniform(0.05, 5);
      EXPECT_EQ(psi(k, a, b, th), psi(k, b, a, th));
      const double v = psi(k, a, b, th);
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    double prev = 1.0;
    for (int i = 1; i <= 100; ++i) {
      const double v = psi(k, 0.0, 0.05 * i, 0.7);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(Psi, LogThetaDerivativeMatchesFiniteDifference) {
  for (auto k : kKinds) {
    for (double th : {0.3, 1.0, 2.5}) {
      const double h = 1e-6;
      const double fd = (std::log(psi(k, 0.2, 0.9, th * std::exp(h))) - std::log(psi(k, 0.2, 0.9, th * std::exp(-h)))) / (2 * h);
      EXPECT_NEAR(dlog_psi_dlog_theta(k, 0.2, 0.9, th), fd, 1e-6);
    }
  }
}

TEST(KernelInput, HandValues) {
  const LengthscaleVector s11(vec({1, 1}));
  EXPECT_DOUBLE_EQ(kernel_input(KernelKind::SqExp, vec({0, 0}), vec({0, 0}), s11), 1.0);
  EXPECT_NEAR(kernel_input(KernelKind::SqExp, vec({0, 0}), vec({1, 1}), s11), 0.1353353, 1e-7);
  EXPECT_NEAR(kernel_input(KernelKind::Matern15, vec({0, 0}), vec({1, 0}), LengthscaleVector(vec({1, 2}))),
              0.4833577, 1e-7);
}

TEST(KernelInput, DimensionMismatch) {
  EXPECT_THROW(kernel_input(KernelKind::SqExp, vec({0, 0}), vec({0}), LengthscaleVector(vec({1, 1}))), ShapeError);
}

TEST(KernelAugmented, HandValues) {
  const LengthscaleVector s(vec({1}), 1.0);
  EXPECT_DOUBLE_EQ(kernel_augmented(KernelKind::SqExp, vec({0, 0}), vec({0, 0}), s), 1.0);
  EXPECT_NEAR(kernel_augmented(KernelKind::SqExp, vec({0, 0}), vec({1, 1}), s), 0.1353353, 1e-7);
  EXPECT_NEAR(kernel_augmented(KernelKind::Matern25, vec({0, 0}), vec({0, 1}), s), 0.5239941, 1e-7);
}

TEST(KernelAugmented, MissingOutputScale) {
  EXPECT_THROW(kernel_augmented(KernelKind::SqExp, vec({0, 0}), vec({1, 1}), LengthscaleVector(vec({1}))),
               InvalidParameter);
}

TEST(LengthscaleVector, PackUnpackAndValidate) {
  const LengthscaleVector s(vec({0.5, 2}), 3.0);
  const auto back = LengthscaleVector::unpack(s.packed(), true);
  EXPECT_EQ(back.input_scales, s.input_scales);
  EXPECT_EQ(*back.output_scale, 3.0);
  EXPECT_THROW(LengthscaleVector(vec({1, -1})).validate(), InvalidParameter);
  EXPECT_THROW(LengthscaleVector(vec({1}), 0.0).validate(), InvalidParameter);
}

TEST(KernelKind, ParseRoundTrip) {
  for (auto k : kKinds) EXPECT_EQ(parse_kernel_kind(to_string(k)), k);
  EXPECT_THROW(parse_kernel_kind("rbf"), InvalidParameter);
}

TEST(CovMatrix, SmallCases) {
  const LengthscaleVector s(vec({1}));
  Eigen::MatrixXd one(1, 1);
  one << 0.3;
  EXPECT_DOUBLE_EQ(cov_matrix(KernelKind::SqExp, one, s, 1e-8)(0, 0), 1.0 + 1e-8);

  Eigen::MatrixXd dup(2, 1);
  dup << 0.5, 0.5;
  EXPECT_TRUE(cov_matrix(KernelKind::SqExp, dup, s, 0.0).isApprox(Eigen::MatrixXd::Ones(2, 2)));

  Eigen::MatrixXd two(2, 1);
  two << 0, 1;
  const Eigen::MatrixXd k = cov_matrix(KernelKind::SqExp, two, s, 0.0);
  EXPECT_DOUBLE_EQ(k(0, 0), 1.0);
  EXPECT_NEAR(k(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_EQ(k(0, 1), k(1, 0));
}

TEST(CovMatrix, RandomSetsArePsd) {
  Rng rng(11);
  for (auto kind : kKinds) {
    for (int t = 0; t < 20; ++t) {
      const int n = 2 + static_cast<int>(rng.uniform_int(19)), d = 1 + static_cast<int>(rng.uniform_int(3));
      Eigen::MatrixXd pts(n, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = rng.uniform();
      Eigen::VectorXd th(d);
      for (int j = 0; j < d; ++j) th[j] = rng.uniform(0.05, 2.0);
      const Eigen::MatrixXd k = cov_matrix(kind, pts, LengthscaleVector(th), 0.0);
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff(), -1e-10);
      EXPECT_NO_THROW(jittered_cholesky(k, 1e-8));
    }
  }
}

TEST(JitteredCholesky, EscalatesOnDuplicates) {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.1, 0.1, 0.6;
  const Eigen::MatrixXd k = cov_matrix(KernelKind::SqExp, pts, LengthscaleVector(vec({1.0})), 0.0);
  const auto f = jittered_cholesky(k, 0.0);
  EXPECT_GT(f.jitter, 0.0);
  EXPECT_LE(f.jitter, kMaxJitter);
  Eigen::MatrixXd kj = k;
  kj.diagonal().array() += f.jitter;
  EXPECT_LE((f.lower * f.lower.transpose() - kj).norm() / kj.norm(), 1e-10);
}

TEST(JitteredCholesky, ConditioningErrorCarriesJitter) {
  Eigen::MatrixXd k(2, 2);
  k << 1, 2, 2, 1;
  try {
    jittered_cholesky(k, 1e-8, 1e-6);
    FAIL() << "expected ConditioningError";
  } catch (const ConditioningError& e) {
    EXPECT_GT(e.jitter(), 0.0);
  }
}

TEST(BorderedInverse, MatchesDirectInversionUpTo50) {
  Rng rng(5);
  for (int n : {2, 5, 10, 25, 50}) {
    for (int t = 0; t < 5; ++t) {
      const Eigen::MatrixXd full = random_spd(n, rng);
      const Eigen::MatrixXd a = full.topLeftCorner(n - 1, n - 1);
      const Eigen::MatrixXd got = bordered_inverse(a.inverse(), full.col(n - 1).head(n - 1), full(n - 1, n - 1));
      const Eigen::MatrixXd ref = full.inverse();
      EXPECT_LE((got - ref).norm() / ref.norm(), 1e-8) << "n=" << n;
    }
  }
}

TEST(BorderedCholesky, MatchesDirectFactor) {
  Rng rng(6);
  for (int n : {2, 8, 30}) {
    const Eigen::MatrixXd full = random_spd(n, rng);
    const Eigen::MatrixXd a = full.topLeftCorner(n - 1, n - 1);
    const Eigen::MatrixXd la = Eigen::LLT<Eigen::MatrixXd>(a).matrixL();
    const Eigen::MatrixXd got = bordered_cholesky(la, full.col(n - 1).head(n - 1), full(n - 1, n - 1));
    const Eigen::MatrixXd ref = Eigen::LLT<Eigen::MatrixXd>(full).matrixL();
    EXPECT_LE((got - ref).norm() / ref.norm(), 1e-12);
    EXPECT_LE((inverse_from_cholesky(ref) - full.inverse()).norm() / full.inverse().norm(), 1e-10);
  }
}

TEST(BorderedInverse, SingularBorderThrows) {
  Eigen::MatrixXd a_inv(1, 1);
  a_inv << 1.0;
  Eigen::VectorXd b(1);
  b << 1.0;
  EXPECT_THROW(bordered_inverse(a_inv, b, 1.0), ConditioningError);
}
