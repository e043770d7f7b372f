#include <gtest/gtest.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "l2p/equivalence.hpp"
#include "l2p/fixed_predictors.hpp"
#include "l2p/learner.hpp"
#include "l2p/surrogate.hpp"
#include "test_support.hpp"

using namespace l2p;

namespace {

std::vector<double> random_row(std::uint64_t seed, int t) {
  SplitMix64 rng(seed);
  std::vector<double> w(static_cast<std::size_t>(t));
  for (double& v : w) v = rng.normal();
  return w;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

TEST(Pascal, SmallCases) {
  EXPECT_EQ(pascal_matrix(1), Eigen::MatrixXd::Identity(1, 1));
  Eigen::MatrixXd p3(3, 3);
  p3 << 1, 0, 0, 1, -1, 0, 1, -2, 1;
  EXPECT_EQ(pascal_matrix(3), p3);
  EXPECT_EQ(pascal_matrix(3).determinant(), -1.0);
}

TEST(Pascal, Involution) {
  for (int t = 1; t <= 20; ++t) {
    const Eigen::MatrixXd p = pascal_matrix(t);
    EXPECT_LT((p * p - Eigen::MatrixXd::Identity(t, t)).cwiseAbs().maxCoeff(), 1e-8) << t;
    double det = 1.0;
    for (int k = 0; k < t; ++k) det *= p(k, k);
    EXPECT_EQ(std::abs(det), 1.0);
  }
}

TEST(Convert, NaiveRowIsZerothOrder) {
  for (int t = 1; t <= 12; ++t) {
    std::vector<double> w(static_cast<std::size_t>(t), 0.0);
    w.back() = 1.0;
    const auto omega = weights_to_difference_coeffs(w);
    EXPECT_EQ(omega[0], 1.0);
    for (int i = 1; i < t; ++i) EXPECT_EQ(omega[static_cast<std::size_t>(i)], 0.0);
  }
}

TEST(Convert, TaylorRowGivesTaylorSeries) {
  const int t = 8;
  for (int m = 0; m <= 4; ++m) {
    for (int k = -3; k <= 3; ++k) {
      const auto c = taylor_coefficients(m, 1, k);
      std::vector<double> w(static_cast<std::size_t>(t), 0.0);
      for (const auto& term : c.terms()) w[static_cast<std::size_t>(t - 1 + term.offset)] = term.weight;
      const auto omega = weights_to_difference_coeffs(w);
      for (int i = 0; i < t; ++i) {
        const double expected = i <= m ? std::pow(-k, i) / factorial(i) : 0.0;
        EXPECT_NEAR(omega[static_cast<std::size_t>(i)], expected, 1e-12) << m << " " << k << " " << i;
      }
    }
  }
}

TEST(Convert, HandValues) {
  EXPECT_EQ(difference_coeffs_to_weights(std::vector<double>{1.0}), std::vector<double>{1.0});
  // Oldest first: w = (F_{t-2}: -1, F_{t-1}: 1).
  EXPECT_EQ(difference_coeffs_to_weights(std::vector<double>{0.0, 1.0}), (std::vector<double>{-1.0, 1.0}));
}

TEST(Convert, RoundTrip) {
  for (int t = 1; t <= 17; ++t) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto w = random_row(1000 * static_cast<std::uint64_t>(t) + seed, t);
      const auto back = difference_coeffs_to_weights(weights_to_difference_coeffs(w));
      double err = 0.0;
      for (int j = 0; j < t; ++j) err = std::max(err, std::abs(back[static_cast<std::size_t>(j)] - w[static_cast<std::size_t>(j)]));
      EXPECT_LT(err, 1e-8) << "t=" << t;
    }
  }
}

// Past t = 17 the f64 rounding of omega, amplified by the binomials, is the
// whole round-trip error. Check it never exceeds that analytic bound.
TEST(Convert, RoundTripWithinOmegaRoundingBound) {
  const double u = std::ldexp(1.0, -53);
  for (int t = 1; t <= 32; ++t) {
    const Eigen::MatrixXd p = pascal_matrix(t).cwiseAbs();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto w = random_row(1000 * static_cast<std::uint64_t>(t) + seed, t);
      const auto omega = weights_to_difference_coeffs(w);
      const auto back = difference_coeffs_to_weights(omega);
      for (int k = 0; k < t; ++k) {
        double bound = 0.0;
        for (int i = k; i < t; ++i) bound += p(i, k) * std::abs(omega[static_cast<std::size_t>(i)]);
        const auto j = static_cast<std::size_t>(t - 1 - k);
        bound = 1.01 * bound * u + 4.0 * u * std::abs(w[j]);
        EXPECT_LE(std::abs(back[j] - w[j]), bound) << "t=" << t << " k=" << k;
      }
    }
  }
}

TEST(Convert, ConditioningGate) {
  const std::vector<double> ok(32, 0.1);
  EXPECT_NO_THROW(weights_to_difference_coeffs(ok));
  const std::vector<double> big(33, 0.1);
  try {
    weights_to_difference_coeffs(big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConditioningLimit);
  }
  EXPECT_THROW(difference_coeffs_to_weights(big), Error);
  EXPECT_THROW(weights_to_difference_coeffs(std::vector<double>{}), Error);
}

TEST(Isomorphism, InitRowsExact) {
  const auto traj = fixtures::random_trajectory(5, 30, 8);
  const auto w = init_weights(30);
  for (int t = 1; t < 30; ++t) {
    const auto report = verify_isomorphism(w.row(t), traj, 1e-8);
    EXPECT_EQ(report.max_relative_deviation, 0.0);
    EXPECT_TRUE(report.passed);
  }
}

TEST(Isomorphism, RandomRows) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix f = fixtures::random_matrix(seed, 20, 8);
    for (int t = 1; t <= 17; ++t) {
      const auto w = random_row(seed * 100 + static_cast<std::uint64_t>(t), t);
      EXPECT_TRUE(verify_isomorphism(w, f, 1e-8).passed) << t;
    }
  }
}

// With exact omega the identity holds to long-double accuracy at every t.
TEST(Isomorphism, ExactOmegaHasNoFloor) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix f = fixtures::random_matrix(seed, 20, 8);
    for (int t = 1; t <= 20; ++t) {
      std::vector<double> omega(static_cast<std::size_t>(t));
      SplitMix64 rng(seed * 100 + static_cast<std::uint64_t>(t));
      for (double& v : omega) v = std::round(rng.normal() * 64.0) / 64.0;
      const auto w = difference_coeffs_to_weights(omega);
      EXPECT_LT(verify_isomorphism(w, omega, f, 1e-8).max_relative_deviation, 1e-12) << t;
    }
  }
}

TEST(Isomorphism, TrainedRows) {
  const auto set = gen_dataset(100, 10, 20, 16, SurrogateKind::Smooth);
  const auto [w, report] = train(set, TrainConfig{}, init_weights(20));
  for (int t = 1; t < 20; ++t) EXPECT_LT(verify_isomorphism(w.row(t), set[0], 1e-8).max_relative_deviation, 1e-8);
}

TEST(Isomorphism, CorruptedOmegaFails) {
  const Matrix f = fixtures::random_matrix(3, 10, 4);
  const auto w = random_row(77, 10);
  auto omega = weights_to_difference_coeffs(w);
  omega[3] += 0.5;
  const auto report = verify_isomorphism(w, omega, f, 1e-8);
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.max_relative_deviation, 1e-8);
  EXPECT_EQ(report.tolerance, 1e-8);
}
