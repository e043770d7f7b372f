#include <gtest/gtest.h>

#include <cmath>

#include "l2p/fixed_predictors.hpp"
#include "l2p/learner.hpp"
#include "l2p/projection.hpp"
#include "l2p/surrogate.hpp"
#include "test_support.hpp"

using namespace l2p;

namespace {

FeatureTrajectory rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return fixtures::make_trajectory(std::move(m));
}

}  // namespace

TEST(Project, RepeatedRowIsInSpan) {
  const auto traj = rows_of({{1.0, 2.0, -1.0}, {0.5, 0.0, 3.0}, {0.5, 0.0, 3.0}});
  const auto p = project_onto_history(traj, 2);
  EXPECT_LT(p.residual_norm, 1e-12);
  EXPECT_LT(relative_residual(traj, 2), 1e-12);
}

TEST(Project, OrthogonalComplement) {
  const auto traj = rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto p = project_onto_history(traj, 2);
  EXPECT_LT(p.projection.norm(), 1e-15);
  EXPECT_NEAR(p.residual_norm, 1.0, 1e-15);
  EXPECT_EQ(p.rank, 2);
  EXPECT_NEAR(relative_residual(traj, 2), 1.0, 1e-15);
}

TEST(Project, SmallPerturbation) {
  const double eps = 1e-3;
  const auto traj = rows_of({{1, 0}, {1, eps}});
  EXPECT_NEAR(project_onto_history(traj, 1).residual_norm, 1e-3, 1e-15);
  const double rel = relative_residual(traj, 1);
  EXPECT_NEAR(rel, eps / std::sqrt(1.0 + eps * eps), 1e-15);
  EXPECT_NEAR(rel, 9.9999e-4, 1e-8);
}

TEST(Project, Errors) {
  const auto traj = rows_of({{1, 0}, {0, 0}, {0, 1}});
  EXPECT_THROW(project_onto_history(traj, 0), Error);
  EXPECT_THROW(project_onto_history(traj, 3), Error);
  try {
    relative_residual(traj, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroNormFeature);
  }
}

TEST(Project, PythagorasAndOrthogonality) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto traj = fixtures::random_trajectory(seed, 30, 12);
    for (int t = 1; t < 30; ++t) {
      const auto p = project_onto_history(traj, t);
      const double total = traj.row(t).squaredNorm();
      const double parts = p.projection.squaredNorm() + p.residual_norm * p.residual_norm;
      EXPECT_NEAR(parts / total, 1.0, 1e-9);
      for (int j = 0; j < t; ++j) {
        EXPECT_LT(std::abs(p.residual.dot(traj.row(j))), 1e-9 * traj.row(j).norm() * std::sqrt(total));
      }
    }
  }
}

TEST(Project, ResidualShrinksWithLongerHistory) {
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const Matrix f = fixtures::random_matrix(seed, 25, 10);
    const Vector target = f.row(24).transpose();
    double prev = INFINITY;
    for (int len = 1; len <= 24; ++len) {
      const double r = project_onto_span(f.topRows(len), target).residual_norm;
      EXPECT_LE(r, prev + 1e-12);
      prev = r;
    }
    EXPECT_LT(prev, 1e-9);
  }
}

TEST(Project, LowerBoundsLinearPredictors) {
  const auto traj = gen_smooth_trajectory(7, 50, 64);
  const auto init = init_weights(50);
  for (int t = 1; t < 50; ++t) {
    const double floor = project_onto_history(traj, t).residual_norm;
    EXPECT_GE((predict_step(init, traj, t) - traj.row(t)).norm(), floor - 1e-9);
    if (t >= 3) {
      const Vector foca = apply_linear(traj, t - 1, foca_predictor_coefficients());
      EXPECT_GE((foca - traj.row(t)).norm(), floor - 1e-9);
    }
    if (t >= 2) {
      const Vector taylor = apply_linear(traj, t - 1, taylor_coefficients(1, 1, -1));
      EXPECT_GE((taylor - traj.row(t)).norm(), floor - 1e-9);
    }
  }
}

TEST(Fidelity, AllRowsEqual) {
  Matrix m(6, 3);
  for (int r = 0; r < 6; ++r) m.row(r) << 0.3, -1.2, 2.0;
  const auto profile = fidelity_profile(fixtures::make_trajectory(m));
  EXPECT_EQ(profile.per_step_fidelity[0], 0.0);
  for (int t = 1; t < 6; ++t) {
    EXPECT_NEAR(profile.per_step_fidelity[static_cast<std::size_t>(t)], 1.0, 1e-12);
    EXPECT_EQ(profile.rank_history[static_cast<std::size_t>(t)], 1);
  }
}

TEST(Fidelity, OrthogonalRows) {
  const int d = 6;
  const auto profile = fidelity_profile(fixtures::make_trajectory(Matrix::Identity(d, d)));
  for (int t = 0; t < d; ++t) EXPECT_NEAR(profile.per_step_fidelity[static_cast<std::size_t>(t)], 0.0, 1e-15);
  EXPECT_EQ(profile.rank_history[5], 5);
}

TEST(Fidelity, SmoothSurrogateRegime) {
  const auto profile = fidelity_profile(gen_smooth_trajectory(7, 50, 64));
  EXPECT_GE(fraction_at_least(profile, 0.95, 5, 45), 0.8);
  for (std::size_t t = 0; t < profile.per_step_fidelity.size(); ++t) {
    EXPECT_GE(profile.per_step_fidelity[t], -1e-12);
    EXPECT_LE(profile.per_step_fidelity[t], 1.0 + 1e-12);
    EXPECT_GE(profile.per_step_residual[t], 0.0);
  }
}
