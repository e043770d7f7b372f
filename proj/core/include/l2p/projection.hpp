#pragma once

#include <vector>

#include "l2p/core.hpp"

namespace l2p {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankThreshold = 1e-10;

struct Projection {
  Vector projection;
  Vector residual;
  double residual_norm = 0.0;
  int rank = 0;
};

/// Orthogonal projection of `target` onto the span of the rows of `history`
/// (thin SVD, minimum-norm under rank deficiency).
Projection project_onto_span(const Matrix& history, const Vector& target);

/// Projects row t onto span(rows 0..t-1).
Projection project_onto_history(const FeatureTrajectory& traj, int t);

/// residual_norm / ||F(x_t)||. Throws ZeroNormFeature for a zero row.
double relative_residual(const FeatureTrajectory& traj, int t);

struct FidelityProfile {
  std::vector<double> per_step_fidelity;  ///< entry 0 is 0 by convention
  std::vector<double> per_step_residual;  ///< absolute residual norm; entry 0 is ||F(x_0)||
  std::vector<int> rank_history;          ///< numerical rank of rows 0..t-1
};

FidelityProfile fidelity_profile(const FeatureTrajectory& traj);

/// Fraction of steps t in [first, last] whose fidelity is >= threshold.
double fraction_at_least(const FidelityProfile& profile, double threshold, int first, int last);

}  // namespace l2p
