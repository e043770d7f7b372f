#pragma once

#include <span>
#include <vector>

#include "l2p/core.hpp"

namespace l2p {

/// Conversions are refused above this length: Pascal entries grow like
/// C(t, t/2) and the round trip loses accuracy past it.
inline constexpr int kMaxPascalSize = 32;

/// P[k][m] = (-1)^m C(k, m) for k >= m. P is its own inverse.
Eigen::MatrixXd pascal_matrix(int size);

/// Weight row (oldest step first, as stored in WeightMatrix) to difference
/// coefficients omega, where omega_i multiplies the i-th backward difference
/// at the most recent step t-1. Internally the row is reversed to
/// most-recent-first and P^T omega = w is solved by back substitution.
std::vector<double> weights_to_difference_coeffs(std::span<const double> row);

/// Inverse of weights_to_difference_coeffs; returns oldest-first weights.
std::vector<double> difference_coeffs_to_weights(std::span<const double> omega);

struct IsomorphismReport {
  double max_relative_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Evaluates sum_j w_j F(x_j) and sum_i omega_i Delta^i F(x_{t-1}) on rows
/// 0..t-1 of `rows`, where t = row.size().
IsomorphismReport verify_isomorphism(std::span<const double> row, std::span<const double> omega,
                                     const Matrix& rows, double tol);
IsomorphismReport verify_isomorphism(std::span<const double> row, const Matrix& rows, double tol);
IsomorphismReport verify_isomorphism(std::span<const double> row, const FeatureTrajectory& traj,
                                     double tol);

}  // namespace l2p
