#pragma once

#include "l2p/core.hpp"

namespace l2p {

/// C(n, k) as a double; exact for the sizes used here (n <= 60).
double binomial(int n, int k);

/// Backward difference of order i with stride N at `anchor`:
/// sum_j (-1)^j C(i, j) F(anchor - j N).
Vector finite_difference(const Matrix& rows, int anchor, int order, int interval);
Vector finite_difference(const FeatureTrajectory& traj, int anchor, int order, int interval);

/// Taylor forecast consolidated into one weight per cached anchor.
///
/// Weights sit at offsets 0, -N, ..., -mN. The formula is evaluated as
/// written, so `offset` k targets row anchor - k; a forecast k steps ahead
/// of the anchor passes -k.
LinearCoefficients taylor_coefficients(int order, int interval, int offset);

/// Same forecast evaluated term by term from finite differences. Used as
/// the oracle for taylor_coefficients.
Vector taylor_predict_direct(const Matrix& rows, int anchor, int order, int interval, int offset);
Vector taylor_predict_direct(const FeatureTrajectory& traj, int anchor, int order, int interval,
                             int offset);

/// BDF2 one-step predictor: 7/3, -5/3, 1/3 at offsets 0, -1, -2.
LinearCoefficients foca_predictor_coefficients();

/// Predictor plus Heun-type corrector with BDF2 derivatives at the anchor
/// and N steps back, collapsed to one weight per offset. Offsets that
/// coincide for N <= 2 are summed.
LinearCoefficients foca_corrected_coefficients(int interval);

Vector apply_linear(const Matrix& rows, int anchor, const LinearCoefficients& coeffs);
Vector apply_linear(const FeatureTrajectory& traj, int anchor, const LinearCoefficients& coeffs);

}  // namespace l2p
