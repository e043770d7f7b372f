#include "l2p/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l2p/fixed_predictors.hpp"

namespace l2p {
namespace {

void gate(std::size_t size) {
  if (size < 1) throw Error(ErrorKind::InvalidArgument, "coefficient vector must be non-empty");
  if (size > static_cast<std::size_t>(kMaxPascalSize)) {
    throw Error(ErrorKind::ConditioningLimit,
                "length " + std::to_string(size) + " exceeds the Pascal conditioning limit of " +
                    std::to_string(kMaxPascalSize));
  }
}

double pascal_entry(int k, int m) {
  if (m > k) return 0.0;
  return (m % 2 == 0 ? 1.0 : -1.0) * binomial(k, m);
}

}  // namespace

Eigen::MatrixXd pascal_matrix(int size) {
  if (size < 1) throw Error(ErrorKind::InvalidArgument, "Pascal matrix size must be >= 1");
  Eigen::MatrixXd p(size, size);
  for (int k = 0; k < size; ++k) {
    for (int m = 0; m < size; ++m) p(k, m) = pascal_entry(k, m);
  }
  return p;
}

std::vector<double> weights_to_difference_coeffs(std::span<const double> row) {
  gate(row.size());
  const int t = static_cast<int>(row.size());
  // w_rev[k] = sum_{i >= k} P[i][k] omega_i; P^T is upper triangular with
  // diagonal (-1)^k, so solve from the last entry upward.
  // Accumulate in long double: the binomials reach ~3e8 at t = 32 and the
  // alternating sums cancel heavily.
  std::vector<long double> wide(row.size(), 0.0L);
  for (int k = t - 1; k >= 0; --k) {
    long double acc = row[static_cast<std::size_t>(t - 1 - k)];
    for (int i = k + 1; i < t; ++i) {
      acc -= static_cast<long double>(pascal_entry(i, k)) * wide[static_cast<std::size_t>(i)];
    }
    wide[static_cast<std::size_t>(k)] = acc / static_cast<long double>(pascal_entry(k, k));
  }
  return {wide.begin(), wide.end()};
}

std::vector<double> difference_coeffs_to_weights(std::span<const double> omega) {
  gate(omega.size());
  const int t = static_cast<int>(omega.size());
  std::vector<double> row(omega.size(), 0.0);
  for (int k = 0; k < t; ++k) {
    long double acc = 0.0L;
    for (int i = k; i < t; ++i) {
      acc += static_cast<long double>(pascal_entry(i, k)) * omega[static_cast<std::size_t>(i)];
    }
    row[static_cast<std::size_t>(t - 1 - k)] = static_cast<double>(acc);
  }
  return row;
}

IsomorphismReport verify_isomorphism(std::span<const double> row, std::span<const double> omega,
                                     const Matrix& rows, double tol) {
  if (row.size() != omega.size() || row.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "weight and difference vectors differ in length");
  }
  const int t = static_cast<int>(row.size());
  if (rows.rows() < t) throw Error(ErrorKind::IndexOutOfRange, "trajectory shorter than the row");
  // Both sides are summed in long double so the check measures the
  // coefficients, not the rounding of the high-order differences.
  double scale = 0.0;
  double diff = 0.0;
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    long double lhs = 0.0L;
    for (int j = 0; j < t; ++j) lhs += static_cast<long double>(row[static_cast<std::size_t>(j)]) * rows(j, c);
    long double rhs = 0.0L;
    for (int i = 0; i < t; ++i) {
      long double delta = 0.0L;
      for (int m = 0; m <= i; ++m) delta += static_cast<long double>(pascal_entry(i, m)) * rows(t - 1 - m, c);
      rhs += static_cast<long double>(omega[static_cast<std::size_t>(i)]) * delta;
    }
    scale = std::max({scale, static_cast<double>(std::abs(lhs)), static_cast<double>(std::abs(rhs))});
    diff = std::max(diff, static_cast<double>(std::abs(lhs - rhs)));
  }
  IsomorphismReport report;
  report.max_relative_deviation = scale > 0.0 ? diff / scale : 0.0;
  report.tolerance = tol;
  report.passed = report.max_relative_deviation <= tol;
  return report;
}

IsomorphismReport verify_isomorphism(std::span<const double> row, const Matrix& rows, double tol) {
  const std::vector<double> omega = weights_to_difference_coeffs(row);
  return verify_isomorphism(row, omega, rows, tol);
}

IsomorphismReport verify_isomorphism(std::span<const double> row, const FeatureTrajectory& traj,
                                     double tol) {
  return verify_isomorphism(row, traj.data(), tol);
}

}  // namespace l2p
