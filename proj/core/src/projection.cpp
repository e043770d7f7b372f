#include "l2p/projection.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SVD>

namespace l2p {

Projection project_onto_span(const Matrix& history, const Vector& target) {
  if (history.cols() != target.size()) {
    throw Error(ErrorKind::ShapeMismatch, "history rows and target differ in length");
  }
  Projection out;
  out.projection = Vector::Zero(target.size());
  if (history.rows() > 0) {
    // Columns of H are the history features; the left singular vectors with
    // non-negligible singular values span the history subspace.
    const Eigen::MatrixXd h = history.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU);
    const auto& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? kRankThreshold * sigma(0) : 0.0;
    int rank = 0;
    while (rank < sigma.size() && sigma(rank) > cutoff && sigma(rank) > 0.0) ++rank;
    out.rank = rank;
    if (rank > 0) {
      const auto basis = svd.matrixU().leftCols(rank);
      const Vector coords = basis.transpose() * target;
      out.projection = basis * coords;
    }
  }
  out.residual = target - out.projection;
  out.residual_norm = out.residual.norm();
  return out;
}

Projection project_onto_history(const FeatureTrajectory& traj, int t) {
  if (t < 1 || t >= traj.num_steps()) {
    throw Error(ErrorKind::IndexOutOfRange, "projection step " + std::to_string(t) + " out of range");
  }
  return project_onto_span(traj.data().topRows(t), traj.data().row(t).transpose());
}

double relative_residual(const FeatureTrajectory& traj, int t) {
  const Projection p = project_onto_history(traj, t);
  const double norm = traj.data().row(t).norm();
  if (norm == 0.0) {
    throw Error(ErrorKind::ZeroNormFeature, "feature at step " + std::to_string(t) + " is zero");
  }
  return p.residual_norm / norm;
}

FidelityProfile fidelity_profile(const FeatureTrajectory& traj) {
  const int steps = traj.num_steps();
  FidelityProfile out;
  out.per_step_fidelity.assign(static_cast<std::size_t>(steps), 0.0);
  out.per_step_residual.assign(static_cast<std::size_t>(steps), 0.0);
  out.rank_history.assign(static_cast<std::size_t>(steps), 0);
  out.per_step_residual[0] = traj.data().row(0).norm();
  for (int t = 1; t < steps; ++t) {
    const Projection p = project_onto_history(traj, t);
    const double norm = traj.data().row(t).norm();
    if (norm == 0.0) {
      throw Error(ErrorKind::ZeroNormFeature, "feature at step " + std::to_string(t) + " is zero");
    }
    const auto i = static_cast<std::size_t>(t);
    out.per_step_fidelity[i] = 1.0 - p.residual_norm / norm;
    out.per_step_residual[i] = p.residual_norm;
    out.rank_history[i] = p.rank;
  }
  return out;
}

double fraction_at_least(const FidelityProfile& profile, double threshold, int first, int last) {
  const int steps = static_cast<int>(profile.per_step_fidelity.size());
  first = std::max(first, 0);
  last = std::min(last, steps - 1);
  if (last < first) return 0.0;
  int hits = 0;
  for (int t = first; t <= last; ++t) {
    if (profile.per_step_fidelity[static_cast<std::size_t>(t)] >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(last - first + 1);
}

}  // namespace l2p
