#include "l2p/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace l2p {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonMonotoneLabels: return "NonMonotoneLabels";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::HistoryUnderflow: return "HistoryUnderflow";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ZeroNormFeature: return "ZeroNormFeature";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::ConditioningLimit: return "ConditioningLimit";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::NonFinitePayload: return "NonFinitePayload";
    case ErrorKind::RowLengthMismatch: return "RowLengthMismatch";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void validate_trajectory(const Matrix& data, std::span<const double> step_labels,
                         LabelDirection direction) {
  if (data.rows() < 2 || data.cols() < 1) {
    throw Error(ErrorKind::ShapeMismatch, "trajectory needs T >= 2 and D >= 1");
  }
  if (static_cast<Eigen::Index>(step_labels.size()) != data.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "expected one step label per row");
  }
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (!std::isfinite(data(r, c))) {
        std::ostringstream msg;
        msg << "non-finite value at step " << r << ", column " << c;
        throw Error(ErrorKind::NonFinite, msg.str());
      }
    }
  }
  for (std::size_t i = 0; i < step_labels.size(); ++i) {
    if (!std::isfinite(step_labels[i])) {
      throw Error(ErrorKind::NonFinite, "non-finite step label");
    }
    if (i == 0) continue;
    const bool ok = direction == LabelDirection::Descending ? step_labels[i] < step_labels[i - 1]
                                                            : step_labels[i] > step_labels[i - 1];
    if (!ok) {
      std::ostringstream msg;
      msg << "step labels not strictly monotone at index " << i;
      throw Error(ErrorKind::NonMonotoneLabels, msg.str());
    }
  }
}

FeatureTrajectory::FeatureTrajectory(Matrix data, std::vector<double> step_labels,
                                     LabelDirection direction, std::uint64_t seed,
                                     std::string source_tag)
    : data_(std::move(data)),
      labels_(std::move(step_labels)),
      direction_(direction),
      seed_(seed),
      tag_(std::move(source_tag)) {
  validate_trajectory(data_, labels_, direction_);
}

Eigen::Ref<const Vector> FeatureTrajectory::row(int r) const {
  if (r < 0 || r >= num_steps()) {
    throw Error(ErrorKind::IndexOutOfRange, "row " + std::to_string(r) + " outside trajectory");
  }
  return data_.row(r).transpose();
}

std::vector<double> default_step_labels(int num_steps) {
  std::vector<double> labels(static_cast<std::size_t>(std::max(num_steps, 0)));
  for (int r = 0; r < num_steps; ++r) {
    labels[static_cast<std::size_t>(r)] = 1.0 - static_cast<double>(r) / num_steps;
  }
  return labels;
}

TrajectorySet::TrajectorySet(std::vector<FeatureTrajectory> trajectories)
    : trajectories_(std::move(trajectories)) {
  if (trajectories_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "trajectory set must be non-empty");
  }
  const auto& first = trajectories_.front();
  for (const auto& traj : trajectories_) {
    if (traj.num_steps() != first.num_steps() || traj.dim() != first.dim()) {
      throw Error(ErrorKind::ShapeMismatch, "trajectory set is not shape-homogeneous");
    }
  }
}

std::vector<ManifestEntry> TrajectorySet::manifest() const {
  std::vector<ManifestEntry> out;
  out.reserve(trajectories_.size());
  for (const auto& traj : trajectories_) out.push_back({traj.seed(), traj.source_tag()});
  return out;
}

LinearCoefficients::LinearCoefficients(std::vector<Term> terms, std::string normalization_tag)
    : tag_(std::move(normalization_tag)) {
  for (const auto& term : terms) {
    if (term.offset > 0) {
      throw Error(ErrorKind::InvalidArgument, "coefficient offsets must be non-positive");
    }
    if (!std::isfinite(term.weight)) {
      throw Error(ErrorKind::NonFinite, "coefficient weight is not finite");
    }
  }
  // Stable sort keeps the summation order of colliding terms deterministic.
  std::stable_sort(terms.begin(), terms.end(),
                   [](const Term& a, const Term& b) { return a.offset > b.offset; });
  for (const auto& term : terms) {
    if (!terms_.empty() && terms_.back().offset == term.offset) {
      terms_.back().weight += term.weight;
    } else {
      terms_.push_back(term);
    }
  }
}

int LinearCoefficients::min_offset() const noexcept {
  return terms_.empty() ? 0 : terms_.back().offset;
}

double LinearCoefficients::weight_sum() const noexcept {
  double sum = 0.0;
  for (const auto& term : terms_) sum += term.weight;
  return sum;
}

double LinearCoefficients::weight_at(int offset) const noexcept {
  for (const auto& term : terms_) {
    if (term.offset == offset) return term.weight;
  }
  return 0.0;
}

std::size_t WeightMatrix::packed_size(int num_steps) noexcept {
  if (num_steps < 2) return 0;
  const auto t = static_cast<std::size_t>(num_steps);
  return t * (t - 1) / 2;
}

std::size_t WeightMatrix::row_offset(int t) noexcept {
  const auto tt = static_cast<std::size_t>(t);
  return tt * (tt - 1) / 2;
}

WeightMatrix::WeightMatrix(int num_steps, std::vector<double> packed)
    : num_steps_(num_steps), packed_(std::move(packed)) {
  if (num_steps_ < 2) throw Error(ErrorKind::InvalidArgument, "weight matrix needs T >= 2");
  if (packed_.size() != packed_size(num_steps_)) {
    throw Error(ErrorKind::RowLengthMismatch, "packed weight count does not match T");
  }
  for (double w : packed_) {
    if (!std::isfinite(w)) throw Error(ErrorKind::NonFinite, "weight is not finite");
  }
}

WeightMatrix::WeightMatrix(int num_steps, const std::vector<std::vector<double>>& rows)
    : num_steps_(num_steps) {
  if (num_steps_ < 2) throw Error(ErrorKind::InvalidArgument, "weight matrix needs T >= 2");
  if (rows.size() != static_cast<std::size_t>(num_steps_ - 1)) {
    throw Error(ErrorKind::RowLengthMismatch, "expected T-1 weight rows");
  }
  packed_.reserve(packed_size(num_steps_));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != i + 1) {
      throw Error(ErrorKind::RowLengthMismatch,
                  "row " + std::to_string(i + 1) + " must hold " + std::to_string(i + 1) + " weights");
    }
    for (double w : rows[i]) {
      if (!std::isfinite(w)) throw Error(ErrorKind::NonFinite, "weight is not finite");
      packed_.push_back(w);
    }
  }
}

std::span<const double> WeightMatrix::row(int t) const {
  if (t < 1 || t >= num_steps_) {
    throw Error(ErrorKind::IndexOutOfRange, "weight row " + std::to_string(t) + " out of range");
  }
  return {packed_.data() + row_offset(t), static_cast<std::size_t>(t)};
}

CacheSchedule::CacheSchedule(int num_steps, std::vector<int> anchors, std::optional<int> interval)
    : num_steps_(num_steps), anchors_(std::move(anchors)), interval_(interval) {
  if (num_steps_ < 1) throw Error(ErrorKind::InvalidArgument, "schedule needs T >= 1");
  std::sort(anchors_.begin(), anchors_.end());
  anchors_.erase(std::unique(anchors_.begin(), anchors_.end()), anchors_.end());
  if (anchors_.empty() || anchors_.front() != 0) {
    throw Error(ErrorKind::InvalidArgument, "schedule must anchor step 0");
  }
  if (anchors_.back() >= num_steps_) {
    throw Error(ErrorKind::IndexOutOfRange, "anchor beyond the last step");
  }
  if (interval_ && *interval_ < 1) throw Error(ErrorKind::InvalidArgument, "interval must be >= 1");
}

bool CacheSchedule::is_anchor(int step) const noexcept {
  return std::binary_search(anchors_.begin(), anchors_.end(), step);
}

}  // namespace l2p
