#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace l2p {

/// Row-major T x D feature storage; row r is the feature vector at step r.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  NonFinite,
  ShapeMismatch,
  NonMonotoneLabels,
  InvalidSpec,
  InvalidArgument,
  Diverged,
  HistoryUnderflow,
  IndexOutOfRange,
  ZeroNormFeature,
  DivergedLoss,
  SingularSystem,
  InsufficientHistory,
  ConditioningLimit,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  NonFinitePayload,
  RowLengthMismatch,
  IoFailure,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class LabelDirection : std::uint8_t { Descending = 0, Ascending = 1 };

/// Checks the trajectory invariants on raw parts: finite data, one label per
/// row, strictly monotone labels in `direction`, at least two steps.
void validate_trajectory(const Matrix& data, std::span<const double> step_labels,
                         LabelDirection direction);

/// A time-ordered sequence of feature vectors F(x_0), ..., F(x_{T-1}).
///
/// Row 0 is the earliest computed step of the denoising run. The row index
/// always increases along the run; `direction` only records whether the
/// diffusion timestep labels rise or fall.
class FeatureTrajectory {
 public:
  FeatureTrajectory(Matrix data, std::vector<double> step_labels, LabelDirection direction,
                    std::uint64_t seed, std::string source_tag);

  int num_steps() const noexcept { return static_cast<int>(data_.rows()); }
  int dim() const noexcept { return static_cast<int>(data_.cols()); }
  const Matrix& data() const noexcept { return data_; }
  Eigen::Ref<const Vector> row(int r) const;
  std::span<const double> step_labels() const noexcept { return labels_; }
  LabelDirection direction() const noexcept { return direction_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& source_tag() const noexcept { return tag_; }

 private:
  Matrix data_;
  std::vector<double> labels_;
  LabelDirection direction_;
  std::uint64_t seed_;
  std::string tag_;
};

/// Default labels for generated trajectories: t_r = 1 - r / T, descending.
std::vector<double> default_step_labels(int num_steps);

struct ManifestEntry {
  std::uint64_t seed = 0;
  std::string tag;
};

/// Non-empty, shape-homogeneous collection of trajectories.
class TrajectorySet {
 public:
  explicit TrajectorySet(std::vector<FeatureTrajectory> trajectories);

  std::size_t size() const noexcept { return trajectories_.size(); }
  int num_steps() const noexcept { return trajectories_.front().num_steps(); }
  int dim() const noexcept { return trajectories_.front().dim(); }
  const FeatureTrajectory& operator[](std::size_t i) const { return trajectories_.at(i); }
  const std::vector<FeatureTrajectory>& trajectories() const noexcept { return trajectories_; }
  std::vector<ManifestEntry> manifest() const;

  auto begin() const noexcept { return trajectories_.begin(); }
  auto end() const noexcept { return trajectories_.end(); }

 private:
  std::vector<FeatureTrajectory> trajectories_;
};

struct Term {
  int offset = 0;  ///< non-positive step offset relative to the anchor
  double weight = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

/// Sparse map from history offsets to scalar weights. Colliding offsets are
/// merged by summation and terms are kept sorted by descending offset.
class LinearCoefficients {
 public:
  LinearCoefficients(std::vector<Term> terms, std::string normalization_tag);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  const std::string& normalization_tag() const noexcept { return tag_; }
  std::size_t size() const noexcept { return terms_.size(); }
  int min_offset() const noexcept;
  double weight_sum() const noexcept;
  /// Weight at `offset`, or 0 when the offset is absent.
  double weight_at(int offset) const noexcept;

 private:
  std::vector<Term> terms_;
  std::string tag_;
};

/// Strictly lower-triangular predictor weights. Row t (1 <= t < T) holds t
/// weights W_{t,0..t-1}, oldest history step first.
class WeightMatrix {
 public:
  WeightMatrix(int num_steps, std::vector<double> packed);
  WeightMatrix(int num_steps, const std::vector<std::vector<double>>& rows);

  int num_steps() const noexcept { return num_steps_; }
  std::span<const double> row(int t) const;
  const std::vector<double>& packed() const noexcept { return packed_; }
  static std::size_t packed_size(int num_steps) noexcept;
  static std::size_t row_offset(int t) noexcept;

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  int num_steps_;
  std::vector<double> packed_;
};

/// Partition of the steps into computed anchors and predicted steps.
class CacheSchedule {
 public:
  CacheSchedule(int num_steps, std::vector<int> anchors, std::optional<int> interval = std::nullopt);

  int num_steps() const noexcept { return num_steps_; }
  const std::vector<int>& anchors() const noexcept { return anchors_; }
  std::optional<int> interval() const noexcept { return interval_; }
  bool is_anchor(int step) const noexcept;
  int num_skipped() const noexcept { return num_steps_ - static_cast<int>(anchors_.size()); }

 private:
  int num_steps_;
  std::vector<int> anchors_;
  std::optional<int> interval_;
};

/// Fidelity and cost summary of one cached run (or an average over several).
struct RunMetrics {
  std::vector<double> per_step_mse;
  double aggregate_mse = 0.0;
  double psnr_db = std::numeric_limits<double>::infinity();
  double flops_full = 0.0;
  double flops_cached = 0.0;
  double flops_reduction = 1.0;
  std::uint64_t cache_bytes_peak = 0;
  /// Number of skipped steps where the warmup rule lowered the predictor order.
  int warmup_fallbacks = 0;
};

}  // namespace l2p
