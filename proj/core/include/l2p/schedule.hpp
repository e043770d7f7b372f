#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "l2p/core.hpp"
#include "l2p/surrogate.hpp"

namespace l2p {

/// Anchors {0, N, 2N, ...} below T.
CacheSchedule uniform_schedule(int num_steps, int interval);

enum class PredictorKind { Naive, Taylor, FoCa, L2P };

/// Which rule fills a skipped step. Taylor carries its order, L2P its
/// weights (shared, since sweeps copy specs around).
struct PredictorSpec {
  PredictorKind kind = PredictorKind::Naive;
  int order = 0;
  std::shared_ptr<const WeightMatrix> weights;

  static PredictorSpec naive();
  static PredictorSpec taylor(int order);
  static PredictorSpec foca();
  static PredictorSpec l2p(WeightMatrix weights);

  /// "naive", "taylor:2", "foca", "l2p".
  std::string label() const;
};

/// open: predictions are scored but the true feature goes into the cache and
/// the recurrence. closed: predictions replace the feature everywhere.
enum class RolloutMode { Open, Closed };

/// fallback: lower the predictor order until its history fits. strict:
/// throw InsufficientHistory instead.
enum class WarmupPolicy { Fallback, Strict };

struct CacheOptions {
  RolloutMode mode = RolloutMode::Closed;
  WarmupPolicy warmup = WarmupPolicy::Fallback;
  double cost_per_step = 1.0;
  double predictor_overhead = 0.0;
  int bytes_per_scalar = 4;
  int copies = 1;
};

struct StepPrediction {
  Vector value;
  bool fell_back = false;
};

/// Prediction for skipped step r from cache rows 0..r-1.
///
/// naive and Taylor read the most recent anchors only, with spacing equal to
/// the schedule interval (or the last anchor gap). FoCa forecasts one step
/// from row r-1 and falls back to the bare BDF2 predictor, then to reuse,
/// while history is short. L2P uses every earlier row.
StepPrediction predict_skipped(const PredictorSpec& predictor, const CacheSchedule& schedule,
                               const Matrix& cache, int step, WarmupPolicy warmup);

struct FlopsReport {
  double flops_full = 0.0;
  double flops_cached = 0.0;
  double reduction = 1.0;
};

FlopsReport flops_accounting(int num_steps, const CacheSchedule& schedule, double cost_per_step,
                             double predictor_overhead_per_step);

/// Peak cache bytes: (m+1) rows for naive (m=0) and Taylor m, the six rows
/// FoCa reads, T-1 rows for L2P; times `copies`.
std::uint64_t cache_memory_accounting(int num_steps, int dim, PredictorKind kind, int order,
                                      int bytes_per_scalar, int copies = 1);

double psnr_from_mse(double mse, double peak);
double psnr(const Matrix& reference, const Matrix& test, double peak);
double psnr(const Vector& reference, const Vector& test, double peak);

/// Replays a recorded trajectory through the cache: anchors read the true
/// row, skipped steps are predicted.
struct ReplayResult {
  Matrix features;
  RunMetrics metrics;
};

ReplayResult cached_replay(const FeatureTrajectory& traj, const CacheSchedule& schedule,
                           const PredictorSpec& predictor, const CacheOptions& options = {});

struct RolloutResult {
  Vector final_state;
  Vector reference_final_state;
  Matrix features;
  RunMetrics metrics;
};

/// Runs the denoiser with model calls only at anchors. Metrics compare the
/// features against a full rollout with the same init seed.
RolloutResult cached_rollout(const ToyDenoiser& model, int num_steps, std::uint64_t init_seed,
                             const CacheSchedule& schedule, const PredictorSpec& predictor,
                             const CacheOptions& options = {});

/// Fills cost and memory fields and the aggregate/PSNR from per_step_mse.
void finalize_metrics(RunMetrics& metrics, double peak, int dim, const CacheSchedule& schedule,
                      const PredictorSpec& predictor, const CacheOptions& options);

}  // namespace l2p
