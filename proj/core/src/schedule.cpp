#include "l2p/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "l2p/fixed_predictors.hpp"

namespace l2p {
namespace {

int last_anchor_before(const CacheSchedule& schedule, int step) {
  const auto& anchors = schedule.anchors();
  auto it = std::lower_bound(anchors.begin(), anchors.end(), step);
  return *std::prev(it);  // anchor 0 always precedes a skipped step
}

int anchor_spacing(const CacheSchedule& schedule, int anchor) {
  if (schedule.interval()) return *schedule.interval();
  const auto& anchors = schedule.anchors();
  auto it = std::lower_bound(anchors.begin(), anchors.end(), anchor);
  if (it == anchors.begin()) return 1;
  return anchor - *std::prev(it);
}

[[noreturn]] void insufficient(const std::string& who, int step) {
  throw Error(ErrorKind::InsufficientHistory,
              who + " lacks history at step " + std::to_string(step) + " (strict warmup)");
}

double row_mse(const Vector& a, const Eigen::Ref<const Vector>& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

CacheSchedule uniform_schedule(int num_steps, int interval) {
  if (num_steps < 1) throw Error(ErrorKind::InvalidArgument, "schedule needs T >= 1");
  if (interval < 1) throw Error(ErrorKind::InvalidArgument, "interval must be >= 1");
  std::vector<int> anchors;
  for (int r = 0; r < num_steps; r += interval) anchors.push_back(r);
  return CacheSchedule(num_steps, std::move(anchors), interval);
}

PredictorSpec PredictorSpec::naive() { return {}; }

PredictorSpec PredictorSpec::taylor(int order) {
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "Taylor order must be >= 0");
  PredictorSpec spec;
  spec.kind = PredictorKind::Taylor;
  spec.order = order;
  return spec;
}

PredictorSpec PredictorSpec::foca() {
  PredictorSpec spec;
  spec.kind = PredictorKind::FoCa;
  return spec;
}

PredictorSpec PredictorSpec::l2p(WeightMatrix weights) {
  PredictorSpec spec;
  spec.kind = PredictorKind::L2P;
  spec.weights = std::make_shared<const WeightMatrix>(std::move(weights));
  return spec;
}

std::string PredictorSpec::label() const {
  switch (kind) {
    case PredictorKind::Naive: return "naive";
    case PredictorKind::Taylor: return "taylor:" + std::to_string(order);
    case PredictorKind::FoCa: return "foca";
    case PredictorKind::L2P: return "l2p";
  }
  return "unknown";
}

StepPrediction predict_skipped(const PredictorSpec& predictor, const CacheSchedule& schedule,
                               const Matrix& cache, int step, WarmupPolicy warmup) {
  if (step < 1 || step >= schedule.num_steps() || schedule.is_anchor(step)) {
    throw Error(ErrorKind::InvalidArgument, "step " + std::to_string(step) + " is not a skipped step");
  }
  if (cache.rows() < step) throw Error(ErrorKind::ShapeMismatch, "cache shorter than the step");
  const int anchor = last_anchor_before(schedule, step);

  switch (predictor.kind) {
    case PredictorKind::Naive:
      return {cache.row(anchor).transpose(), false};

    case PredictorKind::Taylor: {
      const int spacing = anchor_spacing(schedule, anchor);
      int available = 0;
      while (anchor - available * spacing >= 0 && schedule.is_anchor(anchor - available * spacing)) {
        ++available;
      }
      const int order = std::min(predictor.order, available - 1);
      const bool fell_back = order < predictor.order;
      if (fell_back && warmup == WarmupPolicy::Strict) insufficient(predictor.label(), step);
      const auto coeffs = taylor_coefficients(order, spacing, -(step - anchor));
      return {apply_linear(cache, anchor, coeffs), fell_back};
    }

    case PredictorKind::FoCa: {
      const int spacing = anchor_spacing(schedule, anchor);
      const int from = step - 1;
      if (from - spacing - 2 >= 0) {
        return {apply_linear(cache, from, foca_corrected_coefficients(spacing)), false};
      }
      if (warmup == WarmupPolicy::Strict) insufficient("foca", step);
      if (from - 2 >= 0) return {apply_linear(cache, from, foca_predictor_coefficients()), true};
      return {cache.row(from).transpose(), true};
    }

    case PredictorKind::L2P: {
      if (!predictor.weights) throw Error(ErrorKind::InvalidArgument, "l2p predictor without weights");
      if (predictor.weights->num_steps() != schedule.num_steps()) {
        throw Error(ErrorKind::ShapeMismatch, "weight matrix T differs from the schedule T");
      }
      const auto w = predictor.weights->row(step);
      Vector out = Vector::Zero(cache.cols());
      for (int j = 0; j < step; ++j) out += w[static_cast<std::size_t>(j)] * cache.row(j).transpose();
      return {std::move(out), false};
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown predictor kind");
}

FlopsReport flops_accounting(int num_steps, const CacheSchedule& schedule, double cost_per_step,
                             double predictor_overhead_per_step) {
  if (!(cost_per_step >= 0.0) || !(predictor_overhead_per_step >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "costs must be >= 0");
  }
  FlopsReport out;
  const auto anchors = static_cast<double>(schedule.anchors().size());
  out.flops_full = static_cast<double>(num_steps) * cost_per_step;
  out.flops_cached = anchors * cost_per_step +
                     static_cast<double>(num_steps - static_cast<int>(anchors)) * predictor_overhead_per_step;
  if (out.flops_cached > 0.0) {
    out.reduction = out.flops_full / out.flops_cached;
  } else {
    out.reduction = out.flops_full == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return out;
}

std::uint64_t cache_memory_accounting(int num_steps, int dim, PredictorKind kind, int order,
                                      int bytes_per_scalar, int copies) {
  std::uint64_t rows = 0;
  switch (kind) {
    case PredictorKind::Naive: rows = 1; break;
    case PredictorKind::Taylor: rows = static_cast<std::uint64_t>(std::max(order, 0)) + 1; break;
    case PredictorKind::FoCa: rows = 6; break;
    case PredictorKind::L2P: rows = static_cast<std::uint64_t>(std::max(num_steps - 1, 0)); break;
  }
  return rows * static_cast<std::uint64_t>(std::max(dim, 0)) *
         static_cast<std::uint64_t>(std::max(bytes_per_scalar, 0)) *
         static_cast<std::uint64_t>(std::max(copies, 0));
}

double psnr_from_mse(double mse, double peak) {
  if (!(peak > 0.0)) throw Error(ErrorKind::InvalidArgument, "PSNR peak must be > 0");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const Matrix& reference, const Matrix& test, double peak) {
  if (reference.rows() != test.rows() || reference.cols() != test.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "PSNR inputs differ in shape");
  }
  if (reference.size() == 0) throw Error(ErrorKind::ShapeMismatch, "PSNR of empty inputs");
  return psnr_from_mse((reference - test).squaredNorm() / static_cast<double>(reference.size()), peak);
}

double psnr(const Vector& reference, const Vector& test, double peak) {
  if (reference.size() != test.size()) throw Error(ErrorKind::ShapeMismatch, "PSNR inputs differ in length");
  if (reference.size() == 0) throw Error(ErrorKind::ShapeMismatch, "PSNR of empty inputs");
  return psnr_from_mse((reference - test).squaredNorm() / static_cast<double>(reference.size()), peak);
}

void finalize_metrics(RunMetrics& metrics, double peak, int dim, const CacheSchedule& schedule,
                      const PredictorSpec& predictor, const CacheOptions& options) {
  const int steps = schedule.num_steps();
  double sum = 0.0;
  for (double v : metrics.per_step_mse) sum += v;
  metrics.aggregate_mse = metrics.per_step_mse.empty() ? 0.0 : sum / static_cast<double>(metrics.per_step_mse.size());
  metrics.psnr_db = metrics.aggregate_mse == 0.0 ? std::numeric_limits<double>::infinity()
                                                  : psnr_from_mse(metrics.aggregate_mse, peak > 0.0 ? peak : 1.0);
  const FlopsReport flops = flops_accounting(steps, schedule, options.cost_per_step, options.predictor_overhead);
  metrics.flops_full = flops.flops_full;
  metrics.flops_cached = flops.flops_cached;
  metrics.flops_reduction = flops.reduction;
  metrics.cache_bytes_peak = cache_memory_accounting(steps, dim, predictor.kind, predictor.order,
                                                     options.bytes_per_scalar, options.copies);
}

ReplayResult cached_replay(const FeatureTrajectory& traj, const CacheSchedule& schedule,
                           const PredictorSpec& predictor, const CacheOptions& options) {
  if (schedule.num_steps() != traj.num_steps()) {
    throw Error(ErrorKind::ShapeMismatch, "schedule T differs from trajectory T");
  }
  const int steps = traj.num_steps();
  const Matrix& truth = traj.data();
  Matrix cache = Matrix::Zero(steps, traj.dim());
  Matrix features(steps, traj.dim());
  RunMetrics metrics;
  metrics.per_step_mse.assign(static_cast<std::size_t>(steps), 0.0);
  for (int r = 0; r < steps; ++r) {
    if (schedule.is_anchor(r)) {
      cache.row(r) = truth.row(r);
      features.row(r) = truth.row(r);
      continue;
    }
    StepPrediction p = predict_skipped(predictor, schedule, cache, r, options.warmup);
    if (p.fell_back) ++metrics.warmup_fallbacks;
    metrics.per_step_mse[static_cast<std::size_t>(r)] = row_mse(p.value, truth.row(r).transpose());
    features.row(r) = p.value.transpose();
    if (options.mode == RolloutMode::Closed) {
      cache.row(r) = p.value.transpose();
    } else {
      cache.row(r) = truth.row(r);
    }
  }
  finalize_metrics(metrics, truth.cwiseAbs().maxCoeff(), traj.dim(), schedule, predictor, options);
  return {std::move(features), std::move(metrics)};
}

RolloutResult cached_rollout(const ToyDenoiser& model, int num_steps, std::uint64_t init_seed,
                             const CacheSchedule& schedule, const PredictorSpec& predictor,
                             const CacheOptions& options) {
  if (schedule.num_steps() != num_steps) {
    throw Error(ErrorKind::ShapeMismatch, "schedule T differs from rollout T");
  }
  const DenoiserRollout reference = rollout_denoiser(model, num_steps, init_seed);
  const Matrix& truth = reference.features.data();

  if (options.mode == RolloutMode::Open) {
    // True features drive the recurrence, so the state path is the reference one.
    ReplayResult replay = cached_replay(reference.features, schedule, predictor, options);
    return {reference.final_state, reference.final_state, std::move(replay.features),
            std::move(replay.metrics)};
  }

  const int dim = model.dim();
  Vector x = model.initial_state(init_seed);
  Matrix cache = Matrix::Zero(num_steps, dim);
  RunMetrics metrics;
  metrics.per_step_mse.assign(static_cast<std::size_t>(num_steps), 0.0);
  for (int r = 0; r < num_steps; ++r) {
    Vector f;
    if (schedule.is_anchor(r)) {
      f = model.feature(x, r);
    } else {
      StepPrediction p = predict_skipped(predictor, schedule, cache, r, options.warmup);
      if (p.fell_back) ++metrics.warmup_fallbacks;
      f = std::move(p.value);
    }
    metrics.per_step_mse[static_cast<std::size_t>(r)] = row_mse(f, truth.row(r).transpose());
    cache.row(r) = f.transpose();
    x += model.step_gain() * f;
    if (!x.allFinite()) {
      throw Error(ErrorKind::Diverged, "cached rollout state became non-finite at step " + std::to_string(r));
    }
  }
  finalize_metrics(metrics, truth.cwiseAbs().maxCoeff(), dim, schedule, predictor, options);
  return {std::move(x), reference.final_state, std::move(cache), std::move(metrics)};
}

}  // namespace l2p
