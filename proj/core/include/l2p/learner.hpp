#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "l2p/core.hpp"
#include "l2p/schedule.hpp"

namespace l2p {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.01;
  double ridge_lambda = 1e-6;  ///< oracle only
  int loss_log_every = 0;      ///< 0 disables progress callbacks
  std::uint64_t rng_seed = 0;  ///< unused by full-batch descent

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_history;  ///< mean train MSE after each epoch, data units
  double initial_train_mse = 0.0;
  double final_train_mse = 0.0;
  double wall_time_s = 0.0;
  bool converged = false;
  std::vector<double> per_row_mse;  ///< final MSE of each row t; entry 0 unused
};

/// One-hot on the previous step: the untrained predictor is plain reuse.
WeightMatrix init_weights(int num_steps);

/// sum_j W_{t,j} F(x_j) over rows 0..t-1 of `rows`.
Vector predict_step(const WeightMatrix& weights, const Matrix& rows, int t);
Vector predict_step(const WeightMatrix& weights, const FeatureTrajectory& traj, int t);

/// Second moments of the whole dataset after dividing by its global RMS:
/// moments(j, k) = mean over trajectories and channels of F_j F_k.
struct NormalEquations {
  Eigen::MatrixXd moments;
  double scale = 1.0;  ///< global RMS of the raw data
};

NormalEquations build_normal_equations(const TrajectorySet& dataset);

/// Row t of the objective: loss(w) = w'Gw - 2b'w + c in normalized units.
struct RowSystem {
  Eigen::MatrixXd gram;
  Vector rhs;
  double target_energy = 0.0;
};

RowSystem row_system(const NormalEquations& eq, int t);
double row_loss(const RowSystem& sys, const Vector& w);
Vector row_gradient(const RowSystem& sys, const Vector& w);

/// Full-batch gradient descent on one row. `losses`, when given, receives the
/// normalized loss after every epoch.
Vector train_row(const RowSystem& sys, const TrainConfig& cfg, const Vector& init,
                 std::vector<double>* losses = nullptr);

using ProgressFn = std::function<void(int epoch, double loss)>;

std::pair<WeightMatrix, TrainReport> train(const TrajectorySet& dataset, const TrainConfig& cfg,
                                           const WeightMatrix& init, const ProgressFn& progress = {});

/// Closed-form ridge solution per row, via QR of the stacked raw history
/// augmented with sqrt(lambda) I. Throws SingularSystem when lambda = 0 and
/// the history is rank deficient.
WeightMatrix ridge_oracle(const TrajectorySet& dataset, double lambda);

/// Train MSE of every row evaluated directly on the data (entry 0 is 0).
std::vector<double> train_mse_per_row(const TrajectorySet& dataset, const WeightMatrix& weights);

/// Mean of rows 1..T-1.
double mean_row_mse(const std::vector<double>& per_row);

/// Cached replay of every trajectory; per-step MSE is averaged over the set
/// and PSNR uses the largest reference magnitude in the set.
RunMetrics eval_predictor(const PredictorSpec& predictor, const TrajectorySet& dataset,
                          const CacheSchedule& schedule, const CacheOptions& options = {});

}  // namespace l2p
