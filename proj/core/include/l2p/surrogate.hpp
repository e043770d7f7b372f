#pragma once

#include <cstdint>

#include "l2p/core.hpp"

namespace l2p {

/// Parameters of the smooth trajectory generator. Each channel is a
/// polynomial in the normalized step plus damped sinusoids sampled at the
/// step grid, plus i.i.d. Gaussian noise.
///
/// Mode k uses a fixed period/damping ladder (periods 150, 60, 9, 6, ... steps)
/// with a per-seed jitter of `period_jitter` and amplitude `mode_decay^k`.
struct SmoothSpec {
  int poly_degree = 3;
  int num_modes = 4;
  double noise_scale = 1e-3;
  double amplitude_scale = 1.0;
  double mode_decay = 0.3;
  double period_jitter = 0.1;

  static constexpr int kMaxModes = 8;
  void validate() const;
};

FeatureTrajectory gen_smooth_trajectory(std::uint64_t seed, int num_steps, int dim,
                                        const SmoothSpec& spec = {});

enum class Nonlinearity { Tanh };

struct DenoiserSpec {
  double step_gain = 0.05;      ///< gamma in x_{r+1} = x_r + gamma * F_r
  double mixing_radius = 0.4;   ///< target spectral scale of the mixing matrix
  double bias_scale = 1.0;
  double bias_mode_decay = 0.3;
  double init_scale = 0.5;      ///< std of the initial state entries

  void validate() const;
};

/// Small iterative map standing in for a diffusion transformer:
/// F_r = tanh(mixing * x_r + bias_r), x_{r+1} = x_r + step_gain * F_r.
/// The feature feeds its own update, so a wrong predicted feature corrupts
/// every later state.
class ToyDenoiser {
 public:
  ToyDenoiser(Eigen::MatrixXd mixing, Matrix bias_schedule, double step_gain, double init_scale,
              std::uint64_t model_seed);

  int dim() const noexcept { return static_cast<int>(mixing_.rows()); }
  int state_dim() const noexcept { return dim(); }
  int max_steps() const noexcept { return static_cast<int>(bias_.rows()); }
  double step_gain() const noexcept { return step_gain_; }
  double init_scale() const noexcept { return init_scale_; }
  std::uint64_t model_seed() const noexcept { return model_seed_; }
  Nonlinearity nonlinearity() const noexcept { return Nonlinearity::Tanh; }
  const Eigen::MatrixXd& mixing() const noexcept { return mixing_; }
  const Matrix& bias_schedule() const noexcept { return bias_; }

  Vector initial_state(std::uint64_t init_seed) const;
  /// Model evaluation at step r (the expensive call a cache skips).
  Vector feature(const Vector& state, int step) const;

 private:
  Eigen::MatrixXd mixing_;
  Matrix bias_;
  double step_gain_;
  double init_scale_;
  std::uint64_t model_seed_;
};

ToyDenoiser make_toy_denoiser(std::uint64_t model_seed, int num_steps, int dim,
                              const DenoiserSpec& spec = {});

struct DenoiserRollout {
  FeatureTrajectory features;
  Vector final_state;
};

DenoiserRollout rollout_denoiser(const ToyDenoiser& model, int num_steps, std::uint64_t init_seed);

enum class SurrogateKind { Smooth, Denoiser };

std::string_view to_string(SurrogateKind kind) noexcept;

struct DatasetOptions {
  SmoothSpec smooth;
  DenoiserSpec denoiser;
  std::uint64_t model_seed = 0;
};

/// `count` trajectories with seeds base_seed + i. Denoiser datasets share one
/// model (options.model_seed) and vary the initial state.
TrajectorySet gen_dataset(std::uint64_t base_seed, int count, int num_steps, int dim,
                          SurrogateKind kind, const DatasetOptions& options = {});

}  // namespace l2p
