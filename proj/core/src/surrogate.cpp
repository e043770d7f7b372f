#include "l2p/surrogate.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "l2p/random.hpp"

namespace l2p {
namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct ModeLadder {
  double period;
  double damping;
};

constexpr std::array<ModeLadder, SmoothSpec::kMaxModes> kLadder{{
    {150.0, 0.5},
    {60.0, 1.0},
    {9.0, 1.5},
    {6.0, 2.0},
    {30.0, 0.75},
    {15.0, 1.25},
    {4.5, 1.75},
    {3.5, 2.25},
}};

// Shared temporal basis (rows) scaled by per-basis amplitudes. Draws one
// uniform per mode from `rng` for the period jitter.
Matrix smooth_basis(SplitMix64& rng, int num_steps, int poly_degree, int num_modes, double decay,
                    double jitter) {
  const int count = poly_degree + 1 + 2 * num_modes;
  Matrix basis(count, num_steps);
  const double denom = num_steps > 1 ? static_cast<double>(num_steps - 1) : 1.0;
  for (int r = 0; r < num_steps; ++r) {
    const double x = 2.0 * (static_cast<double>(r) / denom) - 1.0;
    double power = 1.0;
    for (int p = 0; p <= poly_degree; ++p) {
      basis(p, r) = power;
      power *= x;
    }
  }
  double amplitude = 1.0;
  for (int k = 0; k < num_modes; ++k) {
    const double period = kLadder[static_cast<std::size_t>(k)].period *
                          (1.0 + jitter * rng.uniform(-1.0, 1.0));
    const double damping = kLadder[static_cast<std::size_t>(k)].damping;
    const double omega = kTwoPi / period;
    const int row = poly_degree + 1 + 2 * k;
    for (int r = 0; r < num_steps; ++r) {
      const double envelope = amplitude * detmath::exp(-damping * (static_cast<double>(r) / denom));
      basis(row, r) = envelope * detmath::cos(omega * r);
      basis(row + 1, r) = envelope * detmath::sin(omega * r);
    }
    amplitude *= decay;
  }
  return basis;
}

// Random channel mixture of the basis; loops fix the summation order.
Matrix mix_channels(SplitMix64& rng, const Matrix& basis, int dim, double scale) {
  const auto count = basis.rows();
  const double coef_scale = scale / std::sqrt(static_cast<double>(count));
  Matrix coef(count, dim);
  for (Eigen::Index b = 0; b < count; ++b) {
    for (int d = 0; d < dim; ++d) coef(b, d) = coef_scale * rng.normal();
  }
  Matrix out(basis.cols(), dim);
  for (Eigen::Index r = 0; r < basis.cols(); ++r) {
    for (int d = 0; d < dim; ++d) {
      double acc = 0.0;
      for (Eigen::Index b = 0; b < count; ++b) acc += basis(b, r) * coef(b, d);
      out(r, d) = acc;
    }
  }
  return out;
}

void require_shape(int num_steps, int dim) {
  if (num_steps < 2 || dim < 1) {
    throw Error(ErrorKind::InvalidSpec, "generators need T >= 2 and D >= 1");
  }
}

}  // namespace

void SmoothSpec::validate() const {
  if (poly_degree < 0 || num_modes < 0 || num_modes > kMaxModes) {
    throw Error(ErrorKind::InvalidSpec,
                "poly_degree must be >= 0 and num_modes in [0, " + std::to_string(kMaxModes) + "]");
  }
  if (!std::isfinite(noise_scale) || noise_scale < 0.0) {
    throw Error(ErrorKind::InvalidSpec, "noise_scale must be finite and >= 0");
  }
  if (!std::isfinite(amplitude_scale) || amplitude_scale <= 0.0) {
    throw Error(ErrorKind::InvalidSpec, "amplitude_scale must be finite and > 0");
  }
  if (!std::isfinite(mode_decay) || mode_decay <= 0.0) {
    throw Error(ErrorKind::InvalidSpec, "mode_decay must be finite and > 0");
  }
  if (!std::isfinite(period_jitter) || period_jitter < 0.0 || period_jitter >= 0.5) {
    throw Error(ErrorKind::InvalidSpec, "period_jitter must lie in [0, 0.5)");
  }
}

FeatureTrajectory gen_smooth_trajectory(std::uint64_t seed, int num_steps, int dim,
                                        const SmoothSpec& spec) {
  require_shape(num_steps, dim);
  spec.validate();
  SplitMix64 rng(seed);
  const Matrix basis = smooth_basis(rng, num_steps, spec.poly_degree, spec.num_modes,
                                    spec.mode_decay, spec.period_jitter);
  Matrix data = mix_channels(rng, basis, dim, spec.amplitude_scale);
  if (spec.noise_scale > 0.0) {
    for (int r = 0; r < num_steps; ++r) {
      for (int d = 0; d < dim; ++d) data(r, d) += spec.noise_scale * rng.normal();
    }
  }
  return FeatureTrajectory(std::move(data), default_step_labels(num_steps),
                           LabelDirection::Descending, seed, "surrogate-smooth");
}

void DenoiserSpec::validate() const {
  if (!std::isfinite(step_gain) || step_gain < 0.0 || step_gain > 1.0) {
    throw Error(ErrorKind::InvalidSpec, "step_gain must lie in [0, 1]");
  }
  if (!std::isfinite(mixing_radius) || mixing_radius < 0.0) {
    throw Error(ErrorKind::InvalidSpec, "mixing_radius must be finite and >= 0");
  }
  if (!std::isfinite(bias_scale) || !std::isfinite(bias_mode_decay) || bias_mode_decay <= 0.0) {
    throw Error(ErrorKind::InvalidSpec, "bias parameters must be finite");
  }
  if (!std::isfinite(init_scale) || init_scale < 0.0) {
    throw Error(ErrorKind::InvalidSpec, "init_scale must be finite and >= 0");
  }
}

ToyDenoiser::ToyDenoiser(Eigen::MatrixXd mixing, Matrix bias_schedule, double step_gain,
                         double init_scale, std::uint64_t model_seed)
    : mixing_(std::move(mixing)),
      bias_(std::move(bias_schedule)),
      step_gain_(step_gain),
      init_scale_(init_scale),
      model_seed_(model_seed) {
  if (mixing_.rows() != mixing_.cols() || mixing_.rows() != bias_.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "mixing must be D x D and bias T x D");
  }
}

Vector ToyDenoiser::initial_state(std::uint64_t init_seed) const {
  SplitMix64 rng(init_seed);
  Vector x(dim());
  for (int d = 0; d < dim(); ++d) x(d) = init_scale_ * rng.normal();
  return x;
}

Vector ToyDenoiser::feature(const Vector& state, int step) const {
  if (step < 0 || step >= max_steps()) {
    throw Error(ErrorKind::IndexOutOfRange, "denoiser step " + std::to_string(step) + " out of range");
  }
  Vector out(dim());
  for (int i = 0; i < dim(); ++i) {
    double acc = bias_(step, i);
    for (int j = 0; j < dim(); ++j) acc += mixing_(i, j) * state(j);
    out(i) = std::tanh(acc);
  }
  return out;
}

ToyDenoiser make_toy_denoiser(std::uint64_t model_seed, int num_steps, int dim,
                              const DenoiserSpec& spec) {
  require_shape(num_steps, dim);
  spec.validate();
  SplitMix64 rng(derive_seed(model_seed, 1));
  Eigen::MatrixXd mixing(dim, dim);
  const double scale = spec.mixing_radius / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) mixing(i, j) = scale * rng.normal();
  }
  if (spec.step_gain > 0.0 && spec.mixing_radius > 0.0) {
    const double radius = mixing.eigenvalues().cwiseAbs().maxCoeff();
    const double limit = 0.99 / spec.step_gain;
    if (radius >= limit) mixing *= limit / radius;
  }

  SplitMix64 bias_rng(derive_seed(model_seed, 2));
  const Matrix basis = smooth_basis(bias_rng, num_steps, 3, 4, spec.bias_mode_decay, 0.1);
  Matrix bias = mix_channels(bias_rng, basis, dim, spec.bias_scale);
  return ToyDenoiser(std::move(mixing), std::move(bias), spec.step_gain, spec.init_scale, model_seed);
}

DenoiserRollout rollout_denoiser(const ToyDenoiser& model, int num_steps, std::uint64_t init_seed) {
  if (num_steps < 2) throw Error(ErrorKind::InvalidArgument, "rollout needs T >= 2");
  if (num_steps > model.max_steps()) {
    throw Error(ErrorKind::InvalidArgument, "rollout longer than the model's bias schedule");
  }
  Vector x = model.initial_state(init_seed);
  Matrix features(num_steps, model.dim());
  for (int r = 0; r < num_steps; ++r) {
    const Vector f = model.feature(x, r);
    features.row(r) = f.transpose();
    x += model.step_gain() * f;
    if (!x.allFinite()) {
      throw Error(ErrorKind::Diverged, "denoiser state became non-finite at step " + std::to_string(r));
    }
  }
  return {FeatureTrajectory(std::move(features), default_step_labels(num_steps),
                            LabelDirection::Descending, init_seed, "surrogate-denoiser"),
          std::move(x)};
}

std::string_view to_string(SurrogateKind kind) noexcept {
  return kind == SurrogateKind::Smooth ? "smooth" : "denoiser";
}

TrajectorySet gen_dataset(std::uint64_t base_seed, int count, int num_steps, int dim,
                          SurrogateKind kind, const DatasetOptions& options) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "dataset count must be >= 1");
  std::vector<FeatureTrajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  if (kind == SurrogateKind::Smooth) {
    for (int i = 0; i < count; ++i) {
      out.push_back(gen_smooth_trajectory(base_seed + static_cast<std::uint64_t>(i), num_steps, dim,
                                          options.smooth));
    }
  } else {
    const ToyDenoiser model = make_toy_denoiser(options.model_seed, num_steps, dim, options.denoiser);
    for (int i = 0; i < count; ++i) {
      out.push_back(
          rollout_denoiser(model, num_steps, base_seed + static_cast<std::uint64_t>(i)).features);
    }
  }
  return TrajectorySet(std::move(out));
}

}  // namespace l2p
