#include <benchmark/benchmark.h>

#include "l2p/equivalence.hpp"
#include "l2p/fixed_predictors.hpp"
#include "l2p/learner.hpp"
#include "l2p/projection.hpp"
#include "l2p/schedule.hpp"
#include "l2p/surrogate.hpp"

namespace {

void BM_TaylorCoefficients(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(l2p::taylor_coefficients(m, 5, -2));
}
BENCHMARK(BM_TaylorCoefficients)->DenseRange(0, 4);

void BM_FidelityProfile(benchmark::State& state) {
  const auto traj = l2p::gen_smooth_trajectory(7, 50, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(l2p::fidelity_profile(traj));
}
BENCHMARK(BM_FidelityProfile)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const auto set = l2p::gen_dataset(100, static_cast<int>(state.range(0)), 50, 64, l2p::SurrogateKind::Smooth);
  const auto init = l2p::init_weights(50);
  for (auto _ : state) benchmark::DoNotOptimize(l2p::train(set, l2p::TrainConfig{}, init));
}
BENCHMARK(BM_Train)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_RidgeOracle(benchmark::State& state) {
  const auto set = l2p::gen_dataset(100, 50, 50, 64, l2p::SurrogateKind::Smooth);
  for (auto _ : state) benchmark::DoNotOptimize(l2p::ridge_oracle(set, 1e-6));
}
BENCHMARK(BM_RidgeOracle)->Unit(benchmark::kMillisecond);

void BM_CachedRollout(benchmark::State& state) {
  const auto model = l2p::make_toy_denoiser(0, 50, 64);
  const auto schedule = l2p::uniform_schedule(50, static_cast<int>(state.range(0)));
  const auto spec = l2p::PredictorSpec::taylor(2);
  for (auto _ : state) benchmark::DoNotOptimize(l2p::cached_rollout(model, 50, 7, schedule, spec));
}
BENCHMARK(BM_CachedRollout)->Arg(1)->Arg(5)->Arg(10);

void BM_PascalRoundTrip(benchmark::State& state) {
  const std::vector<double> row(static_cast<std::size_t>(state.range(0)), 0.25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2p::difference_coeffs_to_weights(l2p::weights_to_difference_coeffs(row)));
  }
}
BENCHMARK(BM_PascalRoundTrip)->Arg(8)->Arg(20)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
