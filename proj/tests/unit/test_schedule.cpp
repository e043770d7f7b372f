#include <gtest/gtest.h>

#include <cmath>

#include "l2p/learner.hpp"
#include "l2p/schedule.hpp"
#include "l2p/surrogate.hpp"
#include "test_support.hpp"

using namespace l2p;

TEST(Uniform, Anchors) {
  const auto s5 = uniform_schedule(50, 5);
  EXPECT_EQ(s5.anchors().size(), 10u);
  EXPECT_EQ(s5.anchors().back(), 45);
  EXPECT_EQ(uniform_schedule(50, 1).anchors().size(), 50u);
  EXPECT_EQ(uniform_schedule(50, 7).anchors(), (std::vector<int>{0, 7, 14, 21, 28, 35, 42, 49}));
  EXPECT_EQ(uniform_schedule(50, 7).interval(), 7);
  EXPECT_THROW(uniform_schedule(50, 0), Error);
}

TEST(Flops, IdealizedReduction) {
  EXPECT_EQ(flops_accounting(50, uniform_schedule(50, 5), 1.0, 0.0).reduction, 5.0);
  EXPECT_EQ(flops_accounting(50, uniform_schedule(50, 1), 1.0, 0.0).reduction, 1.0);
  EXPECT_EQ(flops_accounting(50, uniform_schedule(50, 10), 1.0, 0.0).reduction, 10.0);
  const auto r = flops_accounting(50, uniform_schedule(50, 5), 3.0, 0.5);
  EXPECT_EQ(r.flops_full, 150.0);
  EXPECT_EQ(r.flops_cached, 10 * 3.0 + 40 * 0.5);
  EXPECT_EQ(r.flops_cached + (r.flops_full - r.flops_cached), r.flops_full);
  for (int n = 1; n <= 12; ++n) {
    EXPECT_GE(flops_accounting(50, uniform_schedule(50, n), 2.0, 2.0).reduction, 1.0);
  }
}

TEST(Memory, Accounting) {
  EXPECT_EQ(cache_memory_accounting(50, 64, PredictorKind::Taylor, 1, 4), 512u);
  EXPECT_EQ(cache_memory_accounting(50, 64, PredictorKind::Naive, 0, 4), 256u);
  EXPECT_EQ(cache_memory_accounting(50, 64, PredictorKind::L2P, 0, 4), 12544u);
  EXPECT_EQ(cache_memory_accounting(50, 64, PredictorKind::FoCa, 0, 4), 6u * 64 * 4);
  // Full-trajectory footprint of a (1, 20400, 64) f32 feature over 50 steps.
  const std::uint64_t per_copy = 50ull * 20400 * 64 * 4;
  EXPECT_EQ(per_copy, 261120000u);
  EXPECT_EQ(cache_memory_accounting(51, 20400 * 64, PredictorKind::L2P, 0, 4, 2), 2 * per_copy);
  EXPECT_NEAR(2.0 * per_copy / std::pow(1024.0, 3), 0.49, 0.005);
}

TEST(Psnr, Definition) {
  EXPECT_NEAR(psnr_from_mse(1e-3, 1.0), 30.0, 1e-12);
  EXPECT_NEAR(psnr_from_mse(4.0, 2.0), 0.0, 1e-12);
  EXPECT_TRUE(std::isinf(psnr_from_mse(0.0, 1.0)));
  const Matrix a = fixtures::random_matrix(1, 4, 3);
  EXPECT_TRUE(std::isinf(psnr(a, a, 1.0)));
  EXPECT_THROW(psnr(a, Matrix::Zero(3, 3), 1.0), Error);
  EXPECT_THROW(psnr_from_mse(1.0, 0.0), Error);
}

TEST(Labels, Predictors) {
  EXPECT_EQ(PredictorSpec::naive().label(), "naive");
  EXPECT_EQ(PredictorSpec::taylor(2).label(), "taylor:2");
  EXPECT_EQ(PredictorSpec::foca().label(), "foca");
  EXPECT_EQ(PredictorSpec::l2p(init_weights(4)).label(), "l2p");
}

TEST(Replay, AnchorsKeepTrueFeatures) {
  const auto traj = gen_smooth_trajectory(3, 50, 16);
  for (const auto& spec : {PredictorSpec::naive(), PredictorSpec::taylor(2), PredictorSpec::foca()}) {
    const auto schedule = uniform_schedule(50, 5);
    const auto out = cached_replay(traj, schedule, spec);
    for (int a : schedule.anchors()) EXPECT_TRUE(out.features.row(a) == traj.data().row(a));
    EXPECT_EQ(out.metrics.per_step_mse.size(), 50u);
    EXPECT_EQ(out.metrics.flops_reduction, 5.0);
  }
}

TEST(Replay, NaiveReusesLastAnchor) {
  const auto traj = fixtures::random_trajectory(8, 20, 4);
  const auto out = cached_replay(traj, uniform_schedule(20, 5), PredictorSpec::naive());
  for (int r = 0; r < 20; ++r) EXPECT_TRUE(out.features.row(r) == traj.data().row(r - r % 5));
}

TEST(Replay, SingleIntervalMakesPredictorsIdentical) {
  const auto traj = gen_smooth_trajectory(5, 30, 8);
  const auto schedule = uniform_schedule(30, 1);
  const auto base = cached_replay(traj, schedule, PredictorSpec::naive()).metrics;
  for (const auto& spec : {PredictorSpec::taylor(3), PredictorSpec::foca(), PredictorSpec::l2p(init_weights(30))}) {
    const auto m = cached_replay(traj, schedule, spec).metrics;
    EXPECT_EQ(m.per_step_mse, base.per_step_mse);
    EXPECT_EQ(m.aggregate_mse, 0.0);
    EXPECT_EQ(m.flops_reduction, base.flops_reduction);
  }
}

TEST(Replay, StrictWarmupRejectsShortHistory) {
  const auto traj = gen_smooth_trajectory(5, 30, 8);
  CacheOptions strict;
  strict.warmup = WarmupPolicy::Strict;
  try {
    cached_replay(traj, uniform_schedule(30, 5), PredictorSpec::taylor(2), strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientHistory);
  }
  const auto relaxed = cached_replay(traj, uniform_schedule(30, 5), PredictorSpec::taylor(2));
  EXPECT_GT(relaxed.metrics.warmup_fallbacks, 0);
}

TEST(Rollout, AllAnchorsMatchReference) {
  const auto model = make_toy_denoiser(0, 50, 16);
  const auto ref = rollout_denoiser(model, 50, 7);
  for (const auto& spec : {PredictorSpec::naive(), PredictorSpec::taylor(2), PredictorSpec::foca()}) {
    const auto out = cached_rollout(model, 50, 7, uniform_schedule(50, 1), spec);
    EXPECT_TRUE(out.final_state == ref.final_state);
    EXPECT_EQ(out.metrics.aggregate_mse, 0.0);
    EXPECT_TRUE(std::isinf(out.metrics.psnr_db));
  }
}

TEST(Rollout, OpenModeMatchesReplay) {
  const auto model = make_toy_denoiser(0, 50, 16);
  const auto ref = rollout_denoiser(model, 50, 7);
  CacheOptions open;
  open.mode = RolloutMode::Open;
  const auto schedule = uniform_schedule(50, 5);
  const auto out = cached_rollout(model, 50, 7, schedule, PredictorSpec::taylor(2), open);
  const auto replay = cached_replay(ref.features, schedule, PredictorSpec::taylor(2), open);
  EXPECT_EQ(out.metrics.per_step_mse, replay.metrics.per_step_mse);
  EXPECT_TRUE(out.final_state == ref.final_state);
}

TEST(Rollout, ClosedLoopAnchorsRecomputeFromDriftedState) {
  const auto model = make_toy_denoiser(0, 50, 16);
  const auto ref = rollout_denoiser(model, 50, 7);
  const auto out = cached_rollout(model, 50, 7, uniform_schedule(50, 5), PredictorSpec::naive());
  EXPECT_TRUE(out.features.row(0) == ref.features.data().row(0));
  EXPECT_FALSE(out.final_state == ref.final_state);
  EXPECT_TRUE(out.reference_final_state == ref.final_state);
}

TEST(Rollout, ForecastingBeatsReuse) {
  const auto model = make_toy_denoiser(0, 50, 64);
  const auto schedule = uniform_schedule(50, 5);
  const auto naive = cached_rollout(model, 50, 7, schedule, PredictorSpec::naive());
  const auto taylor = cached_rollout(model, 50, 7, schedule, PredictorSpec::taylor(2));
  EXPECT_LT(taylor.metrics.aggregate_mse, naive.metrics.aggregate_mse);

  std::vector<FeatureTrajectory> runs;
  for (std::uint64_t s = 100; s < 150; ++s) runs.push_back(rollout_denoiser(model, 50, s).features);
  const auto [w, report] = train(TrajectorySet(std::move(runs)), TrainConfig{}, init_weights(50));
  const auto l2p = cached_rollout(model, 50, 7, schedule, PredictorSpec::l2p(w));
  EXPECT_LE(l2p.metrics.aggregate_mse, taylor.metrics.aggregate_mse);
}
