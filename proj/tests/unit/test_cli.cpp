#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "l2p/io.hpp"
#include "test_support.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; returns exit status and stdout.
Run run(const std::string& args) {
  const std::string cmd = std::string(L2P_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Cli, UsageErrors) {
  l2p::fixtures::TempDir dir("cli_usage");
  EXPECT_EQ(run("gen --kind smooth --count 0 --out " + q(dir.path() / "d")).code, 2);
  EXPECT_EQ(run("gen --kind wavy --out " + q(dir.path() / "d")).code, 2);
  EXPECT_EQ(run("train --data " + q(dir.path()) + " --out " + q(dir.path() / "w.l2pw")).code, 2);
  EXPECT_EQ(run("coeffs --method taylor").code, 2);
  EXPECT_EQ(run("nonsense").code, 2);
}

TEST(Cli, Coefficients) {
  auto r = run("coeffs --method taylor --order 1 --interval 5 --offset 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "{\"0\":0.6,\"-5\":0.4}\n");
  r = run("coeffs --method taylor --order 0");
  EXPECT_EQ(r.out, "{\"0\":1}\n");
  r = run("coeffs --method foca --interval 5");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 6u);
  EXPECT_EQ(j.at("0"), 1.75);
  EXPECT_EQ(j.at("-1"), -1.0);
  EXPECT_EQ(j.at("-2"), 0.25);
  EXPECT_EQ(j.at("-5"), 0.75);
  EXPECT_EQ(j.at("-6"), -1.0);
  EXPECT_EQ(j.at("-7"), 0.25);
}

TEST(Cli, PipelineOnSmoothData) {
  l2p::fixtures::TempDir dir("cli_pipeline");
  const auto train_dir = dir.path() / "train";
  const auto test_dir = dir.path() / "test";
  const auto again_dir = dir.path() / "again";
  ASSERT_EQ(run("gen --kind smooth --seed 100 --count 20 --steps 50 --dim 32 --out " + q(train_dir)).code, 0);
  ASSERT_EQ(run("gen --kind smooth --seed 100 --count 20 --steps 50 --dim 32 --out " + q(again_dir)).code, 0);
  ASSERT_EQ(run("gen --kind smooth --seed 1000 --count 4 --steps 50 --dim 32 --out " + q(test_dir)).code, 0);
  EXPECT_EQ(l2p::read_file_bytes(train_dir / "traj_0007.l2pt"), l2p::read_file_bytes(again_dir / "traj_0007.l2pt"));
  EXPECT_EQ(l2p::read_file_bytes(train_dir / "manifest.json"), l2p::read_file_bytes(again_dir / "manifest.json"));

  const auto w = dir.path() / "w.l2pw";
  auto r = run("train --data " + q(train_dir) + " --log-every 0 --oracle --out " + q(w));
  ASSERT_EQ(r.code, 0);
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_TRUE(report.contains("converged"));
  EXPECT_TRUE(std::filesystem::exists(w));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "w.oracle.l2pw"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "w.l2pw.json"));

  r = run("eval --data " + q(test_dir) + " --predictor taylor:2 --interval 5 --format csv");
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, l2p::sweep_csv_header());
  std::getline(lines, row);
  EXPECT_NE(row.find("taylor:2,5,"), std::string::npos);
  EXPECT_NE(row.find(",5,"), std::string::npos);

  auto aggregate = [&](const std::string& pred, int n) {
    const auto res = run("eval --data " + q(test_dir) + " --predictor " + pred + " --interval " + std::to_string(n) +
                         " --format json");
    EXPECT_EQ(res.code, 0) << pred;
    const auto v = nlohmann::json::parse(res.out).at("aggregate").at("aggregate_mse");
    return v.is_string() ? -1.0 : v.get<double>();
  };
  EXPECT_LT(aggregate("l2p:" + q(w), 5), aggregate("taylor:2", 5));
  EXPECT_EQ(aggregate("foca", 1), 0.0);
  EXPECT_EQ(run("eval --data " + q(test_dir) + " --predictor cubic --interval 5").code, 2);

  r = run("convert --weights " + q(w) + " --row 10 --inverse");
  ASSERT_EQ(r.code, 0);
  EXPECT_LT(nlohmann::json::parse(r.out).at("roundtrip_max_abs_error").get<double>(), 1e-8);
  EXPECT_EQ(run("convert --weights " + q(w) + " --row 40").code, 2);

  r = run("convert --weights " + q(dir.path() / "w.oracle.l2pw") + " --row 1");
  ASSERT_EQ(r.code, 0);

  const std::string bench = "bench --data " + q(test_dir) +
                            " --intervals 1,5,7,10 --predictors naive,taylor:2,foca,l2p:" + q(w) + " --seeds 0..3";
  const auto b1 = run(bench);
  ASSERT_EQ(b1.code, 0);
  EXPECT_EQ(count_lines(b1.out), 1 + 4 * 4 * 4);
  EXPECT_EQ(run(bench).out, b1.out);
}

TEST(Cli, InitWeightsConvertToNaiveOmega) {
  l2p::fixtures::TempDir dir("cli_convert");
  l2p::save_weights(l2p::init_weights(10), dir.path() / "init.l2pw");
  const auto r = run("convert --weights " + q(dir.path() / "init.l2pw") + " --row 6");
  ASSERT_EQ(r.code, 0);
  const auto omega = nlohmann::json::parse(r.out).at("omega");
  EXPECT_EQ(omega, (nlohmann::json{1.0, 0.0, 0.0, 0.0, 0.0, 0.0}));
}

TEST(Cli, AnalyzeConstantTrajectory) {
  l2p::fixtures::TempDir dir("cli_analyze");
  l2p::save_trajectory(l2p::fixtures::make_trajectory(l2p::Matrix::Constant(8, 4, 1.5)), dir.path() / "c.l2pt");
  const auto out = dir.path() / "profile.json";
  ASSERT_EQ(run("analyze --traj " + q(dir.path() / "c.l2pt") + " --out " + q(out)).code, 0);
  std::ifstream in(out);
  const auto j = nlohmann::json::parse(in);
  const auto& fid = j.at("per_step_fidelity");
  ASSERT_EQ(fid.size(), 8u);
  for (std::size_t t = 1; t < 8; ++t) EXPECT_NEAR(fid[t].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(run("analyze --traj " + q(dir.path() / "missing.l2pt")).code, 1);
}

TEST(Cli, DenoiserRolloutAndConfig) {
  l2p::fixtures::TempDir dir("cli_denoiser");
  const auto data = dir.path() / "d";
  ASSERT_EQ(run("gen --kind denoiser --seed 5 --count 2 --steps 30 --dim 8 --out " + q(data)).code, 0);
  const auto cfg = dir.path() / "cfg.json";
  l2p::write_text_file(cfg, "{\"predictor\": \"naive\", \"interval\": 1, \"format\": \"json\"}");
  const auto r = run("eval --config " + q(cfg) + " --data " + q(data));
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("aggregate").at("aggregate_mse"), 0.0);
  // A flag on the command line wins over the config file.
  const auto r5 = run("eval --config " + q(cfg) + " --data " + q(data) + " --interval 5");
  EXPECT_GT(nlohmann::json::parse(r5.out).at("aggregate").at("aggregate_mse").get<double>(), 0.0);
}
