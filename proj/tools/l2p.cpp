// l2p: generate surrogate data, train and evaluate cache predictors, and
// inspect coefficient algebra from the command line.
//
// Exit codes: 0 success, 1 runtime or IO failure, 2 usage error.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <nlohmann/json.hpp>

#include "l2p/equivalence.hpp"
#include "l2p/fixed_predictors.hpp"
#include "l2p/io.hpp"
#include "l2p/learner.hpp"
#include "l2p/projection.hpp"
#include "l2p/schedule.hpp"
#include "l2p/surrogate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string json_array(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += shortest(values[i]);
  }
  return out + "]";
}

// --config FILE: every key of the JSON object becomes --key VALUE unless the
// flag is already on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  std::string path;
  if (it != args.end()) {
    if (it + 1 == args.end()) throw UsageError("--config needs a file");
    path = *(it + 1);
    args.erase(it, it + 2);
  } else {
    for (auto a = args.begin(); a != args.end(); ++a) {
      if (a->rfind("--config=", 0) == 0) {
        path = a->substr(9);
        args.erase(a);
        break;
      }
    }
  }
  if (path.empty()) return args;

  json cfg;
  try {
    const auto bytes = l2p::read_file_bytes(path);
    cfg = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");

  auto present = [&args](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&flag](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (present(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) text += ',';
        text += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
      }
    } else {
      text = value.dump();
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

unsigned thread_count() {
  unsigned n = 0;
  if (const char* env = std::getenv("L2P_THREADS")) {
    const std::string s(env);
    unsigned parsed = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), parsed);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) n = parsed;
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError("bad " + what + ": " + s);
  return v;
}

struct NamedPredictor {
  std::string name;  ///< the spec string as given
  l2p::PredictorSpec spec;
};

NamedPredictor parse_predictor(const std::string& text) {
  if (text == "naive") return {text, l2p::PredictorSpec::naive()};
  if (text == "foca") return {text, l2p::PredictorSpec::foca()};
  if (text.rfind("taylor:", 0) == 0) {
    const int order = parse_int(text.substr(7), "Taylor order");
    if (order < 0) throw UsageError("Taylor order must be >= 0");
    return {text, l2p::PredictorSpec::taylor(order)};
  }
  if (text.rfind("l2p:", 0) == 0) {
    const std::string path = text.substr(4);
    if (path.empty()) throw UsageError("l2p predictor needs a weight file: l2p:PATH");
    return {text, l2p::PredictorSpec::l2p(l2p::load_weights(path))};
  }
  throw UsageError("unknown predictor '" + text + "' (naive, taylor:M, foca, l2p:PATH)");
}

l2p::RolloutMode parse_mode(const std::string& s) {
  return s == "open" ? l2p::RolloutMode::Open : l2p::RolloutMode::Closed;
}

l2p::TrajectorySet load_data_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("data directory " + dir + " does not exist");
  const auto manifest = l2p::read_dataset_manifest(dir);
  if (manifest.files.empty()) throw UsageError("no trajectories in " + dir);
  return l2p::load_dataset(dir);
}

// Replay or rollout of one trajectory, depending on the engine.
struct Runner {
  std::string engine = "auto";
  l2p::CacheOptions options;
  std::optional<l2p::ToyDenoiser> model;

  void setup(const std::string& dir, const l2p::TrajectorySet& data, std::optional<std::uint64_t> model_seed) {
    const auto manifest = l2p::read_dataset_manifest(dir);
    const bool denoiser = manifest.kind == "denoiser";
    if (engine == "auto") engine = denoiser ? "rollout" : "replay";
    if (engine == "rollout") {
      const std::uint64_t seed = model_seed ? *model_seed : manifest.model_seed.value_or(0);
      model = l2p::make_toy_denoiser(seed, data.num_steps(), data.dim());
    }
  }

  l2p::RunMetrics run(const l2p::FeatureTrajectory& traj, const l2p::PredictorSpec& spec, int interval) const {
    const auto schedule = l2p::uniform_schedule(traj.num_steps(), interval);
    if (model) return l2p::cached_rollout(*model, traj.num_steps(), traj.seed(), schedule, spec, options).metrics;
    return l2p::cached_replay(traj, schedule, spec, options).metrics;
  }
};

void add_engine_options(CLI::App* cmd, Runner& runner, std::string& mode, std::string& warmup,
                        std::optional<std::uint64_t>& model_seed) {
  cmd->add_option("--mode", mode, "open or closed cache feedback")
      ->check(CLI::IsMember({"open", "closed"}))
      ->capture_default_str();
  cmd->add_option("--engine", runner.engine, "replay recorded rows, rollout the toy denoiser, or auto")
      ->check(CLI::IsMember({"auto", "replay", "rollout"}))
      ->capture_default_str();
  cmd->add_option("--warmup", warmup, "fallback or strict history rule")
      ->check(CLI::IsMember({"fallback", "strict"}))
      ->capture_default_str();
  cmd->add_option("--model-seed", model_seed, "denoiser model seed for rollouts (default: manifest)");
  cmd->add_option("--bytes-per-scalar", runner.options.bytes_per_scalar)->capture_default_str();
  cmd->add_option("--copies", runner.options.copies)->capture_default_str();
  cmd->add_option("--cost", runner.options.cost_per_step, "model FLOPs per step")->capture_default_str();
  cmd->add_option("--overhead", runner.options.predictor_overhead, "predictor FLOPs per skipped step")
      ->capture_default_str();
}

void finish_engine_options(Runner& runner, const std::string& mode, const std::string& warmup) {
  runner.options.mode = parse_mode(mode);
  runner.options.warmup = warmup == "strict" ? l2p::WarmupPolicy::Strict : l2p::WarmupPolicy::Fallback;
  if (runner.options.bytes_per_scalar < 1 || runner.options.copies < 1) {
    throw UsageError("--bytes-per-scalar and --copies must be >= 1");
  }
  if (runner.options.cost_per_step < 0 || runner.options.predictor_overhead < 0) {
    throw UsageError("--cost and --overhead must be >= 0");
  }
}

l2p::SweepRow to_row(const std::string& name, int interval, std::uint64_t seed, const l2p::RunMetrics& m) {
  return {name, interval, seed, m.aggregate_mse, m.psnr_db, m.flops_reduction, m.cache_bytes_peak};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App app{"L2P feature-cache prediction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "l2p 0.1.0");

  // gen
  auto* gen = app.add_subcommand("gen", "write surrogate trajectories and a manifest");
  std::string gen_kind, gen_out, gen_dtype = "f64";
  std::uint64_t gen_seed = 0, gen_model_seed = 0;
  int gen_count = 50, gen_steps = 50, gen_dim = 64;
  l2p::SmoothSpec smooth;
  gen->add_option("--kind", gen_kind)->required()->check(CLI::IsMember({"smooth", "denoiser"}));
  gen->add_option("--seed", gen_seed, "base seed; trajectory i uses seed + i")->capture_default_str();
  gen->add_option("--count", gen_count)->capture_default_str();
  gen->add_option("--steps", gen_steps)->capture_default_str();
  gen->add_option("--dim", gen_dim)->capture_default_str();
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--model-seed", gen_model_seed, "denoiser model seed")->capture_default_str();
  gen->add_option("--dtype", gen_dtype)->check(CLI::IsMember({"f64", "f32"}))->capture_default_str();
  gen->add_option("--poly-degree", smooth.poly_degree)->capture_default_str();
  gen->add_option("--modes", smooth.num_modes)->capture_default_str();
  gen->add_option("--noise", smooth.noise_scale)->capture_default_str();
  gen->add_option("--amplitude", smooth.amplitude_scale)->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "fit L2P weights by gradient descent");
  std::string train_data, train_out;
  l2p::TrainConfig cfg;
  cfg.loss_log_every = 20;
  bool train_oracle = false;
  train->add_option("--data", train_data)->required();
  train->add_option("--epochs", cfg.epochs)->capture_default_str();
  train->add_option("--lr", cfg.learning_rate)->capture_default_str();
  train->add_option("--lambda", cfg.ridge_lambda, "ridge strength for --oracle")->capture_default_str();
  train->add_option("--log-every", cfg.loss_log_every, "progress line period on stderr, 0 = off")
      ->capture_default_str();
  train->add_option("--out", train_out)->required();
  train->add_flag("--oracle", train_oracle, "also write the ridge solution as <out>.oracle.l2pw");

  // eval
  auto* eval = app.add_subcommand("eval", "score one predictor on a dataset");
  std::string eval_data, eval_pred, eval_format = "csv", eval_mode = "closed", eval_warmup = "fallback";
  int eval_interval = 5;
  Runner eval_runner;
  std::optional<std::uint64_t> eval_model_seed;
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--predictor", eval_pred)->required();
  eval->add_option("--interval", eval_interval)->capture_default_str();
  eval->add_option("--format", eval_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  add_engine_options(eval, eval_runner, eval_mode, eval_warmup, eval_model_seed);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "projection fidelity profile of one trajectory");
  std::string analyze_traj, analyze_out;
  analyze->add_option("--traj", analyze_traj)->required();
  analyze->add_option("--out", analyze_out, "output file (stdout when omitted)");

  // coeffs
  auto* coeffs = app.add_subcommand("coeffs", "print consolidated forecast coefficients");
  std::string coeffs_method;
  std::optional<int> coeffs_order, coeffs_offset;
  int coeffs_interval = 1;
  coeffs->add_option("--method", coeffs_method)->required()->check(CLI::IsMember({"taylor", "foca"}));
  coeffs->add_option("--order", coeffs_order);
  coeffs->add_option("--interval", coeffs_interval)->capture_default_str();
  coeffs->add_option("--offset", coeffs_offset, "Taylor offset k (target row anchor - k)");

  // convert
  auto* convert = app.add_subcommand("convert", "weights row to difference coefficients");
  std::string convert_weights;
  int convert_row = 1;
  bool convert_inverse = false;
  convert->add_option("--weights", convert_weights)->required();
  convert->add_option("--row", convert_row)->required();
  convert->add_flag("--inverse", convert_inverse, "map omega back and report the round-trip error");

  // bench
  auto* bench = app.add_subcommand("bench", "factorial sweep over intervals, predictors and seeds");
  std::string bench_data, bench_intervals = "1,5,7,10", bench_predictors = "naive,taylor:2,foca",
                          bench_seeds, bench_format = "csv", bench_mode = "closed", bench_warmup = "fallback";
  Runner bench_runner;
  std::optional<std::uint64_t> bench_model_seed;
  bench->add_option("--data", bench_data)->required();
  bench->add_option("--intervals", bench_intervals)->capture_default_str();
  bench->add_option("--predictors", bench_predictors)->capture_default_str();
  bench->add_option("--seeds", bench_seeds, "trajectory indices, e.g. 0..9 or 0,3,5 (default all)");
  bench->add_option("--format", bench_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  add_engine_options(bench, bench_runner, bench_mode, bench_warmup, bench_model_seed);

  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const l2p::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen) {
      if (gen_count < 1) throw UsageError("--count must be >= 1");
      if (gen_steps < 2) throw UsageError("--steps must be >= 2");
      if (gen_dim < 1) throw UsageError("--dim must be >= 1");
      try {
        smooth.validate();
      } catch (const l2p::Error& e) {
        throw UsageError(e.what());
      }
      l2p::DatasetOptions opts;
      opts.smooth = smooth;
      opts.model_seed = gen_model_seed;
      const auto kind = gen_kind == "smooth" ? l2p::SurrogateKind::Smooth : l2p::SurrogateKind::Denoiser;
      const auto set = l2p::gen_dataset(gen_seed, gen_count, gen_steps, gen_dim, kind, opts);
      const std::optional<std::uint64_t> model =
          kind == l2p::SurrogateKind::Denoiser ? std::optional<std::uint64_t>(gen_model_seed) : std::nullopt;
      l2p::save_dataset(set, gen_out, gen_kind, model, gen_dtype == "f32" ? l2p::ScalarType::F32 : l2p::ScalarType::F64);
      std::cout << json{{"dir", gen_out}, {"count", gen_count}, {"manifest_hash", l2p::manifest_hash(set.manifest())}}.dump()
                << "\n";
      return 0;
    }

    if (*train) {
      if (cfg.epochs < 1 || !(cfg.learning_rate > 0) || cfg.ridge_lambda < 0 || cfg.loss_log_every < 0) {
        throw UsageError("--epochs >= 1, --lr > 0, --lambda >= 0 and --log-every >= 0 are required");
      }
      const auto data = load_data_dir(train_data);
      const auto progress = [](int epoch, double loss) {
        std::cerr << json{{"epoch", epoch}, {"loss", loss}}.dump() << "\n";
      };
      auto [weights, report] = l2p::train(data, cfg, l2p::init_weights(data.num_steps()), progress);
      l2p::save_weights(weights, train_out);
      l2p::WeightProvenance info{l2p::manifest_hash(data.manifest()), data.size(), cfg, "gd"};
      l2p::save_weight_sidecar(train_out, info);

      std::ostringstream out;
      out << "{\"weights\":" << json(train_out).dump() << ",\"epochs\":" << cfg.epochs
          << ",\"learning_rate\":" << shortest(cfg.learning_rate) << ",\"dataset_size\":" << data.size()
          << ",\"manifest_hash\":\"" << info.manifest_hash << "\",\"initial_train_mse\":"
          << shortest(report.initial_train_mse) << ",\"final_train_mse\":" << shortest(report.final_train_mse)
          << ",\"converged\":" << (report.converged ? "true" : "false")
          << ",\"wall_time_s\":" << shortest(report.wall_time_s)
          << ",\"loss_history\":" << json_array(report.loss_history);
      if (train_oracle) {
        std::string oracle_path = train_out;
        if (oracle_path.size() > 5 && oracle_path.ends_with(".l2pw")) oracle_path.resize(oracle_path.size() - 5);
        oracle_path += ".oracle.l2pw";
        const auto oracle = l2p::ridge_oracle(data, cfg.ridge_lambda);
        l2p::save_weights(oracle, oracle_path);
        info.method = "ridge";
        l2p::save_weight_sidecar(oracle_path, info);
        out << ",\"oracle\":{\"weights\":" << json(oracle_path).dump() << ",\"lambda\":" << shortest(cfg.ridge_lambda)
            << ",\"train_mse\":" << shortest(l2p::mean_row_mse(l2p::train_mse_per_row(data, oracle))) << "}";
      }
      out << "}";
      std::cout << out.str() << "\n";
      return 0;
    }

    if (*eval) {
      if (eval_interval < 1) throw UsageError("--interval must be >= 1");
      const NamedPredictor pred = parse_predictor(eval_pred);
      finish_engine_options(eval_runner, eval_mode, eval_warmup);
      const auto data = load_data_dir(eval_data);
      eval_runner.setup(eval_data, data, eval_model_seed);

      std::vector<l2p::SweepRow> rows;
      l2p::RunMetrics total;
      total.per_step_mse.assign(static_cast<std::size_t>(data.num_steps()), 0.0);
      for (const auto& traj : data) {
        const auto m = eval_runner.run(traj, pred.spec, eval_interval);
        rows.push_back(to_row(pred.name, eval_interval, traj.seed(), m));
        for (std::size_t r = 0; r < m.per_step_mse.size(); ++r) total.per_step_mse[r] += m.per_step_mse[r];
        total.warmup_fallbacks += m.warmup_fallbacks;
      }
      double peak = 0.0;
      for (const auto& traj : data) peak = std::max(peak, traj.data().cwiseAbs().maxCoeff());
      for (double& v : total.per_step_mse) v /= static_cast<double>(data.size());
      l2p::finalize_metrics(total, peak, data.dim(), l2p::uniform_schedule(data.num_steps(), eval_interval),
                            pred.spec, eval_runner.options);

      if (eval_format == "csv") {
        std::cout << l2p::sweep_to_csv(rows);
      } else {
        std::cout << "{\"predictor\":" << json(pred.name).dump() << ",\"N\":" << eval_interval << ",\"mode\":\""
                  << eval_mode << "\",\"engine\":\"" << eval_runner.engine
                  << "\",\"aggregate\":" << l2p::metrics_to_json(total)
                  << ",\"per_trajectory\":" << l2p::sweep_to_json(rows) << "}\n";
      }
      return 0;
    }

    if (*analyze) {
      const auto traj = l2p::load_trajectory(analyze_traj);
      const auto profile = l2p::fidelity_profile(traj);
      std::ostringstream out;
      out << "{\"num_steps\":" << traj.num_steps() << ",\"dim\":" << traj.dim()
          << ",\"per_step_fidelity\":" << json_array(profile.per_step_fidelity)
          << ",\"per_step_residual\":" << json_array(profile.per_step_residual) << ",\"rank_history\":[";
      for (std::size_t i = 0; i < profile.rank_history.size(); ++i) out << (i ? "," : "") << profile.rank_history[i];
      const int last = traj.num_steps() - 1;
      out << "],\"interior_fraction_ge_0.95\":"
          << shortest(l2p::fraction_at_least(profile, 0.95, std::min(5, last), std::max(last - 4, 0))) << "}\n";
      if (analyze_out.empty()) {
        std::cout << out.str();
      } else {
        l2p::write_text_file(analyze_out, out.str());
      }
      return 0;
    }

    if (*coeffs) {
      if (coeffs_interval < 1) throw UsageError("--interval must be >= 1");
      std::optional<l2p::LinearCoefficients> c;
      if (coeffs_method == "taylor") {
        if (!coeffs_order) throw UsageError("taylor needs --order");
        if (*coeffs_order < 0) throw UsageError("--order must be >= 0");
        c = l2p::taylor_coefficients(*coeffs_order, coeffs_interval, coeffs_offset.value_or(0));
      } else {
        if (coeffs_order || coeffs_offset) throw UsageError("foca takes only --interval");
        c = l2p::foca_corrected_coefficients(coeffs_interval);
      }
      std::string out = "{";
      for (std::size_t i = 0; i < c->terms().size(); ++i) {
        if (i) out += ',';
        out += "\"" + std::to_string(c->terms()[i].offset) + "\":" + shortest(c->terms()[i].weight);
      }
      std::cout << out << "}\n";
      return 0;
    }

    if (*convert) {
      if (convert_row > l2p::kMaxPascalSize) {
        throw UsageError("row " + std::to_string(convert_row) + " exceeds the conditioning limit t <= " +
                         std::to_string(l2p::kMaxPascalSize));
      }
      const auto weights = l2p::load_weights(convert_weights);
      if (convert_row < 1 || convert_row >= weights.num_steps()) {
        throw UsageError("--row must lie in 1.." + std::to_string(weights.num_steps() - 1));
      }
      const auto row = weights.row(convert_row);
      const std::vector<double> w(row.begin(), row.end());
      const auto omega = l2p::weights_to_difference_coeffs(w);
      std::string out = "{\"row\":" + std::to_string(convert_row) + ",\"weights\":" + json_array(w) +
                        ",\"omega\":" + json_array(omega);
      if (convert_inverse) {
        const auto back = l2p::difference_coeffs_to_weights(omega);
        double err = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, std::abs(w[i] - back[i]));
        out += ",\"reconstructed\":" + json_array(back) + ",\"roundtrip_max_abs_error\":" + shortest(err);
      }
      std::cout << out << "}\n";
      return 0;
    }

    if (*bench) {
      std::vector<int> intervals;
      for (const auto& s : split(bench_intervals, ',')) intervals.push_back(parse_int(s, "interval"));
      if (intervals.empty()) throw UsageError("--intervals is empty");
      for (int n : intervals) {
        if (n < 1) throw UsageError("intervals must be >= 1");
      }
      std::vector<NamedPredictor> preds;
      for (const auto& s : split(bench_predictors, ',')) preds.push_back(parse_predictor(s));
      if (preds.empty()) throw UsageError("--predictors is empty");
      finish_engine_options(bench_runner, bench_mode, bench_warmup);
      const auto data = load_data_dir(bench_data);
      bench_runner.setup(bench_data, data, bench_model_seed);

      std::vector<std::size_t> picks;
      if (bench_seeds.empty()) {
        for (std::size_t i = 0; i < data.size(); ++i) picks.push_back(i);
      } else {
        for (const auto& part : split(bench_seeds, ',')) {
          const auto dots = part.find("..");
          const int lo = parse_int(part.substr(0, dots), "seed index");
          const int hi = dots == std::string::npos ? lo : parse_int(part.substr(dots + 2), "seed index");
          if (lo < 0 || hi < lo) throw UsageError("bad seed range " + part);
          for (int i = lo; i <= hi; ++i) picks.push_back(static_cast<std::size_t>(i));
        }
      }
      for (std::size_t i : picks) {
        if (i >= data.size()) {
          throw UsageError("seed index " + std::to_string(i) + " but the dataset holds " + std::to_string(data.size()));
        }
      }

      struct Cell {
        std::size_t pred, traj;
        int interval;
      };
      std::vector<Cell> cells;
      for (std::size_t p = 0; p < preds.size(); ++p) {
        for (int n : intervals) {
          for (std::size_t i : picks) cells.push_back({p, i, n});
        }
      }
      std::vector<l2p::SweepRow> rows(cells.size());
      std::vector<std::string> errors(cells.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
          const auto& cell = cells[c];
          try {
            const auto m = bench_runner.run(data[cell.traj], preds[cell.pred].spec, cell.interval);
            rows[c] = to_row(preds[cell.pred].name, cell.interval, data[cell.traj].seed(), m);
          } catch (const std::exception& e) {
            errors[c] = e.what();
          }
        }
      };
      const unsigned threads = std::min<std::size_t>(thread_count(), std::max<std::size_t>(cells.size(), 1));
      std::vector<std::thread> pool;
      for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      for (const auto& e : errors) {
        if (!e.empty()) throw std::runtime_error(e);
      }
      std::stable_sort(rows.begin(), rows.end(), [](const l2p::SweepRow& a, const l2p::SweepRow& b) {
        if (a.predictor != b.predictor) return a.predictor < b.predictor;
        if (a.interval != b.interval) return a.interval < b.interval;
        return a.seed < b.seed;
      });
      std::cout << (bench_format == "csv" ? l2p::sweep_to_csv(rows) : l2p::sweep_to_json(rows) + "\n");
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 2;
}
