#include "l2p/learner.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/QR>

namespace l2p {
namespace {

void require_row_index(int t, int num_steps) {
  if (t < 1 || t >= num_steps) {
    throw Error(ErrorKind::IndexOutOfRange, "row " + std::to_string(t) + " outside 1..T-1");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "learning_rate must be finite and > 0");
  }
  if (!std::isfinite(ridge_lambda) || ridge_lambda < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "ridge_lambda must be finite and >= 0");
  }
  if (loss_log_every < 0) throw Error(ErrorKind::InvalidArgument, "loss_log_every must be >= 0");
}

WeightMatrix init_weights(int num_steps) {
  if (num_steps < 2) throw Error(ErrorKind::InvalidArgument, "init_weights needs T >= 2");
  std::vector<double> packed(WeightMatrix::packed_size(num_steps), 0.0);
  for (int t = 1; t < num_steps; ++t) packed[WeightMatrix::row_offset(t) + static_cast<std::size_t>(t) - 1] = 1.0;
  return WeightMatrix(num_steps, std::move(packed));
}

Vector predict_step(const WeightMatrix& weights, const Matrix& rows, int t) {
  require_row_index(t, weights.num_steps());
  if (rows.rows() < t) {
    throw Error(ErrorKind::IndexOutOfRange, "fewer than t rows available for step " + std::to_string(t));
  }
  const auto w = weights.row(t);
  Vector out = Vector::Zero(rows.cols());
  for (int j = 0; j < t; ++j) out += w[static_cast<std::size_t>(j)] * rows.row(j).transpose();
  return out;
}

Vector predict_step(const WeightMatrix& weights, const FeatureTrajectory& traj, int t) {
  return predict_step(weights, traj.data(), t);
}

NormalEquations build_normal_equations(const TrajectorySet& dataset) {
  const int steps = dataset.num_steps();
  const double count = static_cast<double>(dataset.size()) * static_cast<double>(dataset.dim());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(steps, steps);
  for (const auto& traj : dataset) {
    const Eigen::MatrixXd x = traj.data();
    sum.noalias() += x * x.transpose();
  }
  NormalEquations eq;
  const double mean_square = sum.trace() / (count * static_cast<double>(steps));
  eq.scale = mean_square > 0.0 ? std::sqrt(mean_square) : 1.0;
  eq.moments = sum / (count * eq.scale * eq.scale);
  return eq;
}

RowSystem row_system(const NormalEquations& eq, int t) {
  require_row_index(t, static_cast<int>(eq.moments.rows()));
  RowSystem sys;
  sys.gram = eq.moments.topLeftCorner(t, t);
  sys.rhs = eq.moments.col(t).head(t);
  sys.target_energy = eq.moments(t, t);
  return sys;
}

double row_loss(const RowSystem& sys, const Vector& w) {
  return w.dot(sys.gram * w) - 2.0 * sys.rhs.dot(w) + sys.target_energy;
}

Vector row_gradient(const RowSystem& sys, const Vector& w) {
  return 2.0 * (sys.gram * w - sys.rhs);
}

Vector train_row(const RowSystem& sys, const TrainConfig& cfg, const Vector& init,
                 std::vector<double>* losses) {
  if (init.size() != sys.rhs.size()) throw Error(ErrorKind::ShapeMismatch, "init row has the wrong length");
  Vector w = init;
  for (int e = 0; e < cfg.epochs; ++e) {
    w -= cfg.learning_rate * row_gradient(sys, w);
    if (losses) losses->push_back(row_loss(sys, w));
  }
  return w;
}

std::pair<WeightMatrix, TrainReport> train(const TrajectorySet& dataset, const TrainConfig& cfg,
                                           const WeightMatrix& init, const ProgressFn& progress) {
  cfg.validate();
  const int steps = dataset.num_steps();
  if (init.num_steps() != steps) {
    throw Error(ErrorKind::ShapeMismatch, "init weights T differs from the dataset T");
  }
  const auto start = std::chrono::steady_clock::now();
  const NormalEquations eq = build_normal_equations(dataset);
  const double unit = eq.scale * eq.scale;

  std::vector<RowSystem> systems;
  std::vector<Vector> rows;
  systems.reserve(static_cast<std::size_t>(steps));
  rows.reserve(static_cast<std::size_t>(steps));
  TrainReport report;
  report.per_row_mse.assign(static_cast<std::size_t>(steps), 0.0);
  double initial = 0.0;
  for (int t = 1; t < steps; ++t) {
    systems.push_back(row_system(eq, t));
    const auto span = init.row(t);
    rows.emplace_back(Eigen::Map<const Vector>(span.data(), static_cast<Eigen::Index>(span.size())));
    initial += row_loss(systems.back(), rows.back());
  }
  const double rows_count = static_cast<double>(steps - 1);
  report.initial_train_mse = initial * unit / rows_count;

  // Epoch-major so the reported loss is the state of every row after the
  // same number of updates; rows never interact.
  report.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int e = 0; e < cfg.epochs; ++e) {
    double total = 0.0;
    for (std::size_t i = 0; i < systems.size(); ++i) {
      rows[i] -= cfg.learning_rate * row_gradient(systems[i], rows[i]);
      total += row_loss(systems[i], rows[i]);
    }
    const double loss = total * unit / rows_count;
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::DivergedLoss,
                  "loss became non-finite at epoch " + std::to_string(e + 1) + "; learning rate too large");
    }
    report.loss_history.push_back(loss);
    if (progress && cfg.loss_log_every > 0 && ((e + 1) % cfg.loss_log_every == 0 || e + 1 == cfg.epochs)) {
      progress(e + 1, loss);
    }
  }

  std::vector<double> packed;
  packed.reserve(WeightMatrix::packed_size(steps));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < rows[i].size(); ++j) packed.push_back(rows[i](j));
    report.per_row_mse[i + 1] = row_loss(systems[i], rows[i]) * unit;
  }
  report.final_train_mse = report.loss_history.back();
  const std::size_t n = report.loss_history.size();
  if (n > 10) {
    const double before = report.loss_history[n - 11];
    const double change = std::abs(report.loss_history[n - 1] - before);
    report.converged = before == 0.0 ? change == 0.0 : change / std::abs(before) < 1e-6;
  } else {
    report.converged = false;
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {WeightMatrix(steps, std::move(packed)), std::move(report)};
}

WeightMatrix ridge_oracle(const TrajectorySet& dataset, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "ridge lambda must be finite and >= 0");
  }
  const int steps = dataset.num_steps();
  const Eigen::Index dim = dataset.dim();
  const Eigen::Index samples = static_cast<Eigen::Index>(dataset.size()) * dim;
  const double root = std::sqrt(lambda);

  std::vector<double> packed;
  packed.reserve(WeightMatrix::packed_size(steps));
  for (int t = 1; t < steps; ++t) {
    const Eigen::Index extra = lambda > 0.0 ? t : 0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(samples + extra, t);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(samples + extra);
    Eigen::Index base = 0;
    for (const auto& traj : dataset) {
      a.block(base, 0, dim, t) = traj.data().topRows(t).transpose();
      y.segment(base, dim) = traj.data().row(t).transpose();
      base += dim;
    }
    for (Eigen::Index j = 0; j < extra; ++j) a(samples + j, j) = root;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < t) {
      throw Error(ErrorKind::SingularSystem,
                  "history of row " + std::to_string(t) + " is rank deficient; use lambda > 0");
    }
    const Eigen::VectorXd w = qr.solve(y);
    for (Eigen::Index j = 0; j < w.size(); ++j) packed.push_back(w(j));
  }
  return WeightMatrix(steps, std::move(packed));
}

std::vector<double> train_mse_per_row(const TrajectorySet& dataset, const WeightMatrix& weights) {
  const int steps = dataset.num_steps();
  if (weights.num_steps() != steps) throw Error(ErrorKind::ShapeMismatch, "weights T differs from dataset T");
  std::vector<double> out(static_cast<std::size_t>(steps), 0.0);
  const double count = static_cast<double>(dataset.size()) * static_cast<double>(dataset.dim());
  for (int t = 1; t < steps; ++t) {
    double sum = 0.0;
    for (const auto& traj : dataset) {
      sum += (predict_step(weights, traj.data(), t) - traj.data().row(t).transpose()).squaredNorm();
    }
    out[static_cast<std::size_t>(t)] = sum / count;
  }
  return out;
}

double mean_row_mse(const std::vector<double>& per_row) {
  if (per_row.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 1; t < per_row.size(); ++t) sum += per_row[t];
  return sum / static_cast<double>(per_row.size() - 1);
}

RunMetrics eval_predictor(const PredictorSpec& predictor, const TrajectorySet& dataset,
                          const CacheSchedule& schedule, const CacheOptions& options) {
  const int steps = dataset.num_steps();
  RunMetrics total;
  total.per_step_mse.assign(static_cast<std::size_t>(steps), 0.0);
  double peak = 0.0;
  for (const auto& traj : dataset) {
    const ReplayResult run = cached_replay(traj, schedule, predictor, options);
    for (int r = 0; r < steps; ++r) {
      total.per_step_mse[static_cast<std::size_t>(r)] += run.metrics.per_step_mse[static_cast<std::size_t>(r)];
    }
    total.warmup_fallbacks += run.metrics.warmup_fallbacks;
    peak = std::max(peak, traj.data().cwiseAbs().maxCoeff());
  }
  for (double& v : total.per_step_mse) v /= static_cast<double>(dataset.size());
  finalize_metrics(total, peak, dataset.dim(), schedule, predictor, options);
  return total;
}

}  // namespace l2p
