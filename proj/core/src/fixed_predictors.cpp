#include "l2p/fixed_predictors.hpp"

#include <algorithm>
#include <string>

namespace l2p {
namespace {

void require_row(const Matrix& rows, int index, const char* what) {
  if (index < 0) {
    throw Error(ErrorKind::HistoryUnderflow,
                std::string(what) + " needs step " + std::to_string(index) + " before the start");
  }
  if (index >= rows.rows()) {
    throw Error(ErrorKind::IndexOutOfRange,
                std::string(what) + " reads step " + std::to_string(index) + " past the end");
  }
}

void require_interval(int interval) {
  if (interval < 1) throw Error(ErrorKind::InvalidArgument, "interval must be >= 1");
}

std::string taylor_tag(int order, int interval, int offset) {
  return "taylor(m=" + std::to_string(order) + ",N=" + std::to_string(interval) +
         ",k=" + std::to_string(offset) + ")";
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

Vector finite_difference(const Matrix& rows, int anchor, int order, int interval) {
  require_interval(interval);
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "difference order must be >= 0");
  require_row(rows, anchor - order * interval, "finite_difference");
  require_row(rows, anchor, "finite_difference");
  Vector out = Vector::Zero(rows.cols());
  for (int j = 0; j <= order; ++j) {
    const double c = (j % 2 == 0 ? 1.0 : -1.0) * binomial(order, j);
    out += c * rows.row(anchor - j * interval).transpose();
  }
  return out;
}

Vector finite_difference(const FeatureTrajectory& traj, int anchor, int order, int interval) {
  return finite_difference(traj.data(), anchor, order, interval);
}

LinearCoefficients taylor_coefficients(int order, int interval, int offset) {
  require_interval(interval);
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "Taylor order must be >= 0");
  // scale[i] = (-k)^i / (i! N^i)
  std::vector<double> scale(static_cast<std::size_t>(order) + 1, 1.0);
  for (int i = 1; i <= order; ++i) {
    scale[static_cast<std::size_t>(i)] = scale[static_cast<std::size_t>(i) - 1] *
                                         static_cast<double>(-offset) /
                                         (static_cast<double>(i) * static_cast<double>(interval));
  }
  std::vector<Term> terms;
  terms.reserve(scale.size());
  for (int j = 0; j <= order; ++j) {
    double alpha = j == 0 ? 1.0 : 0.0;
    const double sign = j % 2 == 0 ? 1.0 : -1.0;
    for (int i = std::max(j, 1); i <= order; ++i) {
      alpha += scale[static_cast<std::size_t>(i)] * sign * binomial(i, j);
    }
    terms.push_back({-j * interval, alpha});
  }
  return LinearCoefficients(std::move(terms), taylor_tag(order, interval, offset));
}

Vector taylor_predict_direct(const Matrix& rows, int anchor, int order, int interval, int offset) {
  require_interval(interval);
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "Taylor order must be >= 0");
  require_row(rows, anchor - order * interval, "taylor_predict_direct");
  require_row(rows, anchor, "taylor_predict_direct");
  Vector out = rows.row(anchor).transpose();
  double scale = 1.0;
  for (int i = 1; i <= order; ++i) {
    scale *= static_cast<double>(-offset) / (static_cast<double>(i) * static_cast<double>(interval));
    out += scale * finite_difference(rows, anchor, i, interval);
  }
  return out;
}

Vector taylor_predict_direct(const FeatureTrajectory& traj, int anchor, int order, int interval,
                             int offset) {
  return taylor_predict_direct(traj.data(), anchor, order, interval, offset);
}

LinearCoefficients foca_predictor_coefficients() {
  return LinearCoefficients({{0, 7.0 / 3.0}, {-1, -5.0 / 3.0}, {-2, 1.0 / 3.0}}, "foca-bdf2");
}

LinearCoefficients foca_corrected_coefficients(int interval) {
  require_interval(interval);
  const int n = interval;
  return LinearCoefficients({{0, 7.0 / 4.0},
                             {-1, -1.0},
                             {-2, 1.0 / 4.0},
                             {-n, 3.0 / 4.0},
                             {-n - 1, -1.0},
                             {-n - 2, 1.0 / 4.0}},
                            "foca-bdf2-heun(N=" + std::to_string(n) + ")");
}

Vector apply_linear(const Matrix& rows, int anchor, const LinearCoefficients& coeffs) {
  require_row(rows, anchor + coeffs.min_offset(), "apply_linear");
  require_row(rows, anchor, "apply_linear");
  Vector out = Vector::Zero(rows.cols());
  for (const auto& term : coeffs.terms()) {
    out += term.weight * rows.row(anchor + term.offset).transpose();
  }
  return out;
}

Vector apply_linear(const FeatureTrajectory& traj, int anchor, const LinearCoefficients& coeffs) {
  return apply_linear(traj.data(), anchor, coeffs);
}

}  // namespace l2p
