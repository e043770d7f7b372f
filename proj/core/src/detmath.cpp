#include <cmath>
#include <limits>

#include "l2p/random.hpp"

namespace l2p {
namespace detmath {
namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Lo = 6.07710050650619224932e-11;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;
constexpr double kSqrtHalf = 7.07106781186547524401e-01;

// Taylor kernels on |r| <= pi/4 (trig) and |r| <= ln2/2 (exp); the term
// counts put the truncation error below 1e-17.
double sin_kernel(double r) {
  const double r2 = r * r;
  double term = r;
  double sum = r;
  for (int n = 1; n <= 12; ++n) {
    term *= -r2 / static_cast<double>((2 * n) * (2 * n + 1));
    sum += term;
  }
  return sum;
}

double cos_kernel(double r) {
  const double r2 = r * r;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n <= 12; ++n) {
    term *= -r2 / static_cast<double>((2 * n - 1) * (2 * n));
    sum += term;
  }
  return sum;
}

// Quadrant reduction x = q * pi/2 + r. Cody-Waite two-part pi/2 keeps the
// reduction accurate for |x| up to ~1e5, far beyond what the generators use.
double reduce(double x, long long& quadrant) {
  const double q = std::nearbyint(x * kTwoOverPi);
  quadrant = static_cast<long long>(q);
  return (x - q * kPio2Hi) - q * kPio2Lo;
}

}  // namespace

double exp(double x) {
  if (std::isnan(x)) return x;
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  if (x < -745.0) return 0.0;
  const double k = std::nearbyint(x * kInvLn2);
  const double r = (x - k * kLn2Hi) - k * kLn2Lo;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n <= 20; ++n) {
    term *= r / static_cast<double>(n);
    sum += term;
  }
  return std::ldexp(sum, static_cast<int>(k));
}

double log(double x) {
  if (std::isnan(x) || x < 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(x)) return x;
  int e = 0;
  double m = std::frexp(x, &e);  // m in [0.5, 1)
  if (m < kSqrtHalf) {
    m *= 2.0;
    --e;
  }
  // log(m) = 2 atanh(z), |z| <= 0.1716
  const double z = (m - 1.0) / (m + 1.0);
  const double z2 = z * z;
  double power = z;
  double sum = 0.0;
  for (int n = 0; n < 24; ++n) {
    sum += power / static_cast<double>(2 * n + 1);
    power *= z2;
  }
  const double de = static_cast<double>(e);
  return (de * kLn2Hi + 2.0 * sum) + de * kLn2Lo;
}

double sin(double x) {
  long long q = 0;
  const double r = reduce(x, q);
  switch (((q % 4) + 4) % 4) {
    case 0: return sin_kernel(r);
    case 1: return cos_kernel(r);
    case 2: return -sin_kernel(r);
    default: return -cos_kernel(r);
  }
}

double cos(double x) {
  long long q = 0;
  const double r = reduce(x, q);
  switch (((q % 4) + 4) % 4) {
    case 0: return cos_kernel(r);
    case 1: return -sin_kernel(r);
    case 2: return -cos_kernel(r);
    default: return sin_kernel(r);
  }
}

}  // namespace detmath

double SplitMix64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * detmath::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  SplitMix64 mixer(base ^ (stream * 0xD1B54A32D192ED03ULL));
  return mixer.next();
}

}  // namespace l2p
