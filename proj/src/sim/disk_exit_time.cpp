#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "bmx/sim.hpp"

namespace bmx {
namespace {

constexpr int kTerms = 50;
constexpr std::size_t kKnots = 4096;
constexpr double kSeriesFrom = 0.05;
// The CDF at 0.01 is about 4e-22, far below the smallest uniform draw (2^-54).
constexpr double kTableLo = 0.01;
constexpr double kTableHi = 3.0;

struct SeriesCoefficients {
  std::array<double, kTerms> j{}, c{};
  SeriesCoefficients() {
    for (int k = 0; k < kTerms; ++k) {
      j[k] = boost::math::cyl_bessel_j_zero(0.0, k + 1);
      c[k] = 2.0 / (j[k] * boost::math::cyl_bessel_j(1, j[k]));
    }
  }
};

const SeriesCoefficients& coefficients() {
  static const SeriesCoefficients coeffs;
  return coeffs;
}

double series_density(double t) {
  const auto& s = coefficients();
  double f = 0;
  for (int k = kTerms - 1; k >= 0; --k) f += s.c[k] * 0.5 * s.j[k] * s.j[k] * std::exp(-0.5 * s.j[k] * s.j[k] * t);
  return f;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

// K'(s) = I1(x) / (x I0(x)) with x = sqrt(-2s) decreases from 1/2 at x = 0.
double saddle_x(double t) {
  auto kp = [](double x) { return std::cyl_bessel_i(1.0, x) / (x * std::cyl_bessel_i(0.0, x)); };
  double lo = 1e-8, hi = 500;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kp(mid) > t) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::uint64_t fnv1a(const std::vector<double>& v, std::uint64_t h) {
  for (double x : v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &x, sizeof x);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

}  // namespace

double DiskExitTimeTable::series_survival(double t) {
  const auto& s = coefficients();
  double sum = 0;
  for (int k = kTerms - 1; k >= 0; --k) sum += s.c[k] * std::exp(-0.5 * s.j[k] * s.j[k] * t);
  return sum;
}

double DiskExitTimeTable::saddlepoint_cdf(double t) {
  // Laplace transform E[exp(sT)] = 1 / I0(sqrt(-2s)) for s < 0, so the
  // cumulant generating function is K(s) = -ln I0(x), x = sqrt(-2s).
  const double x = saddle_x(t);
  const double s = -0.5 * x * x;
  const double i0 = std::cyl_bessel_i(0.0, x), i1 = std::cyl_bessel_i(1.0, x);
  const double K = -std::log(i0);
  const double gprime = (x * (i0 * i0 - i1 * i1) - 2 * i0 * i1) / ((x * i0) * (x * i0));
  const double K2 = -gprime / x;
  const double w = -std::sqrt(2 * (s * t - K));
  const double u = s * std::sqrt(K2);
  return normal_cdf(w) + normal_pdf(w) * (1 / w - 1 / u);
}

const DiskExitTimeTable& DiskExitTimeTable::instance() {
  static const DiskExitTimeTable table;
  return table;
}

DiskExitTimeTable::DiskExitTimeTable() {
  const auto& s = coefficients();
  j1_ = s.j[0];
  c1_ = s.c[0];

  const double scale = (1 - series_survival(kSeriesFrom)) / saddlepoint_cdf(kSeriesFrom);
  auto small_cdf = [&](double t) { return scale * saddlepoint_cdf(t); };

  t_.resize(kKnots);
  F_.resize(kKnots);
  slope_.resize(kKnots);
  const double step = std::log(kTableHi / kTableLo) / (kKnots - 1);
  for (std::size_t i = 0; i < kKnots; ++i) {
    const double t = (i + 1 == kKnots) ? kTableHi : kTableLo * std::exp(step * i);
    t_[i] = t;
    if (t >= kSeriesFrom) {
      F_[i] = 1 - series_survival(t);
      slope_[i] = series_density(t);
    } else {
      F_[i] = small_cdf(t);
      const double h = 1e-6 * t;
      slope_[i] = (small_cdf(t + h) - small_cdf(t - h)) / (2 * h);
    }
  }
  for (std::size_t i = 1; i < kKnots; ++i) F_[i] = std::max(F_[i], F_[i - 1]);

  // Fritsch-Carlson limiter keeps each Hermite piece monotone.
  for (std::size_t i = 0; i + 1 < kKnots; ++i) {
    const double delta = (F_[i + 1] - F_[i]) / (t_[i + 1] - t_[i]);
    if (delta == 0) {
      slope_[i] = slope_[i + 1] = 0;
      continue;
    }
    const double a = slope_[i] / delta, b = slope_[i + 1] / delta;
    const double r = a * a + b * b;
    if (r > 9) {
      const double tau = 3 / std::sqrt(r);
      slope_[i] = tau * a * delta;
      slope_[i + 1] = tau * b * delta;
    }
  }
  checksum_ = fnv1a(slope_, fnv1a(F_, fnv1a(t_, 0xCBF29CE484222325ULL)));
}

double DiskExitTimeTable::hermite(std::size_t i, double t) const {
  const double h = t_[i + 1] - t_[i];
  const double x = (t - t_[i]) / h;
  const double x2 = x * x, x3 = x2 * x;
  return (2 * x3 - 3 * x2 + 1) * F_[i] + (x3 - 2 * x2 + x) * h * slope_[i] + (-2 * x3 + 3 * x2) * F_[i + 1] +
         (x3 - x2) * h * slope_[i + 1];
}

double DiskExitTimeTable::cdf(double t) const {
  if (t <= t_.front()) return t <= 0 ? 0.0 : F_.front() * std::max(0.0, t / t_.front());
  if (t >= t_.back()) return 1 - c1_ * std::exp(-0.5 * j1_ * j1_ * t);
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  return hermite(static_cast<std::size_t>(it - t_.begin()) - 1, t);
}

double DiskExitTimeTable::quantile(double u) const {
  if (u >= F_.back()) return 2 * std::log(c1_ / (1 - u)) / (j1_ * j1_);
  if (u <= F_.front()) return t_.front();
  const auto it = std::upper_bound(F_.begin(), F_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - F_.begin()) - 1;
  // Invert the monotone cubic on [t_i, t_{i+1}]: Newton from the linear
  // guess, falling back to bisection whenever a step leaves the bracket.
  double lo = t_[i], hi = t_[i + 1];
  double t = lo + (hi - lo) * (u - F_[i]) / (F_[i + 1] - F_[i]);
  const double h = hi - lo;
  for (int iter = 0; iter < 50; ++iter) {
    const double g = hermite(i, t) - u;
    if (g > 0) hi = t;
    else lo = t;
    const double x = (t - t_[i]) / h;
    const double x2 = x * x;
    const double dg = ((6 * x2 - 6 * x) * F_[i] + (3 * x2 - 4 * x + 1) * h * slope_[i] +
                       (-6 * x2 + 6 * x) * F_[i + 1] + (3 * x2 - 2 * x) * h * slope_[i + 1]) /
                      h;
    double next = dg > 0 ? t - g / dg : 0.5 * (lo + hi);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * t) return next;
    t = next;
  }
  return t;
}

}  // namespace bmx
