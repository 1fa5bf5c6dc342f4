#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "bmx/errors.hpp"
#include "bmx/sim.hpp"

using namespace bmx;

namespace {

constexpr double kPi = std::numbers::pi;

double chi_square_p_value(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// Critical KS value at level alpha for sample sizes n and m.
double ks_critical(double alpha, double n, double m) {
  return std::sqrt(-0.5 * std::log(alpha / 2)) * std::sqrt((n + m) / (n * m));
}

double mean_exit_time(const Domain& d, CPoint start, long n, bool em, std::uint64_t seed) {
  double s = 0;
  WosConfig wcfg;
  wcfg.with_time = true;
  for (long i = 0; i < n; ++i) {
    RngStream rng(seed, i);
    s += *(em ? em_exit(d, start, {}, rng) : wos_exit(d, start, wcfg, rng)).exit_time;
  }
  return s / n;
}

}  // namespace

TEST(DiskExitTime, TableMomentsMatchLaplaceExpansion) {
  // E[exp(-s T)] = 1 / I0(sqrt(2 s)) gives E[T] = 1/2 and E[T^2] = 3/8.
  const auto& table = DiskExitTimeTable::instance();
  double m1 = 0, m2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double t = table.quantile((i + 0.5) / n);
    m1 += t;
    m2 += t * t;
  }
  EXPECT_NEAR(m1 / n, 0.5, 2e-3);
  EXPECT_NEAR(m2 / n, 0.375, 4e-3);
}

TEST(DiskExitTime, QuantileInvertsCdfAndBranchesAgree) {
  const auto& table = DiskExitTimeTable::instance();
  for (double t : {0.02, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 2.9}) EXPECT_NEAR(table.quantile(table.cdf(t)), t, 1e-6 * (1 + t));
  EXPECT_NEAR(DiskExitTimeTable::saddlepoint_cdf(0.05), 1 - DiskExitTimeTable::series_survival(0.05), 2e-3);
  double prev = 0;
  for (double t = 0.011; t < 3; t *= 1.05) {
    const double f = table.cdf(t);
    EXPECT_GE(f, prev);
    prev = f;
  }
  EXPECT_EQ(table.checksum(), DiskExitTimeTable::instance().checksum());
}

TEST(SampleDiskExit, AngleUniformChiSquare) {
  const int bins = 36, n = 100000;
  std::vector<double> obs(bins, 0), exp(bins, static_cast<double>(n) / bins);
  for (int i = 0; i < n; ++i) {
    RngStream rng(11, i);
    const CPoint z = sample_disk_exit(0.0, 1.0, rng, false).exit_point;
    double a = std::arg(z);
    if (a < 0) a += 2 * kPi;
    obs[std::min(bins - 1, static_cast<int>(a / (2 * kPi) * bins))] += 1;
  }
  EXPECT_GT(chi_square_p_value(obs, exp), 1e-3);
}

TEST(SampleDiskExit, MeanTimeAndScaling) {
  double s1 = 0, s2 = 0;
  const int n = 100000;
  std::vector<double> t1, t2;
  for (int i = 0; i < n; ++i) {
    RngStream r1(12, i), r2(13, i);
    t1.push_back(*sample_disk_exit(0.0, 1.0, r1, true).exit_time);
    t2.push_back(*sample_disk_exit(0.0, 2.0, r2, true).exit_time);
    s1 += t1.back();
    s2 += t2.back();
  }
  EXPECT_NEAR(s1 / n, 0.5, 0.01);
  EXPECT_NEAR(s2 / n, 2.0, 0.04);
  for (double& t : t2) t /= 4;
  EXPECT_LT(ks_two_sample(t1, t2), ks_critical(1e-3, n, n));
}

TEST(SampleHalfplaneExit, MatchesCauchyLaw) {
  // P(X <= x) = 1/2 + atan((x - a) / b) / pi for start a + bi.
  const CPoint start(-1, 2);
  const int n = 50000;
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) {
    RngStream rng(14, i);
    xs.push_back(sample_halfplane_exit(start, rng).exit_point.real());
  }
  std::sort(xs.begin(), xs.end());
  double d = 0;
  for (int i = 0; i < n; ++i) {
    const double f = 0.5 + std::atan((xs[i] - start.real()) / start.imag()) / kPi;
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 1.95 / std::sqrt(static_cast<double>(n)));
  RngStream rng(1, 0);
  EXPECT_THROW(sample_halfplane_exit({0, -1}, rng), BadStart);
}

TEST(Wos, AnnulusLogHittingLaw) {
  const Domain ann = Domain::annulus(1, std::exp(2.0));
  const int n = 20000;
  for (auto [radius, target] : {std::pair{std::exp(1.0), 0.5}, std::pair{std::exp(1.5), 0.25}}) {
    int inner = 0;
    for (int i = 0; i < n; ++i) {
      RngStream rng(15, i);
      inner += wos_exit(ann, {radius, 0}, {}, rng).label == Label::AnnulusInner;
    }
    const double p = static_cast<double>(inner) / n;
    EXPECT_NEAR(p, target, 4 * std::sqrt(target * (1 - target) / n));
  }
}

TEST(Wos, SquareSidesSymmetric) {
  const Domain sq = Domain::rectangle(1, 1);
  const int n = 20000;
  std::vector<int> hits(4, 0);
  for (int i = 0; i < n; ++i) {
    RngStream rng(16, i);
    const Label l = wos_exit(sq, 0.0, {}, rng).label;
    ASSERT_LE(static_cast<int>(l), static_cast<int>(Label::S4));
    ++hits[static_cast<int>(l)];
  }
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(n), 0.25, 4 * std::sqrt(0.25 * 0.75 / n));
}

TEST(Wos, ReproducibleAndBounded) {
  const Domain hp = Domain::half_plane(shape::Axis::Up);
  RngStream a(3, 9), b(3, 9);
  WosConfig cfg;
  cfg.with_time = true;
  const ExitRecord ra = wos_exit(hp, {0, 1}, cfg, a), rb = wos_exit(hp, {0, 1}, cfg, b);
  EXPECT_EQ(ra.exit_point, rb.exit_point);
  EXPECT_EQ(*ra.exit_time, *rb.exit_time);
  EXPECT_EQ(ra.steps, rb.steps);
  EXPECT_DOUBLE_EQ(ra.exit_point.imag(), 0.0);
  cfg.max_steps = 1;
  RngStream c(3, 10);
  EXPECT_THROW(wos_exit(Domain::disk(0.0, 1), {0.5, 0}, cfg, c), MaxStepsExceeded);
  EXPECT_THROW(wos_exit(hp, {0, -1}, {}, c), BadStart);
}

TEST(Em, DiskMeanExitTime) {
  EXPECT_NEAR(mean_exit_time(Domain::disk(0.0, 1), 0.0, 20000, true, 17), 0.5, 0.01);
  EXPECT_NEAR(mean_exit_time(Domain::disk(0.0, 1), 0.0, 20000, false, 17), 0.5, 0.01);
}

TEST(Em, HalfplaneExitMatchesExactSampler) {
  const int n = 10000;
  std::vector<double> em, exact;
  const Domain hp = Domain::half_plane(shape::Axis::Up);
  for (int i = 0; i < n; ++i) {
    RngStream r1(18, i), r2(19, i);
    em.push_back(em_exit(hp, {0, 1}, {}, r1).exit_point.real());
    exact.push_back(sample_halfplane_exit({0, 1}, r2).exit_point.real());
  }
  EXPECT_LT(ks_two_sample(em, exact), ks_critical(1e-3, n, n));
}

TEST(Em, RectangleLabelsAgreeWithWos) {
  const Domain rect = Domain::rectangle(2, 1);
  const int n = 20000;
  std::vector<double> em(4, 0), wos(4, 0);
  for (int i = 0; i < n; ++i) {
    RngStream r1(20, i), r2(21, i);
    em[static_cast<int>(em_exit(rect, 0.0, {}, r1).label)] += 1.0 / n;
    wos[static_cast<int>(wos_exit(rect, 0.0, {}, r2).label)] += 1.0 / n;
  }
  for (int k = 0; k < 4; ++k) {
    const double se = std::sqrt((em[k] * (1 - em[k]) + wos[k] * (1 - wos[k])) / n);
    EXPECT_NEAR(em[k], wos[k], 3 * se) << "side " << k;
  }
}

TEST(Pushforward, LinearScalesClock) {
  const CPoint c(2, -1);
  RngStream rng(22, 0);
  const PathSample path = em_path(Domain::disk(0.0, 1), 0.1, {}, rng);
  const PathSample out = pushforward(AnalyticMap::linear(c), path);
  ASSERT_EQ(out.times.size(), path.times.size());
  for (std::size_t i = 0; i < path.times.size(); ++i) EXPECT_NEAR(out.times[i], std::norm(c) * path.times[i], 1e-12 * (1 + out.times[i]));
  EXPECT_NEAR(*out.terminal.exit_time, std::norm(c) * *path.terminal.exit_time, 1e-12);
  EXPECT_EQ(out.points.back(), c * path.points.back());
}

TEST(Pushforward, SquaredPathsFollowPoissonKernel) {
  // z -> z^2 sends paths from 0.5 to time-changed Brownian paths from 0.25,
  // whose exit angle has CDF (1/pi) atan((1 + r)/(1 - r) tan(theta/2)) + 1/2.
  const Domain disk = Domain::disk(0.0, 1);
  const AnalyticMap sq = AnalyticMap::power_int(2);
  const int n = 6000, bins = 24;
  const double r = 0.25;
  std::vector<double> obs(bins, 0), exp(bins, 0);
  for (int i = 0; i < n; ++i) {
    RngStream rng(23, i);
    const PathSample img = pushforward(sq, em_path(disk, 0.5, {}, rng), &disk);
    const double a = std::arg(img.terminal.exit_point);
    obs[std::min(bins - 1, static_cast<int>((a + kPi) / (2 * kPi) * bins))] += 1;
  }
  const auto cdf = [&](double th) { return 0.5 + std::atan((1 + r) / (1 - r) * std::tan(th / 2)) / kPi; };
  for (int k = 0; k < bins; ++k) {
    const double lo = -kPi + 2 * kPi * k / bins, hi = -kPi + 2 * kPi * (k + 1) / bins;
    exp[k] = n * ((k + 1 == bins ? 1.0 : cdf(hi)) - (k == 0 ? 0.0 : cdf(lo)));
  }
  EXPECT_GT(chi_square_p_value(obs, exp), 1e-3);
}

TEST(Pushforward, ExpSendsStripExitsToRays) {
  const Domain strip = Domain::strip(0, kPi);
  const Domain upper = Domain::half_plane(shape::Axis::Up);
  for (int i = 0; i < 200; ++i) {
    RngStream rng(24, i);
    const PathSample img = pushforward(AnalyticMap::exp(), em_path(strip, {0, 1}, {}, rng), &upper);
    const CPoint w = img.terminal.exit_point;
    EXPECT_LT(std::abs(w.imag()), 1e-6 * (1 + std::abs(w)));
    EXPECT_EQ(img.terminal.label, w.real() <= 0 ? Label::HalfLineLeft : Label::HalfLineRight);
  }
}

TEST(Coupling, HalfplaneMirrorExits) {
  const Domain hp = Domain::half_plane(shape::Axis::Up);
  int crossed = 0;
  for (int i = 0; i < 2000; ++i) {
    RngStream rng(25, i);
    const CoupledExit c = reflected_coupling(hp, {-1, 1}, 0.0, {}, rng);
    if (!c.hit_line) {
      EXPECT_EQ(c.b.exit_point, c.b_hat.exit_point);
      continue;
    }
    ++crossed;
    EXPECT_NEAR(c.b_hat.exit_point.real(), -c.b.exit_point.real(), 1e-9 * (1 + std::abs(c.b.exit_point)));
    EXPECT_DOUBLE_EQ(*c.b.exit_time, *c.b_hat.exit_time);
  }
  EXPECT_GT(crossed, 800);
  RngStream rng(25, 0);
  EXPECT_THROW(reflected_coupling(hp, {1, 1}, 0.0, {}, rng), BadStart);
}
