#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bmx/errors.hpp"
#include "bmx/stats.hpp"

using namespace bmx;

namespace {

constexpr double kPi = std::numbers::pi;

SimOptions em_options(std::uint64_t seed) {
  SimOptions o;
  o.kernel = Kernel::EM;
  o.seed = seed;
  return o;
}

std::vector<double> log_schedule(double lo, double hi, int n) {
  std::vector<double> r;
  for (int i = 0; i < n; ++i) r.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return r;
}

}  // namespace

TEST(Estimate, IntervalIsSymmetric) {
  const Estimate e = make_estimate(2.0, 0.5, 10);
  EXPECT_DOUBLE_EQ(e.ci_lo, 2.0 - 0.98);
  EXPECT_DOUBLE_EQ(e.ci_hi, 2.0 + 0.98);
}

TEST(TailIndex, ParetoDraws) {
  // P(X > x) = 1/x for X = 1/U.
  std::vector<double> xs;
  RngStream rng(30, 0);
  for (int i = 0; i < 200000; ++i) xs.push_back(1 / rng.uniform());
  const Estimate a = estimate_tail_index(xs);
  EXPECT_EQ(a.n, 10000);
  EXPECT_NEAR(a.value, 1.0, 0.1);
  EXPECT_NEAR(a.std_err, a.value / 100, 1e-12);
  xs.resize(5000);
  EXPECT_THROW(estimate_tail_index(xs), TooFewTailSamples);
}

TEST(HarmonicMeasure, KnownValues) {
  const SimOptions opt;
  // Cauchy(-1, 1) puts 1/4 of its mass on (0, inf).
  const HarmonicMeasure hp =
      estimate_harmonic_measure(Domain::half_plane(shape::Axis::Up), {-1, 1},
                                [](const ExitRecord& r) { return r.exit_point.real() > 0; }, 20000, opt);
  EXPECT_NEAR(hp.estimate.value, 0.25, 4 * hp.estimate.std_err);
  EXPECT_LE(hp.wilson_lo, hp.estimate.value);
  EXPECT_GE(hp.wilson_hi, hp.estimate.value);
  const HarmonicMeasure sq = estimate_harmonic_measure(Domain::rectangle(1, 1), 0.0, label_is(Label::S1), 20000, opt);
  EXPECT_NEAR(sq.estimate.value, 0.25, 4 * sq.estimate.std_err);
  const HarmonicMeasure ann = estimate_harmonic_measure(Domain::annulus(1, std::exp(2.0)), {std::exp(1.0), 0},
                                                        label_is(Label::AnnulusInner), 20000, opt);
  EXPECT_NEAR(ann.estimate.value, 0.5, 4 * ann.estimate.std_err);
  EXPECT_THROW(estimate_harmonic_measure(Domain::rectangle(1, 1), 0.0, label_is(Label::S1), 99, opt), BadParameters);
}

TEST(Merge, PartitionedStreamsEqualSingleRun) {
  const Domain rect = Domain::rectangle(2, 1);
  SimOptions opt;
  opt.seed = 31;
  const ExitBatch whole = simulate_exits(rect, 0.0, 3000, opt);
  SimOptions first = opt, second = opt;
  second.first_stream = 1000;
  const ExitBatch a = simulate_exits(rect, 0.0, 1000, first);
  const ExitBatch b = simulate_exits(rect, 0.0, 2000, second);
  const ExitBatch merged = merge(b, a);
  ASSERT_EQ(merged.paths.size(), whole.paths.size());
  for (std::size_t i = 0; i < whole.paths.size(); ++i) {
    EXPECT_EQ(merged.paths[i].path_id, whole.paths[i].path_id);
    EXPECT_EQ(merged.paths[i].record->exit_point, whole.paths[i].record->exit_point);
  }
  EXPECT_EQ(harmonic_measure_from(merged, label_is(Label::S1)).hits,
            harmonic_measure_from(whole, label_is(Label::S1)).hits);
}

TEST(Merge, WorkerCountDoesNotChangeResults) {
  SimOptions one = em_options(32), four = em_options(32);
  four.workers = 4;
  const Domain wedge = Domain::wedge(kPi / 2);
  const ExitBatch a = simulate_exits(wedge, 1.0, 500, one), b = simulate_exits(wedge, 1.0, 500, four);
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    EXPECT_EQ(a.paths[i].record->exit_point, b.paths[i].record->exit_point);
    EXPECT_EQ(*a.paths[i].record->exit_time, *b.paths[i].record->exit_time);
  }
}

TEST(Moment, WedgeVerdicts) {
  const ExitBatch batch = simulate_exits(Domain::wedge(kPi / 2), 1.0, 20000, em_options(33));
  const std::vector<double> t = exit_times(batch);
  EXPECT_EQ(moment_from_times(t, 0.5).verdict, Verdict::Finite);
  EXPECT_EQ(moment_from_times(t, 1.5).verdict, Verdict::Infinite);
  EXPECT_NEAR(moment_from_times(t, 0.5).tail_index->value, 1.0, 0.15);
}

TEST(Moment, KoebeVerdicts) {
  const ExitBatch batch = simulate_exits(Domain::koebe_slit(), 0.0, 20000, em_options(34));
  const std::vector<double> t = exit_times(batch);
  EXPECT_EQ(moment_from_times(t, 0.1).verdict, Verdict::Finite);
  // p = 1/4 sits exactly at the tail index, where the rule may not call Finite.
  EXPECT_NE(moment_from_times(t, 0.25).verdict, Verdict::Finite);
  EXPECT_EQ(moment_from_times(t, 0.5).verdict, Verdict::Infinite);
}

TEST(Moment, HalfplaneTailIndex) {
  const ExitBatch batch = simulate_exits(Domain::half_plane(shape::Axis::Up), {0, 1}, 20000, em_options(35));
  EXPECT_NEAR(estimate_tail_index(exit_times(batch)).value, 0.5, 0.1);
}

TEST(Moment, ScalingByTwoMultipliesBySixteenToThePOverFour) {
  SimOptions opt;
  opt.seed = 36;
  const MomentEstimate m1 = estimate_moment(Domain::disk(0.0, 1), 0.0, 0.5, 40000, opt);
  const MomentEstimate m2 = estimate_moment(Domain::disk(0.0, 2), 0.0, 0.5, 40000, opt);
  // Same streams and the same walk up to scale, so the ratio is exactly 2^(2p).
  EXPECT_NEAR(m2.estimate.value / m1.estimate.value, 2.0, 1e-3);
  EXPECT_EQ(m1.verdict, m2.verdict);
}

TEST(QuasiHyperbolic, ClosedForms) {
  const auto disk = quasi_hyperbolic_to_circles(Domain::disk(0.0, 1), 0.0, {0.5});
  EXPECT_NEAR(disk[0].value, std::log(2.0), 0.03 * std::log(2.0));
  const QhResult hp = quasi_hyperbolic_distance(Domain::half_plane(shape::Axis::Up), {0, 1}, {0, 2});
  EXPECT_NEAR(hp.value, std::log(2.0), 0.03 * std::log(2.0));
  const auto wedge = quasi_hyperbolic_to_circles(Domain::wedge(kPi / 2), 1.0, {10, 100});
  for (int k = 0; k < 2; ++k) {
    const double exact = std::sqrt(2.0) * std::log(k == 0 ? 10.0 : 100.0);
    EXPECT_NEAR(wedge[k].value, exact, 0.05 * exact);
  }
}

TEST(QuasiHyperbolic, RunningMinimumNeverIncreases) {
  QhConfig cfg;
  cfg.relax = false;
  cfg.rel_change = 0;  // force every round
  cfg.max_rounds = 3;
  const QhResult r = quasi_hyperbolic_distance(Domain::half_plane(shape::Axis::Up), {0, 1}, {3, 1}, cfg);
  ASSERT_EQ(r.round_values.size(), 3u);
  for (double v : r.round_values) EXPECT_LE(r.value, v);
  EXPECT_LE(r.round_values.back(), r.round_values.front());
  // Hyperbolic distance acosh(1 + 9/2) is the infimum in the half-plane.
  EXPECT_GE(r.value, std::acosh(5.5) - 1e-9);
}

TEST(QuasiHyperbolic, RejectsBadTargets) {
  EXPECT_THROW(quasi_hyperbolic_to_circles(Domain::disk(0.0, 1), 0.5, {0.4}), BadParameters);
  EXPECT_THROW(quasi_hyperbolic_distance(Domain::disk(0.0, 1), 0.0, {2, 0}), BadParameters);
}

TEST(Hardy, WedgeAndKoebeSandwich) {
  const HardyEstimate w = estimate_hardy_number(Domain::wedge(kPi / 2), 1.0, log_schedule(2, 2000, 10));
  EXPECT_LE(w.lo, 2.0);
  EXPECT_GE(w.hi, 2.0);
  EXPECT_FALSE(w.infinite);
  for (std::size_t i = 1; i < w.delta_values.size(); ++i) EXPECT_GE(w.delta_values[i], w.delta_values[i - 1]);
  const HardyEstimate k = estimate_hardy_number(Domain::koebe_slit(), 0.0, log_schedule(1, 1000, 10));
  EXPECT_LE(k.lo, 0.5);
  EXPECT_GE(k.hi, 0.5);
  EXPECT_THROW(estimate_hardy_number(Domain::wedge(kPi / 2), 1.0, log_schedule(2, 200, 10)), BadParameters);
}

TEST(Karafyllia, HalfplaneRatioTwo) {
  const KarafylliaReport r = verify_karafyllia(Domain::half_plane(shape::Axis::Up), {-1, 1}, 0.0, 20000, em_options(37));
  EXPECT_TRUE(r.delta_starlike);
  EXPECT_NEAR(r.nu_hat.value, 0.5, 4 * r.nu_hat.std_err);
  EXPECT_NEAR(r.nu.value, 0.25, 4 * r.nu.std_err);
  EXPECT_NEAR(r.ratio.value, 2.0, 4 * r.ratio.std_err);
  EXPECT_GT(r.inclusion_checked, 0);
  EXPECT_EQ(r.inclusion_violations, 0);
}

TEST(Karafyllia, FlagsDomainsThatAreNotDeltaStarlike) {
  const KarafylliaReport r = verify_karafyllia(Domain::disk(0.0, 1), {-0.5, 0}, 0.0, 200, em_options(38));
  EXPECT_FALSE(r.delta_starlike);
  EXPECT_TRUE(r.witness.has_value());
}

TEST(Cauchy, IdentitiesHold) {
  const CauchyReport r = verify_cauchy_identities({0, 2}, {0, 1}, {0, 1}, 0.5, 1.0, 100000, 39);
  ASSERT_EQ(r.checks.size(), 3u);
  EXPECT_NEAR(r.checks[0].target.real(), 1.0 / 3, 1e-15);
  EXPECT_NEAR(std::abs(r.checks[1].target - std::polar(1.0, kPi / 4)), 0, 1e-15);
  EXPECT_NEAR(r.checks[2].target.real(), 1 / std::cosh(1.0), 1e-15);
  EXPECT_TRUE(r.pass());
  const CauchyReport zero = verify_cauchy_identities({0, 2}, {0, 1}, {0, 1}, 0.5, 0.0, 1000, 39);
  EXPECT_EQ(zero.checks[2].mean, CPoint(1, 0));
  EXPECT_TRUE(zero.checks[2].pass);
}

TEST(IncreasingDomains, NestedDisks) {
  const IncreasingReport r =
      verify_increasing_domains({Domain::disk(0.0, 1), Domain::disk(0.0, 2)}, 0.0, 1.0, 20000, {});
  EXPECT_NEAR(r.estimates[0].estimate.value, 0.5, 0.02);
  EXPECT_NEAR(r.estimates[1].estimate.value, 2.0, 0.08);
  EXPECT_TRUE(r.strictly_increasing);
  const IncreasingReport same =
      verify_increasing_domains({Domain::disk(0.0, 1), Domain::disk(0.0, 1)}, 0.0, 1.0, 20000, {});
  EXPECT_TRUE(same.nondecreasing);
  EXPECT_FALSE(same.strictly_increasing);
  EXPECT_THROW(verify_increasing_domains({Domain::disk(0.0, 2), Domain::disk(0.0, 1)}, 0.0, 1.0, 200, {}),
               NestingViolation);
}

TEST(IncreasingDomains, CombGrows) {
  std::vector<Domain> v;
  for (int k : {1, 3}) v.push_back(build_comb(k, default_comb_heights(k), default_comb_offsets(k)).V);
  const IncreasingReport r = verify_increasing_domains(v, 1.0, 0.25, 20000, {}, {1.0, 1.25}, 60);
  EXPECT_TRUE(r.nondecreasing);
  EXPECT_TRUE(r.exceeds_thresholds);
}
