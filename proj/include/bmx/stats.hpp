#pragma once

// Estimators and verdicts built on the simulation kernels: harmonic measure,
// exit-time moments with tail-index diagnostics, quasi-hyperbolic distance,
// Hardy-number classification, and checks of the reflection inequality, the
// Cauchy identities and monotonicity over increasing domains.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bmx/geometry.hpp"
#include "bmx/maps.hpp"
#include "bmx/sim.hpp"

namespace bmx {

struct Estimate {
  double value = 0;
  double std_err = 0;
  long n = 0;
  double ci_lo = 0;  // value - 1.96 std_err
  double ci_hi = 0;  // value + 1.96 std_err
};

Estimate make_estimate(double value, double std_err, long n);

enum class Kernel { WoS, EM };

const char* to_string(Kernel k);

// How replicas are simulated. Path i always draws from RngStream(seed,
// first_stream + i), so results never depend on the worker count.
struct SimOptions {
  Kernel kernel = Kernel::WoS;
  WosConfig wos;
  EmConfig em;
  std::uint64_t seed = 1;
  std::uint64_t first_stream = 0;
  int workers = 1;
};

// Per-path outcome; `record` is empty when the path hit its step cap.
struct PathOutcome {
  std::uint64_t path_id = 0;
  std::optional<ExitRecord> record;
};

struct ExitBatch {
  std::vector<PathOutcome> paths;  // ordered by path_id
  long excluded() const;
  long valid() const;
};

ExitBatch simulate_exits(const Domain& d, CPoint start, long n, const SimOptions& opt);

// Concatenates batches and restores path_id order.
ExitBatch merge(const ExitBatch& a, const ExitBatch& b);

using ExitPredicate = std::function<bool(const ExitRecord&)>;

ExitPredicate label_is(Label label);

struct HarmonicMeasure {
  Estimate estimate;  // proportion with binomial standard error
  double wilson_lo = 0;
  double wilson_hi = 0;
  long hits = 0;
  long valid = 0;
  long excluded = 0;
};

HarmonicMeasure harmonic_measure_from(const ExitBatch& batch, const ExitPredicate& region);

// Requires n >= 100.
HarmonicMeasure estimate_harmonic_measure(const Domain& d, CPoint start, const ExitPredicate& region, long n,
                                          const SimOptions& opt);

enum class Verdict { Finite, Infinite, Inconclusive };

const char* to_string(Verdict v);

struct MomentEstimate {
  double p = 0;
  Estimate estimate;                  // mean of tau^p, batch-means standard error
  std::optional<Estimate> tail_index; // Hill estimate; empty if too few tail samples
  Verdict verdict = Verdict::Inconclusive;
  long excluded = 0;
};

inline constexpr int kBatchCount = 32;
inline constexpr double kTailFraction = 0.05;

// Hill estimator on the top `top_fraction` order statistics. Throws
// TooFewTailSamples when fewer than 500 samples lie above the cutoff.
Estimate estimate_tail_index(std::vector<double> samples, double top_fraction = kTailFraction);

// Builds the moment estimate from exit times listed in path order.
MomentEstimate moment_from_times(const std::vector<double>& times, double p, long excluded = 0);

// Forces time tracking on the chosen kernel.
MomentEstimate estimate_moment(const Domain& d, CPoint start, double p, long n, const SimOptions& opt);

// Exit times of the valid paths of a time-tracked batch, in path order.
std::vector<double> exit_times(const ExitBatch& batch);

// ---- quasi-hyperbolic distance ---------------------------------------------

struct QhConfig {
  double kappa = 0.2;        // leaf size <= kappa * distance to the boundary
  double abs_floor = 1e-3;   // cells closer than max(abs_floor, rel_floor*|c - a|)
  double rel_floor = 0.01;   //   to the boundary are not traversed
  double rel_change = 0.01;  // refinement stops below this relative change
  int max_rounds = 4;
  std::size_t max_cells = 600'000;
  bool relax = true;  // straighten the graph path into a smooth path integral
};

struct QhResult {
  double value = 0;
  std::vector<double> round_values;  // after each refinement
  bool converged = false;
  std::size_t cells = 0;
};

// delta_d(a, b) between two interior points.
QhResult quasi_hyperbolic_distance(const Domain& d, CPoint a, CPoint b, const QhConfig& cfg = {});

// delta_d(a, F_R) with F_R = {|z| = R} inside d, for each radius (|a| < R).
std::vector<QhResult> quasi_hyperbolic_to_circles(const Domain& d, CPoint a, const std::vector<double>& radii,
                                                  const QhConfig& cfg = {});

struct HardyEstimate {
  CPoint a;
  std::vector<double> r_schedule;
  std::vector<double> delta_values;
  double slope = 0;
  double lo = 0;
  double hi = 0;
  bool infinite = false;
};

// Least-squares slope of delta against ln R over the second half of the
// schedule. Infinite when delta / ln R exceeds 100 at the largest radius and
// is still increasing there.
HardyEstimate estimate_hardy_number(const Domain& d, CPoint a, const std::vector<double>& r_schedule,
                                    const QhConfig& cfg = {});

// ---- verifiers ------------------------------------------------------------

struct KarafylliaReport {
  Estimate nu;      // P(Re B_tau > split)
  Estimate nu_hat;  // P(B meets the split line inside d before exiting)
  Estimate ratio;   // nu_hat / nu, delta-method standard error
  bool delta_starlike = true;
  std::optional<CPoint> witness;
  long inclusion_checked = 0;     // pairs with tau > tau0 and Re(B_hat exit) < split
  long inclusion_violations = 0;  // of those, pairs where Re(B exit) <= split - tol
  long valid = 0;
  long excluded = 0;
};

KarafylliaReport verify_karafyllia(const Domain& d, CPoint a, double split_re, long n, const SimOptions& opt,
                                   int starlike_probes = 2000);

struct ComplexCheck {
  std::string name;
  CPoint target;
  CPoint mean;
  double se_re = 0;
  double se_im = 0;
  bool pass = false;  // both components within 4 standard errors
};

struct CauchyReport {
  long n = 0;
  std::vector<ComplexCheck> checks;
  bool pass() const;
};

// Draws C ~ Cauchy(Re g, Im g) as half-plane exits from g and compares sample
// means with E[(C - a)/(C - conj a)] = (g - a)/(g - conj a) for g = gamma_mobius,
// E[C^s] = g^s for g = gamma_power, and E[exp(i lambda (2/pi) ln|C1|)] =
// 1/cosh(lambda) for a standard Cauchy C1. Each identity uses its own streams.
CauchyReport verify_cauchy_identities(CPoint gamma_mobius, CPoint alpha_mobius, CPoint gamma_power, double alpha_power,
                                      double lambda, long n, std::uint64_t seed, int workers = 1);

struct IncreasingReport {
  std::vector<MomentEstimate> estimates;
  std::vector<double> thresholds;
  bool nondecreasing = true;       // no drop larger than 3 joint standard errors
  bool strictly_increasing = true; // every step up by more than 3 joint standard errors
  bool exceeds_thresholds = true;
};

// Checks nesting on a point grid over [-box, box]^2 (throws NestingViolation),
// then estimates E[tau^p] on each domain with independent stream ranges.
IncreasingReport verify_increasing_domains(const std::vector<Domain>& domains, CPoint start, double p, long n,
                                           const SimOptions& opt, const std::vector<double>& thresholds = {},
                                           double box = 50.0);

}  // namespace bmx
