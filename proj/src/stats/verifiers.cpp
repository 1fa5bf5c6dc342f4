#include <cmath>
#include <numbers>

#include "bmx/errors.hpp"
#include "bmx/parallel.hpp"
#include "bmx/stats.hpp"

namespace bmx {
namespace {

// Stream reserved for the Delta-starlike probe so it never overlaps path streams.
constexpr std::uint64_t kStarlikeStream = 0xFFFF'FFFF'0000'0001ULL;

struct PairOutcome {
  bool valid = false;
  bool hit_line = false;
  bool exit_right = false;
  bool hat_exit_left = false;
  bool violation = false;
};

ComplexCheck summarize(std::string name, CPoint target, const std::vector<CPoint>& values) {
  const double n = static_cast<double>(values.size());
  CPoint sum = 0;
  for (const CPoint v : values) sum += v;
  const CPoint mean = sum / n;
  double sre = 0, sim = 0;
  for (const CPoint v : values) {
    sre += (v.real() - mean.real()) * (v.real() - mean.real());
    sim += (v.imag() - mean.imag()) * (v.imag() - mean.imag());
  }
  ComplexCheck c;
  c.name = std::move(name);
  c.target = target;
  c.mean = mean;
  c.se_re = std::sqrt(sre / (n - 1) / n);
  c.se_im = std::sqrt(sim / (n - 1) / n);
  // A component with zero spread must match to rounding.
  const auto within = [](double diff, double se) { return std::abs(diff) <= std::max(4 * se, 1e-12); };
  c.pass = within(mean.real() - target.real(), c.se_re) && within(mean.imag() - target.imag(), c.se_im);
  return c;
}

}  // namespace

KarafylliaReport verify_karafyllia(const Domain& d, CPoint a, double split_re, long n, const SimOptions& opt,
                                   int starlike_probes) {
  if (n < 100) throw BadParameters("reflection check needs at least 100 paths");
  if (!(a.real() < split_re)) throw BadParameters("start must lie left of the split line");
  if (!contains(d, a)) throw BadStart("start point is not inside " + d.describe());

  KarafylliaReport rep;
  RngStream probe_rng(opt.seed, kStarlikeStream);
  const StarlikeVerdict sv = check_delta_starlike(d, starlike_probes, probe_rng);
  rep.delta_starlike = sv.pass;
  rep.witness = sv.witness;

  std::vector<PairOutcome> out(static_cast<std::size_t>(n));
  const double tol = opt.em.boundary_tol;
  parallel_for(out.size(), opt.workers, [&](std::size_t i) {
    RngStream rng(opt.seed, opt.first_stream + i);
    try {
      const CoupledExit c = reflected_coupling(d, a, split_re, opt.em, rng);
      const bool hat_left = c.hit_line && c.b_hat.exit_point.real() < split_re;
      // Pathwise inclusion: a left exit of the mirror forces a right exit of B.
      out[i] = {true, c.hit_line, c.b.exit_point.real() > split_re, hat_left,
                hat_left && !(c.b.exit_point.real() > split_re - tol)};
    } catch (const MaxStepsExceeded&) {
      out[i] = {};
    }
  });

  long hits_hat = 0, hits = 0, both = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const PairOutcome& o = out[i];
    if (!o.valid) {
      ++rep.excluded;
      continue;
    }
    ++rep.valid;
    hits_hat += o.hit_line;
    hits += o.exit_right;
    both += o.hit_line && o.exit_right;
    if (o.hat_exit_left) {
      ++rep.inclusion_checked;
      rep.inclusion_violations += o.violation;
    }
  }
  if (rep.valid == 0) throw BadParameters("no valid coupled paths");
  const double m = static_cast<double>(rep.valid);
  const double nh = hits_hat / m, nu = hits / m;
  rep.nu_hat = make_estimate(nh, std::sqrt(nh * (1 - nh) / m), rep.valid);
  rep.nu = make_estimate(nu, std::sqrt(nu * (1 - nu) / m), rep.valid);
  if (nu > 0 && nh > 0) {
    const double r = nh / nu;
    const double cov = both / m - nh * nu;
    const double rel_var = (nh * (1 - nh) / (nh * nh) + nu * (1 - nu) / (nu * nu) - 2 * cov / (nh * nu)) / m;
    rep.ratio = make_estimate(r, r * std::sqrt(std::max(0.0, rel_var)), rep.valid);
  } else {
    const double inf = std::numeric_limits<double>::infinity();
    rep.ratio = {nu > 0 ? 0.0 : inf, inf, rep.valid, -inf, inf};
  }
  return rep;
}

bool CauchyReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

CauchyReport verify_cauchy_identities(CPoint gamma_mobius, CPoint alpha_mobius, CPoint gamma_power, double alpha_power,
                                      double lambda, long n, std::uint64_t seed, int workers) {
  if (n < 2) throw BadParameters("need at least two draws");
  if (!(gamma_mobius.imag() > 0 && gamma_power.imag() > 0)) throw BadParameters("gamma must have Im > 0");
  if (!(alpha_mobius.imag() > 0)) throw BadParameters("Mobius parameter must have Im > 0");
  if (!(alpha_power > 0 && alpha_power < 1)) throw BadParameters("power must lie in (0, 1)");

  const auto N = static_cast<std::size_t>(n);
  std::vector<CPoint> mob(N), pow(N), chf(N);
  const double scale = lambda * 2 / std::numbers::pi;
  parallel_for(N, workers, [&](std::size_t i) {
    RngStream r1(seed, i), r2(seed, N + i), r3(seed, 2 * N + i);
    const double c1 = sample_halfplane_exit(gamma_mobius, r1).exit_point.real();
    mob[i] = (c1 - alpha_mobius) / (c1 - std::conj(alpha_mobius));
    pow[i] = principal_power(CPoint(sample_halfplane_exit(gamma_power, r2).exit_point.real(), 0.0), alpha_power);
    const double c3 = sample_halfplane_exit(CPoint(0, 1), r3).exit_point.real();
    chf[i] = std::polar(1.0, scale * std::log(std::abs(c3)));
  });

  CauchyReport rep;
  rep.n = n;
  rep.checks.push_back(
      summarize("mobius", (gamma_mobius - alpha_mobius) / (gamma_mobius - std::conj(alpha_mobius)), mob));
  rep.checks.push_back(summarize("power", principal_power(gamma_power, alpha_power), pow));
  rep.checks.push_back(summarize("cosh", CPoint(1 / std::cosh(lambda), 0), chf));
  return rep;
}

IncreasingReport verify_increasing_domains(const std::vector<Domain>& domains, CPoint start, double p, long n,
                                           const SimOptions& opt, const std::vector<double>& thresholds,
                                           double box) {
  if (domains.empty()) throw BadParameters("need at least one domain");
  if (!thresholds.empty() && thresholds.size() != domains.size())
    throw BadParameters("one threshold per domain is required");
  constexpr int kGrid = 201;
  for (std::size_t k = 0; k + 1 < domains.size(); ++k) {
    for (int i = 0; i < kGrid; ++i) {
      for (int j = 0; j < kGrid; ++j) {
        const CPoint z(-box + 2 * box * i / (kGrid - 1), -box + 2 * box * j / (kGrid - 1));
        // Grid points on the larger domain's boundary are excluded by definition.
        if (contains(domains[k], z) && !contains(domains[k + 1], z) &&
            boundary_distance(domains[k + 1], z) > 1e-9)
          throw NestingViolation("domain " + std::to_string(k) + " is not contained in domain " +
                                 std::to_string(k + 1));
      }
    }
  }

  IncreasingReport rep;
  rep.thresholds = thresholds;
  for (std::size_t k = 0; k < domains.size(); ++k) {
    SimOptions o = opt;
    o.first_stream = opt.first_stream + k * static_cast<std::uint64_t>(n);
    rep.estimates.push_back(estimate_moment(domains[k], start, p, n, o));
  }
  for (std::size_t k = 0; k + 1 < rep.estimates.size(); ++k) {
    const Estimate& lo = rep.estimates[k].estimate;
    const Estimate& hi = rep.estimates[k + 1].estimate;
    const double joint = 3 * std::hypot(lo.std_err, hi.std_err);
    if (hi.value - lo.value < -joint) rep.nondecreasing = false;
    if (!(hi.value - lo.value > joint)) rep.strictly_increasing = false;
  }
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    if (!(rep.estimates[k].estimate.value > thresholds[k])) rep.exceeds_thresholds = false;
  return rep;
}

}  // namespace bmx
