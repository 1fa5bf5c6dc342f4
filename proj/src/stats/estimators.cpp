#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bmx/errors.hpp"
#include "bmx/parallel.hpp"
#include "bmx/stats.hpp"

namespace bmx {

Estimate make_estimate(double value, double std_err, long n) {
  return {value, std_err, n, value - 1.96 * std_err, value + 1.96 * std_err};
}

const char* to_string(Kernel k) { return k == Kernel::WoS ? "wos" : "em"; }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Finite: return "finite";
    case Verdict::Infinite: return "infinite";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

long ExitBatch::excluded() const {
  return std::count_if(paths.begin(), paths.end(), [](const PathOutcome& p) { return !p.record; });
}

long ExitBatch::valid() const { return static_cast<long>(paths.size()) - excluded(); }

ExitBatch simulate_exits(const Domain& d, CPoint start, long n, const SimOptions& opt) {
  if (n < 0) throw BadParameters("path count must be non-negative");
  if (!contains(d, start)) throw BadStart("start point is not inside " + d.describe());
  ExitBatch batch;
  batch.paths.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), opt.workers, [&](std::size_t i) {
    const std::uint64_t id = opt.first_stream + i;
    RngStream rng(opt.seed, id);
    PathOutcome& out = batch.paths[i];
    out.path_id = id;
    try {
      out.record = opt.kernel == Kernel::WoS ? wos_exit(d, start, opt.wos, rng) : em_exit(d, start, opt.em, rng);
    } catch (const MaxStepsExceeded&) {
      out.record.reset();
    }
  });
  return batch;
}

ExitBatch merge(const ExitBatch& a, const ExitBatch& b) {
  ExitBatch out;
  out.paths = a.paths;
  out.paths.insert(out.paths.end(), b.paths.begin(), b.paths.end());
  std::stable_sort(out.paths.begin(), out.paths.end(),
                   [](const PathOutcome& x, const PathOutcome& y) { return x.path_id < y.path_id; });
  return out;
}

ExitPredicate label_is(Label label) {
  return [label](const ExitRecord& r) { return r.label == label; };
}

HarmonicMeasure harmonic_measure_from(const ExitBatch& batch, const ExitPredicate& region) {
  HarmonicMeasure hm;
  for (const auto& p : batch.paths) {
    if (!p.record) {
      ++hm.excluded;
      continue;
    }
    ++hm.valid;
    if (region(*p.record)) ++hm.hits;
  }
  if (hm.valid == 0) throw BadParameters("no valid paths to estimate a harmonic measure from");
  const double n = static_cast<double>(hm.valid);
  const double phat = hm.hits / n;
  hm.estimate = make_estimate(phat, std::sqrt(phat * (1 - phat) / n), hm.valid);
  // Wilson score interval at 95%.
  const double z = 1.96, z2 = z * z;
  const double centre = (phat + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  hm.wilson_lo = std::max(0.0, centre - half);
  hm.wilson_hi = std::min(1.0, centre + half);
  return hm;
}

HarmonicMeasure estimate_harmonic_measure(const Domain& d, CPoint start, const ExitPredicate& region, long n,
                                          const SimOptions& opt) {
  if (n < 100) throw BadParameters("harmonic measure needs at least 100 paths");
  return harmonic_measure_from(simulate_exits(d, start, n, opt), region);
}

Estimate estimate_tail_index(std::vector<double> samples, double top_fraction) {
  if (!(top_fraction > 0 && top_fraction < 1)) throw BadParameters("top fraction must lie in (0, 1)");
  const std::size_t k = static_cast<std::size_t>(std::floor(top_fraction * samples.size()));
  if (k < 500 || k >= samples.size()) throw TooFewTailSamples("need at least 500 samples above the cutoff");
  std::nth_element(samples.begin(), samples.begin() + k, samples.end(), std::greater<>());
  const double cutoff = samples[k];
  if (!(cutoff > 0)) throw TooFewTailSamples("tail cutoff is not positive");
  std::sort(samples.begin(), samples.begin() + k, std::greater<>());
  double sum = 0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(samples[i] / cutoff);
  const double alpha = k / sum;
  return make_estimate(alpha, alpha / std::sqrt(static_cast<double>(k)), static_cast<long>(k));
}

MomentEstimate moment_from_times(const std::vector<double>& times, double p, long excluded) {
  if (!(p > 0)) throw BadParameters("moment order must be positive");
  if (times.size() < static_cast<std::size_t>(kBatchCount))
    throw BadParameters("need at least one time per batch");
  MomentEstimate m;
  m.p = p;
  m.excluded = excluded;
  const std::size_t n = times.size();
  std::vector<double> powered(n);
  std::transform(times.begin(), times.end(), powered.begin(), [p](double t) { return std::pow(t, p); });

  // Contiguous batches in path order; batch sizes differ by at most one.
  std::vector<double> batch_means(kBatchCount);
  double total = 0;
  for (int b = 0; b < kBatchCount; ++b) {
    const std::size_t lo = n * b / kBatchCount, hi = n * (b + 1) / kBatchCount;
    const double s = std::accumulate(powered.begin() + lo, powered.begin() + hi, 0.0);
    total += s;
    batch_means[b] = s / static_cast<double>(hi - lo);
  }
  const double mean = total / static_cast<double>(n);
  double ss = 0;
  for (double bm : batch_means) ss += (bm - mean) * (bm - mean);
  const double se = std::sqrt(ss / (kBatchCount - 1) / kBatchCount);
  m.estimate = make_estimate(mean, se, static_cast<long>(n));

  try {
    m.tail_index = estimate_tail_index(times);
  } catch (const TooFewTailSamples&) {
    m.tail_index.reset();
  }
  if (m.tail_index) {
    const double a = m.tail_index->value, s = m.tail_index->std_err;
    if (a - 2 * s > p) m.verdict = Verdict::Finite;
    else if (a + 2 * s < p) m.verdict = Verdict::Infinite;
  }
  return m;
}

std::vector<double> exit_times(const ExitBatch& batch) {
  std::vector<double> times;
  times.reserve(batch.paths.size());
  for (const auto& p : batch.paths)
    if (p.record && p.record->exit_time) times.push_back(*p.record->exit_time);
  return times;
}

MomentEstimate estimate_moment(const Domain& d, CPoint start, double p, long n, const SimOptions& opt) {
  SimOptions o = opt;
  o.wos.with_time = true;
  const ExitBatch batch = simulate_exits(d, start, n, o);
  return moment_from_times(exit_times(batch), p, batch.excluded());
}

}  // namespace bmx
