#pragma once

// Brownian exit kernels: exact half-plane and disk exits, walk-on-spheres,
// adaptive Euler-Maruyama paths, the reflection coupling across a vertical
// line, and pushforward of paths through an analytic map.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bmx/geometry.hpp"
#include "bmx/maps.hpp"
#include "bmx/rng.hpp"

namespace bmx {

enum class Method { ExactHalfPlane, ExactDisk, WoS, EM };

const char* to_string(Method m);

struct ExitRecord {
  CPoint exit_point;
  std::optional<double> exit_time;  // empty when untracked
  Label label = Label::Generic;
  long steps = 0;
  Method method = Method::EM;
  double eps = 0;  // WoS shell width, 0 otherwise
};

struct PathSample {
  std::vector<double> times;
  std::vector<CPoint> points;
  ExitRecord terminal;
};

// Exit law of {Im z > 0} from a + bi: (a + b C, 0) with C standard Cauchy.
ExitRecord sample_halfplane_exit(CPoint start, RngStream& rng);

// Exit of the disk from its center. The angle is uniform; with_time adds an
// independent draw of radius^2 * T1, T1 the unit-disk exit time.
ExitRecord sample_disk_exit(CPoint center, double radius, RngStream& rng, bool with_time);

// Tabulated inverse CDF of the exit time of the unit disk from its center.
//
// Survival S(t) = sum_k c_k exp(-j_k^2 t / 2) over the zeros j_k of J0 with
// c_k = 2 / (j_k J1(j_k)), 50 terms, for t >= 0.05. Below that the series
// loses all relative accuracy in 1 - S, so a Lugannani-Rice saddlepoint
// approximation of the CDF is used, rescaled to agree with the series at
// t = 0.05. Beyond the last knot the one-term asymptote is inverted exactly.
class DiskExitTimeTable {
 public:
  static const DiskExitTimeTable& instance();

  double cdf(double t) const;       // from the table
  double quantile(double u) const;  // u in (0, 1)
  double sample(RngStream& rng) const { return quantile(rng.uniform()); }
  std::uint64_t checksum() const { return checksum_; }
  std::size_t size() const { return t_.size(); }

  // Direct evaluation, bypassing the table.
  static double series_survival(double t);
  static double saddlepoint_cdf(double t);

 private:
  DiskExitTimeTable();
  double hermite(std::size_t i, double t) const;

  std::vector<double> t_, F_, slope_;
  double c1_ = 0, j1_ = 0;
  std::uint64_t checksum_ = 0;
};

struct WosConfig {
  std::optional<double> eps;    // default 1e-6 * (1 + |start|)
  std::optional<double> r_cap;  // default 64 * (1 + |start|)
  long max_steps = 1'000'000;
  bool with_time = false;
};

// Throws BadStart if start is not in d and MaxStepsExceeded past the cap.
ExitRecord wos_exit(const Domain& d, CPoint start, const WosConfig& cfg, RngStream& rng);

struct EmConfig {
  double dt_max = std::numeric_limits<double>::infinity();
  double c = 0.1;
  double boundary_tol = 1e-9;
  long max_steps = 1'000'000;
};

ExitRecord em_exit(const Domain& d, CPoint start, const EmConfig& cfg, RngStream& rng);
// As em_exit but keeps every visited point.
PathSample em_path(const Domain& d, CPoint start, const EmConfig& cfg, RngStream& rng);

// Maps every point through m and replaces times by the Levy clock
// sigma(t) = integral of |m'(B_s)|^2 ds (trapezoid rule). The terminal record
// is relabeled in image_domain when given.
PathSample pushforward(const AnalyticMap& m, const PathSample& path, const Domain* image_domain = nullptr);

struct CoupledExit {
  ExitRecord b;      // the simulated path
  ExitRecord b_hat;  // equal to b before tau0, mirrored after
  bool hit_line = false;
  double tau0 = std::numeric_limits<double>::infinity();
};

// B runs in d; B_hat follows B until B first meets {Re = split_re} inside d,
// then moves as the mirror image of B across that line. Both share every
// Gaussian increment.
CoupledExit reflected_coupling(const Domain& d, CPoint start, double split_re, const EmConfig& cfg,
                               RngStream& rng);

}  // namespace bmx
