#pragma once

// Closed-form analytic maps with exact derivatives, plus the Hardy-norm
// profile N_{p,r}(f) and the exponential transfer between Delta-starlike and
// starlike domains.

#include <string>
#include <variant>
#include <vector>

#include "bmx/geometry.hpp"

namespace bmx {

class AnalyticMap;

namespace mapkind {

struct Linear {
  CPoint c;
};
// xi * z^n; negative n gives xi / z^|n|.
struct PowerInt {
  int n;
  CPoint xi;
};
// exp(alpha Log z) with Arg in (-pi, pi]; 0 < alpha < 1.
struct PowerBranch {
  double alpha;
};
// (z - alpha) / (z - conj(alpha)), Im alpha > 0: upper half-plane onto the unit disk.
struct Mobius {
  CPoint alpha;
};
// 4 / (1 + z)^2: unit disk onto the complement of the parabola x = 1 - y^2/4.
struct KoebeParabola {};
// ((1 - z) / (1 + z))^(theta/pi): unit disk onto the wedge of aperture theta.
struct WedgePower {
  double theta;
};
struct Exp {};
// Applied left to right: parts[0] first.
struct Compose {
  std::vector<AnalyticMap> parts;
};

}  // namespace mapkind

class AnalyticMap {
 public:
  using Kind = std::variant<mapkind::Linear, mapkind::PowerInt, mapkind::PowerBranch, mapkind::Mobius,
                            mapkind::KoebeParabola, mapkind::WedgePower, mapkind::Exp, mapkind::Compose>;

  static AnalyticMap linear(CPoint c);
  static AnalyticMap power_int(int n, CPoint xi = 1.0);
  static AnalyticMap power_branch(double alpha);
  static AnalyticMap mobius(CPoint alpha);
  static AnalyticMap koebe_parabola();
  static AnalyticMap wedge_power(double theta);
  static AnalyticMap exp();
  static AnalyticMap compose(std::vector<AnalyticMap> parts);

  const Kind& kind() const { return kind_; }
  std::string describe() const;

 private:
  explicit AnalyticMap(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

// Throws OnBranchCut on a branch cut and AtPole at a pole or branch point.
CPoint eval(const AnalyticMap& m, CPoint z);
CPoint deriv(const AnalyticMap& m, CPoint z);

// exp(alpha Log z) including the negative real axis, where Arg z = pi. This is
// the boundary value from the upper half-plane, used for real arguments such
// as Cauchy draws; AnalyticMap::power_branch refuses those points instead.
CPoint principal_power(CPoint z, CPoint alpha);

CPoint exp_transfer(CPoint z);
// Principal logarithm; throws AtPole at 0.
CPoint log_transfer(CPoint w);

struct HardyNormProfile {
  double p = 0;
  std::vector<double> r_grid;
  std::vector<double> values;  // N_{p,r}(f) for each radius
  bool divergent = false;
  double sup = 0;  // last value when finite
};

// Radii 1 - 2^-k, k = 1..20.
std::vector<double> default_r_grid();

// ((1/2pi) * integral over [0, 2pi] of |f(r e^{it})|^p dt)^(1/p), by adaptive
// Gauss-Kronrod bisection. Throws QuadratureFailure past the depth cap.
double circle_mean_norm(const AnalyticMap& m, double p, double r);

// Divergence is declared when a value exceeds 1e8, or when the increments
// along the grid stop shrinking (median ratio of successive increments over
// the second half of the grid at least 0.98).
HardyNormProfile hardy_norm_profile(const AnalyticMap& m, double p,
                                    const std::vector<double>& r_grid = default_r_grid());

}  // namespace bmx
