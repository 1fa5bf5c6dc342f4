#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmx/errors.hpp"
#include "bmx/maps.hpp"

namespace bmx {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string cnum(CPoint z) { return "(" + num(z.real()) + ", " + num(z.imag()) + ")"; }

bool on_negative_axis(CPoint z) { return z.imag() == 0 && z.real() < 0; }

// exp(beta Log w) refusing the cut and the branch point.
CPoint branch_pow(CPoint w, double beta) {
  if (w == 0.0) throw AtPole("branch point at 0");
  if (on_negative_axis(w)) throw OnBranchCut("argument on the negative real axis");
  return std::exp(beta * std::log(w));
}

struct Value {
  CPoint f;
  CPoint df;
};

Value eval_both(const AnalyticMap& m, CPoint z);

struct EvalVisitor {
  CPoint z;

  Value operator()(const mapkind::Linear& k) const { return {k.c * z, k.c}; }
  Value operator()(const mapkind::PowerInt& k) const {
    if (k.n < 0 && z == 0.0) throw AtPole("negative power at 0");
    const CPoint zn1 = std::pow(z, k.n - 1);
    return {k.xi * zn1 * z, k.xi * static_cast<double>(k.n) * zn1};
  }
  Value operator()(const mapkind::PowerBranch& k) const {
    const CPoint f = branch_pow(z, k.alpha);
    return {f, k.alpha * f / z};
  }
  Value operator()(const mapkind::Mobius& k) const {
    const CPoint den = z - std::conj(k.alpha);
    if (den == 0.0) throw AtPole("Mobius pole at conj(alpha)");
    // d/dz (z - a)/(z - b) = (a - b)/(z - b)^2
    return {(z - k.alpha) / den, (k.alpha - std::conj(k.alpha)) / (den * den)};
  }
  Value operator()(const mapkind::KoebeParabola&) const {
    const CPoint u = 1.0 + z;
    if (u == 0.0) throw AtPole("pole at -1");
    const CPoint u2 = u * u;
    return {4.0 / u2, -8.0 / (u2 * u)};
  }
  Value operator()(const mapkind::WedgePower& k) const {
    const CPoint u = 1.0 + z;
    if (u == 0.0) throw AtPole("pole at -1");
    const CPoint w = (1.0 - z) / u;
    const double beta = k.theta / kPi;
    const CPoint f = branch_pow(w, beta);
    const CPoint dw = -2.0 / (u * u);
    return {f, beta * f / w * dw};
  }
  Value operator()(const mapkind::Exp&) const {
    const CPoint e = std::exp(z);
    return {e, e};
  }
  Value operator()(const mapkind::Compose& k) const {
    Value acc{z, 1.0};
    for (const auto& part : k.parts) {
      const Value v = eval_both(part, acc.f);
      acc = {v.f, v.df * acc.df};
    }
    return acc;
  }
};

Value eval_both(const AnalyticMap& m, CPoint z) { return std::visit(EvalVisitor{z}, m.kind()); }

// ---- adaptive Gauss-Kronrod (7/15) ----------------------------------------

struct Panel {
  double integral;
  double error;
};

template <class F>
Panel gk15(const F& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double f0 = f(c);
  double kron = wk[0] * f0, gauss = wg[0] * f0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double s = f(c - h * x[i]) + f(c + h * x[i]);
    kron += wk[i] * s;
    // Gauss nodes are the even-indexed Kronrod nodes.
    if (i % 2 == 0) gauss += wg[i / 2] * s;
  }
  return {kron * h, std::abs((kron - gauss) * h)};
}

template <class F>
double adaptive(const F& f, double a, double b, double abs_tol, int depth, int max_depth) {
  const Panel p = gk15(f, a, b);
  const double tol = std::max(abs_tol, 64 * std::numeric_limits<double>::epsilon() * std::abs(p.integral));
  if (p.error <= tol) return p.integral;
  if (depth >= max_depth || !std::isfinite(p.integral))
    throw QuadratureFailure("adaptive refinement exceeded depth cap");
  const double m = 0.5 * (a + b);
  return adaptive(f, a, m, abs_tol, depth + 1, max_depth) + adaptive(f, m, b, abs_tol, depth + 1, max_depth);
}

}  // namespace

AnalyticMap AnalyticMap::linear(CPoint c) {
  if (c == 0.0) throw BadParameters("linear map needs c != 0");
  return AnalyticMap(mapkind::Linear{c});
}

AnalyticMap AnalyticMap::power_int(int n, CPoint xi) {
  if (n == 0 || xi == 0.0) throw BadParameters("power map needs n != 0 and xi != 0");
  return AnalyticMap(mapkind::PowerInt{n, xi});
}

AnalyticMap AnalyticMap::power_branch(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw BadParameters("branch power needs 0 < alpha < 1");
  return AnalyticMap(mapkind::PowerBranch{alpha});
}

AnalyticMap AnalyticMap::mobius(CPoint alpha) {
  if (!(alpha.imag() > 0)) throw BadParameters("Mobius map needs Im alpha > 0");
  return AnalyticMap(mapkind::Mobius{alpha});
}

AnalyticMap AnalyticMap::koebe_parabola() { return AnalyticMap(mapkind::KoebeParabola{}); }

AnalyticMap AnalyticMap::wedge_power(double theta) {
  if (!(theta > 0 && theta <= 2 * kPi)) throw BadParameters("wedge aperture must lie in (0, 2pi]");
  return AnalyticMap(mapkind::WedgePower{theta});
}

AnalyticMap AnalyticMap::exp() { return AnalyticMap(mapkind::Exp{}); }

AnalyticMap AnalyticMap::compose(std::vector<AnalyticMap> parts) {
  if (parts.empty()) throw BadParameters("composition needs at least one map");
  return AnalyticMap(mapkind::Compose{std::move(parts)});
}

std::string AnalyticMap::describe() const {
  return std::visit(
      Overloaded{
          [](const mapkind::Linear& k) { return "linear" + cnum(k.c); },
          [](const mapkind::PowerInt& k) {
            return "power_int(" + std::to_string(k.n) + ", " + num(k.xi.real()) + ", " + num(k.xi.imag()) + ")";
          },
          [](const mapkind::PowerBranch& k) { return "power_branch(" + num(k.alpha) + ")"; },
          [](const mapkind::Mobius& k) { return "mobius" + cnum(k.alpha); },
          [](const mapkind::KoebeParabola&) { return std::string("koebe_parabola"); },
          [](const mapkind::WedgePower& k) { return "wedge_power(" + num(k.theta) + ")"; },
          [](const mapkind::Exp&) { return std::string("exp"); },
          [](const mapkind::Compose& k) {
            std::string out = "compose(";
            for (std::size_t i = 0; i < k.parts.size(); ++i) out += (i ? ", " : "") + k.parts[i].describe();
            return out + ")";
          },
      },
      kind_);
}

CPoint eval(const AnalyticMap& m, CPoint z) { return eval_both(m, z).f; }

CPoint deriv(const AnalyticMap& m, CPoint z) { return eval_both(m, z).df; }

CPoint principal_power(CPoint z, CPoint alpha) {
  if (z == 0.0) throw AtPole("branch point at 0");
  // std::log of a negative real with +0 imaginary part already has Arg = pi;
  // force it for -0 too so the branch is (-pi, pi].
  CPoint lz = std::log(z);
  if (z.imag() == 0 && z.real() < 0) lz = {std::log(-z.real()), kPi};
  return std::exp(alpha * lz);
}

CPoint exp_transfer(CPoint z) { return std::exp(z); }

CPoint log_transfer(CPoint w) {
  if (w == 0.0) throw AtPole("logarithm at 0");
  if (w.imag() == 0 && w.real() < 0) return {std::log(-w.real()), kPi};
  return std::log(w);
}

std::vector<double> default_r_grid() {
  std::vector<double> r;
  for (int k = 1; k <= 20; ++k) r.push_back(1 - std::ldexp(1.0, -k));
  return r;
}

double circle_mean_norm(const AnalyticMap& m, double p, double r) {
  if (!(p > 0)) throw BadParameters("Hardy exponent must be positive");
  if (!(r >= 0 && r < 1)) throw BadParameters("radius must lie in [0, 1)");
  auto integrand = [&](double t) { return std::pow(std::abs(eval(m, std::polar(r, t))), p); };
  // Split at pi/2 multiples so that boundary singularities on the axes sit at
  // panel endpoints instead of at interior Kronrod nodes.
  double total = 0;
  for (int q = 0; q < 4; ++q)
    total += adaptive(integrand, q * kPi / 2, (q + 1) * kPi / 2, 1e-10, 0, 60);
  return std::pow(total / (2 * kPi), 1 / p);
}

HardyNormProfile hardy_norm_profile(const AnalyticMap& m, double p, const std::vector<double>& r_grid) {
  if (r_grid.empty()) throw BadParameters("empty radius grid");
  for (std::size_t i = 1; i < r_grid.size(); ++i)
    if (!(r_grid[i] > r_grid[i - 1])) throw BadParameters("radius grid must increase");

  HardyNormProfile prof;
  prof.p = p;
  prof.r_grid = r_grid;
  for (double r : r_grid) prof.values.push_back(circle_mean_norm(m, p, r));

  const auto& v = prof.values;
  const bool blew_up = std::any_of(v.begin(), v.end(), [](double x) { return !(x <= 1e8); });
  bool stalled = false;
  if (v.size() >= 6) {
    std::vector<double> ratios;
    for (std::size_t i = v.size() / 2 + 1; i < v.size(); ++i) {
      const double prev = v[i - 1] - v[i - 2], cur = v[i] - v[i - 1];
      ratios.push_back(prev > 1e-12 * std::abs(v[i]) ? cur / prev : 0.0);
    }
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    stalled = ratios[ratios.size() / 2] >= 0.98;
  }
  prof.divergent = blew_up || stalled;
  prof.sup = prof.divergent ? std::numeric_limits<double>::infinity() : v.back();
  return prof;
}

}  // namespace bmx
