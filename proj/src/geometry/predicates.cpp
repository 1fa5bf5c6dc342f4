#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bmx/errors.hpp"
#include "bmx/geometry.hpp"
#include "bmx/rng.hpp"

namespace bmx {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * std::numbers::pi;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

CPoint project_to_segment(const Segment& s, CPoint z) {
  const CPoint d = s.q - s.p;
  const double len2 = std::norm(d);
  if (len2 == 0) return s.p;
  const double t = std::clamp(((z - s.p) * std::conj(d)).real() / len2, 0.0, 1.0);
  return s.p + t * d;
}

// Even-odd rule for a closed polygon given by its vertex list.
bool inside_polygon(const std::vector<CPoint>& poly, CPoint z) {
  bool in = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const CPoint a = poly[i], b = poly[j];
    if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
      const double x = a.real() + (z.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
      if (z.real() < x) in = !in;
    }
  }
  return in;
}

// ---- Archimedean spiral t e^{it} -------------------------------------------

double spiral_sq_dist(CPoint z, double t) { return std::norm(z - std::polar(t, t)); }

// Derivatives of g(t) = |z - t e^{it}|^2 in polar coordinates of z.
double spiral_g1(double rho, double phi, double t) {
  const double u = t - phi;
  return 2 * t - 2 * rho * std::cos(u) + 2 * t * rho * std::sin(u);
}
double spiral_g2(double rho, double phi, double t) {
  const double u = t - phi;
  return 2 + 4 * rho * std::sin(u) + 2 * t * rho * std::cos(u);
}

double golden_min(CPoint z, double lo, double hi, double tol, double* argmin) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = spiral_sq_dist(z, x1), f2 = spiral_sq_dist(z, x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = spiral_sq_dist(z, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = spiral_sq_dist(z, x2);
    }
  }
  const double t = 0.5 * (lo + hi);
  if (argmin) *argmin = t;
  return spiral_sq_dist(z, t);
}

struct CurveHit {
  double t;
  double sq_dist;
};

CurveHit spiral_nearest_scan(CPoint z) {
  const double rho = std::abs(z);
  const double lo = std::max(0.0, rho - kTwoPi);
  const double hi = rho + kTwoPi;
  const double step = 0.01;
  const int n = static_cast<int>(std::ceil((hi - lo) / step));
  int best_i = 0;
  double best = spiral_sq_dist(z, lo);
  for (int i = 1; i <= n; ++i) {
    const double f = spiral_sq_dist(z, std::min(hi, lo + i * step));
    if (f < best) {
      best = f;
      best_i = i;
    }
  }
  const double a = std::max(lo, lo + (best_i - 1) * step);
  const double b = std::min(hi, lo + (best_i + 1) * step);
  double t = 0;
  double f = golden_min(z, a, b, 1e-10, &t);
  // The curve starts at the origin; its endpoint is a candidate too.
  if (std::norm(z) < f) return {0.0, std::norm(z)};
  return {t, f};
}

// Newton's method on g'(t) = 0 safeguarded by bisection inside [lo, hi],
// where g'(lo) < 0 < g'(hi).
double spiral_root(double rho, double phi, double lo, double hi) {
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double f = spiral_g1(rho, phi, t);
    if (f < 0) lo = t;
    else hi = t;
    const double fp = spiral_g2(rho, phi, t);
    double next = (fp > 0) ? t - f / fp : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-14 * std::max(1.0, t) || hi - lo <= 1e-14 * std::max(1.0, t)) return next;
    t = next;
  }
  return t;
}

// Coarse scan that refines every discrete local minimum; minima of the
// squared distance are never closer than a few scan steps apart.
CurveHit spiral_nearest_coarse(CPoint z) {
  const double rho = std::abs(z);
  const double lo = std::max(0.0, rho - kTwoPi);
  const double hi = rho + kTwoPi;
  const double step = 0.1;
  const int n = static_cast<int>(std::ceil((hi - lo) / step));
  auto at = [&](int i) { return std::min(hi, lo + i * step); };
  std::vector<double> f(n + 1);
  for (int i = 0; i <= n; ++i) f[i] = spiral_sq_dist(z, at(i));
  CurveHit best{0.0, std::norm(z)};
  for (int i = 0; i <= n; ++i) {
    if ((i > 0 && f[i] > f[i - 1]) || (i < n && f[i] > f[i + 1])) continue;
    double t = 0;
    const double v = golden_min(z, at(std::max(0, i - 1)), at(std::min(n, i + 1)), 1e-10, &t);
    if (v < best.sq_dist) best = {t, v};
  }
  return best;
}

// Nearest point of the spiral arm t e^{it}, t >= 0. Far from the origin the
// minimizer sits within a quarter turn of a crossing of the ray through z, so
// each candidate crossing gets its own bracketed Newton solve.
CurveHit spiral_nearest(CPoint z) {
  const double rho = std::abs(z);
  if (rho < 4 * kPi) return spiral_nearest_coarse(z);
  double phi = std::atan2(z.imag(), z.real());
  if (phi < 0) phi += kTwoPi;
  CurveHit best{0.0, rho * rho};
  const double kmin = std::ceil((rho - 1.5 * kPi - phi) / kTwoPi);
  const double kmax = std::floor((rho + 1.5 * kPi - phi) / kTwoPi);
  for (double k = kmin; k <= kmax; k += 1) {
    const double tk = phi + kTwoPi * k;
    if (tk - kPi / 2 <= 2) continue;
    const double t = spiral_root(rho, phi, tk - kPi / 2, tk + kPi / 2);
    const double f = spiral_sq_dist(z, t);
    if (f < best.sq_dist) best = {t, f};
  }
  return best;
}

// Position of z relative to the two arms: 0 on gamma1, pi on gamma2.
double spiral_phase(CPoint z) {
  double phi = std::atan2(z.imag(), z.real());
  if (phi < 0) phi += kTwoPi;
  double s = std::fmod(std::abs(z) - phi, kTwoPi);
  if (s < 0) s += kTwoPi;
  return s;
}

// ---- parabola x = 1 - y^2/4, parametrized as (1 - t^2, 2t) ----------------

CPoint parabola_nearest(CPoint z) {
  const double x = z.real(), y = z.imag();
  // d/dt [(x - 1 + t^2)^2 + (y - 2t)^2] = 4 [t^3 + (x + 1) t - y], so the
  // stationary points are the real roots of the depressed cubic t^3 + P t + Q.
  const double P = x + 1, Q = -y;
  double roots[3];
  int nroots = 0;
  const double disc = Q * Q / 4 + P * P * P / 27;
  if (disc >= 0) {
    const double s = std::sqrt(disc);
    const double A = -Q / 2 + (Q <= 0 ? s : -s);
    const double u = std::cbrt(A);
    const double v = (u != 0) ? -P / (3 * u) : 0.0;
    roots[nroots++] = u + v;
  } else {
    const double m = 2 * std::sqrt(-P / 3);
    const double th = std::acos(std::clamp(3 * Q / (P * m), -1.0, 1.0)) / 3;
    for (int k = 0; k < 3; ++k) roots[nroots++] = m * std::cos(th - kTwoPi * k / 3);
  }
  CPoint best{};
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nroots; ++i) {
    double t = roots[i];
    for (int it = 0; it < 2; ++it) {
      const double h = t * t * t + P * t + Q, hp = 3 * t * t + P;
      if (hp != 0) t -= h / hp;
    }
    const CPoint c{1 - t * t, 2 * t};
    const double dd = std::norm(z - c);
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  return best;
}

CPoint nearest_impl(const Domain& d, CPoint z);

struct NearestVisitor {
  CPoint z;

  CPoint operator()(const shape::Rectangle& s) const {
    const double x = z.real(), y = z.imag();
    if (std::abs(x) < s.a && std::abs(y) < s.b) {
      const double dr = s.a - x, db = y + s.b, dl = x + s.a, dt = s.b - y;
      const double m = std::min({dr, db, dl, dt});
      if (dr == m) return {s.a, y};
      if (db == m) return {x, -s.b};
      if (dl == m) return {-s.a, y};
      return {x, s.b};
    }
    return {std::clamp(x, -s.a, s.a), std::clamp(y, -s.b, s.b)};
  }
  CPoint operator()(const shape::Annulus& s) const {
    const double rho = std::abs(z);
    const CPoint u = rho > 0 ? z / rho : CPoint{1, 0};
    return std::abs(rho - s.r) <= std::abs(rho - s.R) ? s.r * u : s.R * u;
  }
  CPoint operator()(const shape::Wedge& s) const {
    const CPoint up = std::polar(1.0, s.theta / 2), lo = std::conj(up);
    const double pu = std::max(0.0, (z * std::conj(up)).real());
    const double pl = std::max(0.0, (z * std::conj(lo)).real());
    const CPoint cu = pu * up, cl = pl * lo;
    return std::norm(z - cu) <= std::norm(z - cl) ? cu : cl;
  }
  CPoint operator()(const shape::HalfPlane& s) const {
    switch (s.normal) {
      case shape::Axis::Up:
      case shape::Axis::Down: return {z.real(), 0.0};
      case shape::Axis::Left:
      case shape::Axis::Right: return {0.0, z.imag()};
    }
    return {};
  }
  CPoint operator()(const shape::Strip& s) const {
    return std::abs(z.imag() - s.lo) <= std::abs(z.imag() - s.hi) ? CPoint{z.real(), s.lo}
                                                                  : CPoint{z.real(), s.hi};
  }
  CPoint operator()(const shape::HalfStripComplement& s) const {
    const double x = z.real(), y = z.imag();
    const CPoint top{std::min(x, s.x0), s.a};
    const CPoint bottom{std::min(x, s.x0), -s.a};
    const CPoint end{s.x0, std::clamp(y, -s.a, s.a)};
    // Inside the removed half-strip the nearest point may be on any piece.
    CPoint best = top;
    for (CPoint c : {bottom, end})
      if (std::norm(z - c) < std::norm(z - best)) best = c;
    return best;
  }
  CPoint operator()(const shape::ParabolaComplement&) const { return parabola_nearest(z); }
  CPoint operator()(const shape::KoebeSlit&) const {
    return z.real() <= -0.25 ? CPoint{z.real(), 0.0} : CPoint{-0.25, 0.0};
  }
  CPoint operator()(const shape::Comb& s) const {
    CPoint best = project_to_segment(s.boundary.front(), z);
    double bd = std::norm(z - best);
    for (const auto& seg : s.boundary) {
      const CPoint c = project_to_segment(seg, z);
      const double dd = std::norm(z - c);
      if (dd < bd) {
        bd = dd;
        best = c;
      }
    }
    return best;
  }
  CPoint operator()(const shape::SpiralPair&) const {
    const CurveHit h1 = spiral_nearest(z);
    const CurveHit h2 = spiral_nearest(-z);
    if (h1.sq_dist <= h2.sq_dist) return std::polar(h1.t, h1.t);
    return -std::polar(h2.t, h2.t);
  }
  CPoint operator()(const shape::Disk& s) const {
    const CPoint v = z - s.center;
    const double r = std::abs(v);
    return s.center + (r > 0 ? s.radius * v / r : CPoint{s.radius, 0});
  }
  CPoint operator()(const shape::ExpPreimage& s) const {
    const CPoint w = std::exp(z);
    const CPoint ws = nearest_impl(*s.base, w);
    return z + std::log(ws / w);
  }
};

CPoint nearest_impl(const Domain& d, CPoint z) { return std::visit(NearestVisitor{z}, d.shape()); }

double spiral_distance(CPoint z) {
  return std::sqrt(std::min(spiral_nearest(z).sq_dist, spiral_nearest(-z).sq_dist));
}

}  // namespace

bool contains(const Domain& d, CPoint z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  const double x = z.real(), y = z.imag();
  return std::visit(
      Overloaded{
          [&](const shape::Rectangle& s) { return std::abs(x) < s.a && std::abs(y) < s.b; },
          [&](const shape::Annulus& s) {
            const double r = std::abs(z);
            return r > s.r && r < s.R;
          },
          [&](const shape::Wedge& s) {
            if (x == 0 && y == 0) return false;
            return std::abs(std::atan2(y, x)) < s.theta / 2;
          },
          [&](const shape::HalfPlane& s) {
            switch (s.normal) {
              case shape::Axis::Up: return y > 0;
              case shape::Axis::Down: return y < 0;
              case shape::Axis::Left: return x < 0;
              case shape::Axis::Right: return x > 0;
            }
            return false;
          },
          [&](const shape::Strip& s) { return y > s.lo && y < s.hi; },
          [&](const shape::HalfStripComplement& s) { return !(x <= s.x0 && std::abs(y) <= s.a); },
          [&](const shape::ParabolaComplement&) { return x > 1 - y * y / 4; },
          [&](const shape::KoebeSlit&) { return !(y == 0 && x <= -0.25); },
          [&](const shape::Comb& s) {
            for (const auto& seg : s.boundary)
              if (project_to_segment(seg, z) == z) return false;
            const bool in_poly = inside_polygon(s.polygon, z);
            const shape::CombSide poly_side = (s.n % 2 == 1) ? shape::CombSide::V : shape::CombSide::W;
            return in_poly == (s.side == poly_side);
          },
          [&](const shape::SpiralPair& s) {
            if (x == 0 && y == 0) return false;
            const double phase = spiral_phase(z);
            if (phase == 0 || phase == kPi) return false;
            const bool in_u = phase < kPi;
            return (s.side == shape::SpiralSide::U) == in_u;
          },
          [&](const shape::Disk& s) { return std::abs(z - s.center) < s.radius; },
          [&](const shape::ExpPreimage& s) {
            if (std::abs(x) > 700) return x < 0 && contains(*s.base, 0.0);
            return contains(*s.base, std::exp(z));
          },
      },
      d.shape());
}

double boundary_distance(const Domain& d, CPoint z) {
  return std::visit(
      Overloaded{
          [&](const shape::SpiralPair&) { return spiral_distance(z); },
          [&](const shape::ExpPreimage& s) {
            // exp(z) underflows; every boundary point has |exp| >= dist(0, base boundary).
            if (z.real() < -700) return std::log(boundary_distance(*s.base, 0.0)) - z.real();
            const CPoint w = std::exp(z);
            const double delta = boundary_distance(*s.base, w);
            return std::log1p(delta / std::abs(w));
          },
          [&](const auto&) { return std::abs(z - nearest_impl(d, z)); },
      },
      d.shape());
}

double dist_to_boundary(const Domain& d, CPoint z) {
  if (!contains(d, z)) throw PointOutsideDomain("point is not inside " + d.describe());
  return boundary_distance(d, z);
}

CPoint nearest_boundary_point(const Domain& d, CPoint z) { return nearest_impl(d, z); }

Label classify_exit(const Domain& d, CPoint z, double tol) {
  const double dist = boundary_distance(d, z);
  if (!(dist <= tol)) throw NotNearBoundary("point is " + std::to_string(dist) + " from the boundary");
  const double x = z.real(), y = z.imag();
  return std::visit(
      Overloaded{
          [&](const shape::Rectangle& s) {
            const double dr = std::abs(x - s.a), db = std::abs(y + s.b);
            const double dl = std::abs(x + s.a), dt = std::abs(y - s.b);
            const double m = std::min({dr, db, dl, dt});
            if (dr == m) return Label::S1;
            if (db == m) return Label::S2;
            if (dl == m) return Label::S3;
            return Label::S4;
          },
          [&](const shape::Annulus& s) {
            const double r = std::abs(z);
            return std::abs(r - s.r) <= std::abs(r - s.R) ? Label::AnnulusInner : Label::AnnulusOuter;
          },
          [&](const shape::Wedge& s) {
            const CPoint up = std::polar(1.0, s.theta / 2), lo = std::conj(up);
            const CPoint cu = std::max(0.0, (z * std::conj(up)).real()) * up;
            const CPoint cl = std::max(0.0, (z * std::conj(lo)).real()) * lo;
            return std::norm(z - cu) <= std::norm(z - cl) ? Label::WedgeUpper : Label::WedgeLower;
          },
          [&](const shape::HalfPlane& s) {
            if (s.normal == shape::Axis::Up || s.normal == shape::Axis::Down)
              return x <= 0 ? Label::HalfLineLeft : Label::HalfLineRight;
            return Label::Generic;
          },
          [&](const shape::Strip& s) {
            return std::abs(y - s.lo) <= std::abs(y - s.hi) ? Label::S2 : Label::S4;
          },
          [&](const shape::SpiralPair&) {
            return spiral_nearest(z).sq_dist <= spiral_nearest(-z).sq_dist ? Label::CurveGamma1
                                                                             : Label::CurveGamma2;
          },
          [&](const auto&) { return Label::Generic; },
      },
      d.shape());
}

StarlikeVerdict check_delta_starlike(const Domain& d, int probes, RngStream& rng, double box) {
  StarlikeVerdict verdict;
  const long max_attempts = 1000L * std::max(1, probes);
  for (long attempt = 0; attempt < max_attempts && verdict.probes_tested < probes; ++attempt) {
    const CPoint z{box * (2 * rng.uniform() - 1), box * (2 * rng.uniform() - 1)};
    if (!contains(d, z)) continue;
    ++verdict.probes_tested;
    for (double h = 1e-3;; h *= 2) {
      const double xr = std::max(z.real() - h, -1e6);
      if (!contains(d, {xr, z.imag()})) {
        verdict.pass = false;
        verdict.witness = z;
        return verdict;
      }
      if (xr <= -1e6) break;
    }
  }
  return verdict;
}

double spiral_distance_reference(CPoint z) {
  return std::sqrt(std::min(spiral_nearest_scan(z).sq_dist, spiral_nearest_scan(-z).sq_dist));
}

}  // namespace bmx
