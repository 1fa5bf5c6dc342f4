#include <algorithm>
#include <cmath>
#include <numbers>

#include "bmx/errors.hpp"
#include "bmx/sim.hpp"

namespace bmx {
namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double label_tol(double tol, CPoint z) { return std::max(1e-6, 10 * tol) * (1 + std::abs(z)); }

ExitRecord finish(const Domain& d, CPoint near, double tol, std::optional<double> time, long steps, Method method,
                  double eps) {
  ExitRecord rec;
  rec.exit_point = nearest_boundary_point(d, near);
  rec.exit_time = time;
  rec.label = classify_exit(d, rec.exit_point, label_tol(tol, rec.exit_point));
  rec.steps = steps;
  rec.method = method;
  rec.eps = eps;
  return rec;
}

// One Euler-Maruyama walker. `inside` and `dist` describe the region it runs
// in; a step that lands outside is pulled back by bisection on the segment.
struct Walker {
  CPoint z;
  double t = 0;
  long steps = 0;
  bool done = false;

  template <class Inside>
  void resolve_crossing(CPoint from, CPoint to, double dt, double tol, const Inside& inside) {
    double lo = 0, hi = 1;
    const double len = std::abs(to - from);
    while ((hi - lo) * len > tol) {
      const double mid = 0.5 * (lo + hi);
      if (inside(from + mid * (to - from))) lo = mid;
      else hi = mid;
    }
    z = from + lo * (to - from);
    t += lo * dt;  // linear interpolation of the crossing time
    done = true;
  }
};

void check_start(const Domain& d, CPoint start) {
  if (!contains(d, start)) throw BadStart("start point is not inside " + d.describe());
}

template <class OnStep>
ExitRecord run_em(const Domain& d, CPoint start, const EmConfig& cfg, RngStream& rng, OnStep on_step) {
  check_start(d, start);
  if (!(cfg.c > 0 && cfg.boundary_tol > 0 && cfg.dt_max > 0)) throw BadParameters("invalid EM configuration");
  Walker w{start};
  const auto inside = [&](CPoint p) { return contains(d, p); };
  while (!w.done) {
    const double dist = boundary_distance(d, w.z);
    if (dist < cfg.boundary_tol) break;
    if (w.steps >= cfg.max_steps) throw MaxStepsExceeded("EM path exceeded " + std::to_string(cfg.max_steps) + " steps");
    const double dt = std::min(cfg.dt_max, cfg.c * dist * dist);
    const CPoint next = w.z + std::sqrt(dt) * rng.normal2();
    ++w.steps;
    if (inside(next)) {
      w.z = next;
      w.t += dt;
    } else {
      w.resolve_crossing(w.z, next, dt, cfg.boundary_tol, inside);
    }
    on_step(w.t, w.z);
  }
  return finish(d, w.z, cfg.boundary_tol, w.t, w.steps, Method::EM, 0.0);
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::ExactHalfPlane: return "exact_halfplane";
    case Method::ExactDisk: return "exact_disk";
    case Method::WoS: return "wos";
    case Method::EM: return "em";
  }
  return "em";
}

ExitRecord sample_halfplane_exit(CPoint start, RngStream& rng) {
  if (!(start.imag() > 0)) throw BadStart("half-plane exit needs Im(start) > 0");
  const double cauchy = std::tan(std::numbers::pi * (rng.uniform() - 0.5));
  ExitRecord rec;
  rec.exit_point = {start.real() + start.imag() * cauchy, 0.0};
  rec.label = rec.exit_point.real() <= 0 ? Label::HalfLineLeft : Label::HalfLineRight;
  rec.steps = 1;
  rec.method = Method::ExactHalfPlane;
  return rec;
}

ExitRecord sample_disk_exit(CPoint center, double radius, RngStream& rng, bool with_time) {
  if (!(radius > 0)) throw BadParameters("disk radius must be positive");
  ExitRecord rec;
  rec.exit_point = center + std::polar(radius, kTwoPi * rng.uniform());
  if (with_time) rec.exit_time = radius * radius * DiskExitTimeTable::instance().sample(rng);
  rec.steps = 1;
  rec.method = Method::ExactDisk;
  return rec;
}

ExitRecord wos_exit(const Domain& d, CPoint start, const WosConfig& cfg, RngStream& rng) {
  check_start(d, start);
  const double eps = cfg.eps.value_or(1e-6 * (1 + std::abs(start)));
  const double r_cap = cfg.r_cap.value_or(64 * (1 + std::abs(start)));
  if (!(eps > 0 && r_cap > 0)) throw BadParameters("WoS needs eps > 0 and r_cap > 0");
  const auto& table = DiskExitTimeTable::instance();

  CPoint z = start;
  double t = 0;
  long steps = 0;
  for (;;) {
    const double dist = boundary_distance(d, z);
    if (dist < eps) break;
    if (steps >= cfg.max_steps)
      throw MaxStepsExceeded("WoS path exceeded " + std::to_string(cfg.max_steps) + " steps");
    const double r = std::min(dist, r_cap);
    z += std::polar(r, kTwoPi * rng.uniform());
    if (cfg.with_time) t += r * r * table.sample(rng);
    ++steps;
  }
  return finish(d, z, eps, cfg.with_time ? std::optional<double>(t) : std::nullopt, steps, Method::WoS, eps);
}

ExitRecord em_exit(const Domain& d, CPoint start, const EmConfig& cfg, RngStream& rng) {
  return run_em(d, start, cfg, rng, [](double, CPoint) {});
}

PathSample em_path(const Domain& d, CPoint start, const EmConfig& cfg, RngStream& rng) {
  PathSample path;
  path.times.push_back(0);
  path.points.push_back(start);
  path.terminal = run_em(d, start, cfg, rng, [&](double t, CPoint z) {
    path.times.push_back(t);
    path.points.push_back(z);
  });
  // The recorded end is the projection onto the boundary.
  path.points.back() = path.terminal.exit_point;
  return path;
}

PathSample pushforward(const AnalyticMap& m, const PathSample& path, const Domain* image_domain) {
  PathSample out;
  out.points.reserve(path.points.size());
  out.times.reserve(path.times.size());
  double sigma = 0, prev_rate = 0;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const CPoint z = path.points[i];
    out.points.push_back(eval(m, z));
    const double rate = std::norm(deriv(m, z));
    if (i > 0) sigma += 0.5 * (rate + prev_rate) * (path.times[i] - path.times[i - 1]);
    prev_rate = rate;
    out.times.push_back(sigma);
  }
  out.terminal = path.terminal;
  out.terminal.exit_point = out.points.back();
  if (path.terminal.exit_time) out.terminal.exit_time = sigma;
  out.terminal.label = image_domain
                           ? classify_exit(*image_domain, out.terminal.exit_point,
                                           label_tol(1e-9, out.terminal.exit_point))
                           : Label::Generic;
  return out;
}

CoupledExit reflected_coupling(const Domain& d, CPoint start, double split_re, const EmConfig& cfg, RngStream& rng) {
  check_start(d, start);
  if (!(start.real() < split_re)) throw BadStart("coupling needs Re(start) < split_re");
  const double tol = cfg.boundary_tol;
  CoupledExit out;

  // Phase 1: run in d cut at the vertical line until leaving that region.
  const auto in_cut = [&](CPoint p) { return p.real() < split_re && contains(d, p); };
  Walker w{start};
  while (!w.done) {
    const double dist = std::min(boundary_distance(d, w.z), split_re - w.z.real());
    if (dist < tol) break;
    if (w.steps >= cfg.max_steps) throw MaxStepsExceeded("coupled path exceeded step cap");
    const double dt = std::min(cfg.dt_max, cfg.c * dist * dist);
    const CPoint next = w.z + std::sqrt(dt) * rng.normal2();
    ++w.steps;
    if (in_cut(next)) {
      w.z = next;
      w.t += dt;
    } else {
      w.resolve_crossing(w.z, next, dt, tol, in_cut);
    }
  }

  // The walker left the cut region either through the line (inside d) or
  // through the boundary of d itself.
  const double to_line = split_re - w.z.real();
  const double to_boundary = boundary_distance(d, w.z);
  if (to_line < to_boundary) {
    out.hit_line = true;
    out.tau0 = w.t;
  } else {
    out.b = finish(d, w.z, tol, w.t, w.steps, Method::EM, 0.0);
    out.b_hat = out.b;
    return out;
  }

  // Phase 2: B and its mirror image share every increment.
  const auto inside = [&](CPoint p) { return contains(d, p); };
  const CPoint on_line{split_re, w.z.imag()};
  Walker b{on_line, w.t, w.steps};
  Walker bh{on_line, w.t, w.steps};
  while (!b.done || !bh.done) {
    double dist = std::numeric_limits<double>::infinity();
    if (!b.done) {
      const double db = boundary_distance(d, b.z);
      if (db < tol) b.done = true;
      else dist = std::min(dist, db);
    }
    if (!bh.done) {
      const double dh = boundary_distance(d, bh.z);
      if (dh < tol) bh.done = true;
      else dist = std::min(dist, dh);
    }
    if (b.done && bh.done) break;
    if (std::max(b.steps, bh.steps) >= cfg.max_steps) throw MaxStepsExceeded("coupled path exceeded step cap");
    const double dt = std::min(cfg.dt_max, cfg.c * dist * dist);
    const CPoint inc = std::sqrt(dt) * rng.normal2();
    for (Walker* p : {&b, &bh}) {
      if (p->done) continue;
      // The mirror image moves with the horizontal increment reversed.
      const CPoint next = p->z + (p == &b ? inc : CPoint(-inc.real(), inc.imag()));
      ++p->steps;
      if (inside(next)) {
        p->z = next;
        p->t += dt;
      } else {
        p->resolve_crossing(p->z, next, dt, tol, inside);
      }
    }
  }
  out.b = finish(d, b.z, tol, b.t, b.steps, Method::EM, 0.0);
  out.b_hat = finish(d, bh.z, tol, bh.t, bh.steps, Method::EM, 0.0);
  return out;
}

}  // namespace bmx
