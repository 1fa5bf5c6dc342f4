#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "bmx/errors.hpp"
#include "bmx/stats.hpp"

namespace bmx {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHalfDiag = 0.70710678118654757;

struct TooManyCells {};

struct Cell {
  CPoint c;
  double h;
  double d;
  int level;
  std::int64_t ix, iy;
};

std::uint64_t cell_key(int level, std::int64_t ix, std::int64_t iy) {
  return (static_cast<std::uint64_t>(level) << 58) | (static_cast<std::uint64_t>(ix) << 29) |
         static_cast<std::uint64_t>(iy);
}

// Simpson's rule for the integral of |ds| / dist along a segment.
double segment_weight(const Domain& d, CPoint p, double dp, CPoint q, double dq) {
  const double dm = boundary_distance(d, 0.5 * (p + q));
  return std::abs(q - p) * (1 / dp + 4 / dm + 1 / dq) / 6;
}

// Quadtree cover of the part of the domain inside a disk, with leaves sized
// proportionally to their distance from the boundary, and the adjacency graph
// between leaves.
class CellGraph {
 public:
  CellGraph(const Domain& dom, CPoint anchor, CPoint center, double radius, double kappa, const QhConfig& cfg)
      : dom_(dom), origin_(center - CPoint(radius, radius)), side_(2 * radius) {
    std::vector<std::array<std::int64_t, 3>> stack{{0, 0, 0}};
    while (!stack.empty()) {
      const auto [level, ix, iy] = stack.back();
      stack.pop_back();
      const double h = side_ / static_cast<double>(std::int64_t{1} << level);
      const CPoint c = origin_ + CPoint((ix + 0.5) * h, (iy + 0.5) * h);
      if (std::abs(c - center) - kHalfDiag * h > radius) continue;
      const double dist = boundary_distance(dom, c);
      const bool in = contains(dom, c);
      if (!in && dist > kHalfDiag * h) continue;
      const double floor = std::max(cfg.abs_floor, cfg.rel_floor * std::abs(c - anchor));
      if (in && h <= kappa * dist) {
        if (dist >= floor) {
          index_[cell_key(static_cast<int>(level), ix, iy)] = static_cast<int>(cells_.size());
          cells_.push_back({c, h, dist, static_cast<int>(level), ix, iy});
          if (cells_.size() > cfg.max_cells) throw TooManyCells{};
        }
        continue;
      }
      if (h <= kappa * floor || level >= 28) continue;
      for (int k = 0; k < 4; ++k) stack.push_back({level + 1, 2 * ix + (k & 1), 2 * iy + (k >> 1)});
    }
    build_edges();
  }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<std::vector<std::pair<int, double>>>& adj() const { return adj_; }

  // Leaf containing z, or -1.
  int leaf_at(CPoint z) const {
    const CPoint u = z - origin_;
    for (int level = 0; level <= 28; ++level) {
      const double h = side_ / static_cast<double>(std::int64_t{1} << level);
      const auto ix = static_cast<std::int64_t>(std::floor(u.real() / h));
      const auto iy = static_cast<std::int64_t>(std::floor(u.imag() / h));
      const std::int64_t n = std::int64_t{1} << level;
      if (ix < 0 || iy < 0 || ix >= n || iy >= n) return -1;
      const auto it = index_.find(cell_key(level, ix, iy));
      if (it != index_.end()) return it->second;
    }
    return -1;
  }

  // Adds a free point joined to the leaf containing it and that leaf's
  // neighbors. Returns its node id.
  int attach_point(CPoint z, double dz) {
    const int leaf = leaf_at(z);
    if (leaf < 0) return -1;
    const int id = static_cast<int>(adj_.size());
    adj_.emplace_back();
    extra_points_.push_back({z, dz});
    auto link = [&](int j) {
      const double w = segment_weight(dom_, z, dz, cells_[j].c, cells_[j].d);
      adj_[id].push_back({j, w});
      adj_[j].push_back({id, w});
    };
    link(leaf);
    const auto neighbors = adj_[leaf];
    for (const auto& [j, w] : neighbors)
      if (j < static_cast<int>(cells_.size())) link(j);
    return id;
  }

  CPoint node_point(int id) const {
    return id < static_cast<int>(cells_.size()) ? cells_[id].c : extra_points_[id - cells_.size()].first;
  }

 private:
  void build_edges() {
    adj_.assign(cells_.size(), {});
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      const Cell& ci = cells_[i];
      const std::int64_t n = std::int64_t{1} << ci.level;
      std::vector<int> found;
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const std::int64_t jx = ci.ix + dx, jy = ci.iy + dy;
          if (jx < 0 || jy < 0 || jx >= n || jy >= n) continue;
          // The same-size neighbor square, or the coarser leaf covering it.
          for (int level = ci.level; level >= 0; --level) {
            const int shift = ci.level - level;
            const auto it = index_.find(cell_key(level, jx >> shift, jy >> shift));
            if (it == index_.end()) continue;
            const int j = it->second;
            const bool owner = cells_[j].level < ci.level || j > static_cast<int>(i);
            if (owner && std::find(found.begin(), found.end(), j) == found.end()) found.push_back(j);
            break;
          }
        }
      }
      for (int j : found) {
        const double w = segment_weight(dom_, ci.c, ci.d, cells_[j].c, cells_[j].d);
        adj_[i].push_back({j, w});
        adj_[j].push_back({static_cast<int>(i), w});
      }
    }
  }

  const Domain& dom_;
  CPoint origin_;
  double side_;
  std::vector<Cell> cells_;
  std::unordered_map<std::uint64_t, int> index_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  std::vector<std::pair<CPoint, double>> extra_points_;
};

struct ShortestPaths {
  std::vector<double> dist;
  std::vector<int> prev;
};

ShortestPaths dijkstra(const std::vector<std::vector<std::pair<int, double>>>& adj, int source) {
  ShortestPaths sp{std::vector<double>(adj.size(), kInf), std::vector<int>(adj.size(), -1)};
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  sp.dist[source] = 0;
  pq.push({0, source});
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du > sp.dist[u]) continue;
    for (const auto& [v, w] : adj[u]) {
      if (du + w < sp.dist[v]) {
        sp.dist[v] = du + w;
        sp.prev[v] = u;
        pq.push({sp.dist[v], v});
      }
    }
  }
  return sp;
}

// Smooths a polyline by coordinate descent on each vertex's two adjacent
// segment weights. The first vertex is fixed; the last is fixed unless
// `circle_radius` is set, in which case it slides along that circle.
class PathRelaxer {
 public:
  PathRelaxer(const Domain& d, std::vector<CPoint> pts, std::optional<double> circle_radius)
      : dom_(d), circle_(circle_radius) {
    densify(pts);
  }

  bool usable() const { return ok_; }

  double relax(int max_sweeps) {
    double total = cost();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      for (std::size_t i = 1; i < p_.size(); ++i) move_vertex(i);
      const double next = cost();
      const bool small = total - next <= 1e-6 * next;
      total = next;
      if (small) break;
    }
    return total;
  }

  double cost() const {
    double s = 0;
    for (std::size_t i = 0; i + 1 < p_.size(); ++i) s += segment_weight(dom_, p_[i], d_[i], p_[i + 1], d_[i + 1]);
    return s;
  }

 private:
  static constexpr std::size_t kMaxPoints = 4000;

  void densify(const std::vector<CPoint>& pts) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double da = boundary_distance(dom_, pts[i]), db = boundary_distance(dom_, pts[i + 1]);
      const int m = std::max(1, static_cast<int>(std::ceil(std::abs(pts[i + 1] - pts[i]) / (0.25 * std::min(da, db)))));
      for (int k = 0; k < m; ++k) {
        const CPoint q = pts[i] + (static_cast<double>(k) / m) * (pts[i + 1] - pts[i]);
        p_.push_back(q);
        d_.push_back(boundary_distance(dom_, q));
        if (p_.size() > kMaxPoints) {
          ok_ = false;
          return;
        }
      }
    }
    p_.push_back(pts.back());
    d_.push_back(boundary_distance(dom_, pts.back()));
  }

  // Weight of the segments touching vertex i if it were placed at q.
  double local(std::size_t i, CPoint q, double dq) const {
    double s = segment_weight(dom_, p_[i - 1], d_[i - 1], q, dq);
    if (i + 1 < p_.size()) s += segment_weight(dom_, q, dq, p_[i + 1], d_[i + 1]);
    return s;
  }

  bool admissible(std::size_t i, CPoint q) const {
    if (!contains(dom_, q)) return false;
    if (!contains(dom_, 0.5 * (p_[i - 1] + q))) return false;
    return i + 1 >= p_.size() || contains(dom_, 0.5 * (q + p_[i + 1]));
  }

  CPoint place(std::size_t i, CPoint q) const {
    (void)i;
    if (circle_ && i + 1 == p_.size()) return *circle_ * q / std::abs(q);
    return q;
  }

  void move_vertex(std::size_t i) {
    const bool last = i + 1 == p_.size();
    if (last && !circle_) return;
    const CPoint z = p_[i];
    const double base = local(i, z, d_[i]);
    const double e = 1e-4 * d_[i];
    // Directions: both axes for interior points, the tangent for a circle end.
    std::vector<CPoint> dirs;
    if (last) dirs.push_back(CPoint(0, 1) * z / std::abs(z));
    else dirs = {CPoint(1, 0), CPoint(0, 1)};
    CPoint grad = 0;
    for (const CPoint u : dirs) {
      const CPoint zp = place(i, z + e * u);
      if (!admissible(i, zp)) return;
      grad += u * ((local(i, zp, boundary_distance(dom_, zp)) - base) / e);
    }
    const double g = std::abs(grad);
    if (g == 0) return;
    const CPoint dir = -grad / g;
    const double span = std::max(std::abs(z - p_[i - 1]), last ? 0.0 : std::abs(p_[i + 1] - z));
    for (double step = 0.5 * span; step > 1e-3 * span; step *= 0.5) {
      const CPoint q = place(i, z + step * dir);
      if (!admissible(i, q)) continue;
      const double dq = boundary_distance(dom_, q);
      if (local(i, q, dq) < base) {
        p_[i] = q;
        d_[i] = dq;
        return;
      }
    }
  }

  const Domain& dom_;
  std::optional<double> circle_;
  std::vector<CPoint> p_;
  std::vector<double> d_;
  bool ok_ = true;
};

std::vector<CPoint> extract_path(const CellGraph& g, const ShortestPaths& sp, int end) {
  std::vector<CPoint> pts;
  for (int v = end; v >= 0; v = sp.prev[v]) pts.push_back(g.node_point(v));
  std::reverse(pts.begin(), pts.end());
  return pts;
}

struct RoundResult {
  std::vector<double> values;
  std::size_t cells = 0;
};

// One refinement round: returns delta to each target, or kInf if unreachable.
RoundResult run_round(const Domain& d, CPoint a, std::optional<CPoint> b, const std::vector<double>& radii,
                      double kappa, const QhConfig& cfg) {
  CPoint center = 0;
  double radius = 0;
  if (b) {
    center = 0.5 * (a + *b);
    radius = 1.5 * std::abs(*b - a) + 2 * std::max(boundary_distance(d, a), boundary_distance(d, *b));
  } else {
    radius = radii.back() * (1 + 1e-9);
  }
  CellGraph g(d, a, center, radius, kappa, cfg);
  const int src = g.attach_point(a, boundary_distance(d, a));
  if (src < 0) throw TargetUnreachable("start point is not covered by the cell graph");
  RoundResult out;
  out.cells = g.cells().size();

  if (b) {
    const int dst = g.attach_point(*b, boundary_distance(d, *b));
    if (dst < 0) throw TargetUnreachable("target point is not covered by the cell graph");
    const ShortestPaths sp = dijkstra(g.adj(), src);
    double v = sp.dist[dst];
    if (v < kInf && cfg.relax) {
      PathRelaxer relaxer(d, extract_path(g, sp, dst), std::nullopt);
      if (relaxer.usable()) v = std::min(v, relaxer.relax(200));
    }
    out.values.push_back(v);
    return out;
  }

  const ShortestPaths sp = dijkstra(g.adj(), src);
  const auto& cells = g.cells();
  for (double R : radii) {
    double best = kInf;
    int best_cell = -1;
    CPoint best_end = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (sp.dist[i] == kInf) continue;
      const double r = std::abs(cells[i].c);
      if (std::abs(r - R) > cells[i].h || r == 0) continue;
      const CPoint end = R * cells[i].c / r;
      if (!contains(d, end)) continue;
      const double v = sp.dist[i] + segment_weight(d, cells[i].c, cells[i].d, end, boundary_distance(d, end));
      if (v < best) {
        best = v;
        best_cell = static_cast<int>(i);
        best_end = end;
      }
    }
    if (best_cell >= 0 && cfg.relax) {
      auto pts = extract_path(g, sp, best_cell);
      // Stop the path at its first crossing of the circle.
      std::size_t cut = pts.size();
      for (std::size_t k = 1; k < pts.size(); ++k)
        if (std::abs(pts[k]) >= R) {
          cut = k;
          break;
        }
      if (cut < pts.size()) {
        pts.resize(cut + 1);
        pts.back() = R * pts.back() / std::abs(pts.back());
      } else {
        pts.push_back(best_end);
      }
      if (contains(d, pts.back())) {
        PathRelaxer relaxer(d, pts, R);
        if (relaxer.usable()) best = std::min(best, relaxer.relax(200));
      }
    }
    out.values.push_back(best);
  }
  return out;
}

std::vector<QhResult> refine(const Domain& d, CPoint a, std::optional<CPoint> b, const std::vector<double>& radii,
                             const QhConfig& cfg) {
  if (!contains(d, a)) throw BadParameters("quasi-hyperbolic start must lie inside the domain");
  if (b && !contains(d, *b)) throw BadParameters("quasi-hyperbolic target must lie inside the domain");
  const std::size_t targets = b ? 1 : radii.size();
  std::vector<QhResult> results(targets);
  for (auto& r : results) r.value = kInf;

  double kappa = cfg.kappa;
  for (int round = 0; round < cfg.max_rounds; ++round, kappa *= 0.5) {
    RoundResult rr;
    try {
      rr = run_round(d, a, b, radii, kappa, cfg);
    } catch (const TooManyCells&) {
      break;
    }
    bool all_converged = round > 0;
    for (std::size_t k = 0; k < targets; ++k) {
      const double prev = results[k].value;
      // Keep the running minimum: every round value bounds delta from above.
      const double next = std::min(prev, rr.values[k]);
      results[k].round_values.push_back(rr.values[k]);
      results[k].cells = rr.cells;
      results[k].value = next;
      const bool close = prev < kInf && std::abs(prev - next) <= cfg.rel_change * next;
      results[k].converged = close;
      all_converged = all_converged && close;
    }
    if (all_converged) break;
  }
  for (const auto& r : results)
    if (!(r.value < kInf)) throw TargetUnreachable("no path found in the cell graph");
  return results;
}

}  // namespace

QhResult quasi_hyperbolic_distance(const Domain& d, CPoint a, CPoint b, const QhConfig& cfg) {
  return refine(d, a, b, {}, cfg).front();
}

std::vector<QhResult> quasi_hyperbolic_to_circles(const Domain& d, CPoint a, const std::vector<double>& radii,
                                                  const QhConfig& cfg) {
  if (radii.empty()) throw BadParameters("need at least one target radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > std::abs(a))) throw BadParameters("target radii must exceed |a|");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw BadParameters("target radii must increase");
  }
  return refine(d, a, std::nullopt, radii, cfg);
}

HardyEstimate estimate_hardy_number(const Domain& d, CPoint a, const std::vector<double>& r_schedule,
                                    const QhConfig& cfg) {
  if (r_schedule.size() < 4) throw BadParameters("Hardy schedule needs at least 4 radii");
  if (!(r_schedule.front() > 0 && r_schedule.back() >= 1000 * r_schedule.front()))
    throw BadParameters("Hardy schedule must span at least three decades");
  if (!(r_schedule.back() > 1)) throw BadParameters("Hardy schedule must reach beyond R = 1");

  HardyEstimate est;
  est.a = a;
  est.r_schedule = r_schedule;
  for (const auto& r : quasi_hyperbolic_to_circles(d, a, r_schedule, cfg)) est.delta_values.push_back(r.value);

  const std::size_t n = r_schedule.size();
  const std::size_t from = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(n - from);
  for (std::size_t i = from; i < n; ++i) {
    const double x = std::log(r_schedule[i]), y = est.delta_values[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  est.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  est.lo = est.slope / 2;
  est.hi = 2 * est.slope;

  const double last = est.delta_values[n - 1] / std::log(r_schedule[n - 1]);
  const double before = r_schedule[n - 2] > 1 ? est.delta_values[n - 2] / std::log(r_schedule[n - 2]) : 0.0;
  est.infinite = last > 100 && last > before;
  return est;
}

}  // namespace bmx
