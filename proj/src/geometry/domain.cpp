#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "bmx/errors.hpp"
#include "bmx/geometry.hpp"

namespace bmx {
namespace {

bool finite(double x) { return std::isfinite(x); }

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Upper half of the comb boundary, starting at the origin. The last vertex
// is the clipped end of the unbounded horizontal ray.
std::vector<CPoint> comb_upper_path(int n, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<CPoint> path{{0.0, 0.0}, {0.0, a[0]}};
  for (int k = 1; k <= n; ++k) {
    path.emplace_back(b[k - 1], a[k - 1]);
    path.emplace_back(b[k - 1], a[k]);
  }
  // Odd iterates open to the right, even ones (including n = 0) to the left.
  const double end_x = (n % 2 == 1) ? kCombClip : -kCombClip;
  path.emplace_back(end_x, a[n]);
  return path;
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::S1: return "S1";
    case Label::S2: return "S2";
    case Label::S3: return "S3";
    case Label::S4: return "S4";
    case Label::AnnulusInner: return "inner";
    case Label::AnnulusOuter: return "outer";
    case Label::HalfLineLeft: return "left";
    case Label::HalfLineRight: return "right";
    case Label::WedgeUpper: return "upper";
    case Label::WedgeLower: return "lower";
    case Label::CurveGamma1: return "gamma1";
    case Label::CurveGamma2: return "gamma2";
    case Label::Generic: return "generic";
  }
  return "generic";
}

std::optional<Label> label_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Label::Generic); ++i) {
    const auto label = static_cast<Label>(i);
    if (to_string(label) == name) return label;
  }
  return std::nullopt;
}

Domain Domain::rectangle(double a, double b) {
  if (!(a > 0 && b > 0 && finite(a) && finite(b))) throw BadParameters("rectangle needs a, b > 0");
  return Domain(shape::Rectangle{a, b});
}

Domain Domain::annulus(double r, double R) {
  if (!(r > 0 && R > r && finite(R))) throw BadParameters("annulus needs 0 < r < R");
  return Domain(shape::Annulus{r, R});
}

Domain Domain::wedge(double theta) {
  if (!(theta > 0 && theta <= 2 * std::numbers::pi + 1e-12))
    throw BadParameters("wedge aperture must lie in (0, 2pi]");
  return Domain(shape::Wedge{std::min(theta, 2 * std::numbers::pi)});
}

Domain Domain::half_plane(shape::Axis normal) { return Domain(shape::HalfPlane{normal}); }

Domain Domain::strip(double lo, double hi) {
  if (!(lo < hi && finite(lo) && finite(hi))) throw BadParameters("strip needs lo < hi");
  return Domain(shape::Strip{lo, hi});
}

Domain Domain::half_strip_complement(double a, double x0) {
  if (!(a > 0 && finite(a) && finite(x0))) throw BadParameters("half-strip needs a > 0");
  return Domain(shape::HalfStripComplement{a, x0});
}

Domain Domain::parabola_complement() { return Domain(shape::ParabolaComplement{}); }

Domain Domain::koebe_slit() { return Domain(shape::KoebeSlit{}); }

Domain Domain::comb(int n, std::vector<double> a, std::vector<double> b, shape::CombSide side) {
  if (n < 0) throw BadParameters("comb iteration count must be >= 0");
  if (a.size() != static_cast<std::size_t>(n) + 1 || b.size() != static_cast<std::size_t>(n))
    throw BadParameters("comb needs n+1 heights and n offsets");
  if (a[0] != 1.0) throw BadParameters("comb requires a[0] = 1");
  for (int k = 0; k < n; ++k) {
    if (!(a[k + 1] >= a[k] + 1.0) || !finite(a[k + 1]))
      throw BadParameters("comb heights need a[k+1] >= a[k] + 1");
  }
  for (int k = 1; k <= n; ++k) {
    const double bk = b[k - 1];
    if (!finite(bk) || std::abs(bk) >= kCombClip) throw BadParameters("comb offset out of range");
    if ((k % 2 == 1 && !(bk < 0)) || (k % 2 == 0 && !(bk > 0)))
      throw BadParameters("comb offsets must alternate: negative on odd, positive on even iterations");
    if (k >= 3) {
      const double prev = b[k - 3];
      if ((k % 2 == 1 && !(bk < prev)) || (k % 2 == 0 && !(bk > prev)))
        throw BadParameters("comb offsets must move outward on each side");
    }
  }

  shape::Comb c{n, std::move(a), std::move(b), side, {}, {}};
  const auto upper = comb_upper_path(n, c.a, c.b);
  for (std::size_t i = 0; i + 1 < upper.size(); ++i) {
    c.boundary.push_back({upper[i], upper[i + 1]});
    c.boundary.push_back({std::conj(upper[i]), std::conj(upper[i + 1])});
  }
  for (std::size_t i = upper.size(); i-- > 1;) c.polygon.push_back(std::conj(upper[i]));
  for (const auto& p : upper) c.polygon.push_back(p);
  return Domain(std::move(c));
}

Domain Domain::spiral(shape::SpiralSide side) { return Domain(shape::SpiralPair{side}); }

Domain Domain::disk(CPoint center, double radius) {
  if (!(radius > 0 && finite(radius) && finite(center.real()) && finite(center.imag())))
    throw BadParameters("disk needs a finite center and radius > 0");
  return Domain(shape::Disk{center, radius});
}

Domain Domain::exp_preimage(Domain base) {
  if (!contains(base, 0.0)) throw BadParameters("exp-preimage base must contain 0");
  return Domain(shape::ExpPreimage{std::make_shared<const Domain>(std::move(base))});
}

std::string Domain::describe() const {
  struct Visitor {
    std::string operator()(const shape::Rectangle& s) const {
      return "rectangle(" + num(s.a) + ", " + num(s.b) + ")";
    }
    std::string operator()(const shape::Annulus& s) const {
      return "annulus(" + num(s.r) + ", " + num(s.R) + ")";
    }
    std::string operator()(const shape::Wedge& s) const { return "wedge(" + num(s.theta) + ")"; }
    std::string operator()(const shape::HalfPlane& s) const {
      switch (s.normal) {
        case shape::Axis::Up: return "halfplane(up)";
        case shape::Axis::Down: return "halfplane(down)";
        case shape::Axis::Left: return "halfplane(left)";
        case shape::Axis::Right: return "halfplane(right)";
      }
      return "halfplane(up)";
    }
    std::string operator()(const shape::Strip& s) const {
      return "strip(" + num(s.lo) + ", " + num(s.hi) + ")";
    }
    std::string operator()(const shape::HalfStripComplement& s) const {
      return "halfstrip_complement(" + num(s.a) + ", " + num(s.x0) + ")";
    }
    std::string operator()(const shape::ParabolaComplement&) const { return "parabola_complement"; }
    std::string operator()(const shape::KoebeSlit&) const { return "koebe"; }
    std::string operator()(const shape::Comb& s) const {
      std::string out = std::string("comb(") + (s.side == shape::CombSide::V ? "V" : "W") + ", " +
                        std::to_string(s.n);
      for (double v : s.a) out += ", " + num(v);
      for (double v : s.b) out += ", " + num(v);
      return out + ")";
    }
    std::string operator()(const shape::SpiralPair& s) const {
      return s.side == shape::SpiralSide::U ? "spiral(U)" : "spiral(complement)";
    }
    std::string operator()(const shape::Disk& s) const {
      return "disk(" + num(s.center.real()) + ", " + num(s.center.imag()) + ", " + num(s.radius) + ")";
    }
    std::string operator()(const shape::ExpPreimage& s) const {
      return "exp_preimage(" + s.base->describe() + ")";
    }
  };
  return std::visit(Visitor{}, shape_);
}

CombPair build_comb(int n, const std::vector<double>& a, const std::vector<double>& b) {
  return {Domain::comb(n, a, b, shape::CombSide::V), Domain::comb(n, a, b, shape::CombSide::W)};
}

std::vector<double> default_comb_heights(int n) {
  std::vector<double> a(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) a[k] = std::pow(3.0, k);
  return a;
}

std::vector<double> default_comb_offsets(int n) {
  std::vector<double> b(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) b[k - 1] = k % 2 == 1 ? -2 * std::pow(4.0, (k - 1) / 2) : std::ldexp(1.0, k / 2 - 2);
  return b;
}

}  // namespace bmx
