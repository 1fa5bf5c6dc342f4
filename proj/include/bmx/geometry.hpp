#pragma once

// Plane domains and their geometric predicates.
//
// Every domain is an open set. Boundary points are never contained. Each
// domain answers four questions: membership, Euclidean distance to its
// boundary, the nearest boundary point, and which named piece of the boundary
// a point sits on.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bmx {

using CPoint = std::complex<double>;

class RngStream;

enum class Label : std::uint8_t {
  S1,  // rectangle right side; S2..S4 follow clockwise
  S2,
  S3,
  S4,
  AnnulusInner,
  AnnulusOuter,
  HalfLineLeft,
  HalfLineRight,
  WedgeUpper,
  WedgeLower,
  CurveGamma1,
  CurveGamma2,
  Generic,
};

std::string_view to_string(Label label);
std::optional<Label> label_from_string(std::string_view name);

struct Segment {
  CPoint p;
  CPoint q;
};

class Domain;

namespace shape {

struct Rectangle {
  double a;  // half-width
  double b;  // half-height
};

struct Annulus {
  double r;
  double R;
};

// {|Arg z| < theta/2}; theta = 2*pi is the plane slit along (-inf, 0].
struct Wedge {
  double theta;
};

enum class Axis { Up, Down, Left, Right };

// Half-plane through the origin; `normal` points into the domain.
struct HalfPlane {
  Axis normal;
};

// {lo < Im z < hi}
struct Strip {
  double lo;
  double hi;
};

// Complement of the closed half-strip {Re z <= x0, |Im z| <= a}.
struct HalfStripComplement {
  double a;
  double x0;
};

// {x > 1 - y^2/4}
struct ParabolaComplement {};

// C \ (-inf, -1/4]
struct KoebeSlit {};

enum class CombSide { V, W };

// n-th iterate of the comb construction. `boundary` is the rectilinear
// boundary polyline with the two unbounded ends clipped at |Re| = kCombClip.
struct Comb {
  int n;
  std::vector<double> a;  // a[0..n], a[0] = 1
  std::vector<double> b;  // b[1..n] stored at b[0..n-1]
  CombSide side;
  std::vector<Segment> boundary;
  std::vector<CPoint> polygon;  // closed tube polygon (interior is V for odd n, W for even n)
};

enum class SpiralSide { U, Complement };

// Components of the plane cut by t e^{it} and t e^{i(t - pi)}, t >= 0.
struct SpiralPair {
  SpiralSide side;
};

struct Disk {
  CPoint center;
  double radius;
};

// {z : exp(z) in base}. Base must contain 0 and be starlike about it for the
// result to be Delta-starlike; membership itself only needs base.
struct ExpPreimage {
  std::shared_ptr<const Domain> base;
};

}  // namespace shape

inline constexpr double kCombClip = 1e6;

class Domain {
 public:
  using Shape = std::variant<shape::Rectangle, shape::Annulus, shape::Wedge, shape::HalfPlane,
                             shape::Strip, shape::HalfStripComplement, shape::ParabolaComplement,
                             shape::KoebeSlit, shape::Comb, shape::SpiralPair, shape::Disk,
                             shape::ExpPreimage>;

  static Domain rectangle(double a, double b);
  static Domain annulus(double r, double R);
  static Domain wedge(double theta);
  static Domain half_plane(shape::Axis normal);
  static Domain strip(double lo, double hi);
  static Domain half_strip_complement(double a, double x0 = 0.0);
  static Domain parabola_complement();
  static Domain koebe_slit();
  static Domain comb(int n, std::vector<double> a, std::vector<double> b, shape::CombSide side);
  static Domain spiral(shape::SpiralSide side);
  static Domain disk(CPoint center, double radius);
  static Domain exp_preimage(Domain base);

  const Shape& shape() const { return shape_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&shape_);
  }

  // Canonical textual form, parseable by the scenario config grammar.
  std::string describe() const;

 private:
  explicit Domain(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

bool contains(const Domain& d, CPoint z);

// Distance from an interior point to the boundary. Throws PointOutsideDomain
// for points not in d.
double dist_to_boundary(const Domain& d, CPoint z);

// Unsigned distance to the boundary for any point, inside or out. For
// ExpPreimage this is the conformal lower bound ln(1 + dist_base(e^z)/|e^z|).
double boundary_distance(const Domain& d, CPoint z);

// A boundary point nearest to z.
CPoint nearest_boundary_point(const Domain& d, CPoint z);

// Label of the boundary piece nearest to z. Throws NotNearBoundary if z is
// farther than tol from the boundary.
Label classify_exit(const Domain& d, CPoint z, double tol);

struct StarlikeVerdict {
  bool pass = true;
  std::optional<CPoint> witness;  // interior point whose leftward ray leaves d
  int probes_tested = 0;
};

// Probabilistic Delta-starlike check: samples interior points from the box
// [-box, box]^2 and marches left along each horizontal ray.
StarlikeVerdict check_delta_starlike(const Domain& d, int probes, RngStream& rng, double box = 8.0);

struct CombPair {
  Domain V;
  Domain W;
};

// n iterations of the half-strip restriction. a has n+1 entries (a[0] = 1),
// b has n entries with b[k-1] < 0 for odd k and > 0 for even k.
CombPair build_comb(int n, const std::vector<double>& a, const std::vector<double>& b);

// Default heights a_k = 3^k; offsets -2, 0.5, -8, 1, -32, 2, ... (odd k:
// -2 * 4^((k-1)/2), even k: 2^(k/2 - 2)).
std::vector<double> default_comb_heights(int n);
std::vector<double> default_comb_offsets(int n);

// Brute-force reference for the spiral distance: coarse scan of the curve
// parameter at step 0.01 followed by golden-section refinement.
double spiral_distance_reference(CPoint z);

}  // namespace bmx
