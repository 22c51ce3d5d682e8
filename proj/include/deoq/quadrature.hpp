#pragma once

// Quadrature building blocks for the disorder average: Gauss-Legendre rules,
// composite panel rules with breakpoints, and polar integration of a density
// over a convex polygon in the (d, y) plane, y = 2c.

#include <functional>
#include <span>
#include <vector>

namespace deoq::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(int n);

/// n-point Gauss-Hermite rule for weight exp(-u^2) on the real line; the
/// weights sum to sqrt(pi).
Rule gauss_hermite(int n);

/// Composite rule over [breaks.front(), breaks.back()]. Every interval between
/// consecutive breakpoints is split into equal panels no wider than max_width,
/// each carrying a copy of `reference` (a rule on [-1, 1]).
Rule composite(std::span<const double> breaks, double max_width, const Rule& reference);

/// Integral of a function sampled at the rule's nodes.
double integrate(const Rule& rule, const std::function<double(double)>& f);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Vertices in counter-clockwise order.
using ConvexPolygon = std::vector<Point>;

/// Closed angular interval [lo, hi] with lo < hi, possibly extending past 2 pi.
struct Arc {
  double lo = 0.0;
  double hi = 0.0;
};

/// Angles theta for which r (cos theta, sin theta) lies inside the polygon.
std::vector<Arc> circle_arcs(const ConvexPolygon& poly, double r);

/// Radii at which the circle/polygon intersection changes topology: vertex
/// distances and perpendicular-foot distances of the edges. `foot` marks
/// radii where the arc length grows like sqrt(r - radius).
struct RadialBreak {
  double radius = 0.0;
  bool foot = false;
};

/// Sorted breaks from the polygon's nearest distance to its farthest vertex.
std::vector<RadialBreak> radial_breaks(const ConvexPolygon& poly);

/// Integrated density over a thin annulus: `mass` = r * int f dtheta and the
/// two angular moments used by the return probabilities, each multiplied by
/// the radial quadrature weight.
struct RadialNode {
  double r = 0.0;
  double mass = 0.0;
  double amp_zero = 0.0;  // r * int f sin^2(theta) dtheta
  double amp_sup = 0.0;   // r * int f sin(2 theta) dtheta
};

struct PolarOptions {
  int radial_order = 41;
  int angular_order = 41;
  double max_radial_width = 1.0;  // panel width cap in r
  double length_scale = 1.0;      // smallest feature size of the density
};

/// Polar-coordinate quadrature of `density(x, y)` over the polygon. The
/// density must be smooth inside the polygon; discontinuities belong on its
/// edges.
std::vector<RadialNode> polar_nodes(const ConvexPolygon& poly,
                                    const std::function<double(double, double)>& density,
                                    const PolarOptions& opt);

}  // namespace deoq::quad
