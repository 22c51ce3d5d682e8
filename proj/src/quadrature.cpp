#include "deoq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <utility>

#include <Eigen/Eigenvalues>

namespace deoq::quad {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm(Point p) { return std::hypot(p.x, p.y); }

// Outward normal of edge a -> b for a counter-clockwise polygon.
Point outward_normal(Point a, Point b) { return {b.y - a.y, -(b.x - a.x)}; }

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

bool contains_origin(const ConvexPolygon& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % poly.size()];
    if (dot(outward_normal(a, b), a) < 0.0) return false;
  }
  return true;
}

double segment_distance(Point a, Point b) {
  const Point e{b.x - a.x, b.y - a.y};
  const double len2 = dot(e, e);
  double t = len2 > 0.0 ? -dot(a, e) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm({a.x + t * e.x, a.y + t * e.y});
}

void append_panel(const Rule& ref, double a, double b, Rule& out) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    out.nodes.push_back(mid + half * ref.nodes[k]);
    out.weights.push_back(half * ref.weights[k]);
  }
}

// Panel on [a, a + len] under r = a + len s^2, which turns a sqrt(r - a)
// endpoint singularity into a polynomial in s.
void append_sqrt_panel(const Rule& ref, double a, double len, Rule& out) {
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double s = 0.5 * (ref.nodes[k] + 1.0);
    out.nodes.push_back(a + len * s * s);
    out.weights.push_back(0.5 * ref.weights[k] * 2.0 * len * s);
  }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

Rule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    auto [p, dp] = legendre(n, x);
    for (int iter = 0; iter < 100; ++iter) {
      const double dx = p / dp;
      x -= dx;
      std::tie(p, dp) = legendre(n, x);
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

Rule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come
  // from the first eigenvector components.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Rule rule;
  for (int k = 0; k < n; ++k) {
    const double v = eig.eigenvectors()(0, k);
    rule.nodes.push_back(eig.eigenvalues()(k));
    rule.weights.push_back(std::sqrt(std::numbers::pi) * v * v);
  }
  return rule;
}

Rule composite(std::span<const double> breaks, double max_width, const Rule& reference) {
  if (breaks.size() < 2) throw std::invalid_argument("composite: need two breakpoints");
  if (!(max_width > 0.0)) throw std::invalid_argument("composite: max_width must be > 0");
  Rule out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (!(b > a)) continue;
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_width)));
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      append_panel(reference, a + p * h, p + 1 == panels ? b : a + (p + 1) * h, out);
    }
  }
  return out;
}

double integrate(const Rule& rule, const std::function<double(double)>& f) {
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) sum += rule.weights[k] * f(rule.nodes[k]);
  return sum;
}

std::vector<Arc> circle_arcs(const ConvexPolygon& poly, double r) {
  if (poly.size() < 3) return {};
  if (r <= 0.0) {
    if (contains_origin(poly)) return {{0.0, kTwoPi}};
    return {};
  }
  // Each edge excludes the arc of directions where the circle point lies on
  // the outer side of that edge's supporting line.
  std::vector<Arc> excluded;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i];
    const Point n = outward_normal(a, poly[(i + 1) % poly.size()]);
    const double nn = norm(n);
    if (nn == 0.0) continue;
    const double kappa = dot(n, a) / (r * nn);
    if (kappa >= 1.0) continue;
    if (kappa <= -1.0) return {};
    const double half = std::acos(kappa);
    double lo = std::atan2(n.y, n.x) - half;
    lo -= kTwoPi * std::floor(lo / kTwoPi);
    const double hi = lo + 2.0 * half;
    if (hi <= kTwoPi) {
      excluded.push_back({lo, hi});
    } else {
      excluded.push_back({lo, kTwoPi});
      excluded.push_back({0.0, hi - kTwoPi});
    }
  }
  std::sort(excluded.begin(), excluded.end(), [](Arc a, Arc b) { return a.lo < b.lo; });

  std::vector<Arc> allowed;
  double cursor = 0.0;
  for (const Arc& e : excluded) {
    if (e.lo > cursor) allowed.push_back({cursor, e.lo});
    cursor = std::max(cursor, e.hi);
  }
  if (cursor < kTwoPi) allowed.push_back({cursor, kTwoPi});

  // Join the piece ending at 2 pi with the one starting at 0.
  if (allowed.size() >= 2 && allowed.front().lo == 0.0 && allowed.back().hi == kTwoPi) {
    allowed.back().hi = kTwoPi + allowed.front().hi;
    allowed.erase(allowed.begin());
  }
  return allowed;
}

std::vector<RadialBreak> radial_breaks(const ConvexPolygon& poly) {
  std::vector<RadialBreak> raw;
  double rmax = 0.0;
  for (const Point& p : poly) rmax = std::max(rmax, norm(p));

  double rmin = 0.0;
  if (!contains_origin(poly)) {
    rmin = rmax;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      rmin = std::min(rmin, segment_distance(poly[i], poly[(i + 1) % poly.size()]));
    }
  }
  raw.push_back({rmin, false});
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % poly.size()];
    raw.push_back({norm(a), false});
    const Point e{b.x - a.x, b.y - a.y};
    const double len2 = dot(e, e);
    if (len2 == 0.0) continue;
    const double t = -dot(a, e) / len2;
    if (t > 0.0 && t < 1.0) raw.push_back({norm({a.x + t * e.x, a.y + t * e.y}), true});
  }
  std::sort(raw.begin(), raw.end(),
            [](const RadialBreak& a, const RadialBreak& b) { return a.radius < b.radius; });

  const double tol = 1e-13 * std::max(rmax, 1e-300);
  std::vector<RadialBreak> out;
  for (const RadialBreak& b : raw) {
    if (b.radius < rmin - tol || b.radius > rmax + tol) continue;
    if (!out.empty() && b.radius - out.back().radius <= tol) {
      out.back().foot = out.back().foot || b.foot;
      continue;
    }
    out.push_back(b);
  }
  return out;
}

std::vector<RadialNode> polar_nodes(const ConvexPolygon& poly,
                                    const std::function<double(double, double)>& density,
                                    const PolarOptions& opt) {
  const Rule radial_ref = gauss_legendre(opt.radial_order);
  const Rule angular_ref = gauss_legendre(opt.angular_order);
  const auto breaks = radial_breaks(poly);

  Rule radial;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double a = breaks[i].radius;
    const double b = breaks[i + 1].radius;
    if (!(b > a)) continue;
    if (breaks[i].foot) {
      const double len = std::min(b - a, 0.5 * opt.max_radial_width);
      append_sqrt_panel(radial_ref, a, len, radial);
      a += len;
      if (!(b > a)) continue;
    }
    const double seg[2] = {a, b};
    const Rule part = composite(seg, opt.max_radial_width, radial_ref);
    radial.nodes.insert(radial.nodes.end(), part.nodes.begin(), part.nodes.end());
    radial.weights.insert(radial.weights.end(), part.weights.begin(), part.weights.end());
  }

  std::vector<RadialNode> out;
  out.reserve(radial.size());
  for (std::size_t k = 0; k < radial.size(); ++k) {
    const double r = radial.nodes[k];
    const double max_angle = std::min(std::numbers::pi / 4.0, 4.0 * opt.length_scale / r);
    RadialNode node{r, 0.0, 0.0, 0.0};
    for (const Arc& arc : circle_arcs(poly, r)) {
      const double seg[2] = {arc.lo, arc.hi};
      const Rule ang = composite(seg, max_angle, angular_ref);
      for (std::size_t j = 0; j < ang.size(); ++j) {
        const double c = std::cos(ang.nodes[j]);
        const double s = std::sin(ang.nodes[j]);
        const double f = ang.weights[j] * density(r * c, r * s);
        node.mass += f;
        node.amp_zero += f * s * s;
        node.amp_sup += f * 2.0 * s * c;
      }
    }
    const double w = radial.weights[k] * r;
    node.mass *= w;
    node.amp_zero *= w;
    node.amp_sup *= w;
    if (node.mass != 0.0) out.push_back(node);
  }
  return out;
}

}  // namespace deoq::quad
