#include "deoq/disorder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "deoq/error.hpp"

namespace deoq {

namespace {

const double kSqrt3 = std::sqrt(3.0);
constexpr std::size_t kMcBlock = 4096;
constexpr std::size_t kResync = 128;

using quad::Point;
using quad::RadialNode;

// One active noise variable u: its truncated range, density, and the
// direction in which it moves the point (d, y).
struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  double scale = 0.0;  // standard deviation in the (d, y) plane
  Point dir;
  std::function<double(double)> pdf;
};

RadialNode point_node(double d, double y, double weight) {
  const double r = std::hypot(d, y);
  RadialNode n{r, weight, 0.0, 0.0};
  if (r > 0.0) {
    n.amp_zero = weight * y * y / (r * r);
    n.amp_sup = weight * 2.0 * y * d / (r * r);
  }
  return n;
}

std::vector<Axis> active_axes(const NoiseSpec& s, double w, Point& origin, double j_prime) {
  std::vector<Axis> axes;
  double fixed_sum = 0.0;
  double fixed_diff = 0.0;
  if (s.sigma_e > 0.0) {
    const double sd = std::numbers::sqrt2 * s.sigma_e;
    axes.push_back({-w * sd, w * sd, sd, {1.0, 0.0},
                    [se = s.sigma_e](double u) { return pdf_delta_e(u, se); }});
  }
  if (s.sigma_j1 > 0.0) {
    axes.push_back({std::max(0.0, s.j01 - w * s.sigma_j1), s.j01 + w * s.sigma_j1, s.sigma_j1,
                    {-0.5, 0.5 * kSqrt3},
                    [m = s.j01, sg = s.sigma_j1](double u) { return pdf_exchange(u, m, sg); }});
  } else {
    fixed_sum += s.j01;
    fixed_diff += s.j01;
  }
  if (s.sigma_j2 > 0.0) {
    axes.push_back({std::max(0.0, s.j02 - w * s.sigma_j2), s.j02 + w * s.sigma_j2, s.sigma_j2,
                    {-0.5, -0.5 * kSqrt3},
                    [m = s.j02, sg = s.sigma_j2](double u) { return pdf_exchange(u, m, sg); }});
  } else {
    fixed_sum += s.j02;
    fixed_diff -= s.j02;
  }
  origin = {j_prime - 0.5 * fixed_sum, 0.5 * kSqrt3 * fixed_diff};
  return axes;
}

double radial_width(const QuadratureSpec& q, double t_max, double length_scale) {
  double w = 4.0 * length_scale;
  if (t_max > 0.0) w = std::min(w, q.radial_order / t_max);
  return w;
}

// Single active variable: the point moves along a line.
std::vector<RadialNode> line_nodes(const Axis& ax, Point origin, const QuadratureSpec& q,
                                   double t_max) {
  const double h = radial_width(q, t_max, ax.scale);
  std::vector<double> breaks{ax.lo, ax.hi};
  // Closest approach to r = 0, where the amplitude factors change fastest.
  const double u_star = -(origin.x * ax.dir.x + origin.y * ax.dir.y);
  const double gap = std::abs(origin.x * ax.dir.y - origin.y * ax.dir.x);
  if (u_star > ax.lo && u_star < ax.hi) {
    breaks.push_back(u_star);
    for (double step = std::max(gap, 1e-12 * h); step < h; step *= 2.0) {
      breaks.push_back(u_star - step);
      breaks.push_back(u_star + step);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                              [&](double b) { return b < ax.lo || b > ax.hi; }),
               breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const quad::Rule rule = quad::composite(breaks, h, quad::gauss_legendre(q.radial_order));
  std::vector<RadialNode> out;
  out.reserve(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double u = rule.nodes[k];
    const double f = rule.weights[k] * ax.pdf(u);
    if (f == 0.0) continue;
    out.push_back(point_node(origin.x + u * ax.dir.x, origin.y + u * ax.dir.y, f));
  }
  return out;
}

quad::ConvexPolygon ccw(quad::ConvexPolygon poly) {
  double area2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % poly.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  if (area2 < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

// Two active variables: the support is a parallelogram in (d, y).
std::vector<RadialNode> plane_nodes(const Axis& u, const Axis& v, Point origin,
                                    const QuadratureSpec& q, double t_max) {
  auto at = [&](double a, double b) {
    return Point{origin.x + a * u.dir.x + b * v.dir.x, origin.y + a * u.dir.y + b * v.dir.y};
  };
  const quad::ConvexPolygon poly =
      ccw({at(u.lo, v.lo), at(u.hi, v.lo), at(u.hi, v.hi), at(u.lo, v.hi)});
  const double det = u.dir.x * v.dir.y - u.dir.y * v.dir.x;
  auto density = [&](double x, double y) {
    const double dx = x - origin.x;
    const double dy = y - origin.y;
    const double a = (dx * v.dir.y - dy * v.dir.x) / det;
    const double b = (u.dir.x * dy - u.dir.y * dx) / det;
    if (a < u.lo || a > u.hi || b < v.lo || b > v.hi) return 0.0;
    return u.pdf(a) * v.pdf(b) / std::abs(det);
  };
  const double scale = std::min(u.scale, v.scale);
  quad::PolarOptions opt{q.radial_order, q.angular_order, radial_width(q, t_max, scale), scale};
  return quad::polar_nodes(poly, density, opt);
}

// Truncation at j = 0 further than this many widths from the mean holds
// under 3e-7 of the mass.
constexpr double kCutSigmas = 5.0;
// Largest delta_e phase spread averaged by Gauss-Hermite shifts.
constexpr double kMaxHermiteSpread = 8.0;

struct CollapsedScales {
  double narrowest = 0.0;
  bool cut_matters = false;
};

// Away from the j >= 0 cut the three-variable density is a Gaussian in
// (d, y); `narrowest` is its smallest principal width. Near the cut the sum
// j1 + j2 is pinned to within ~sqrt(2) sigma_e, which only matters when the
// cut carries non-negligible mass.
CollapsedScales collapsed_scales(const NoiseSpec& s) {
  const double v1 = s.sigma_j1 * s.sigma_j1;
  const double v2 = s.sigma_j2 * s.sigma_j2;
  const double cdd = 2.0 * s.sigma_e * s.sigma_e + 0.25 * (v1 + v2);
  const double cyy = 0.75 * (v1 + v2);
  const double cdy = -0.25 * kSqrt3 * (v1 - v2);
  const double half_trace = 0.5 * (cdd + cyy);
  return {std::sqrt(half_trace - std::hypot(0.5 * (cdd - cyy), cdy)),
          std::min(s.j01 / s.sigma_j1, s.j02 / s.sigma_j2) < kCutSigmas};
}

// Gauss-Hermite nodes needed to average over delta_e when its phase spread
// over the horizon is omega = 2 sigma_e t_max.
int hermite_order(const QuadratureSpec& q, double omega) {
  return (q.radial_order + 1) / 2 + static_cast<int>(std::ceil(0.25 * omega * omega));
}

// Magnetic noise much narrower than charge noise, with the j >= 0 cut in
// play: average the exact two-coupling measure over shifts of d by delta_e,
// which keeps the cut as a polygon edge instead of a steep ridge.
std::vector<RadialNode> shifted_plane_nodes(const ExchangeParams& p, const NoiseSpec& s,
                                            const QuadratureSpec& q, double t_max) {
  NoiseSpec couplings = s;
  couplings.sigma_e = 0.0;
  const quad::Rule gh = quad::gauss_hermite(hermite_order(q, 2.0 * s.sigma_e * t_max));
  std::vector<RadialNode> out;
  for (std::size_t k = 0; k < gh.size(); ++k) {
    Point origin;
    const auto axes =
        active_axes(couplings, q.truncation_width, origin, p.j_prime + 2.0 * s.sigma_e * gh.nodes[k]);
    const double w = gh.weights[k] / std::sqrt(std::numbers::pi);
    for (RadialNode n : plane_nodes(axes[0], axes[1], origin, q, t_max)) {
      n.mass *= w;
      n.amp_zero *= w;
      n.amp_sup *= w;
      out.push_back(n);
    }
  }
  return out;
}

// All three variables active: integrate j1 + j2 analytically, leaving a
// smooth density in (d, y) with a kink along y = 0.

std::vector<RadialNode> collapsed_nodes(const ExchangeParams& p, const NoiseSpec& s,
                                        const QuadratureSpec& q, double t_max) {
  const double w = q.truncation_width;
  const double lo1 = std::max(0.0, s.j01 - w * s.sigma_j1);
  const double hi1 = s.j01 + w * s.sigma_j1;
  const double lo2 = std::max(0.0, s.j02 - w * s.sigma_j2);
  const double hi2 = s.j02 + w * s.sigma_j2;
  const double spread = w * std::numbers::sqrt2 * s.sigma_e;
  const double d_lo = p.j_prime - 0.5 * (hi1 + hi2) - spread;
  const double d_hi = p.j_prime - 0.5 * (lo1 + lo2) + spread;
  const double y_lo = 0.5 * kSqrt3 * (lo1 - hi2);
  const double y_hi = 0.5 * kSqrt3 * (hi1 - lo2);

  auto density = [&](double x, double y) {
    return detuning_difference_density(x, 2.0 * y / kSqrt3, p.j_prime, s) * 2.0 / kSqrt3;
  };
  auto box = [](double x0, double x1, double y0, double y1) {
    return quad::ConvexPolygon{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  };
  const CollapsedScales sc = collapsed_scales(s);
  const double scale =
      sc.cut_matters ? std::min(sc.narrowest, std::numbers::sqrt2 * s.sigma_e) : sc.narrowest;
  quad::PolarOptions opt{q.radial_order, q.angular_order, radial_width(q, t_max, scale), scale};

  std::vector<quad::ConvexPolygon> pieces;
  if (y_lo < 0.0 && y_hi > 0.0) {
    pieces.push_back(box(d_lo, d_hi, y_lo, 0.0));
    pieces.push_back(box(d_lo, d_hi, 0.0, y_hi));
  } else {
    pieces.push_back(box(d_lo, d_hi, y_lo, y_hi));
  }
  std::vector<RadialNode> out;
  for (const auto& piece : pieces) {
    auto part = quad::polar_nodes(piece, density, opt);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// sum_k amp_k exp(i r_k t_n) on t_n = n dt, advancing each node by a fixed
// rotation and resynchronizing every kResync steps.
std::vector<std::complex<double>> fourier_sum(const std::vector<RadialNode>& nodes,
                                              bool superposition, const TimeGrid& grid) {
  const std::size_t n = grid.points;
  const double dt = grid.dt();
  std::vector<double> re(n, 0.0);
  std::vector<double> im(n, 0.0);
  for (const RadialNode& node : nodes) {
    const double amp = superposition ? node.amp_sup : node.amp_zero;
    if (amp == 0.0) continue;
    const std::complex<double> step = std::polar(1.0, node.r * dt);
    for (std::size_t start = 0; start < n; start += kResync) {
      std::complex<double> z = std::polar(amp, node.r * grid.at(start));
      const std::size_t stop = std::min(n, start + kResync);
      for (std::size_t k = start; k < stop; ++k) {
        re[k] += z.real();
        im[k] += z.imag();
        z *= step;
      }
    }
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = {re[k], im[k]};
  return out;
}

struct Evaluated {
  std::vector<double> values;
  std::vector<double> envelope;
};

Evaluated evaluate(const SpectralMeasure& m, InitialState initial, const TimeGrid& grid) {
  const bool sup = initial == InitialState::superposition;
  double a0 = 0.0;
  for (const RadialNode& node : m.nodes) a0 += sup ? node.amp_sup : node.amp_zero;
  const auto s = fourier_sum(m.nodes, sup, grid);
  Evaluated out;
  out.values.resize(grid.points);
  out.envelope.resize(grid.points);
  const double mass = m.total_mass;
  for (std::size_t k = 0; k < grid.points; ++k) {
    double v;
    double e;
    if (sup) {
      v = 0.5 + (a0 - s[k].real()) / (4.0 * mass);
      e = 0.5 + (a0 + std::abs(s[k])) / (4.0 * mass);
    } else {
      v = 1.0 - (a0 - s[k].real()) / (2.0 * mass);
      e = 1.0 - (a0 - std::abs(s[k])) / (2.0 * mass);
    }
    out.values[k] = std::clamp(v, 0.0, 1.0);
    out.envelope[k] = std::clamp(e, 0.0, 1.0);
  }
  return out;
}

}  // namespace

void QuadratureSpec::validate() const {
  if (radial_order < 1) throw InvalidParameter("radial_order", "must be >= 1");
  if (angular_order < 1) throw InvalidParameter("angular_order", "must be >= 1");
  if (!(truncation_width > 0.0) || !std::isfinite(truncation_width)) {
    throw InvalidParameter("truncation_width", "must be finite and > 0");
  }
}

void TimeGrid::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw InvalidParameter("t_max", "must be finite and > 0");
  }
  if (points < 2) throw InvalidParameter("points", "must be >= 2");
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(points);
  for (std::size_t k = 0; k < points; ++k) t[k] = at(k);
  return t;
}

std::string_view to_string(AverageMethod m) {
  return m == AverageMethod::quadrature ? "quadrature" : "monte-carlo";
}

double detuning_difference_density(double d, double delta, double j_prime, const NoiseSpec& s) {
  // Over x = (j1 + j2)/2 >= |delta|/2 the integrand is a product of three
  // Gaussians in x: j1 = x + delta/2, j2 = x - delta/2, delta_e = x - (j' - d).
  const std::array<double, 3> mean{s.j01 - 0.5 * delta, s.j02 + 0.5 * delta, j_prime - d};
  const std::array<double, 3> var{s.sigma_j1 * s.sigma_j1, s.sigma_j2 * s.sigma_j2,
                                  2.0 * s.sigma_e * s.sigma_e};
  double precision = 0.0;
  double weighted = 0.0;
  for (int k = 0; k < 3; ++k) {
    precision += 1.0 / var[k];
    weighted += mean[k] / var[k];
  }
  const double mu = weighted / precision;
  double spread = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int l = k + 1; l < 3; ++l) {
      const double diff = mean[k] - mean[l];
      spread += diff * diff / (var[k] * var[l]);
    }
  }
  spread /= precision;

  const double sqrt_pi = std::sqrt(std::numbers::pi);
  const double n1 =
      2.0 / (s.sigma_j1 * std::sqrt(2.0 * std::numbers::pi) *
             std::erfc(-s.j01 / (s.sigma_j1 * std::numbers::sqrt2)));
  const double n2 =
      2.0 / (s.sigma_j2 * std::sqrt(2.0 * std::numbers::pi) *
             std::erfc(-s.j02 / (s.sigma_j2 * std::numbers::sqrt2)));
  const double ne = 1.0 / (2.0 * s.sigma_e * sqrt_pi);
  const double lower = 0.5 * std::abs(delta);
  const double tail = std::sqrt(std::numbers::pi / (2.0 * precision)) *
                      std::erfc((lower - mu) * std::sqrt(0.5 * precision));
  return n1 * n2 * ne * std::exp(-0.5 * spread) * tail;
}

SpectralMeasure spectral_measure(const ExchangeParams& p, const NoiseSpec& spec,
                                 const QuadratureSpec& q, double t_max) {
  p.validate();
  spec.validate();
  q.validate();
  Point origin;
  const auto axes = active_axes(spec, q.truncation_width, origin, p.j_prime);

  SpectralMeasure m;
  switch (axes.size()) {
    case 0:
      m.nodes.push_back(point_node(origin.x, origin.y, 1.0));
      break;
    case 1:
      m.nodes = line_nodes(axes[0], origin, q, t_max);
      break;
    case 2:
      m.nodes = plane_nodes(axes[0], axes[1], origin, q, t_max);
      break;
    default: {
      const CollapsedScales sc = collapsed_scales(spec);
      const bool narrow_field = std::numbers::sqrt2 * spec.sigma_e < 0.25 * sc.narrowest;
      if (sc.cut_matters && narrow_field && 2.0 * spec.sigma_e * t_max <= kMaxHermiteSpread) {
        m.nodes = shifted_plane_nodes(p, spec, q, t_max);
      } else {
        m.nodes = collapsed_nodes(p, spec, q, t_max);
      }
      break;
    }
  }
  for (const auto& n : m.nodes) m.total_mass += n.mass;
  if (!(m.total_mass > 0.0)) {
    throw InvalidParameter("noise", "noise distribution has no mass inside the integration range");
  }
  return m;
}

ProbabilityTrace disorder_average_quadrature(const ExchangeParams& p, const NoiseSpec& spec,
                                             InitialState initial, const TimeGrid& grid,
                                             const QuadratureSpec& q) {
  grid.validate();
  const SpectralMeasure measure = spectral_measure(p, spec, q, grid.t_max);
  Evaluated ev = evaluate(measure, initial, grid);

  ProbabilityTrace trace;
  trace.times = grid.times();
  trace.values = std::move(ev.values);
  trace.envelope = std::move(ev.envelope);
  trace.initial = initial;
  trace.params = p;
  trace.noise = spec;
  trace.method = AverageMethod::quadrature;
  trace.quadrature = q;

  if (q.check_convergence) {
    QuadratureSpec fine = q;
    fine.radial_order *= 2;
    fine.angular_order *= 2;
    const Evaluated ref = evaluate(spectral_measure(p, spec, fine, grid.t_max), initial, grid);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.points; ++k) {
      worst = std::max(worst, std::abs(ref.values[k] - trace.values[k]));
    }
    trace.refinement_change = worst;
    trace.convergence_warning = worst > kConvergenceTolerance;
  }
  return trace;
}

std::pair<std::vector<double>, std::vector<double>> monte_carlo_points(
    const ExchangeParams& p, const NoiseSpec& spec, InitialState initial,
    const std::vector<double>& times, std::size_t n_samples, std::uint64_t seed) {
  p.validate();
  spec.validate();
  if (n_samples < 1) throw InvalidParameter("samples", "must be >= 1");
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0) throw InvalidParameter("t", "must be finite and >= 0");
  }

  const std::size_t n = times.size();
  std::vector<double> sum(n, 0.0);
  std::vector<double> sum_sq(n, 0.0);
  std::vector<double> block_sum(n);
  std::vector<double> block_sq(n);
  const auto seed_lo = static_cast<std::uint32_t>(seed);
  const auto seed_hi = static_cast<std::uint32_t>(seed >> 32);

  // Each block owns a generator seeded from (seed, block index), so results
  // do not depend on how blocks are scheduled.
  for (std::size_t first = 0; first < n_samples; first += kMcBlock) {
    const auto block = static_cast<std::uint32_t>(first / kMcBlock);
    std::seed_seq seq{seed_lo, seed_hi, block};
    std::mt19937_64 rng(seq);
    std::fill(block_sum.begin(), block_sum.end(), 0.0);
    std::fill(block_sq.begin(), block_sq.end(), 0.0);
    const std::size_t last = std::min(n_samples, first + kMcBlock);
    for (std::size_t s = first; s < last; ++s) {
      const NoiseSample draw = sample_noise(rng, spec);
      const Coefficients k =
          coefficients_unchecked(p.j_prime, p.ez, draw.j1, draw.j2, draw.delta_e);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = return_probability(initial, k, times[i]);
        block_sum[i] += v;
        block_sq[i] += v * v;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += block_sum[i];
      sum_sq[i] += block_sq[i];
    }
  }

  const auto count = static_cast<double>(n_samples);
  std::vector<double> mean(n);
  std::vector<double> stderr_(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = sum[i] / count;
    if (n_samples > 1) {
      const double var = std::max(0.0, (sum_sq[i] - count * mean[i] * mean[i]) / (count - 1.0));
      stderr_[i] = std::sqrt(var / count);
    }
  }
  return {mean, stderr_};
}

ProbabilityTrace disorder_average_mc(const ExchangeParams& p, const NoiseSpec& spec,
                                     InitialState initial, const TimeGrid& grid,
                                     std::size_t n_samples, std::uint64_t seed) {
  grid.validate();
  ProbabilityTrace trace;
  trace.times = grid.times();
  auto [mean, err] = monte_carlo_points(p, spec, initial, trace.times, n_samples, seed);
  trace.values = std::move(mean);
  trace.std_errors = std::move(err);
  trace.initial = initial;
  trace.params = p;
  trace.noise = spec;
  trace.method = AverageMethod::monte_carlo;
  trace.samples = n_samples;
  trace.seed = seed;
  return trace;
}

}  // namespace deoq
