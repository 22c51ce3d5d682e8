#include "deoq/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "deoq/error.hpp"

namespace deoq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlphaMin = 0.5;
constexpr double kAlphaMax = 4.0;
constexpr double kMinAmplitude = 0.02;

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct Box {
  Vec<N> lo;
  Vec<N> hi;

  Vec<N> project(Vec<N> x) const {
    for (std::size_t i = 0; i < N; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
  }
};

template <std::size_t N>
struct Minimum {
  Vec<N> x;
  double f = kInf;
};

// Nelder-Mead on a box; trial points are projected onto the box.
template <std::size_t N, class F>
Minimum<N> nelder_mead(const F& f, Vec<N> start, const Box<N>& box, int max_evals) {
  std::array<Vec<N>, N + 1> pts;
  std::array<double, N + 1> val;
  pts[0] = box.project(start);
  for (std::size_t i = 0; i < N; ++i) {
    Vec<N> p = pts[0];
    const double step = 0.1 * (box.hi[i] - box.lo[i]);
    p[i] = p[i] + step <= box.hi[i] ? p[i] + step : p[i] - step;
    pts[i + 1] = box.project(p);
  }
  int evals = 0;
  auto eval = [&](const Vec<N>& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  for (std::size_t i = 0; i <= N; ++i) val[i] = eval(pts[i]);

  std::array<std::size_t, N + 1> order;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[N - 1];

    double size = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
      for (std::size_t d = 0; d < N; ++d) {
        size = std::max(size, std::abs(pts[i][d] - pts[best][d]) / (box.hi[d] - box.lo[d]));
      }
    }
    if (size < 1e-13 || val[worst] - val[best] <= 1e-16 * val[best]) break;

    Vec<N> centroid{};
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < N; ++d) centroid[d] += pts[i][d] / N;
    }
    auto along = [&](double coef) {
      Vec<N> x;
      for (std::size_t d = 0; d < N; ++d) x[d] = centroid[d] + coef * (pts[worst][d] - centroid[d]);
      return box.project(x);
    };

    const Vec<N> reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < val[best]) {
      const Vec<N> expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        val[worst] = fe;
      } else {
        pts[worst] = reflected;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = reflected;
      val[worst] = fr;
      continue;
    }
    const Vec<N> contracted = fr < val[worst] ? along(-0.5) : along(0.5);
    const double fc = eval(contracted);
    if (fc < std::min(fr, val[worst])) {
      pts[worst] = contracted;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < N; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
      pts[i] = box.project(pts[i]);
      val[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(val.begin(), val.end());
  return {pts[static_cast<std::size_t>(it - val.begin())], *it};
}

// Restarts from the incumbent until restarting stops helping.
template <std::size_t N, class F>
Minimum<N> polish(const F& f, Minimum<N> m, const Box<N>& box) {
  for (int round = 0; round < 5; ++round) {
    Minimum<N> next = nelder_mead<N>(f, m.x, box, 4000);
    if (!(next.f < m.f)) break;
    const bool small = m.f - next.f <= 1e-12 * m.f;
    m = next;
    if (small) break;
  }
  return m;
}

double sse_of(const std::vector<EnvelopePoint>& pts, double p_inf, double p_start, double t2,
              double alpha) {
  double s = 0.0;
  for (const auto& p : pts) {
    const double model = p_inf + (p_start - p_inf) * std::exp(-std::pow(p.t / t2, alpha));
    s += (model - p.value) * (model - p.value);
  }
  return s;
}

// First time the envelope falls to `level`, interpolated between samples.
double crossing_time(const std::vector<EnvelopePoint>& pts, double level) {
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k].value <= level) {
      const double v0 = pts[k - 1].value;
      const double v1 = pts[k].value;
      const double frac = v0 > v1 ? (v0 - level) / (v0 - v1) : 1.0;
      return pts[k - 1].t + std::clamp(frac, 0.0, 1.0) * (pts[k].t - pts[k - 1].t);
    }
  }
  return pts.back().t;
}

}  // namespace

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::no_decay: return "no-decay";
    case FitStatus::insufficient_peaks: return "insufficient-peaks";
    case FitStatus::fit_failed: return "fit-failed";
  }
  return "unknown";
}

FitStatus fit_status_from_string(std::string_view s) {
  if (s == "converged") return FitStatus::converged;
  if (s == "no-decay") return FitStatus::no_decay;
  if (s == "insufficient-peaks") return FitStatus::insufficient_peaks;
  if (s == "fit-failed") return FitStatus::fit_failed;
  throw InvalidParameter("status", "unknown fit status '" + std::string(s) + "'");
}

double EnvelopeFit::evaluate(double t) const {
  if (!std::isfinite(t2_star)) return p_start;
  return p_infinity + (p_start - p_infinity) * std::exp(-std::pow(t / t2_star, alpha));
}

std::vector<EnvelopePoint> extract_upper_envelope(const std::vector<double>& times,
                                                  const std::vector<double>& values) {
  if (times.size() != values.size()) {
    throw InvalidParameter("trace", "times and values differ in length");
  }
  const std::size_t n = values.size();
  if (n < 3) throw InvalidParameter("trace", "need at least 3 samples for an envelope");

  // Differences below kEnvelopeTolerance are rounding noise and count as flat.
  auto above = [](double a, double b) { return a > b + kEnvelopeTolerance; };
  std::vector<EnvelopePoint> out;
  if (!above(values[1], values[0])) out.push_back({times[0], values[0]});
  std::size_t k = 1;
  while (k + 1 < n) {
    if (!above(values[k], values[k - 1])) {
      ++k;
      continue;
    }
    std::size_t m = k;
    while (m + 1 < n && std::abs(values[m + 1] - values[k]) <= kEnvelopeTolerance) ++m;
    if (m + 1 < n && above(values[k], values[m + 1])) {
      const std::size_t mid = (k + m) / 2;
      out.push_back({0.5 * (times[k] + times[m]), values[mid]});
    }
    k = m + 1;
  }
  return out;
}

std::vector<EnvelopePoint> extract_upper_envelope(const ProbabilityTrace& trace) {
  return extract_upper_envelope(trace.times, trace.values);
}

EnvelopeFit fit_envelope(const std::vector<EnvelopePoint>& points,
                         std::optional<double> fixed_start) {
  EnvelopeFit fit;
  if (points.size() < kMinEnvelopePoints) {
    fit.status = FitStatus::insufficient_peaks;
    fit.t2_star = std::numeric_limits<double>::quiet_NaN();
    fit.sse = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k].t) || !std::isfinite(points[k].value) || points[k].t < 0.0 ||
        (k > 0 && !(points[k].t > points[k - 1].t))) {
      throw InvalidParameter("points", "times must be finite, non-negative and increasing");
    }
  }
  if (fixed_start && !(*fixed_start >= 0.0 && *fixed_start <= 1.0)) {
    throw InvalidParameter("fixed_start", "must lie in [0, 1]");
  }

  const double t_max = points.back().t;
  const std::size_t tail = std::max<std::size_t>(1, points.size() / 10);
  double tail_mean = 0.0;
  for (std::size_t k = points.size() - tail; k < points.size(); ++k) tail_mean += points[k].value;
  tail_mean /= static_cast<double>(tail);

  const double start_guess = fixed_start.value_or(std::clamp(points.front().value, 0.0, 1.0));
  const double inf_guess = std::clamp(tail_mean, 0.0, start_guess);
  const double t2_guess = std::max(
      crossing_time(points, inf_guess + (start_guess - inf_guess) / std::exp(1.0)),
      1e-3 * t_max);

  const double log_t_lo = std::log(1e-6 * t_max);
  const double log_t_hi = std::log(10.0 * t_max);
  const std::array<std::array<double, 2>, 6> starts{{{t2_guess, 1.5},
                                                     {t2_guess, 1.0},
                                                     {t2_guess, 2.0},
                                                     {t2_guess / 3.0, 1.5},
                                                     {t2_guess * 3.0, 1.5},
                                                     {t2_guess, 3.0}}};

  double best = kInf;
  if (fixed_start) {
    const double ps = *fixed_start;
    const Box<3> box{{0.0, log_t_lo, kAlphaMin}, {ps, log_t_hi, kAlphaMax}};
    auto f = [&](const Vec<3>& x) { return sse_of(points, x[0], ps, std::exp(x[1]), x[2]); };
    Minimum<3> m;
    for (const auto& s : starts) {
      auto cand = nelder_mead<3>(f, {inf_guess, std::log(s[0]), s[1]}, box, 4000);
      if (cand.f < m.f) m = cand;
    }
    if (std::isfinite(m.f)) {
      m = polish<3>(f, m, box);
      fit = {m.x[0], ps, std::exp(m.x[1]), m.x[2], m.f, FitStatus::converged};
      best = m.f;
    }
  } else {
    const Box<4> box{{0.0, 0.0, log_t_lo, kAlphaMin}, {1.0, 1.0, log_t_hi, kAlphaMax}};
    auto unpack_start = [](const Vec<4>& x) { return x[0] + x[1] * (1.0 - x[0]); };
    auto f = [&](const Vec<4>& x) {
      return sse_of(points, x[0], unpack_start(x), std::exp(x[2]), x[3]);
    };
    const double frac0 = inf_guess < 1.0 ? (start_guess - inf_guess) / (1.0 - inf_guess) : 0.0;
    Minimum<4> m;
    for (const auto& s : starts) {
      auto cand = nelder_mead<4>(f, {inf_guess, frac0, std::log(s[0]), s[1]}, box, 4000);
      if (cand.f < m.f) m = cand;
    }
    if (std::isfinite(m.f)) {
      m = polish<4>(f, m, box);
      fit = {m.x[0], unpack_start(m.x), std::exp(m.x[2]), m.x[3], m.f, FitStatus::converged};
      best = m.f;
    }
  }
  if (!std::isfinite(best)) throw FitError("envelope fit failed from every start");

  if (fit.p_start - fit.p_infinity < kMinAmplitude || fit.t2_star > 5.0 * t_max) {
    fit.status = FitStatus::no_decay;
    fit.t2_star = kInf;
  }
  return fit;
}

TraceAnalysis analyze_trace(const std::vector<double>& times, const std::vector<double>& values,
                            std::optional<double> fixed_start) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  TraceAnalysis out;
  if (!values.empty()) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi - *lo < kMinAmplitude) {
      out.envelope_points = extract_upper_envelope(times, values).size();
      const double top = fixed_start.value_or(std::clamp(*hi, 0.0, 1.0));
      out.fit = {top, top, kInf, kNaN, 0.0, FitStatus::no_decay};
      return out;
    }
  }
  const auto points = extract_upper_envelope(times, values);
  out.envelope_points = points.size();
  try {
    out.fit = fit_envelope(points, fixed_start);
  } catch (const FitError&) {
    out.fit = {kNaN, kNaN, kNaN, kNaN, kNaN, FitStatus::fit_failed};
  }
  if (out.fit.status != FitStatus::converged) out.fit.alpha = kNaN;
  return out;
}

double quality_factor(double j0_t2_star) {
  if (std::isinf(j0_t2_star) && j0_t2_star > 0.0) return 1.0;
  if (!(j0_t2_star > 0.0)) throw InvalidParameter("j0_t2_star", "must be > 0");
  return std::exp(-1.0 / j0_t2_star);
}

void PhysicalScale::validate() const {
  if (!(j0_ev > 0.0) || !std::isfinite(j0_ev)) {
    throw InvalidParameter("j0_ev", "must be finite and > 0");
  }
}

double to_physical_time(double t_dimensionless, const PhysicalScale& scale) {
  scale.validate();
  return t_dimensionless * scale.time_unit_s();
}

}  // namespace deoq
