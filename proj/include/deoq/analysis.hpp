#pragma once

// Coherence-time extraction: upper envelope of an averaged trace, a
// stretched-exponential fit
//
//   F(t) = p_inf + (p_start - p_inf) exp(-(t / T2*)^alpha),
//
// the quality factor Q = exp(-1 / (j0 T2*)) and conversion to seconds.

#include <optional>
#include <string_view>
#include <vector>

#include "deoq/disorder.hpp"

namespace deoq {

struct EnvelopePoint {
  double t = 0.0;
  double value = 0.0;
};

/// fit_failed is produced by analyze_trace when no fit start succeeds.
enum class FitStatus { converged, no_decay, insufficient_peaks, fit_failed };

std::string_view to_string(FitStatus s);
FitStatus fit_status_from_string(std::string_view s);

struct EnvelopeFit {
  double p_infinity = 0.0;
  double p_start = 1.0;
  double t2_star = 0.0;  // +inf for no_decay, NaN when no fit was made
  double alpha = 1.5;
  double sse = 0.0;
  FitStatus status = FitStatus::insufficient_peaks;

  double evaluate(double t) const;
};

/// Fewer envelope points than this cannot constrain the four fit parameters.
inline constexpr std::size_t kMinEnvelopePoints = 4;

/// Samples closer than this are treated as equal when locating maxima, so
/// floating-point noise on a flat tail does not create peaks.
inline constexpr double kEnvelopeTolerance = 1e-12;

/// Upper envelope from raw maxima: the t = 0 sample when it is not below its
/// neighbour, then every strict local maximum. A flat top contributes its
/// midpoint. Requires at least three samples.
std::vector<EnvelopePoint> extract_upper_envelope(const ProbabilityTrace& trace);
std::vector<EnvelopePoint> extract_upper_envelope(const std::vector<double>& times,
                                                  const std::vector<double>& values);

/// Least-squares fit of F to the points by multi-start bounded Nelder-Mead.
/// `fixed_start` pins p_start (use 1 for traces that start in |0>).
/// Throws FitError if no start yields a finite objective.
EnvelopeFit fit_envelope(const std::vector<EnvelopePoint>& points,
                         std::optional<double> fixed_start = std::nullopt);

struct TraceAnalysis {
  EnvelopeFit fit;
  std::size_t envelope_points = 0;
};

/// Envelope extraction and fit of a whole trace. A trace whose total range is
/// below the no-decay amplitude is reported as no-decay without fitting, and a
/// failed optimizer yields status fit_failed instead of throwing. alpha is
/// NaN unless the fit converged.
TraceAnalysis analyze_trace(const std::vector<double>& times, const std::vector<double>& values,
                            std::optional<double> fixed_start = std::nullopt);

/// Q = exp(-1 / (j0 T2*)); 1 for an infinite coherence time.
double quality_factor(double j0_t2_star);

/// hbar in eV s.
inline constexpr double kHbarEvSeconds = 6.582119569e-16;

struct PhysicalScale {
  double j0_ev = 1e-6;

  void validate() const;
  /// Seconds per dimensionless time unit, hbar / j0.
  double time_unit_s() const { return kHbarEvSeconds / j0_ev; }
};

double to_physical_time(double t_dimensionless, const PhysicalScale& scale);

}  // namespace deoq
