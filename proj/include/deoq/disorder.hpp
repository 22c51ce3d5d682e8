#pragma once

// Disorder-averaged return probabilities.
//
// For one noise realization the return probabilities depend only on the
// point (d, y) = (a - b + delta_e, 2c). Writing r = |(d, y)| and theta for its
// polar angle,
//
//   P_zero(t) = 1 - sin^2(theta) (1 - cos rt) / 2
//   P_sup(t)  = 1/2 + sin(2 theta) (1 - cos rt) / 4
//
// so the average is a one-dimensional Fourier integral over r of the noise
// density integrated around circles in the (d, y) plane. The deterministic
// method builds that radial measure by Gauss-Legendre quadrature in polar
// coordinates; the Monte Carlo method samples the noise directly and serves
// as an independent check.

#include <cstdint>
#include <vector>

#include "deoq/noise.hpp"
#include "deoq/quadrature.hpp"
#include "deoq/qubit_core.hpp"

namespace deoq {

struct QuadratureSpec {
  int radial_order = 41;   // Gauss-Legendre nodes per radial panel
  int angular_order = 41;  // Gauss-Legendre nodes per angular panel
  double truncation_width = 6.0;  // integration half-range in standard deviations
  bool check_convergence = true;  // re-run at doubled orders and compare

  void validate() const;

  friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

/// Uniform grid t_k = k * t_max / (points - 1), k = 0 .. points-1.
struct TimeGrid {
  double t_max = 200.0;
  std::size_t points = 8001;

  void validate() const;
  double dt() const { return t_max / static_cast<double>(points - 1); }
  double at(std::size_t k) const { return static_cast<double>(k) * dt(); }
  std::vector<double> times() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

enum class AverageMethod { quadrature, monte_carlo };

std::string_view to_string(AverageMethod m);

/// Maximum change of any point under doubled quadrature orders above which a
/// trace is flagged as unconverged.
inline constexpr double kConvergenceTolerance = 1e-5;

struct ProbabilityTrace {
  std::vector<double> times;
  std::vector<double> values;
  /// Upper envelope from the modulus of the averaged oscillation, filled by
  /// the quadrature method only.
  std::vector<double> envelope;
  /// Per-point standard error, filled by the Monte Carlo method only.
  std::vector<double> std_errors;

  InitialState initial = InitialState::zero;
  ExchangeParams params;
  NoiseSpec noise;
  AverageMethod method = AverageMethod::quadrature;

  QuadratureSpec quadrature;
  double refinement_change = 0.0;
  bool convergence_warning = false;

  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Radial spectral measure of the noise: nodes r_k with mass m_k and the two
/// angular moments. total_mass is close to 1 and is used to renormalize.
struct SpectralMeasure {
  std::vector<quad::RadialNode> nodes;
  double total_mass = 0.0;
};

/// Builds the radial measure resolving oscillations up to time t_max.
SpectralMeasure spectral_measure(const ExchangeParams& p, const NoiseSpec& spec,
                                 const QuadratureSpec& q, double t_max);

/// Density of (d, delta) = (j' - (j1 + j2)/2 + delta_e, j1 - j2) when all three
/// noise sources are active, with the sum j1 + j2 integrated out analytically.
double detuning_difference_density(double d, double delta, double j_prime, const NoiseSpec& spec);

ProbabilityTrace disorder_average_quadrature(const ExchangeParams& p, const NoiseSpec& spec,
                                             InitialState initial, const TimeGrid& grid,
                                             const QuadratureSpec& q = {});

ProbabilityTrace disorder_average_mc(const ExchangeParams& p, const NoiseSpec& spec,
                                     InitialState initial, const TimeGrid& grid,
                                     std::size_t n_samples, std::uint64_t seed);

/// Monte Carlo estimate at arbitrary (not necessarily uniform) times.
/// Returns {means, standard errors}.
std::pair<std::vector<double>, std::vector<double>> monte_carlo_points(
    const ExchangeParams& p, const NoiseSpec& spec, InitialState initial,
    const std::vector<double>& times, std::size_t n_samples, std::uint64_t seed);

}  // namespace deoq
