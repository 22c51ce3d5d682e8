#pragma once

// Quasi-static disorder: a zero-mean Gaussian local field difference delta_e
// with standard deviation sqrt(2) sigma_e, and inter-dot couplings j1, j2
// drawn from Gaussians truncated to non-negative values.

#include <cmath>
#include <random>

namespace deoq {

struct NoiseSpec {
  double sigma_e = 0.0;
  double sigma_j1 = 0.0;
  double sigma_j2 = 0.0;
  double j01 = 0.5;
  double j02 = 1.5;

  /// Throws InvalidParameter naming the first negative or non-finite field.
  void validate() const;

  /// Sets sigma_j1 = sigma_j2 = sigma_j.
  static NoiseSpec symmetric(double sigma_e, double sigma_j, double j01 = 0.5, double j02 = 1.5) {
    return {sigma_e, sigma_j, sigma_j, j01, j02};
  }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Error function, absolute error below 1e-12.
double erf(double x);

/// Density of delta_e: exp(-x^2 / (4 sigma_e^2)) / (2 sigma_e sqrt(pi)).
/// sigma_e must be > 0; a zero width is a delta distribution and must be
/// handled by the caller.
double pdf_delta_e(double delta_e, double sigma_e);

/// Gaussian of mean j0 and width sigma restricted to j >= 0 and renormalized
/// by 2 / (1 + erf(j0 / (sigma sqrt 2))). Zero for j < 0.
double pdf_exchange(double j, double j0, double sigma);

struct NoiseSample {
  double j1 = 0.0;
  double j2 = 0.0;
  double delta_e = 0.0;
};

/// One draw of (j1, j2, delta_e). Truncated couplings use rejection of
/// negative draws, which is exact. Zero widths return the mean exactly.
template <class Rng>
NoiseSample sample_noise(Rng& rng, const NoiseSpec& spec) {
  std::normal_distribution<double> unit(0.0, 1.0);
  auto truncated = [&](double mean, double sigma) {
    if (sigma == 0.0) return mean;
    for (;;) {
      const double x = mean + sigma * unit(rng);
      if (x >= 0.0) return x;
    }
  };
  NoiseSample s;
  s.j1 = truncated(spec.j01, spec.sigma_j1);
  s.j2 = truncated(spec.j02, spec.sigma_j2);
  s.delta_e = spec.sigma_e == 0.0 ? 0.0 : std::sqrt(2.0) * spec.sigma_e * unit(rng);
  return s;
}

}  // namespace deoq
