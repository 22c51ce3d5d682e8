#pragma once

// Coherence-time maps over (sigma_e, sigma_j) and the material comparison.

#include <cstddef>
#include <string>
#include <vector>

#include "deoq/analysis.hpp"
#include "deoq/disorder.hpp"

namespace deoq {

/// Noise widths in units of j0, applied as sigma_j1 = sigma_j2 = sigma_j.
struct SweepGrid {
  std::vector<double> sigma_e_values{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> sigma_j_values{0.0, 0.05, 0.1, 0.2, 0.3, 0.5};
  InitialState initial = InitialState::zero;
  ExchangeParams params;
  TimeGrid time;
  QuadratureSpec quadrature;

  /// Value lists must be non-empty, non-negative and strictly increasing.
  void validate() const;
};

struct SweepCell {
  double sigma_e = 0.0;
  double sigma_j = 0.0;
  double j0_t2_star = 0.0;  // +inf for no-decay, NaN without a fit
  double q = 0.0;           // NaN without a fit
  double alpha = 0.0;
  FitStatus status = FitStatus::insufficient_peaks;
  bool convergence_warning = false;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

/// Average, extract the raw-maxima envelope, fit, and compute Q. Traces
/// starting in |0> pin the fitted start at 1. A failed fit is reported in
/// the status rather than thrown.
SweepCell run_cell(double sigma_e, double sigma_j, const SweepGrid& config);

/// Worker count: DEOQ_WORKERS when set to a positive integer, otherwise the
/// hardware concurrency.
std::size_t default_workers();

/// One cell per (sigma_e, sigma_j), row-major by sigma_e then sigma_j.
/// The result does not depend on `workers` (0 selects default_workers()).
std::vector<SweepCell> run_sweep(const SweepGrid& grid, std::size_t workers = 0);

struct MaterialPreset {
  std::string name;
  double sigma_e_floor_ev = 0.0;

  void validate() const;
};

/// 28Si (no nuclear spins), natural Si (3 neV) and GaAs (100 neV).
std::vector<MaterialPreset> default_presets();

/// 20 values spaced logarithmically from 0.003 to 0.5 micro-eV, in eV.
std::vector<double> default_material_sigma_j_ev();

struct MaterialConfig {
  std::vector<MaterialPreset> presets = default_presets();
  std::vector<double> sigma_j_values_ev = default_material_sigma_j_ev();
  PhysicalScale scale;
  bool both_initial_conditions = false;
  ExchangeParams params;
  QuadratureSpec quadrature;
  /// Minimum time horizon and grid spacing in units of hbar/j0. Weak noise
  /// extends the horizon, see material_time_grid.
  double min_t_max = 200.0;
  double time_step = 0.025;

  void validate() const;
};

/// Horizon long enough to see the decay: max(min_t_max, 8 / w) where w is the
/// larger of the two dimensionless widths, at the configured spacing.
TimeGrid material_time_grid(double sigma_e, double sigma_j, const MaterialConfig& config);

struct MaterialRow {
  std::string material;
  double sigma_j_ev = 0.0;
  InitialState initial = InitialState::zero;
  double j0_t2_star = 0.0;
  double t2_star_seconds = 0.0;
  FitStatus status = FitStatus::insufficient_peaks;

  friend bool operator==(const MaterialRow&, const MaterialRow&) = default;
};

/// Rows ordered by preset, then initial condition (zero first), then sigma_j.
std::vector<MaterialRow> material_comparison(const MaterialConfig& config,
                                             std::size_t workers = 0);

}  // namespace deoq
