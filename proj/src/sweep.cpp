#include "deoq/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <thread>

#include "deoq/error.hpp"

namespace deoq {

namespace {

void validate_axis(const std::vector<double>& values, const char* field) {
  if (values.empty()) throw InvalidParameter(field, "must not be empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw InvalidParameter(field, "values must be finite and >= 0");
    }
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw InvalidParameter(field, "values must be strictly increasing");
    }
  }
}

// Runs task(i) for i in [0, n) on up to `workers` threads. The first
// exception is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto loop = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        task(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SweepCell fit_cell(double sigma_e, double sigma_j, const SweepGrid& config) {
  SweepCell cell{sigma_e, sigma_j};
  const auto trace = disorder_average_quadrature(
      config.params, NoiseSpec::symmetric(sigma_e, sigma_j, config.params.j1, config.params.j2),
      config.initial, config.time,
      config.quadrature);
  cell.convergence_warning = trace.convergence_warning;

  const std::optional<double> start =
      config.initial == InitialState::zero ? std::optional<double>(1.0) : std::nullopt;
  const EnvelopeFit fit = analyze_trace(trace.times, trace.values, start).fit;
  cell.status = fit.status;
  cell.j0_t2_star = fit.t2_star;
  cell.alpha = fit.alpha;
  const bool has_time = fit.status == FitStatus::converged || fit.status == FitStatus::no_decay;
  cell.q = has_time ? quality_factor(fit.t2_star) : std::numeric_limits<double>::quiet_NaN();
  return cell;
}

}  // namespace

void SweepGrid::validate() const {
  validate_axis(sigma_e_values, "sigma_e_values");
  validate_axis(sigma_j_values, "sigma_j_values");
  params.validate();
  time.validate();
  quadrature.validate();
}

SweepCell run_cell(double sigma_e, double sigma_j, const SweepGrid& config) {
  NoiseSpec::symmetric(sigma_e, sigma_j, config.params.j1, config.params.j2).validate();
  config.params.validate();
  config.time.validate();
  config.quadrature.validate();
  return fit_cell(sigma_e, sigma_j, config);
}

std::size_t default_workers() {
  if (const char* env = std::getenv("DEOQ_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepCell> run_sweep(const SweepGrid& grid, std::size_t workers) {
  grid.validate();
  const std::size_t cols = grid.sigma_j_values.size();
  std::vector<SweepCell> cells(grid.sigma_e_values.size() * cols);
  parallel_for(cells.size(), workers ? workers : default_workers(), [&](std::size_t i) {
    cells[i] = fit_cell(grid.sigma_e_values[i / cols], grid.sigma_j_values[i % cols], grid);
  });
  return cells;
}

void MaterialPreset::validate() const {
  if (name.empty()) throw InvalidParameter("name", "preset name must not be empty");
  if (!std::isfinite(sigma_e_floor_ev) || sigma_e_floor_ev < 0.0) {
    throw InvalidParameter("sigma_e_floor_ev", "must be finite and >= 0");
  }
}

std::vector<MaterialPreset> default_presets() {
  return {{"28Si", 0.0}, {"Si", 3e-9}, {"GaAs", 1e-7}};
}

std::vector<double> default_material_sigma_j_ev() {
  constexpr int n = 20;
  const double lo = std::log(0.003e-6);
  const double hi = std::log(0.5e-6);
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = std::exp(lo + (hi - lo) * k / (n - 1));
  out.front() = 0.003e-6;
  out.back() = 0.5e-6;
  return out;
}

void MaterialConfig::validate() const {
  if (presets.empty()) throw InvalidParameter("presets", "must not be empty");
  for (const auto& p : presets) p.validate();
  validate_axis(sigma_j_values_ev, "sigma_j_values_ev");
  scale.validate();
  params.validate();
  quadrature.validate();
  if (!(min_t_max > 0.0) || !std::isfinite(min_t_max)) {
    throw InvalidParameter("min_t_max", "must be finite and > 0");
  }
  if (!(time_step > 0.0) || !(time_step < min_t_max)) {
    throw InvalidParameter("time_step", "must be > 0 and below min_t_max");
  }
}

TimeGrid material_time_grid(double sigma_e, double sigma_j, const MaterialConfig& config) {
  const double width = std::max(sigma_e, sigma_j);
  const double t_max = width > 0.0 ? std::max(config.min_t_max, 8.0 / width) : config.min_t_max;
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / config.time_step));
  return {static_cast<double>(steps) * config.time_step, steps + 1};
}

std::vector<MaterialRow> material_comparison(const MaterialConfig& config, std::size_t workers) {
  config.validate();
  std::vector<InitialState> inits{InitialState::zero};
  if (config.both_initial_conditions) inits.push_back(InitialState::superposition);

  std::vector<MaterialRow> rows;
  std::vector<double> floors;
  for (const auto& preset : config.presets) {
    for (const auto init : inits) {
      for (const double sj : config.sigma_j_values_ev) {
        rows.push_back({preset.name, sj, init});
        floors.push_back(preset.sigma_e_floor_ev);
      }
    }
  }
  const double j0 = config.scale.j0_ev;

  parallel_for(rows.size(), workers ? workers : default_workers(), [&](std::size_t i) {
    MaterialRow& row = rows[i];
    const double se = floors[i] / j0;
    const double sj = row.sigma_j_ev / j0;
    SweepGrid cfg;
    cfg.initial = row.initial;
    cfg.params = config.params;
    cfg.quadrature = config.quadrature;
    cfg.time = material_time_grid(se, sj, config);
    const SweepCell cell = fit_cell(se, sj, cfg);
    row.status = cell.status;
    row.j0_t2_star = cell.j0_t2_star;
    row.t2_star_seconds = cell.j0_t2_star * config.scale.time_unit_s();
  });
  return rows;
}

}  // namespace deoq
