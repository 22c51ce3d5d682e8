#pragma once

// Run configuration, serialization and the four command-line commands.
//
// Configs are single JSON documents; unknown keys are rejected and every
// value is validated with the owning module's rules. Outputs carry numbers
// with 9 significant digits and end with an echo of the resolved config, so
// re-running the echo reproduces the file byte for byte.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deoq/analysis.hpp"
#include "deoq/disorder.hpp"
#include "deoq/sweep.hpp"

namespace deoq::io {

using Json = nlohmann::json;

inline constexpr std::string_view kSchemaVersion = "1";
inline constexpr std::string_view kTraceHeader = "t,t_seconds,p,p_stderr";
inline constexpr std::string_view kSweepHeader =
    "sigma_e,sigma_j,j0_t2_star,t2_star_seconds,q,alpha,status";
inline constexpr std::string_view kMaterialsHeader =
    "material,sigma_j_ev,initial_condition,t2_star_seconds";
/// Prefix of the trailing comment lines of CSV outputs.
inline constexpr std::string_view kInputPrefix = "# input: ";
inline constexpr std::string_view kResultPrefix = "# result: ";

enum class Command { simulate, fit, sweep, materials };

Command command_from_string(std::string_view s);
std::string_view to_string(Command c);

/// Command-line values that take precedence over the config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<AverageMethod> method;
  std::optional<std::size_t> samples;
};

AverageMethod method_from_string(std::string_view s);

/// Noise means are the configured couplings j1 and j2.
struct SimulateConfig {
  ExchangeParams params;
  double sigma_e = 0.0;
  double sigma_j1 = 0.0;
  double sigma_j2 = 0.0;
  InitialState initial = InitialState::zero;
  TimeGrid time;
  QuadratureSpec quadrature;
  AverageMethod method = AverageMethod::quadrature;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::optional<double> j0_ev;  // fills t_seconds when set

  NoiseSpec noise() const;
};

/// Either a trace file or an inline simulation to fit.
struct FitConfig {
  std::optional<std::string> trace;
  std::optional<SimulateConfig> simulation;
  /// "auto" pins the start at 1 for traces known to start in |0>.
  std::optional<double> fixed_start;
  bool auto_start = true;
  double j0_ev = 1e-6;
};

struct SweepConfig {
  SweepGrid grid;
  double j0_ev = 1e-6;
};

SimulateConfig parse_simulate(const Json& j, const Overrides& o = {});
FitConfig parse_fit(const Json& j, const Overrides& o = {});
SweepConfig parse_sweep(const Json& j, const Overrides& o = {});
MaterialConfig parse_materials(const Json& j, const Overrides& o = {});

Json to_json(const SimulateConfig& c);
Json to_json(const FitConfig& c);
Json to_json(const SweepConfig& c);
Json to_json(const MaterialConfig& c);

/// "%.9g" with "inf", "-inf" and "nan" spelled out and negative zero as 0.
std::string format_number(double x);
/// x rounded to 9 significant digits; non-finite values become null.
Json json_number(double x);

std::string trace_csv(const ProbabilityTrace& trace, const SimulateConfig& config);
std::string sweep_csv(const std::vector<SweepCell>& cells, const SweepConfig& config);
std::string materials_csv(const std::vector<MaterialRow>& rows, const MaterialConfig& config);

/// Parsed trace file. `input` is the echoed config when present.
struct TraceFile {
  std::vector<double> times;
  std::vector<double> values;
  std::optional<Json> input;
};

TraceFile parse_trace_csv(std::string_view text);

/// Fit of a trace as stored in a file, so a trace fitted in memory and the
/// same trace re-read from disk give identical reports.
EnvelopeFit fit_trace(const TraceFile& trace, const FitConfig& config);
Json fit_report(const EnvelopeFit& fit, const FitConfig& config, std::size_t envelope_points);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Runs one command on a parsed config and returns the output file content.
/// Relative trace paths resolve against `base_dir`. Warnings (such as an
/// unconverged quadrature) are appended to `warnings`.
std::string run_command(Command cmd, const Json& config, const Overrides& overrides,
                        const std::filesystem::path& base_dir,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace deoq::io
