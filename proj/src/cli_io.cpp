#include "deoq/cli_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "deoq/error.hpp"

namespace deoq::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed access to one JSON object, with dotted field paths in every error.
class Section {
 public:
  Section(const Json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw InvalidParameter(path_.empty() ? "config" : path_, "must be a JSON object");
    }
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) throw InvalidParameter(join(path_, key), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  bool is_null(const std::string& key) const { return has(key) && j_.at(key).is_null(); }
  const Json& at(const std::string& key) const { return j_.at(key); }
  std::string field(const std::string& key) const { return join(path_, key); }

  void number(const std::string& key, double& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw InvalidParameter(field(key), "must be a number");
    out = v.get<double>();
  }

  template <class Int>
  void integer(const std::string& key, Int& out) const {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) throw InvalidParameter(field(key), "must be an integer");
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (!std::in_range<Int>(u)) throw InvalidParameter(field(key), "is too large");
      out = static_cast<Int>(u);
      return;
    }
    const auto i = v.get<std::int64_t>();
    if constexpr (std::is_unsigned_v<Int>) {
      if (i < 0) throw InvalidParameter(field(key), "must be non-negative");
    }
    if (!std::in_range<Int>(i)) throw InvalidParameter(field(key), "is out of range");
    out = static_cast<Int>(i);
  }

  void boolean(const std::string& key, bool& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) throw InvalidParameter(field(key), "must be true or false");
    out = j_.at(key).get<bool>();
  }

  std::optional<std::string> string(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    if (!j_.at(key).is_string()) throw InvalidParameter(field(key), "must be a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw InvalidParameter(field(key), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw InvalidParameter(field(key), "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
};

// Runs a module validator and prefixes the reported field with `path`.
template <class F>
void validated(const std::string& path, F&& check) {
  try {
    check();
  } catch (const InvalidParameter& e) {
    const std::string what = e.what();
    const std::string detail = what.substr(std::min(what.size(), e.field().size() + 2));
    throw InvalidParameter(join(path, e.field()), detail);
  }
}

ExchangeParams parse_params(const Section& root, const std::string& key) {
  ExchangeParams p;
  if (!root.has(key)) return p;
  const Section s(root.at(key), root.field(key), {"j_prime", "j1", "j2", "ez"});
  s.number("j_prime", p.j_prime);
  s.number("j1", p.j1);
  s.number("j2", p.j2);
  s.number("ez", p.ez);
  validated(root.field(key), [&] { p.validate(); });
  return p;
}

TimeGrid parse_time(const Section& root, const std::string& key) {
  TimeGrid g;
  if (!root.has(key)) return g;
  const Section s(root.at(key), root.field(key), {"t_max", "points"});
  s.number("t_max", g.t_max);
  s.integer("points", g.points);
  validated(root.field(key), [&] { g.validate(); });
  return g;
}

QuadratureSpec parse_quadrature(const Section& root, const std::string& key) {
  QuadratureSpec q;
  if (!root.has(key)) return q;
  const Section s(root.at(key), root.field(key),
                  {"radial_order", "angular_order", "truncation_width", "check_convergence"});
  s.integer("radial_order", q.radial_order);
  s.integer("angular_order", q.angular_order);
  s.number("truncation_width", q.truncation_width);
  s.boolean("check_convergence", q.check_convergence);
  validated(root.field(key), [&] { q.validate(); });
  return q;
}

InitialState parse_initial(const Section& s, const std::string& key) {
  const auto v = s.string(key);
  if (!v) return InitialState::zero;
  try {
    return initial_state_from_string(*v);
  } catch (const InvalidParameter&) {
    throw InvalidParameter(s.field(key), "must be \"zero\" or \"superposition\"");
  }
}

double parse_j0(const Section& s, double fallback) {
  double j0 = fallback;
  s.number("j0_ev", j0);
  validated("", [&] { PhysicalScale{j0}.validate(); });
  return j0;
}

Json params_json(const ExchangeParams& p) {
  return {{"j_prime", p.j_prime}, {"j1", p.j1}, {"j2", p.j2}, {"ez", p.ez}};
}

Json time_json(const TimeGrid& g) { return {{"t_max", g.t_max}, {"points", g.points}}; }

Json quadrature_json(const QuadratureSpec& q) {
  return {{"radial_order", q.radial_order},
          {"angular_order", q.angular_order},
          {"truncation_width", q.truncation_width},
          {"check_convergence", q.check_convergence}};
}

std::string_view method_name(AverageMethod m) {
  return m == AverageMethod::quadrature ? "quadrature" : "mc";
}

void require_quadrature(const Overrides& o, Command cmd) {
  if (o.method && *o.method != AverageMethod::quadrature) {
    throw InvalidParameter("method", std::string("only quadrature is supported by ") +
                                         std::string(to_string(cmd)));
  }
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& field) {
  if (text.empty()) throw InvalidParameter(field, "missing value");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw InvalidParameter(field, "not a number: '" + text + "'");
  }
  return v;
}

std::string echo_line(std::string_view prefix, const Json& j) {
  return std::string(prefix) + j.dump() + "\n";
}

}  // namespace

Command command_from_string(std::string_view s) {
  if (s == "simulate") return Command::simulate;
  if (s == "fit") return Command::fit;
  if (s == "sweep") return Command::sweep;
  if (s == "materials") return Command::materials;
  throw InvalidParameter("command", "unknown command '" + std::string(s) + "'");
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::fit: return "fit";
    case Command::sweep: return "sweep";
    case Command::materials: return "materials";
  }
  return "unknown";
}

AverageMethod method_from_string(std::string_view s) {
  if (s == "quadrature") return AverageMethod::quadrature;
  if (s == "mc") return AverageMethod::monte_carlo;
  throw InvalidParameter("method", "must be \"quadrature\" or \"mc\"");
}

NoiseSpec SimulateConfig::noise() const {
  return {sigma_e, sigma_j1, sigma_j2, params.j1, params.j2};
}

SimulateConfig parse_simulate(const Json& j, const Overrides& o) {
  const Section s(j, "",
                  {"params", "noise", "initial", "time", "quadrature", "method", "samples", "seed",
                   "j0_ev"});
  SimulateConfig c;
  c.params = parse_params(s, "params");
  if (s.has("noise")) {
    const Section n(s.at("noise"), "noise", {"sigma_e", "sigma_j1", "sigma_j2"});
    n.number("sigma_e", c.sigma_e);
    n.number("sigma_j1", c.sigma_j1);
    n.number("sigma_j2", c.sigma_j2);
  }
  validated("noise", [&] { c.noise().validate(); });
  c.initial = parse_initial(s, "initial");
  c.time = parse_time(s, "time");
  c.quadrature = parse_quadrature(s, "quadrature");
  if (const auto m = s.string("method")) c.method = method_from_string(*m);
  s.integer("samples", c.samples);
  s.integer("seed", c.seed);
  if (s.has("j0_ev") && !s.is_null("j0_ev")) c.j0_ev = parse_j0(s, 1e-6);

  if (o.method) c.method = *o.method;
  if (o.samples) c.samples = *o.samples;
  if (o.seed) c.seed = *o.seed;
  if (c.samples < 1) throw InvalidParameter("samples", "must be >= 1");
  return c;
}

FitConfig parse_fit(const Json& j, const Overrides& o) {
  const Section s(j, "", {"trace", "simulation", "fixed_start", "j0_ev"});
  FitConfig c;
  c.trace = s.string("trace");
  if (s.has("simulation")) {
    try {
      c.simulation = parse_simulate(s.at("simulation"), o);
    } catch (const InvalidParameter& e) {
      const std::string what = e.what();
      throw InvalidParameter(join("simulation", e.field()),
                             what.substr(std::min(what.size(), e.field().size() + 2)));
    }
  }
  if (c.trace.has_value() == c.simulation.has_value()) {
    throw InvalidParameter("trace", "give exactly one of \"trace\" and \"simulation\"");
  }
  if (s.has("fixed_start")) {
    const Json& v = s.at("fixed_start");
    if (v.is_string() && v.get<std::string>() == "auto") {
      c.auto_start = true;
    } else if (v.is_null()) {
      c.auto_start = false;
    } else if (v.is_number()) {
      c.auto_start = false;
      c.fixed_start = v.get<double>();
      if (!(*c.fixed_start >= 0.0 && *c.fixed_start <= 1.0)) {
        throw InvalidParameter("fixed_start", "must lie in [0, 1]");
      }
    } else {
      throw InvalidParameter("fixed_start", "must be \"auto\", null or a number in [0, 1]");
    }
  }
  c.j0_ev = parse_j0(s, c.j0_ev);
  return c;
}

SweepConfig parse_sweep(const Json& j, const Overrides& o) {
  require_quadrature(o, Command::sweep);
  const Section s(j, "",
                  {"sigma_e_values", "sigma_j_values", "initial", "params", "time", "quadrature",
                   "j0_ev"});
  SweepConfig c;
  c.grid.sigma_e_values = s.numbers("sigma_e_values", c.grid.sigma_e_values);
  c.grid.sigma_j_values = s.numbers("sigma_j_values", c.grid.sigma_j_values);
  c.grid.initial = parse_initial(s, "initial");
  c.grid.params = parse_params(s, "params");
  c.grid.time = parse_time(s, "time");
  c.grid.quadrature = parse_quadrature(s, "quadrature");
  c.j0_ev = parse_j0(s, c.j0_ev);
  validated("", [&] { c.grid.validate(); });
  return c;
}

MaterialConfig parse_materials(const Json& j, const Overrides& o) {
  require_quadrature(o, Command::materials);
  const Section s(j, "",
                  {"presets", "sigma_j_values_ev", "j0_ev", "both_initial_conditions", "params",
                   "quadrature", "min_t_max", "time_step"});
  MaterialConfig c;
  if (s.has("presets")) {
    const Json& arr = s.at("presets");
    if (!arr.is_array()) throw InvalidParameter("presets", "must be an array");
    c.presets.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "presets[" + std::to_string(i) + "]";
      const Section p(arr[i], path, {"name", "sigma_e_floor_ev"});
      MaterialPreset preset;
      preset.name = p.string("name").value_or("");
      p.number("sigma_e_floor_ev", preset.sigma_e_floor_ev);
      validated(path, [&] { preset.validate(); });
      c.presets.push_back(preset);
    }
  }
  c.sigma_j_values_ev = s.numbers("sigma_j_values_ev", c.sigma_j_values_ev);
  c.scale.j0_ev = parse_j0(s, c.scale.j0_ev);
  s.boolean("both_initial_conditions", c.both_initial_conditions);
  c.params = parse_params(s, "params");
  c.quadrature = parse_quadrature(s, "quadrature");
  s.number("min_t_max", c.min_t_max);
  s.number("time_step", c.time_step);
  validated("", [&] { c.validate(); });
  return c;
}

Json to_json(const SimulateConfig& c) {
  Json j{{"params", params_json(c.params)},
         {"noise", {{"sigma_e", c.sigma_e}, {"sigma_j1", c.sigma_j1}, {"sigma_j2", c.sigma_j2}}},
         {"initial", std::string(to_string(c.initial))},
         {"time", time_json(c.time)},
         {"quadrature", quadrature_json(c.quadrature)},
         {"method", std::string(method_name(c.method))},
         {"samples", c.samples},
         {"seed", c.seed}};
  j["j0_ev"] = c.j0_ev ? Json(*c.j0_ev) : Json(nullptr);
  return j;
}

Json to_json(const FitConfig& c) {
  Json j;
  if (c.trace) j["trace"] = *c.trace;
  if (c.simulation) j["simulation"] = to_json(*c.simulation);
  if (c.auto_start) {
    j["fixed_start"] = "auto";
  } else {
    j["fixed_start"] = c.fixed_start ? Json(*c.fixed_start) : Json(nullptr);
  }
  j["j0_ev"] = c.j0_ev;
  return j;
}

Json to_json(const SweepConfig& c) {
  return {{"sigma_e_values", c.grid.sigma_e_values},
          {"sigma_j_values", c.grid.sigma_j_values},
          {"initial", std::string(to_string(c.grid.initial))},
          {"params", params_json(c.grid.params)},
          {"time", time_json(c.grid.time)},
          {"quadrature", quadrature_json(c.grid.quadrature)},
          {"j0_ev", c.j0_ev}};
}

Json to_json(const MaterialConfig& c) {
  Json presets = Json::array();
  for (const auto& p : c.presets) {
    presets.push_back({{"name", p.name}, {"sigma_e_floor_ev", p.sigma_e_floor_ev}});
  }
  return {{"presets", presets},
          {"sigma_j_values_ev", c.sigma_j_values_ev},
          {"j0_ev", c.scale.j0_ev},
          {"both_initial_conditions", c.both_initial_conditions},
          {"params", params_json(c.params)},
          {"quadrature", quadrature_json(c.quadrature)},
          {"min_t_max", c.min_t_max},
          {"time_step", c.time_step}};
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

Json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::strtod(format_number(x).c_str(), nullptr);
}

std::string trace_csv(const ProbabilityTrace& trace, const SimulateConfig& config) {
  std::string out(kTraceHeader);
  out += '\n';
  const bool has_err = !trace.std_errors.empty();
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out += format_number(trace.times[k]);
    out += ',';
    if (config.j0_ev) out += format_number(to_physical_time(trace.times[k], {*config.j0_ev}));
    out += ',';
    out += format_number(trace.values[k]);
    out += ',';
    if (has_err) out += format_number(trace.std_errors[k]);
    out += '\n';
  }
  Json input{{"schema_version", kSchemaVersion}, {"command", "simulate"},
             {"config", to_json(config)}};
  Json result{{"method", std::string(to_string(trace.method))}};
  if (trace.method == AverageMethod::quadrature) {
    result["refinement_change"] = json_number(trace.refinement_change);
    result["convergence_warning"] = trace.convergence_warning;
  } else {
    result["samples"] = trace.samples;
    result["seed"] = trace.seed;
  }
  out += echo_line(kInputPrefix, input);
  out += echo_line(kResultPrefix, result);
  return out;
}

std::string sweep_csv(const std::vector<SweepCell>& cells, const SweepConfig& config) {
  std::string out(kSweepHeader);
  out += '\n';
  const PhysicalScale scale{config.j0_ev};
  bool warning = false;
  for (const auto& c : cells) {
    out += format_number(c.sigma_e) + ',' + format_number(c.sigma_j) + ',' +
           format_number(c.j0_t2_star) + ',' + format_number(c.j0_t2_star * scale.time_unit_s()) +
           ',' + format_number(c.q) + ',' + format_number(c.alpha) + ',' +
           std::string(to_string(c.status)) + '\n';
    warning = warning || c.convergence_warning;
  }
  out += echo_line(kInputPrefix, {{"schema_version", kSchemaVersion},
                                  {"command", "sweep"},
                                  {"config", to_json(config)}});
  out += echo_line(kResultPrefix, {{"convergence_warning", warning}});
  return out;
}

std::string materials_csv(const std::vector<MaterialRow>& rows, const MaterialConfig& config) {
  std::string out(kMaterialsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.material + ',' + format_number(r.sigma_j_ev) + ',' +
           std::string(to_string(r.initial)) + ',' + format_number(r.t2_star_seconds) + '\n';
  }
  out += echo_line(kInputPrefix, {{"schema_version", kSchemaVersion},
                                  {"command", "materials"},
                                  {"config", to_json(config)}});
  return out;
}

TraceFile parse_trace_csv(std::string_view text) {
  TraceFile out;
  bool header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with(kInputPrefix)) {
        try {
          out.input = Json::parse(line.substr(kInputPrefix.size()));
        } catch (const Json::exception&) {
          throw InvalidParameter("trace", "line " + std::to_string(line_no) +
                                              ": malformed input echo");
        }
      }
      continue;
    }
    if (!header) {
      if (line != kTraceHeader) {
        throw InvalidParameter("trace", "header must be '" + std::string(kTraceHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto fields = split(line, ',');
    const std::string where = "trace line " + std::to_string(line_no);
    if (fields.size() != 4) throw InvalidParameter(where, "expected 4 columns");
    const double t = parse_double(fields[0], where + " t");
    const double p = parse_double(fields[2], where + " p");
    if (!std::isfinite(t) || !std::isfinite(p)) throw InvalidParameter(where, "non-finite value");
    if (!out.times.empty() && !(t > out.times.back())) {
      throw InvalidParameter(where, "times must be strictly increasing");
    }
    out.times.push_back(t);
    out.values.push_back(p);
  }
  if (!header) throw InvalidParameter("trace", "missing header");
  if (out.times.size() < 3) throw InvalidParameter("trace", "need at least 3 rows");
  return out;
}

EnvelopeFit fit_trace(const TraceFile& trace, const FitConfig& config) {
  std::optional<double> start = config.fixed_start;
  if (config.auto_start && trace.input) {
    const Json* initial = nullptr;
    if (trace.input->contains("config") && (*trace.input)["config"].contains("initial")) {
      initial = &(*trace.input)["config"]["initial"];
    }
    if (initial && initial->is_string() && initial->get<std::string>() == "zero") start = 1.0;
  }
  return analyze_trace(trace.times, trace.values, start).fit;
}

Json fit_report(const EnvelopeFit& fit, const FitConfig& config, std::size_t envelope_points) {
  const bool has_time = fit.status == FitStatus::converged || fit.status == FitStatus::no_decay;
  const double q = has_time ? quality_factor(fit.t2_star) : kNaN;
  const double seconds = fit.t2_star * PhysicalScale{config.j0_ev}.time_unit_s();
  return {{"schema_version", kSchemaVersion},
          {"command", "fit"},
          {"input", to_json(config)},
          {"status", std::string(to_string(fit.status))},
          {"p_infinity", json_number(fit.p_infinity)},
          {"p_start", json_number(fit.p_start)},
          {"t2_star", json_number(fit.t2_star)},
          {"t2_star_seconds", json_number(seconds)},
          {"t2_star_infinite", std::isinf(fit.t2_star)},
          {"alpha", json_number(fit.alpha)},
          {"q", json_number(q)},
          {"sse", json_number(fit.sse)},
          {"envelope_points", envelope_points}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

ProbabilityTrace simulate(const SimulateConfig& c) {
  if (c.method == AverageMethod::quadrature) {
    return disorder_average_quadrature(c.params, c.noise(), c.initial, c.time, c.quadrature);
  }
  return disorder_average_mc(c.params, c.noise(), c.initial, c.time, c.samples, c.seed);
}

void note_convergence(const ProbabilityTrace& t, std::vector<std::string>* warnings) {
  if (warnings && t.convergence_warning) {
    warnings->push_back("quadrature not converged: doubling the orders changed a point by " +
                        format_number(t.refinement_change));
  }
}

}  // namespace

std::string run_command(Command cmd, const Json& config, const Overrides& overrides,
                        const std::filesystem::path& base_dir, std::vector<std::string>* warnings) {
  switch (cmd) {
    case Command::simulate: {
      const SimulateConfig c = parse_simulate(config, overrides);
      const ProbabilityTrace trace = simulate(c);
      note_convergence(trace, warnings);
      return trace_csv(trace, c);
    }
    case Command::fit: {
      const FitConfig c = parse_fit(config, overrides);
      TraceFile trace;
      if (c.trace) {
        std::filesystem::path path(*c.trace);
        if (path.is_relative()) path = base_dir / path;
        trace = parse_trace_csv(read_file(path));
      } else {
        const ProbabilityTrace t = simulate(*c.simulation);
        note_convergence(t, warnings);
        // Fit the serialized form so the report matches a fit of the file.
        trace = parse_trace_csv(trace_csv(t, *c.simulation));
      }
      const EnvelopeFit fit = fit_trace(trace, c);
      const std::size_t points = extract_upper_envelope(trace.times, trace.values).size();
      return fit_report(fit, c, points).dump(2) + "\n";
    }
    case Command::sweep: {
      const SweepConfig c = parse_sweep(config, overrides);
      const auto cells = run_sweep(c.grid);
      if (warnings) {
        for (const auto& cell : cells) {
          if (cell.convergence_warning) {
            warnings->push_back("quadrature not converged at sigma_e=" +
                                format_number(cell.sigma_e) +
                                ", sigma_j=" + format_number(cell.sigma_j));
          }
        }
      }
      return sweep_csv(cells, c);
    }
    case Command::materials: {
      const MaterialConfig c = parse_materials(config, overrides);
      return materials_csv(material_comparison(c), c);
    }
  }
  return {};
}

}  // namespace deoq::io
