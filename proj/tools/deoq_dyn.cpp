// deoq-dyn: simulate, fit, sweep and compare materials from a JSON config.
//
// Exit codes: 0 success, 2 invalid input, 3 I/O failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "deoq/cli_io.hpp"
#include "deoq/error.hpp"

namespace {

constexpr int kInvalidInput = 2;
constexpr int kIoFailure = 3;

int fail(int code, const std::string& message) {
  std::cerr << "deoq-dyn: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disorder-averaged dynamics of a double-dot exchange-only qubit"};
  app.set_help_flag("-h,--help", "Show usage");

  std::string command;
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::optional<std::size_t> samples;

  app.add_option("command", command, "simulate | fit | sweep | materials")
      ->required()
      ->check(CLI::IsMember({"simulate", "fit", "sweep", "materials"}));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_path, "Output file")->required();
  app.add_option("--seed", seed, "Monte Carlo seed");
  app.add_option("--method", method, "quadrature | mc")
      ->check(CLI::IsMember({"quadrature", "mc"}));
  app.add_option("--samples", samples, "Monte Carlo sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (const auto nl = msg.find('\n'); nl != std::string::npos) msg.resize(nl);
    return fail(kInvalidInput, "invalid arguments: " + msg);
  }

  namespace io = deoq::io;
  try {
    io::Overrides overrides;
    overrides.seed = seed;
    overrides.samples = samples;
    if (!method.empty()) overrides.method = io::method_from_string(method);

    const std::string text = io::read_file(config_path);
    io::Json config;
    try {
      config = io::Json::parse(text);
    } catch (const io::Json::parse_error& e) {
      return fail(kInvalidInput,
                  "invalid input: config: not valid JSON at byte " + std::to_string(e.byte));
    }

    std::vector<std::string> warnings;
    const std::string output =
        io::run_command(io::command_from_string(command), config, overrides,
                        std::filesystem::path(config_path).parent_path(), &warnings);
    io::write_file(out_path, output);
    for (const auto& w : warnings) std::cerr << "deoq-dyn: warning: " << w << '\n';
    return 0;
  } catch (const deoq::InvalidParameter& e) {
    return fail(kInvalidInput, std::string("invalid input: ") + e.what());
  } catch (const deoq::IoError& e) {
    return fail(kIoFailure, std::string("i/o error: ") + e.what());
  } catch (const std::exception& e) {
    return fail(kInvalidInput, std::string("error: ") + e.what());
  }
}
