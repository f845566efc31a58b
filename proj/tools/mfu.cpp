// Command-line driver: run, report and validate experiment configurations.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 acceptance failure (outputs are still written), 1 anything else.
// Malformed command lines are reported as configuration errors.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "mfu/artifacts.hpp"
#include "mfu/errors.hpp"
#include "mfu/experiments.hpp"
#include "mfu/io.hpp"
#include "mfu/kernels.hpp"

namespace {

using namespace mfu;

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kAcceptance = 4 };

experiments::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError("<file>", e.what());
  }
  auto cfg = experiments::parse_config(text);
  if (seed) cfg.seed = *seed;
  return cfg;
}

int run(const std::string& config, std::string out, std::optional<std::uint64_t> seed, int threads) {
  auto cfg = load(config, seed);
  if (out.empty()) out = cfg.output;
  if (out.empty()) throw ConfigError("output", "no output directory (set \"output\" or pass --out)");
  cfg.output = out;
  const auto result = experiments::run(cfg);
  artifacts::write(cfg, result, out, threads);
  for (const auto& v : result.verdicts)
    std::cout << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  std::cout << "wrote " << out << "\n";
  return result.passed() ? kOk : kAcceptance;
}

int report(const std::string& dir) {
  const auto rep = artifacts::report(dir);
  io::write_text(dir + "/report.json", rep.json.dump(2) + "\n");
  io::write_text(dir + "/report.txt", rep.text);
  std::cout << rep.text;
  return rep.json["passed"].get<bool>() ? kOk : kAcceptance;
}

int validate(const std::string& config, std::optional<std::uint64_t> seed) {
  const auto cfg = load(config, seed);
  std::cout << experiments::to_json(cfg).dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-form uncertainty experiments"};
  app.require_subcommand(1);
  std::string config, out, dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its artifact directory");
  run_cmd->add_option("--config", config, "Experiment configuration (JSON)")->required();
  run_cmd->add_option("--out", out, "Output directory (overrides the config)");
  run_cmd->add_option("--seed-override", seed, "Replace the configured seed");
  run_cmd->add_option("--threads", threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

  auto* report_cmd = app.add_subcommand("report", "Summarize an artifact directory");
  report_cmd->add_option("dir", dir, "Artifact directory")->required();

  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration and print it fully resolved");
  validate_cmd->add_option("--config", config, "Experiment configuration (JSON)")->required();
  validate_cmd->add_option("--seed-override", seed, "Replace the configured seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; malformed invocations count as configuration errors.
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (threads > 0) kernels::set_threads(threads);
    const int used = kernels::max_threads();
    if (*run_cmd) return run(config, out, seed, used);
    if (*report_cmd) return report(dir);
    if (*validate_cmd) return validate(config, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DegenerateError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
