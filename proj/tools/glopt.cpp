// glopt command-line front end: run, compare, lower-bound, verify, sweep.
//
// Every subcommand accepts --config FILE plus one --<field> flag per configuration
// field (see `glopt run --help`). Flags override file values.
//
// Exit codes: 0 ok, 1 verification/separation failures, 2 configuration error,
// 3 parameter-regime violation, 4 run error.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "glopt/harness.hpp"

namespace {

struct Flags {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_file, "key = value configuration file");
  for (const auto& [name, help] : glopt::config_field_help())
    cmd->add_option("--" + name, flags.values[name], help);
}

glopt::ExperimentConfig build_config(const CLI::App* cmd, const Flags& flags) {
  glopt::ExperimentConfig cfg;
  if (!flags.config_file.empty()) glopt::load_config_file(cfg, flags.config_file);
  for (const auto& [name, help] : glopt::config_field_help())
    if (cmd->count("--" + name) > 0) cfg.set(name, flags.values.at(name), "--" + name);
  return cfg;
}

int run_command(const std::string& name, const glopt::ExperimentConfig& cfg) {
  const auto dir = glopt::effective_out_dir(cfg.out);
  if (name == "run") {
    const auto out = glopt::cli_run(cfg);
    for (std::size_t i = 0; i < out.files.size(); ++i) {
      const auto& r = out.records[i];
      fmt::print("{}  steps={} final_gap={:.6g} final_gap_avg={:.6g}\n", out.files[i], r.steps, r.final_gap, r.final_gap_avg);
    }
    fmt::print("wrote {} CSV files and {}/{}\n", out.files.size(), out.out_dir, out.manifest);
    return 0;
  }
  if (name == "compare") {
    const auto out = glopt::cli_compare(cfg);
    fmt::print("{}", out.table);
    fmt::print("wrote {}/compare.csv\n", dir);
    return 0;
  }
  if (name == "lower-bound") {
    const auto rep = glopt::cli_lower_bound(cfg);
    fmt::print("{}", rep.table);
    fmt::print("wrote {}/lower_bound.json\n", dir);
    const bool ok = rep.adamw_reached_all && rep.adagrad_separated && (rep.family != "sgd" || rep.sgd_separated);
    return ok ? 0 : 1;
  }
  if (name == "verify") {
    const auto out = glopt::cli_verify(cfg);
    for (const auto& r : out.reports)
      fmt::print("{:<24} {:<40} {}\n", r.checker, r.subject,
                 !r.applicable ? "n/a" : (r.pass() ? "pass" : fmt::format("FAIL ({} violations)", r.violations)));
    fmt::print("{} failed, {} not applicable; reports in {}\n", out.failed, out.not_applicable, dir);
    return out.failed == 0 ? 0 : 1;
  }
  const auto out = glopt::cli_sweep(cfg);
  for (std::size_t i = 0; i < out.Ks.size(); ++i)
    fmt::print("K={:<10.0f} mean gap {:.6g}  averaged iterate {:.6g}\n", out.Ks[i], out.mean_gap[i], out.mean_gap_avg[i]);
  if (out.fit_avg) fmt::print("log-log slope (averaged iterate): {:.4f} over {} points\n", out.fit_avg->slope, out.fit_avg->points);
  if (!out.note.empty()) fmt::print("{}\n", out.note);
  fmt::print("wrote {}/sweep.csv\n", dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glopt: optimization under (M0, M1)-Lipschitz gradients"};
  app.require_subcommand(1);
  std::map<std::string, Flags> flags;
  const std::map<std::string, std::string> commands = {
      {"run", "run every (method x seed) cell; one CSV per cell plus manifest.json"},
      {"compare", "iterations to reach the target gap, median over seeds"},
      {"lower-bound", "hard instances for SGD / AdaGrad-Norm against two-stage clipped AdamW"},
      {"verify", "property checkers with JSON reports"},
      {"sweep", "final gaps of the first method over a list of K"}};
  for (const auto& [name, help] : commands) add_config_flags(app.add_subcommand(name, help), flags[name]);
  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, help] : commands) {
    const CLI::App* cmd = app.get_subcommand(name);
    if (!cmd->parsed()) continue;
    try {
      return run_command(name, build_config(cmd, flags[name]));
    } catch (const glopt::RegimeError& e) {
      std::cerr << "regime violation: " << e.what() << "\n";
      return 3;
    } catch (const glopt::ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 4;
    }
  }
  return 2;
}
