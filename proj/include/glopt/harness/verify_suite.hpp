#pragma once

// `verify`: runs the property checkers and writes one JSON report per checker and subject.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "glopt/harness/config.hpp"
#include "glopt/harness/output.hpp"
#include "glopt/harness/runner.hpp"
#include "glopt/online.hpp"
#include "glopt/suite.hpp"
#include "glopt/verify.hpp"

namespace glopt {

// Random streams with K steps, dimensions 1..5 and per-step scales spanning [1e-3, 1e3].
inline std::vector<std::vector<Vec>> regret_streams(std::size_t n, std::size_t K, std::uint64_t seed = 0) {
  PhiloxEngine eng(seed, 2, Substream::stream);
  std::vector<std::vector<Vec>> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back(random_stream(eng, K, 1 + s % 5, 1e-3, 1e3));
  return out;
}

inline std::vector<std::string> verify_problem_ids(const ExperimentConfig& cfg) {
  if (cfg.verify_problems == "suite") return reference_suite();
  return split_top_level(cfg.verify_problems, ';');
}

struct VerifyOutput {
  std::vector<CheckReport> reports;
  std::size_t failed = 0;        // applicable reports with violations
  std::size_t not_applicable = 0;
};

inline VerifyOutput cli_verify(const ExperimentConfig& cfg) {
  const auto ids = verify_problem_ids(cfg);
  std::vector<ProblemPtr> problems;
  for (const auto& id : ids) problems.push_back(make_problem(id));
  for (const auto& c : cfg.checks)
    if (c != "m01" && c != "tech" && c != "tech2" && c != "regret" && c != "quasar" && c != "h")
      throw ConfigError(fmt::format("verify: unknown check '{}'", c));

  std::vector<std::function<CheckReport()>> jobs;
  for (const auto& c : cfg.checks) {
    if (c == "m01")
      for (const auto& p : problems) jobs.push_back([&, p] { return check_lemma_m01(*p, cfg.pairs); });
    if (c == "tech") jobs.push_back([&] { return check_tech_lemma(TechVariant::tech, cfg.trials); });
    if (c == "tech2") jobs.push_back([&] { return check_tech_lemma(TechVariant::tech2, cfg.trials); });
    if (c == "regret")
      for (auto kind : {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad})
        jobs.push_back([&, kind] { return check_regret_assumption(kind, regret_streams(cfg.streams, 1000), 1.0, 4.0); });
    if (c == "quasar")
      for (const auto& p : problems)
        jobs.push_back([&, p] {
          auto cert = certify_quasar(*p, linspace(0.01, 1.0, 100), linspace(0.0, 1.0, 201), quasar_x_grid(*p, 201));
          cert.report.details["declared_gamma"] = p->constants().gamma;
          return cert.report;
        });
    if (c == "h")
      for (const auto& p : problems) jobs.push_back([&, p] { return check_h_property(*p, cfg.pairs, cfg.h_constant); });
  }

  VerifyOutput out;
  out.reports = parallel_map(jobs.size(), cfg.parallel, [&](std::size_t i) { return jobs[i](); });
  const auto dir = std::filesystem::path(effective_out_dir(cfg.out));
  nlohmann::ordered_json summary;
  summary["command"] = "verify";
  summary["config"] = kv_json(cfg.echo());
  auto list = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < out.reports.size(); ++i) {
    const auto& r = out.reports[i];
    if (!r.applicable) ++out.not_applicable;
    else if (!r.pass()) ++out.failed;
    const auto file = fmt::format("verify_{:03}_{}_{}.json", i, sanitize_label(r.checker), sanitize_label(r.subject));
    write_file_atomic(dir / file, r.to_json().dump(2) + "\n");
    list.push_back({{"file", file},
                    {"checker", r.checker},
                    {"subject", r.subject},
                    {"applicable", r.applicable},
                    {"pass", r.pass()},
                    {"violations", r.violations}});
  }
  summary["reports"] = list;
  summary["failed"] = out.failed;
  summary["not_applicable"] = out.not_applicable;
  write_file_atomic(dir / "verify_summary.json", summary.dump(2) + "\n");
  return out;
}

}  // namespace glopt
