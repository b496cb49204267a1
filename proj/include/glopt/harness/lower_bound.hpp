#pragma once

// `lower-bound`: the one-dimensional hard instances for constant-step SGD and for
// AdaGrad-Norm, run against two-stage clipped AdamW.
//
// Family "sgd" (instances sgd_I, sgd_II): every SGD stepsize runs on the instance of
// its case (sgd_I above the threshold 2R/G0 exp(-R G1/4), sgd_II otherwise). Each
// AdaGrad-Norm numerator runs on sgd_I and, if it reaches the target there, on sgd_II;
// it counts as separated when some instance keeps it above the target.
// Family "adagrad" (instances ada_I, ada_II, ada_III): each AdaGrad-Norm numerator runs
// on the instance of its case (ada_I for eta >= R exp(R G1/32), ada_II for
// R/4 <= eta < R exp(R G1/32), ada_III below R/4).
//
// A baseline run on instance P gets budget K_max_factor x (the two-stage AdamW K derived
// on P) unless K_max is set. The tracked quantity is min(f(x_k), f(xbar_k)) - f*.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "glopt/harness/config.hpp"
#include "glopt/harness/output.hpp"
#include "glopt/harness/runner.hpp"
#include "glopt/optimizers.hpp"
#include "glopt/problems.hpp"

namespace glopt {

struct LowerBoundRun {
  std::string method;    // sgd_const | adagrad_norm | adamw_two_stage
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::string instance;  // problem id
  std::string case_name;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;
  std::uint64_t steps = 0;
  std::uint64_t first_hit = 0;  // first k with min(f(x_k), f(xbar_k)) - f* <= eps; 0: never
  double final_gap = 0.0;       // min(f(x_K), f(xbar_K)) - f*
  double min_gap = 0.0;         // smallest last-iterate gap seen
  RunRecord record;
};

struct AdamwSummary {
  std::string instance;
  std::uint64_t K = 0;
  std::size_t seeds = 0;
  double mean_final_gap = 0.0;        // mean over seeds of min(f(x_K), f(xbar_K)) - f*
  std::uint64_t first_mean_hit = 0;   // first recorded k whose seed-mean is <= eps; 0: never
  bool reached = false;
};

struct LowerBoundReport {
  std::string family;
  double R = 1.0, G0 = 1.0, G1 = 1.0, eps = 0.0;
  double sgd_threshold = 0.0;
  std::vector<double> sgd_grid, ada_grid;
  std::map<std::string, std::uint64_t> adamw_K;  // instance id -> derived K
  std::vector<AdamwSummary> adamw;
  std::vector<LowerBoundRun> sgd, adagrad, adamw_runs;
  bool adamw_reached_all = false;
  bool sgd_separated = false;      // no SGD stepsize reached eps within its budget
  bool adagrad_separated = false;  // every AdaGrad-Norm numerator was kept above eps by some instance
  std::string table;
};

namespace detail {

inline std::shared_ptr<LowerBoundInstance> lb_instance(LowerBoundKind kind, double R, double G0, double G1, double eps) {
  return std::make_shared<LowerBoundInstance>(kind, R, G0, G1, eps);
}

inline double lb_metric(const RunRecord& r) { return std::min(r.final_gap, r.final_gap_avg); }

inline std::vector<double> centered_grid(double center) {
  std::vector<double> g;
  for (int j = 0; j < 10; ++j) g.push_back(center * std::pow(10.0, j - 4.5));
  return g;
}

}  // namespace detail

inline LowerBoundReport cli_lower_bound(const ExperimentConfig& cfg) {
  const ParsedId id = parse_id(cfg.problem);
  if (id.name.rfind("lower:", 0) != 0) throw ConfigError("lower-bound: problem must be a lower:* id");
  const LowerBoundKind given = parse_lower_bound_kind(id.name.substr(6));
  LowerBoundReport rep;
  rep.family = is_sgd_kind(given) ? "sgd" : "adagrad";
  rep.R = id.get("R", 1.0);
  rep.G0 = id.get("G0", 1.0);
  rep.G1 = id.get("G1", 8.0);
  rep.eps = cfg.eps;
  const double R = rep.R, G0 = rep.G0, G1 = rep.G1, eps = rep.eps;
  check_lower_bound_regime(given, R, G0, G1, eps);
  if (cfg.noise != NoiseModel::deterministic) throw ConfigError("lower-bound: the constructions use a deterministic oracle");

  const bool sgd_family = rep.family == "sgd";
  std::vector<LowerBoundKind> kinds = sgd_family ? std::vector{LowerBoundKind::sgd_I, LowerBoundKind::sgd_II}
                                                 : std::vector{LowerBoundKind::ada_I, LowerBoundKind::ada_II,
                                                               LowerBoundKind::ada_III};
  std::map<LowerBoundKind, std::shared_ptr<LowerBoundInstance>> inst;
  for (auto k : kinds) inst[k] = detail::lb_instance(k, R, G0, G1, eps);

  // AdamW derived K per instance.
  std::map<LowerBoundKind, std::uint64_t> K_of;
  for (auto k : kinds) {
    const Schedule s = make_schedule(ScheduleKind::two_stage, inst[k]->constants(), eps, cfg.C_hat);
    K_of[k] = s.K_steps();
    rep.adamw_K[inst[k]->id()] = K_of[k];
  }
  auto budget = [&](LowerBoundKind k) {
    if (cfg.K_max) return *cfg.K_max;
    const double b = std::ceil(cfg.K_max_factor * static_cast<double>(K_of[k]));
    if (!(b >= 1.0) || b > 9007199254740992.0) throw ConfigError("lower-bound: baseline budget out of range");
    return static_cast<std::uint64_t>(b);
  };

  rep.sgd_threshold = LowerBoundInstance::sgd_case_threshold(R, G0, G1);
  rep.sgd_grid = cfg.eta_grid.empty() ? detail::centered_grid(rep.sgd_threshold) : cfg.eta_grid;
  rep.ada_grid = cfg.ada_eta_grid.empty() ? detail::centered_grid(R) : cfg.ada_eta_grid;

  RecordOptions rec;
  rec.stride = 1;
  rec.log_rows = cfg.stride == 0 ? cfg.log_rows : 0;
  if (cfg.stride > 0) rec.stride = cfg.stride;
  rec.target_gap = eps;
  rec.timing = cfg.timing;

  struct Job {
    std::string method;
    double eta;
    LowerBoundKind kind;
    std::uint64_t seed;
    bool stop;
  };
  auto run_job = [&](const Job& j) {
    StochOracle oracle(inst[j.kind]);
    OptimizerSpec spec;
    spec.eps = eps;
    spec.seed = j.seed;
    spec.record = rec;
    spec.record.stop_at_target = j.stop;
    if (j.method == "adamw_two_stage") {
      spec.kind = OptimizerKind::adamw_exp;
      spec.schedule = ScheduleKind::two_stage;
      spec.C_hat = cfg.C_hat;
    } else {
      spec.kind = j.method == "sgd_const" ? OptimizerKind::sgd_const : OptimizerKind::adagrad_norm;
      spec.eta = j.eta;
      spec.K = budget(j.kind);
    }
    LowerBoundRun r;
    r.record = run_optimizer(spec, oracle);
    r.method = j.method;
    r.eta = j.eta;
    r.instance = inst[j.kind]->id();
    r.case_name = to_string(j.kind);
    r.seed = j.seed;
    r.budget = spec.K ? *spec.K : K_of[j.kind];
    r.steps = r.record.steps;
    r.first_hit = r.record.best_hit();
    r.final_gap = detail::lb_metric(r.record);
    r.min_gap = r.record.min_gap;
    return r;
  };

  // Baselines stop at their first hit: a hit settles the question for that run.
  std::vector<Job> jobs;
  if (sgd_family)
    for (double eta : rep.sgd_grid)
      jobs.push_back({"sgd_const", eta, eta > rep.sgd_threshold ? LowerBoundKind::sgd_I : LowerBoundKind::sgd_II, 0, true});
  for (double eta : rep.ada_grid) {
    LowerBoundKind k = LowerBoundKind::sgd_I;
    if (!sgd_family)
      k = eta >= R * std::exp(R * G1 / 32.0) ? LowerBoundKind::ada_I
                                             : (eta >= R / 4.0 ? LowerBoundKind::ada_II : LowerBoundKind::ada_III);
    jobs.push_back({"adagrad_norm", eta, k, 0, true});
  }
  for (auto k : kinds)
    for (auto seed : cfg.seeds) jobs.push_back({"adamw_two_stage", std::numeric_limits<double>::quiet_NaN(), k, seed, false});

  auto runs = parallel_map(jobs.size(), cfg.parallel, [&](std::size_t i) { return run_job(jobs[i]); });

  // AdaGrad-Norm on the SGD family: second instance for the numerators that reached eps on sgd_I.
  if (sgd_family) {
    std::vector<Job> second;
    for (const auto& r : runs)
      if (r.method == "adagrad_norm" && r.first_hit != 0) second.push_back({"adagrad_norm", r.eta, LowerBoundKind::sgd_II, 0, true});
    auto more = parallel_map(second.size(), cfg.parallel, [&](std::size_t i) { return run_job(second[i]); });
    for (auto& r : more) runs.push_back(std::move(r));
  }

  for (auto& r : runs) {
    if (r.method == "sgd_const") rep.sgd.push_back(std::move(r));
    else if (r.method == "adagrad_norm") rep.adagrad.push_back(std::move(r));
    else rep.adamw_runs.push_back(std::move(r));
  }

  rep.sgd_separated = sgd_family && std::all_of(rep.sgd.begin(), rep.sgd.end(), [](const auto& r) { return r.first_hit == 0; });
  rep.adagrad_separated = true;
  for (double eta : rep.ada_grid) {
    bool kept = false;
    for (const auto& r : rep.adagrad)
      if (r.eta == eta && r.first_hit == 0) kept = true;
    rep.adagrad_separated = rep.adagrad_separated && kept;
  }

  // AdamW: seed-mean of the tracked gap on the common recorded k grid.
  rep.adamw_reached_all = true;
  for (auto k : kinds) {
    AdamwSummary a;
    a.instance = inst[k]->id();
    a.K = K_of[k];
    std::map<std::uint64_t, std::pair<double, std::size_t>> mean;
    for (const auto& r : rep.adamw_runs) {
      if (r.instance != a.instance) continue;
      ++a.seeds;
      a.mean_final_gap += r.final_gap;
      for (const auto& row : r.record.rows) {
        auto& m = mean[row.k];
        m.first += std::min(row.f_gap, row.f_gap_avg_iterate);
        ++m.second;
      }
    }
    if (a.seeds > 0) a.mean_final_gap /= static_cast<double>(a.seeds);
    for (const auto& [k_row, m] : mean)
      if (m.second == a.seeds && m.first / static_cast<double>(m.second) <= eps) {
        a.first_mean_hit = k_row;
        break;
      }
    a.reached = a.first_mean_hit != 0;
    rep.adamw_reached_all = rep.adamw_reached_all && a.reached;
    rep.adamw.push_back(a);
  }

  // Table.
  std::string t = fmt::format("family {}  R={} G0={} G1={} eps={}  SGD case threshold {:.6g}\n", rep.family, R, G0, G1, eps,
                              rep.sgd_threshold);
  for (const auto& a : rep.adamw)
    t += fmt::format("adamw two_stage on {}: K={} seeds={} first k with seed-mean gap <= eps: {}  mean final gap {:.6g}\n",
                     a.instance, a.K, a.seeds, a.reached ? std::to_string(a.first_mean_hit) : "never", a.mean_final_gap);
  t += fmt::format("{:<13} {:>12} {:>8} {:>12} {:>12} {:>14}\n", "method", "eta", "case", "budget", "first hit", "final gap");
  for (const auto* list : {&rep.sgd, &rep.adagrad})
    for (const auto& r : *list)
      t += fmt::format("{:<13} {:>12.4g} {:>8} {:>12} {:>12} {:>14.6g}\n", r.method, r.eta, r.case_name, r.budget,
                       r.first_hit ? std::to_string(r.first_hit) : "never", r.final_gap);
  if (sgd_family) t += fmt::format("SGD separated: {}\n", rep.sgd_separated ? "yes" : "no");
  t += fmt::format("AdaGrad-Norm separated: {}\n", rep.adagrad_separated ? "yes" : "no");
  t += fmt::format("AdamW reached eps on every instance: {}\n", rep.adamw_reached_all ? "yes" : "no");
  rep.table = t;

  // Files: one CSV per run plus lower_bound.json.
  const auto dir = std::filesystem::path(effective_out_dir(cfg.out));
  const auto header = cfg.result_fields();
  nlohmann::ordered_json j;
  j["command"] = "lower-bound";
  j["config"] = kv_json(cfg.echo());
  j["family"] = rep.family;
  j["constants"] = {{"R", R}, {"G0", G0}, {"G1", G1}, {"eps", eps}};
  j["sgd_case_threshold"] = json_real(rep.sgd_threshold);
  auto& K = j["adamw_K"];
  for (const auto& [inst_id, k] : rep.adamw_K) K[inst_id] = k;
  auto runs_json = nlohmann::ordered_json::array();
  std::size_t idx = 0;
  for (const auto* list : {&rep.sgd, &rep.adagrad, &rep.adamw_runs})
    for (const auto& r : *list) {
      const std::string label =
          std::isnan(r.eta) ? fmt::format("{}_{}", r.method, r.case_name) : fmt::format("{}_eta{:.6g}_{}", r.method, r.eta, r.case_name);
      const std::string file = fmt::format("lb_{:03}_{}_seed{}.csv", idx++, sanitize_label(label), r.seed);
      write_file_atomic(dir / file, run_csv(header, label, r.record));
      auto e = run_summary_json(label, file, r.record, cfg.timing);
      e["eta"] = json_real(r.eta);
      e["case"] = r.case_name;
      e["budget"] = r.budget;
      e["first_hit"] = r.first_hit;
      e["final_min_gap"] = json_real(r.final_gap);
      runs_json.push_back(e);
    }
  j["runs"] = runs_json;
  auto ad = nlohmann::ordered_json::array();
  for (const auto& a : rep.adamw)
    ad.push_back({{"instance", a.instance},
                  {"K", a.K},
                  {"seeds", a.seeds},
                  {"mean_final_gap", json_real(a.mean_final_gap)},
                  {"first_mean_hit", a.first_mean_hit},
                  {"reached", a.reached}});
  j["adamw"] = ad;
  j["sgd_separated"] = rep.sgd_separated;
  j["adagrad_separated"] = rep.adagrad_separated;
  j["adamw_reached_all"] = rep.adamw_reached_all;
  write_file_atomic(dir / "lower_bound.json", j.dump(2) + "\n");
  return rep;
}

}  // namespace glopt
