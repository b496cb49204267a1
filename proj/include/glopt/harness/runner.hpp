#pragma once

// Experiment orchestration: (method x seed) cells, the `run`, `compare` and `sweep` subcommands.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "glopt/framework.hpp"
#include "glopt/harness/config.hpp"
#include "glopt/harness/output.hpp"
#include "glopt/online.hpp"
#include "glopt/optimizers.hpp"
#include "glopt/oracle.hpp"
#include "glopt/suite.hpp"
#include "glopt/verify.hpp"

namespace glopt {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results keep index order;
// the exception of the lowest failing index is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, unsigned threads, Fn&& fn) -> std::vector<decltype(fn(std::size_t{0}))> {
  using T = decltype(fn(std::size_t{0}));
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline StochOracle make_oracle(const ExperimentConfig& cfg) {
  return StochOracle(make_problem(cfg.problem), cfg.noise, cfg.noise_scale);
}

inline RecordOptions record_options(const ExperimentConfig& cfg, double eps) {
  RecordOptions r;
  r.stride = cfg.stride == 0 ? 1 : cfg.stride;
  r.log_rows = cfg.stride == 0 ? cfg.log_rows : 0;
  r.target_gap = cfg.target.value_or(eps);
  r.stop_at_target = cfg.stop_at_target;
  r.timing = cfg.timing;
  return r;
}

// One cell. `K_cap` (if set) replaces the method's K.
inline RunRecord run_method(const MethodSpec& m, const MethodSettings& s, const StochOracle& oracle, std::uint64_t seed,
                            std::uint64_t run_id, const RecordOptions& record,
                            std::optional<std::uint64_t> K_cap = std::nullopt) {
  const auto K = K_cap ? K_cap : s.K;
  if (m.family == MethodSpec::Family::optimizer) {
    OptimizerSpec spec;
    spec.kind = m.optimizer;
    spec.R = s.R;
    spec.eta = s.eta;
    spec.K = K;
    spec.eps = s.eps;
    spec.schedule = s.schedule;
    spec.C_hat = s.C_hat;
    spec.delta = s.delta;
    spec.rows = s.rows;
    spec.seed = seed;
    spec.run_id = run_id;
    spec.record = record;
    return run_optimizer(spec, oracle);
  }
  ProblemConstants c = oracle.constants();
  if (s.R > 0.0) c.R = s.R;
  const bool quasar = m.family == MethodSpec::Family::quasar;
  const ScheduleKind kind = s.schedule ? *s.schedule : (quasar ? ScheduleKind::quasar_two_stage : ScheduleKind::exp_const);
  const Schedule schedule = make_schedule(kind, c, s.eps, s.C_hat, s.gamma.value_or(c.gamma));
  LearnerState learner = make_learner(m.learner, oracle.dim(), c.R, s.delta, s.rows);
  ConversionOptions opt;
  opt.K_override = K;
  opt.zeta_override = s.zeta;
  opt.seed = seed;
  opt.run_id = run_id;
  opt.record = record;
  return quasar ? run_conversion_quasar(oracle, std::move(learner), schedule, opt)
                : run_conversion(oracle, std::move(learner), schedule, opt);
}

struct Cell {
  std::size_t method = 0;
  std::uint64_t seed = 0;
  std::uint64_t run_id = 0;  // method index
};

inline std::vector<Cell> make_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    for (auto seed : cfg.seeds) cells.push_back({m, seed, m});
  return cells;
}

// Derives every method's parameters with a one-step run so regime and
// configuration errors surface before any long run starts.
inline void check_plan(const ExperimentConfig& cfg, const StochOracle& oracle) {
  if (!(cfg.eps > 0.0)) throw RegimeError("eps > 0 violated");
  if (cfg.target && !(*cfg.target >= 0.0)) throw ConfigError("target must be >= 0");
  for (const auto& m : cfg.methods) {
    const auto s = resolve_settings(cfg, m);
    if (!(s.eps > 0.0)) throw RegimeError(fmt::format("{}: eps > 0 violated", m.label));
    if (!s.K && m.family != MethodSpec::Family::optimizer) {
      ProblemConstants c = oracle.constants();
      if (s.R > 0.0) c.R = s.R;
      const bool quasar = m.family == MethodSpec::Family::quasar;
      const ScheduleKind kind = s.schedule ? *s.schedule : (quasar ? ScheduleKind::quasar_two_stage : ScheduleKind::exp_const);
      (void)make_schedule(kind, c, s.eps, s.C_hat, s.gamma.value_or(c.gamma)).K_steps();
    }
    if (!s.K && m.family == MethodSpec::Family::optimizer && is_adam_family(m.optimizer)) {
      ProblemConstants c = oracle.constants();
      if (s.R > 0.0) c.R = s.R;
      const ScheduleKind kind = m.optimizer == OptimizerKind::adamw_avg ? ScheduleKind::avg
                                                                        : s.schedule.value_or(default_schedule(m.optimizer));
      (void)make_schedule(kind, c, s.eps, s.C_hat, c.gamma).K_steps();
    }
    RecordOptions quiet;
    quiet.stride = std::numeric_limits<std::uint64_t>::max();
    (void)run_method(m, s, oracle, 0, 0, quiet, std::uint64_t{1});
  }
}

struct RunOutput {
  std::string out_dir;
  std::vector<std::string> files;  // relative to out_dir
  std::string manifest;            // relative to out_dir
  std::vector<Cell> cells;
  std::vector<RunRecord> records;
};

inline std::string cell_file(const ExperimentConfig& cfg, const Cell& c) {
  return fmt::format("{:02}_{}_seed{}.csv", c.method, sanitize_label(cfg.methods[c.method].label), c.seed);
}

inline nlohmann::ordered_json problem_json(const StochOracle& oracle) {
  const auto& pc = oracle.problem().constants();
  const auto& oc = oracle.constants();
  nlohmann::ordered_json j;
  j["id"] = oracle.id();
  j["dim"] = oracle.dim();
  j["noise"] = to_string(oracle.model());
  j["noise_scale"] = json_real(oracle.noise_scale());
  nlohmann::ordered_json c;
  for (auto [k, v] : {std::pair{"R", pc.R}, {"M0", pc.M0}, {"M1", pc.M1}, {"G0", oc.G0}, {"G1", oc.G1}, {"F", pc.F},
                      {"fstar", pc.fstar}, {"nu", pc.nu}, {"sigma", pc.sigma}, {"L0", pc.L0}, {"L1", pc.L1},
                      {"gamma", pc.gamma}})
    c[k] = json_real(v);
  c["xstar"] = detail::vec_json(pc.xstar);
  j["constants"] = c;
  return j;
}

inline nlohmann::ordered_json manifest_head(const char* command, const ExperimentConfig& cfg, const StochOracle& oracle) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = kv_json(cfg.echo());
  j["problem"] = problem_json(oracle);
  j["csv_columns"] = kCsvColumns;
  return j;
}

// `run`: executes every (method x seed) cell, then writes one CSV per cell and manifest.json.
// Nothing is written when any cell fails.
inline RunOutput cli_run(const ExperimentConfig& cfg) {
  const StochOracle oracle = make_oracle(cfg);
  check_plan(cfg, oracle);
  RunOutput out;
  out.out_dir = effective_out_dir(cfg.out);
  out.cells = make_cells(cfg);
  out.records = parallel_map(out.cells.size(), cfg.parallel, [&](std::size_t i) {
    const Cell& c = out.cells[i];
    const auto& m = cfg.methods[c.method];
    const auto s = resolve_settings(cfg, m);
    return run_method(m, s, oracle, c.seed, c.run_id, record_options(cfg, s.eps));
  });

  const auto header = cfg.result_fields();
  auto manifest = manifest_head("run", cfg, oracle);
  auto runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    const auto& c = out.cells[i];
    const auto file = cell_file(cfg, c);
    write_file_atomic(std::filesystem::path(out.out_dir) / file, run_csv(header, cfg.methods[c.method].label, out.records[i]));
    out.files.push_back(file);
    runs.push_back(run_summary_json(cfg.methods[c.method].label, file, out.records[i], cfg.timing));
  }
  manifest["runs"] = runs;
  out.manifest = "manifest.json";
  write_file_atomic(std::filesystem::path(out.out_dir) / out.manifest, manifest.dump(2) + "\n");
  return out;
}

inline std::string param_of(const RunRecord& r, const std::string& key) {
  for (const auto& [k, v] : r.params)
    if (k == key) return v;
  return "";
}

// Median with "not reached" as +inf.
inline double median_hits(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct CompareRow {
  std::string method;
  double median_iterations = std::numeric_limits<double>::infinity();  // inf: median run did not reach the target
  std::size_t reached = 0;
  std::size_t runs = 0;
  std::string K_theory;  // derived K of the method's own theorem
  std::string K_run;
};

struct CompareOutput {
  double target = 0.0;
  std::vector<CompareRow> rows;
  std::string table;
};

inline std::string format_compare_table(const CompareOutput& c) {
  std::size_t w = 6;
  for (const auto& r : c.rows) w = std::max(w, r.method.size());
  std::string s = fmt::format("target gap {:.6g}\n{:<{}}  {:>14}  {:>9}  {:>14}  {:>12}\n", c.target, "method", w,
                              "median iters", "reached", "theory K", "budget");
  for (const auto& r : c.rows) {
    const std::string med = std::isfinite(r.median_iterations) ? fmt::format("{:.0f}", r.median_iterations) : "not reached";
    s += fmt::format("{:<{}}  {:>14}  {:>9}  {:>14}  {:>12}\n", r.method, w, med, fmt::format("{}/{}", r.reached, r.runs),
                     r.K_theory, r.K_run);
  }
  return s;
}

// `compare`: iterations until the last or averaged iterate first reaches the target gap,
// median over seeds, next to each method's derived K. Runs stop at their first hit.
inline CompareOutput cli_compare(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.stop_at_target = true;
  const StochOracle oracle = make_oracle(cfg);
  check_plan(cfg, oracle);
  const auto cells = make_cells(cfg);
  RecordOptions quiet;
  quiet.stride = std::numeric_limits<std::uint64_t>::max();
  const auto records = parallel_map(cells.size(), cfg.parallel, [&](std::size_t i) {
    const auto& m = cfg.methods[cells[i].method];
    const auto s = resolve_settings(cfg, m);
    RecordOptions r = quiet;
    r.target_gap = cfg.target.value_or(s.eps);
    r.stop_at_target = true;
    return run_method(m, s, oracle, cells[i].seed, cells[i].run_id, r);
  });

  CompareOutput out;
  out.target = cfg.target.value_or(cfg.eps);
  std::string csv = "method,median_iterations,reached,runs,K_theory,K_run\n";
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    CompareRow row;
    row.method = cfg.methods[m].label;
    std::vector<double> hits;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].method != m) continue;
      const auto& r = records[i];
      const auto hit = r.best_hit();
      hits.push_back(hit == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(hit));
      row.reached += hit != 0;
      ++row.runs;
      if (row.K_run.empty()) {
        row.K_run = param_of(r, "K_run");
        row.K_theory = param_of(r, "K_theory");
        if (row.K_theory.empty()) row.K_theory = param_of(r, "K");
      }
    }
    row.median_iterations = median_hits(hits);
    csv += fmt::format("\"{}\",{:.17g},{},{},{},{}\n", row.method, row.median_iterations, row.reached, row.runs, row.K_theory,
                       row.K_run);
    out.rows.push_back(std::move(row));
  }
  out.table = format_compare_table(out);
  const auto dir = effective_out_dir(cfg.out);
  auto manifest = manifest_head("compare", cfg, oracle);
  auto runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cells.size(); ++i)
    runs.push_back(run_summary_json(cfg.methods[cells[i].method].label, "", records[i], cfg.timing));
  manifest["runs"] = runs;
  write_file_atomic(std::filesystem::path(dir) / "compare.csv", csv);
  write_file_atomic(std::filesystem::path(dir) / "manifest.json", manifest.dump(2) + "\n");
  return out;
}

struct SweepPoint {
  std::uint64_t K = 0;
  std::uint64_t seed = 0;
  double f_gap = 0.0;
  double f_gap_avg = 0.0;
  double min_gap = 0.0;
};

struct SweepOutput {
  std::vector<SweepPoint> points;
  std::vector<double> Ks;
  std::vector<double> mean_gap;      // over seeds, last iterate
  std::vector<double> mean_gap_avg;  // over seeds, averaged iterate
  std::optional<SlopeFit> fit_avg;
  std::optional<SlopeFit> fit_last;
  std::string note;
};

// `sweep`: the first method, re-run with K overridden by each sweep_K value (derived
// parameters such as a K-dependent stepsize follow K), final gaps per seed, and
// log-log slopes of the seed-mean gaps against K.
inline SweepOutput cli_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_K.empty()) throw ConfigError("sweep: sweep_K is empty");
  const StochOracle oracle = make_oracle(cfg);
  check_plan(cfg, oracle);
  const auto& m = cfg.methods.front();
  const auto s = resolve_settings(cfg, m);
  struct Job {
    std::uint64_t K, seed;
  };
  std::vector<Job> jobs;
  for (auto K : cfg.sweep_K)
    for (auto seed : cfg.seeds) jobs.push_back({K, seed});
  RecordOptions quiet;
  quiet.stride = std::numeric_limits<std::uint64_t>::max();
  const auto recs = parallel_map(jobs.size(), cfg.parallel, [&](std::size_t i) {
    return run_method(m, s, oracle, jobs[i].seed, 0, quiet, jobs[i].K);
  });

  SweepOutput out;
  std::string csv;
  append_header(csv, "config.", cfg.result_fields());
  csv += "K,seed,f_gap,f_gap_avg_iterate,min_gap\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    out.points.push_back({jobs[i].K, jobs[i].seed, recs[i].final_gap, recs[i].final_gap_avg, recs[i].min_gap});
    csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", jobs[i].K, jobs[i].seed, recs[i].final_gap, recs[i].final_gap_avg,
                       recs[i].min_gap);
  }
  const double n = static_cast<double>(cfg.seeds.size());
  for (std::size_t k = 0; k < cfg.sweep_K.size(); ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < cfg.seeds.size(); ++j) {
      a += recs[k * cfg.seeds.size() + j].final_gap;
      b += recs[k * cfg.seeds.size() + j].final_gap_avg;
    }
    out.Ks.push_back(static_cast<double>(cfg.sweep_K[k]));
    out.mean_gap.push_back(a / n);
    out.mean_gap_avg.push_back(b / n);
  }
  try {
    out.fit_avg = slope_fit(out.Ks, out.mean_gap_avg, out.Ks.front());
    out.fit_last = slope_fit(out.Ks, out.mean_gap, out.Ks.front());
  } catch (const ConfigError& e) {
    out.note = e.what();
  }
  const auto dir = effective_out_dir(cfg.out);
  auto manifest = manifest_head("sweep", cfg, oracle);
  manifest["method_params_at_first_K"] = kv_json(recs.front().params);
  auto fit = [](const std::optional<SlopeFit>& f) {
    if (!f) return nlohmann::ordered_json(nullptr);
    return nlohmann::ordered_json{{"slope", json_real(f->slope)},     {"intercept", json_real(f->intercept)},
                                  {"points", f->points},              {"degenerate", f->degenerate},
                                  {"r2_loglog", json_real(f->r2_loglog)}, {"linear_in_k", f->linear_in_k}};
  };
  manifest["slope_avg_iterate"] = fit(out.fit_avg);
  manifest["slope_last_iterate"] = fit(out.fit_last);
  if (!out.note.empty()) manifest["note"] = out.note;
  write_file_atomic(std::filesystem::path(dir) / "sweep.csv", csv);
  write_file_atomic(std::filesystem::path(dir) / "manifest.json", manifest.dump(2) + "\n");
  return out;
}

}  // namespace glopt
