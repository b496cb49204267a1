// Acceptance runs: one pass/fail line per criterion.
//
//   acceptance [--criterion N] [--out DIR]
//
// Without --criterion every criterion runs in order. Exit status 0 iff all selected criteria pass.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "glopt/glopt.hpp"
#include "glopt/harness.hpp"

using namespace glopt;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::filesystem::path g_out = "acceptance_out";

double rel_diff(const Vec& a, const Vec& b, double floor) { return distance(a, b) / std::max(norm(b), floor); }

ConversionOptions keep_all(std::uint64_t K, std::uint64_t seed) {
  ConversionOptions opt;
  opt.K_override = K;
  opt.seed = seed;
  opt.record.keep_vectors = true;
  return opt;
}

ExperimentConfig config_of(const std::vector<std::pair<std::string, std::string>>& kv) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : kv) cfg.set(k, v, "acceptance");
  return cfg;
}

// 1. Conversion with SOLO scalar reproduces the direct clipped-AdamW loops.
Verdict criterion1() {
  double worst = 0.0;
  std::string where;
  for (const char* id : {"exp_inf{d=1}", "power_inf{d=3,seed=2}", "holder{nu=1,d=2}"}) {
    StochOracle o(make_problem(id), NoiseModel::v_bernoulli);
    for (auto [sk, ok] : {std::pair{ScheduleKind::avg, OptimizerKind::adamw_avg},
                          std::pair{ScheduleKind::exp_const, OptimizerKind::adamw_exp}}) {
      const auto s = make_schedule(sk, o.constants(), 0.1);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto conv =
            run_conversion(o, make_learner(LearnerKind::solo_scalar, o.dim(), o.constants().R), s, keep_all(1000, seed));
        OptimizerSpec spec;
        spec.kind = ok;
        spec.K = 1000;
        spec.eps = 0.1;
        spec.seed = seed;
        spec.record.keep_vectors = true;
        const auto direct = run_optimizer(spec, o);
        if (conv.x_history.size() != direct.x_history.size() || conv.x_history.size() != 1001)
          return {false, fmt::format("{} {}: trajectory lengths differ", id, to_string(sk))};
        for (std::size_t k = 0; k < conv.x_history.size(); ++k) {
          const double d = rel_diff(conv.x_history[k], direct.x_history[k], o.constants().R);
          if (d > worst) {
            worst = d;
            where = fmt::format("{} {} seed {} k {}", id, to_string(sk), seed, k);
          }
        }
      }
    }
  }
  return {worst <= 1e-9, fmt::format("max relative deviation {:.3g} (at {})", worst, where.empty() ? "-" : where)};
}

// 2. SGD above the Case I threshold oscillates between +R and -R on sgd_I.
Verdict criterion2() {
  const double R = 1, G0 = 1, G1 = 8;
  auto inst = std::make_shared<LowerBoundInstance>(LowerBoundKind::sgd_I, R, G0, G1, 0.1);
  StochOracle o(inst);
  const double thr = LowerBoundInstance::sgd_case_threshold(R, G0, G1);
  OptimizerSpec spec;
  spec.kind = OptimizerKind::sgd_const;
  spec.eta = 10.0 * thr;
  spec.K = 100000;
  spec.record.keep_vectors = true;
  const auto rec = run_optimizer(spec, o);
  std::size_t sign_errors = 0;
  for (std::size_t K = 1; K < rec.x_history.size(); ++K)
    if (rec.x_history[K][0] != (K % 2 == 1 ? R : -R)) ++sign_errors;
  const double floor_gap = (G0 / G1) * (std::exp(2.0) - 1.0);
  double min_metric = INFINITY;
  for (const auto& row : rec.rows) min_metric = std::min(min_metric, std::min(row.f_gap, row.f_gap_avg_iterate));
  const bool ok = rec.x_history.size() == 100001 && rec.rows.size() == 100000 && sign_errors == 0 &&
                  min_metric >= floor_gap * (1 - 1e-9);
  return {ok, fmt::format("eta {:.3g} (threshold {:.3g}), {} sign errors in 1e5 steps, min gap {:.6g} vs floor {:.6g}",
                          *spec.eta, thr, sign_errors, min_metric, floor_gap)};
}

// 3. Separation on the SGD lower-bound family.
Verdict criterion3() {
  auto cfg = config_of({{"problem", "lower:sgd_I{R=1,G0=1,G1=64}"},
                        {"eps", "0.01"},
                        {"seeds", "0..19"},
                        {"out", (g_out / "c3").string()}});
  const auto rep = cli_lower_bound(cfg);
  fmt::print("{}", rep.table);
  std::string adamw;
  for (const auto& a : rep.adamw) adamw += fmt::format(" {}:K={},hit={}", a.instance, a.K, a.first_mean_hit);
  return {rep.adamw_reached_all && rep.sgd_separated && rep.adagrad_separated,
          fmt::format("AdamW reached eps on all instances: {} ({}); SGD separated: {}; AdaGrad-Norm separated: {}",
                      rep.adamw_reached_all ? "yes" : "no", adamw.substr(1), rep.sgd_separated ? "yes" : "no",
                      rep.adagrad_separated ? "yes" : "no")};
}

// 4. Regret bound with C = 4 on random streams.
Verdict criterion4() {
  const auto streams = regret_streams(100, 1000);
  bool ok = true;
  std::string detail;
  for (auto kind : {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad}) {
    const auto r = check_regret_assumption(kind, streams, 1.0, 4.0);
    ok = ok && r.pass() && r.checked == 100;
    detail += fmt::format("{}: {} violations, max C {:.3f}; ", to_string(kind), r.violations,
                          r.details["max_C"].get<double>());
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 5. Property checkers on the suite, plus negative controls that must fail.
Verdict criterion5() {
  std::size_t failed = 0, na = 0, reports = 0;
  std::string failures;
  auto tally = [&](const CheckReport& r) {
    ++reports;
    if (!r.applicable) ++na;
    else if (!r.pass()) {
      ++failed;
      failures += fmt::format(" {}[{}]", r.checker, r.subject);
    }
  };
  for (const auto& id : reference_suite()) {
    const auto p = make_problem(id);
    tally(check_lemma_m01(*p, 10000, 1e-8));
    tally(check_h_property(*p, 10000, 8.0));
  }
  for (auto v : {TechVariant::tech, TechVariant::tech2}) tally(check_tech_lemma(v, 1000, 0, 1e-9));

  const auto grid = linspace(0.01, 1.0, 100);
  const auto abs1 = make_problem("abs_power{q=1}");
  const auto abs_half = make_problem("abs_power{q=0.5}");
  const auto c1 = certify_quasar(*abs1, grid, linspace(0.0, 1.0, 201), quasar_x_grid(*abs1, 201));
  const auto ch = certify_quasar(*abs_half, grid, linspace(0.0, 1.0, 1001), quasar_x_grid(*abs_half, 200));
  tally(c1.report);
  tally(ch.report);
  const bool gammas_ok = c1.gamma == 1.0 && std::abs(ch.gamma - 0.5) <= 0.01;

  // Negative controls.
  const auto e = make_problem("exp_inf{d=1}");
  const bool neg_m01 = !check_lemma_m01(*e, 10000, 1e-8, 0, e->constants().M0 / 2).pass();
  std::size_t tech_hits = 0;
  PhiloxEngine eng(0, 1, Substream::aux);
  for (int i = 0; i < 1000; ++i) {
    auto t = random_tech_trial(TechVariant::tech, eng, 60);
    t.p = 1.9;
    if (tech_trial_excess(TechVariant::tech, t) > 1e-9) ++tech_hits;
  }
  const bool neg_tech = tech_hits > 0;
  const bool neg_h = !check_h_property(*make_problem("holder{nu=0.5}"), 10000, 1e-3).pass();
  const bool neg_regret = !check_regret_assumption(LearnerKind::solo_scalar, regret_streams(20, 1000), 1.0, 1e-3).pass();
  const bool neg_ok = neg_m01 && neg_tech && neg_h && neg_regret;

  return {failed == 0 && gammas_ok && neg_ok,
          fmt::format("{} reports, {} failed{}, {} not applicable; gamma(|x|) = {:.3g}, gamma(|x|^0.5) = {:.3g}; "
                      "negative controls fail as expected: m01 {}, tech {} ({} of 1000), h {}, regret {}",
                      reports, failed, failures, na, c1.gamma, ch.gamma, neg_m01, neg_tech, tech_hits, neg_h,
                      neg_regret)};
}

// 6. Lipschitz limit: averaged-iterate SGD decays like K^(-1/2).
Verdict criterion6() {
  auto cfg = config_of({{"problem", "lipschitz_inf{d=2}"},
                        {"noise", "u_additive"},
                        {"noise_scale", "1"},
                        {"methods", "sgd_const"},
                        {"sweep_K", "1e2:1e5:24"},
                        {"seeds", "0..4"},
                        {"out", (g_out / "c6").string()}});
  const auto out = cli_sweep(cfg);
  if (!out.fit_avg) return {false, "no slope fit: " + out.note};
  const double s = out.fit_avg->slope;
  return {std::abs(s + 0.5) <= 0.15, fmt::format("averaged-iterate log-log slope {:.4f} over {} points", s,
                                                 out.fit_avg->points)};
}

// 7. Universal schedule on a nu = 0.5 Holder instance and on exp_inf.
Verdict criterion7() {
  bool ok = true;
  std::string detail;
  for (const char* id : {"holder{nu=0.5,L1=2}", "exp_inf{d=3,seed=2,R=2}"}) {
    StochOracle o(make_problem(id), NoiseModel::v_bernoulli);
    const auto s = make_schedule(ScheduleKind::universal, o.constants(), 1e-2);
    const std::uint64_t K = s.K_steps();
    ConversionOptions opt;
    opt.record.log_rows = 20;
    opt.record.target_gap = 1e-2;
    std::vector<std::uint64_t> switches;
    double prev_alpha = NAN;
    const auto rec = run_conversion(o, make_learner(LearnerKind::solo_scalar, o.dim(), o.constants().R), s, opt,
                                    [&](const ConversionStep& st) {
                                      if (st.k > 1 && st.alpha != prev_alpha) switches.push_back(st.k);
                                      prev_alpha = st.alpha;
                                    });
    const auto expected = static_cast<std::uint64_t>(s.switch_after) + 1;
    const bool one_switch = switches.size() == 1 && switches[0] == expected;
    const bool reached = rec.best_hit() != 0 && rec.steps == K;
    ok = ok && one_switch && reached;
    detail += fmt::format("{}: K={} first hit {} final gap {:.3g}, alpha switches at {} (expected {}); ", id, K,
                          rec.best_hit(), rec.final_gap, fmt::join(switches, ","), expected);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 8. Quasar-convex conversion with the certified gamma, and its reduction to the standard conversion.
Verdict criterion8() {
  const std::string id = "sqrt_dist{a=1}";
  const auto p = make_problem(id);
  const auto cert = certify_quasar(*p, linspace(0.01, 1.0, 100), linspace(0.0, 1.0, 201), quasar_x_grid(*p, 401));
  if (!cert.report.pass()) return {false, "quasar certificate failed"};
  StochOracle o(p, NoiseModel::v_bernoulli);
  const double eps = 1e-2;
  const auto s = make_schedule(ScheduleKind::quasar_two_stage, o.constants(), eps, 1.0, cert.gamma);
  const std::uint64_t K = s.K_steps();
  std::vector<double> finals;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ConversionOptions opt;
    opt.seed = seed;
    opt.record.log_rows = 10;
    finals.push_back(run_conversion_quasar(o, make_learner(LearnerKind::solo_scalar, o.dim(), o.constants().R), s, opt)
                         .final_gap);
  }
  double mean = 0.0;
  for (double f : finals) mean += f / static_cast<double>(finals.size());

  const auto q1 = make_schedule(ScheduleKind::quasar_two_stage, o.constants(), eps, 1.0, 1.0);
  const auto t1 = make_schedule(ScheduleKind::two_stage, o.constants(), eps);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto opt = keep_all(1000, seed);
    opt.zeta_override = 1.0;
    const auto a = run_conversion_quasar(o, make_learner(LearnerKind::solo_scalar, o.dim(), o.constants().R), q1, opt);
    opt.zeta_override.reset();
    const auto b = run_conversion(o, make_learner(LearnerKind::solo_scalar, o.dim(), o.constants().R), t1, opt);
    if (a.x_history.size() != b.x_history.size()) return {false, "gamma = 1 trajectory lengths differ"};
    for (std::size_t k = 0; k < a.x_history.size(); ++k)
      worst = std::max(worst, rel_diff(a.x_history[k], b.x_history[k], o.constants().R));
  }
  return {mean <= eps && worst <= 1e-9,
          fmt::format("{} certified gamma {:.3g} (declared {:.3g}): K={} mean final gap over 20 seeds {:.3g}; "
                      "gamma=1, zeta=1 max relative deviation {:.3g}",
                      id, cert.gamma, o.constants().gamma, K, mean, worst)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every CSV under a and b, compared byte for byte.
std::pair<std::size_t, std::size_t> compare_csvs(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::size_t files = 0, diffs = 0;
  for (const auto& e : std::filesystem::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const auto other = b / e.path().filename();
    if (!std::filesystem::exists(other) || slurp(e.path()) != slurp(other)) ++diffs;
  }
  for (const auto& e : std::filesystem::directory_iterator(b))
    if (e.path().extension() == ".csv" && !std::filesystem::exists(a / e.path().filename())) ++diffs;
  return {files, diffs};
}

// 9. Reruns, at different parallel degrees, give byte-identical CSVs.
Verdict criterion9() {
  const std::vector<std::pair<std::string, std::string>> run_cfg = {
      {"problem", "power_inf{d=3,seed=2}"},
      {"noise", "v_bernoulli"},
      {"methods", "adamw_exp,adamw_avg,adamw_exp{schedule=two_stage},sgd_const,adagrad_norm,gd_polyak,"
                  "conversion{learner=ogd_adagrad},quasar,adamw_diag,leonw_matrix"},
      {"eps", "0.1"},
      {"K", "20000"},
      {"seeds", "0..3"}};
  const std::vector<std::pair<std::string, std::string>> sweep_cfg = {
      {"problem", "lipschitz_inf{d=2}"}, {"noise", "u_additive"}, {"methods", "sgd_const"},
      {"sweep_K", "1e2:1e4:8"},          {"seeds", "0..4"}};
  const std::vector<std::pair<std::string, std::string>> compare_cfg = {
      {"problem", "exp_inf{d=3,seed=2,R=2}"},
      {"noise", "v_bernoulli"},
      {"methods", "adamw_exp{schedule=two_stage},sgd_const,adagrad_norm,adamw_avg"},
      {"eps", "0.05"},
      {"seeds", "0..4"}};
  const std::vector<std::pair<std::string, std::string>> lower_cfg = {
      {"problem", "lower:sgd_I{R=1,G0=1,G1=16}"}, {"eps", "0.05"}, {"seeds", "0..4"}};
  std::size_t files = 0, diffs = 0;
  for (const auto& [tag, base] : {std::pair{"run", run_cfg}, std::pair{"sweep", sweep_cfg},
                                  std::pair{"compare", compare_cfg}, std::pair{"lower", lower_cfg}}) {
    std::vector<std::filesystem::path> dirs;
    for (const char* parallel : {"1", "3", "1"}) {
      auto kv = base;
      dirs.push_back(g_out / fmt::format("c9_{}_{}_{}", tag, parallel, dirs.size()));
      std::filesystem::remove_all(dirs.back());
      kv.emplace_back("parallel", parallel);
      kv.emplace_back("out", dirs.back().string());
      const auto cfg = config_of(kv);
      if (std::string(tag) == "run") cli_run(cfg);
      else if (std::string(tag) == "sweep") cli_sweep(cfg);
      else if (std::string(tag) == "compare") cli_compare(cfg);
      else cli_lower_bound(cfg);
    }
    for (std::size_t i = 1; i < dirs.size(); ++i) {
      const auto [f, d] = compare_csvs(dirs[0], dirs[i]);
      files += f;
      diffs += d;
    }
  }
  return {files > 0 && diffs == 0, fmt::format("{} CSV comparisons across reruns at parallel 1 and 3, {} differ", files, diffs)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  std::string out = g_out.string();
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--out", out, "scratch directory for harness output");
  CLI11_PARSE(app, argc, argv);
  g_out = out;
  unsetenv("GLOPT_OUT_DIR");

  const std::vector<Criterion> all = {
      {1, "conversion equivalence", 10, criterion1},     {2, "lower-bound oscillation", 5, criterion2},
      {3, "separation", 300, criterion3},                {4, "regret assumption", 30, criterion4},
      {5, "lemma suites", 60, criterion5},               {6, "classical rate recovery", 60, criterion6},
      {7, "universal schedule", 120, criterion7},        {8, "quasar run", 120, criterion8},
      {9, "determinism", 600, criterion9}};

  bool all_pass = true;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("error: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = v.pass && in_time;
    all_pass = all_pass && pass;
    fmt::print("criterion {} ({}): {} - {}; {:.1f} s (limit {:.0f} s{})\n", c.id, c.name, pass ? "PASS" : "FAIL",
               v.detail, secs, c.limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
