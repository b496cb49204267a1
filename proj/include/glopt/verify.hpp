#pragma once

// Numeric checkers for the structural lemmas and assumptions. Every checker is
// deterministic given its seed and reports the worst witness it found.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"
#include "glopt/online.hpp"
#include "glopt/problems.hpp"
#include "glopt/rng.hpp"

namespace glopt {

using json = nlohmann::ordered_json;

struct CheckReport {
  std::string checker;
  std::string subject;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();  // largest normalized excess (<= 0 means satisfied)
  json witness = json::object();
  json details = json::object();
  std::vector<std::string> caveats;
  bool applicable = true;

  bool pass() const { return applicable && violations == 0; }

  // Records one evaluation; `excess` > tol counts as a violation.
  void observe(double excess, double tol, const json& where) {
    ++checked;
    if (std::isnan(excess)) excess = std::numeric_limits<double>::infinity();
    if (excess > tol) ++violations;
    if (excess > worst) {
      worst = excess;
      witness = where;
    }
  }

  json to_json() const {
    json j;
    j["checker"] = checker;
    j["subject"] = subject;
    j["pass"] = pass();
    j["applicable"] = applicable;
    j["checked"] = checked;
    j["violations"] = violations;
    j["worst_excess"] = std::isfinite(worst) ? json(worst) : json(fmt::format("{}", worst));
    j["witness"] = witness;
    j["details"] = details;
    j["caveats"] = caveats;
    return j;
  }
};

namespace detail {

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline double gaussian(PhiloxEngine& eng) {
  double u = eng.uniform01();
  while (u == 0.0) u = eng.uniform01();
  const double v = eng.uniform01();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

// Uniform point in the ball of radius r.
inline Vec ball_point(PhiloxEngine& eng, std::size_t d, double r) {
  Vec x(d);
  for (auto& v : x) v = gaussian(eng);
  const double n = norm(x);
  const double rad = r * std::pow(eng.uniform01(), 1.0 / static_cast<double>(d));
  if (n > 0) scale(x, rad / n);
  return x;
}

// Pairs in Q_{2R}: half with uniform partners, half with short steps (log-uniform length).
inline std::pair<Vec, Vec> sample_pair(PhiloxEngine& eng, std::size_t d, double R, std::size_t i) {
  Vec x = ball_point(eng, d, 2.0 * R);
  if (i % 2 == 0) return {std::move(x), ball_point(eng, d, 2.0 * R)};
  Vec dir = ball_point(eng, d, 1.0);
  const double n = norm(dir);
  const double len = R * std::pow(10.0, -6.0 * eng.uniform01());
  Vec y = x;
  if (n > 0) axpy(len / n, dir, y);
  return {std::move(x), std::move(y)};
}

}  // namespace detail

// Both lines of the two-point characterization of (M0, M1)-Lipschitzness.
// `M0_override` / `M1_override` replace the declared constants (negative controls).
inline CheckReport check_lemma_m01(const Problem& p, std::size_t n_pairs, double tol = 1e-8, std::uint64_t seed = 0,
                                   std::optional<double> M0_override = {}, std::optional<double> M1_override = {}) {
  CheckReport r;
  r.checker = "lemma_m01";
  r.subject = p.id();
  const auto& c = p.constants();
  const double M0 = M0_override.value_or(c.M0), M1 = M1_override.value_or(c.M1);
  r.details["M0"] = M0;
  r.details["M1"] = M1;
  r.details["n_pairs"] = n_pairs;
  if (!std::isfinite(M0) || !p.generalized_lipschitz()) {
    r.applicable = false;
    r.caveats.push_back("no finite (M0, M1): the characterization does not apply");
    return r;
  }
  PhiloxEngine eng(seed, 0, Substream::aux);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    auto [x, y] = detail::sample_pair(eng, p.dim(), c.R, i);
    const double fx = p.value(x), fy = p.value(y);
    const double gap = std::max(0.0, fx - c.fstar);
    const double t = distance(x, y);
    const double lhs = std::abs(fy - fx);
    const double line1 = M1 > 0.0 ? (M0 / M1 + gap) * std::expm1(M1 * t) : M0 * t;
    const double line2 = (M0 + M1 * gap) * std::exp(M1 * t) * t;
    const double scale = std::max({1.0, std::abs(fx), std::abs(fy)});
    const json where = {{"x", detail::vec_json(x)}, {"x_prime", detail::vec_json(y)}, {"lhs", lhs},
                        {"line1", line1},          {"line2", line2}};
    r.observe((lhs - line1) / scale, tol, where);
    r.observe((line1 - line2) / std::max(scale, std::abs(line2)), tol, where);
  }
  return r;
}

enum class TechVariant { tech, tech2 };

inline const char* to_string(TechVariant v) { return v == TechVariant::tech ? "tech" : "tech2"; }

struct TechTrial {
  double p = 0.5;
  double gamma = 1.0;
  std::vector<double> alpha;  // alpha_1..alpha_n
  std::vector<double> pi;     // pi_0..pi_n
  std::vector<double> delta;  // delta_1..delta_n
};

// Largest normalized excess of the conclusion over the n steps, for the extremal
// sequence that meets the hypothesis with equality.
inline double tech_trial_excess(TechVariant v, const TechTrial& t, std::size_t* worst_k = nullptr) {
  const std::size_t n = t.alpha.size();
  const double coef = v == TechVariant::tech ? t.p : t.p * t.gamma;
  double tau = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= n; ++k) {
    const double a = t.alpha[k - 1], pik = t.pi[k], dk = t.delta[k - 1];
    const double Delta = (dk + coef * tau) / (pik * (1.0 - coef * a));
    tau += a * pik * Delta;
    double rhs = 0.0;
    if (v == TechVariant::tech) {
      for (std::size_t i = 2; i <= k; ++i) rhs += t.alpha[i - 1] * t.delta[i - 1] * std::pow(pik / t.pi[i - 1], t.p);
      const double first0 = t.pi[0] > 0.0 ? std::pow(pik / t.pi[0], t.p) : std::numeric_limits<double>::infinity();
      rhs += t.alpha[0] * t.delta[0] * std::min(first0, 2.0 * std::pow(pik / t.pi[1], t.p));
    } else {
      for (std::size_t i = 1; i <= k; ++i) rhs += t.alpha[i - 1] * t.delta[i - 1] * std::pow(pik / t.pi[i - 1], t.p);
    }
    const double ex = (tau - rhs) / std::max({1e-300, std::abs(tau), std::abs(rhs)});
    if (ex > worst) {
      worst = ex;
      if (worst_k) *worst_k = k;
    }
  }
  return worst;
}

// Random admissible trial: p in (0, 1/2], pi from the matching recursion, delta >= 0
// (some zero entries, some heavy-tailed).
inline TechTrial random_tech_trial(TechVariant v, PhiloxEngine& eng, std::size_t n) {
  TechTrial t;
  t.p = 0.5 * (1.0 - eng.uniform01());
  t.gamma = v == TechVariant::tech2 ? 1.0 - eng.uniform01() : 1.0;
  const int family = static_cast<int>(eng() % 3);  // 0: 1/k-type, 1: constant, 2: two-stage
  const bool averaging = family == 0 && v == TechVariant::tech;  // pi_0 = 0, pi_k = k
  t.pi.push_back(averaging ? 0.0 : (family == 0 ? 1.0 : std::exp(4.0 * eng.uniform01() - 2.0)));
  const double a1 = 0.5 * eng.uniform01() + 1e-3, a2 = std::max(a1 * eng.uniform01(), 1e-4);
  const std::size_t switch_at = 1 + static_cast<std::size_t>(eng() % n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    double a = a1;
    if (family == 0) a = averaging ? 1.0 / kd : 1.0 / (kd + 1.0);
    if (family == 2 && k > switch_at) a = a2;
    const double shrink = v == TechVariant::tech ? a : t.gamma * a;
    t.alpha.push_back(a);
    t.pi.push_back(averaging ? kd : t.pi.back() / (1.0 - shrink));
    const double u = eng.uniform01();
    t.delta.push_back(u < 0.2 ? 0.0 : std::exp(6.0 * eng.uniform01() - 3.0));
  }
  return t;
}

inline CheckReport check_tech_lemma(TechVariant v, std::size_t n_trials, std::uint64_t seed = 0, double tol = 1e-9,
                                    std::size_t horizon = 60) {
  CheckReport r;
  r.checker = fmt::format("tech_lemma:{}", to_string(v));
  r.subject = "greedy-equality sequences";
  r.details["n_trials"] = n_trials;
  r.details["horizon"] = horizon;
  PhiloxEngine eng(seed, 1, Substream::aux);
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const TechTrial t = random_tech_trial(v, eng, horizon);
    std::size_t k = 0;
    const double ex = tech_trial_excess(v, t, &k);
    r.observe(ex, tol, {{"trial", trial}, {"k", k}, {"p", t.p}, {"gamma", t.gamma}, {"pi0", t.pi[0]}});
  }
  return r;
}

// A stream family for the regret checks: per-step gradient scales log-uniform in
// [scale_lo, scale_hi], random directions with an optional persistent drift.
inline std::vector<Vec> random_stream(PhiloxEngine& eng, std::size_t K, std::size_t d, double scale_lo, double scale_hi) {
  std::vector<Vec> s;
  s.reserve(K);
  Vec drift(d);
  for (auto& v : drift) v = detail::gaussian(eng);
  const double bias = eng.uniform01();
  const double llo = std::log(scale_lo), lhi = std::log(scale_hi);
  for (std::size_t k = 0; k < K; ++k) {
    Vec g(d);
    for (std::size_t i = 0; i < d; ++i) g[i] = bias * drift[i] + detail::gaussian(eng);
    const double n = norm(g);
    const double sc = std::exp(llo + (lhi - llo) * eng.uniform01());
    if (n > 0) scale(g, sc / n);
    s.push_back(std::move(g));
  }
  return s;
}

inline std::vector<Vec> alternating_stream(std::size_t K, const Vec& g) {
  std::vector<Vec> s;
  s.reserve(K);
  for (std::size_t k = 0; k < K; ++k) s.push_back(k % 2 == 0 ? g : scaled(g, -1.0));
  return s;
}

// Empirical constant C = Reg_K / (R sqrt(sum ||g_k||^2)) per stream; violation when C > threshold.
inline CheckReport check_regret_assumption(LearnerKind kind, const std::vector<std::vector<Vec>>& streams, double R,
                                           double C_threshold = 4.0, std::size_t rows = 0) {
  if (!(C_threshold > 0.0)) throw ConfigError("check_regret_assumption: C_threshold must be > 0");
  CheckReport r;
  r.checker = "regret_assumption";
  r.subject = to_string(kind);
  r.caveats.push_back("C threshold is an engineering default");
  double maxC = 0.0;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& stream = streams[s];
    if (stream.empty()) continue;
    const std::size_t d = stream.front().size();
    const RegretRecord rec = play_stream(make_learner(kind, d, R, -1.0, rows), stream);
    const double reg = rec.acc.regret(R, learner_geometry(kind), rows);
    const double bound = R * std::sqrt(rec.acc.sum_sq);
    const double C = bound > 0.0 ? reg / bound : (reg > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    maxC = std::max(maxC, C);
    r.observe(C - C_threshold, 0.0, {{"stream", s}, {"regret", reg}, {"bound_unit", bound}, {"C", C}});
  }
  r.details["max_C"] = maxC;
  r.details["C_threshold"] = C_threshold;
  r.details["streams"] = streams.size();
  return r;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

struct QuasarCertificate {
  double gamma = 0.0;  // 0 when no grid value passes
  CheckReport report;
};

// Largest grid gamma with f(t x* + (1-t) x) <= gamma t f* + (1 - gamma t) f(x) + slack at every grid (t, x),
// plus a spot check of gamma (f(x) - f*) <= <x - x*, grad f(x; w)> at the grid points.
inline QuasarCertificate certify_quasar(const Problem& p, std::vector<double> gamma_grid, const std::vector<double>& t_grid,
                                        const std::vector<Vec>& x_grid, double slack = 1e-9, std::uint64_t seed = 0) {
  QuasarCertificate out;
  CheckReport& r = out.report;
  r.checker = "certify_quasar";
  r.subject = p.id();
  const auto& c = p.constants();
  if (c.xstar.size() != p.dim()) throw ConfigError("certify_quasar: x* must be known");
  std::sort(gamma_grid.begin(), gamma_grid.end());
  // For fixed (t, x) the inequality is monotone in gamma, so each point yields a cap.
  double cap = std::numeric_limits<double>::infinity();
  json cap_at;
  Vec y(p.dim());
  for (const Vec& x : x_grid) {
    const double fx = p.value(x);
    for (double t : t_grid) {
      if (t <= 0.0) continue;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = t * c.xstar[i] + (1.0 - t) * x[i];
      const double fy = p.value(y);
      const double denom = t * (fx - c.fstar);
      double g;
      if (denom <= 0.0)
        g = fy <= fx + slack ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      else
        g = (fx - fy + slack) / denom;
      if (g < cap) {
        cap = g;
        cap_at = {{"x", detail::vec_json(x)}, {"t", t}, {"f_x", fx}, {"f_y", fy}};
      }
    }
  }
  for (double gm : gamma_grid)
    if (gm <= cap) out.gamma = gm;
  r.details["gamma_certified"] = out.gamma;
  r.details["gamma_cap"] = std::isfinite(cap) ? json(cap) : json("inf");
  r.details["binding_point"] = cap_at;

  // First-order spot check at differentiable points with random directions.
  PhiloxEngine eng(seed, 2, Substream::aux);
  Vec g(p.dim());
  for (const Vec& x : x_grid) {
    Vec w = detail::ball_point(eng, p.dim(), 1.0);
    p.generalized_grad(x, w, g);
    Vec diff = x;
    axpy(-1.0, c.xstar, diff);
    const double lhs = out.gamma * (p.value(x) - c.fstar);
    const double rhs = dot(diff, g);
    r.observe((lhs - rhs) / std::max(1.0, std::abs(lhs)), 1e-9, {{"x", detail::vec_json(x)}, {"lhs", lhs}, {"rhs", rhs}});
  }
  if (!p.generalized_lipschitz() || !p.convex())
    r.caveats.push_back("grid certificate only: regularity of f (local Lipschitz / Hadamard differentiability) is not checked");
  if (out.gamma == 0.0) ++r.violations;
  return out;
}

// Default grid: 1-D points in [-R, R] without x*, else random points of the ball.
inline std::vector<Vec> quasar_x_grid(const Problem& p, std::size_t n, std::uint64_t seed = 0) {
  const auto& c = p.constants();
  std::vector<Vec> xs;
  if (p.dim() == 1) {
    for (double v : linspace(-c.R, c.R, n))
      if (std::abs(v - c.xstar[0]) > 1e-12) xs.push_back(Vec{v});
    return xs;
  }
  PhiloxEngine eng(seed, 3, Substream::aux);
  for (std::size_t i = 0; i < n; ++i) xs.push_back(detail::ball_point(eng, p.dim(), c.R));
  return xs;
}

inline double sl01_beta(double nu, double sigma, double L0, double L1) {
  if (sigma == 0.0) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double a = (L0 > 0.0 && nu > 0.0) ? std::pow(std::pow(sigma, 1.0 + nu) / L0, 1.0 / nu) : inf;
  const double b = L1 > 0.0 ? sigma / L1 : inf;
  return std::min(a, b);
}

// |h(x') - h(x)|^{1+nu} <= C (L0 + (L1 h(x))^{1+nu}) exp(L1 ||x' - x||) ||x' - x||^{1+nu}.
inline CheckReport check_h_property(const Problem& p, std::size_t n_pairs, double constant = 8.0, std::uint64_t seed = 0,
                                    double tol = 1e-9) {
  CheckReport r;
  r.checker = "h_property";
  r.subject = p.id();
  const auto& c = p.constants();
  const double nu = c.nu, L0 = c.L0, L1 = c.L1;
  const double beta = sl01_beta(nu, c.sigma, L0, L1);
  r.details["constant"] = constant;
  r.details["beta"] = beta;
  r.details["nu"] = nu;
  r.details["L0"] = L0;
  r.details["L1"] = L1;
  r.details["sigma"] = c.sigma;
  r.caveats.push_back("the constant stands in for an unspecified universal factor");
  if (!std::isfinite(L0) || !std::isfinite(L1)) {
    r.applicable = false;
    r.caveats.push_back("no finite (L0, L1): the bound does not apply");
    return r;
  }
  auto h = [&](const Vec& x) { return std::pow(beta + std::max(0.0, p.value(x) - c.fstar), 1.0 / (1.0 + nu)); };
  PhiloxEngine eng(seed, 4, Substream::aux);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    auto [x, y] = detail::sample_pair(eng, p.dim(), c.R, i);
    const double hx = h(x), hy = h(y);
    const double t = distance(x, y);
    const double lhs = std::pow(std::abs(hy - hx), 1.0 + nu);
    const double rhs = constant * (L0 + std::pow(L1 * hx, 1.0 + nu)) * std::exp(L1 * t) * std::pow(t, 1.0 + nu);
    r.observe((lhs - rhs) / std::max({1e-300, lhs, rhs}), tol,
              {{"x", detail::vec_json(x)}, {"x_prime", detail::vec_json(y)}, {"lhs", lhs}, {"rhs", rhs}});
  }
  return r;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  bool degenerate = false;      // constant series
  bool linear_in_k = false;     // log(gap) is better explained by k than by log(k): geometric decay
  double r2_loglog = 0.0;
  double r2_linear = 0.0;
  std::size_t dropped_nonpositive = 0;
};

namespace detail {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  bool flat = false;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  if (syy <= 1e-24 * std::max(1.0, my * my) * n) {
    f.flat = true;
    f.intercept = my;
    f.r2 = 1.0;
    return f;
  }
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = sxx > 0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  return f;
}

}  // namespace detail

// Least-squares slope of log(gap) against log(k) over k >= k_min.
inline SlopeFit slope_fit(const std::vector<double>& ks, const std::vector<double>& gaps, double k_min) {
  if (ks.size() != gaps.size()) throw ConfigError("slope_fit: series lengths differ");
  std::vector<double> lk, lg, kk;
  SlopeFit out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < k_min) continue;
    if (!(gaps[i] > 0.0) || !(ks[i] > 0.0)) {
      ++out.dropped_nonpositive;
      continue;
    }
    lk.push_back(std::log(ks[i]));
    lg.push_back(std::log(gaps[i]));
    kk.push_back(ks[i]);
  }
  out.points = lk.size();
  if (out.points < 20) throw ConfigError(fmt::format("slope_fit: need >= 20 points beyond k_min, have {}", out.points));
  const auto ll = detail::least_squares(lk, lg);
  if (ll.flat) {
    out.degenerate = true;
    out.intercept = ll.intercept;
    return out;
  }
  const auto lin = detail::least_squares(kk, lg);
  out.slope = ll.slope;
  out.intercept = ll.intercept;
  out.r2_loglog = ll.r2;
  out.r2_linear = lin.r2;
  out.linear_in_k = lin.r2 > ll.r2;
  return out;
}

}  // namespace glopt
