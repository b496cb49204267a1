#pragma once

// Direct implementations: projected GD (constant, normalized, Polyak), projected SGD,
// AdaGrad-Norm, and the clipped AdamW / LeonW loops with scalar, diagonal and
// matrix preconditioning. Every run starts at x = 0 and yields a RunRecord.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"
#include "glopt/online.hpp"
#include "glopt/oracle.hpp"
#include "glopt/record.hpp"
#include "glopt/rng.hpp"
#include "glopt/schedule.hpp"

namespace glopt {

enum class OptimizerKind {
  gd_const,
  gd_normalized,
  gd_polyak,
  sgd_const,
  adagrad_norm,
  adamw_avg,
  adamw_exp,
  adamw_diag,
  leonw_diag,
  leonw_matrix
};

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::gd_const: return "gd_const";
    case OptimizerKind::gd_normalized: return "gd_normalized";
    case OptimizerKind::gd_polyak: return "gd_polyak";
    case OptimizerKind::sgd_const: return "sgd_const";
    case OptimizerKind::adagrad_norm: return "adagrad_norm";
    case OptimizerKind::adamw_avg: return "adamw_avg";
    case OptimizerKind::adamw_exp: return "adamw_exp";
    case OptimizerKind::adamw_diag: return "adamw_diag";
    case OptimizerKind::leonw_diag: return "leonw_diag";
    case OptimizerKind::leonw_matrix: return "leonw_matrix";
  }
  return "?";
}

inline const std::vector<OptimizerKind>& all_optimizer_kinds() {
  static const std::vector<OptimizerKind> kinds = {
      OptimizerKind::gd_const,   OptimizerKind::gd_normalized, OptimizerKind::gd_polyak,  OptimizerKind::sgd_const,
      OptimizerKind::adagrad_norm, OptimizerKind::adamw_avg,   OptimizerKind::adamw_exp,  OptimizerKind::adamw_diag,
      OptimizerKind::leonw_diag, OptimizerKind::leonw_matrix};
  return kinds;
}

inline OptimizerKind parse_optimizer_kind(const std::string& s) {
  for (auto k : all_optimizer_kinds())
    if (s == to_string(k)) return k;
  throw ConfigError(fmt::format("unknown optimizer '{}'", s));
}

inline bool is_adam_family(OptimizerKind k) {
  return k == OptimizerKind::adamw_avg || k == OptimizerKind::adamw_exp || k == OptimizerKind::adamw_diag ||
         k == OptimizerKind::leonw_diag || k == OptimizerKind::leonw_matrix;
}

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adamw_exp;
  double R = 0.0;                 // 0: use the problem's R
  std::optional<double> eta;      // gd_const/sgd_const: fixed stepsize; adagrad_norm: eta / sqrt(sum ||g||^2)
  std::optional<std::uint64_t> K; // otherwise derived
  double eps = 1e-2;              // accuracy used to derive K (and schedules)
  std::optional<ScheduleKind> schedule;  // adam family; defaults: avg, exp_const, two_stage
  double C_hat = 1.0;
  double delta = -1.0;            // diagonal / matrix initial v; negative: library default
  std::size_t rows = 0;           // leonw_matrix
  std::uint64_t seed = 0;
  std::uint64_t run_id = 0;
  RecordOptions record;
};

inline ScheduleKind default_schedule(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::adamw_avg: return ScheduleKind::avg;
    case OptimizerKind::adamw_exp: return ScheduleKind::exp_const;
    default: return ScheduleKind::two_stage;
  }
}

namespace detail {

inline void check_finite_iterate(const Vec& x, const char* method, std::uint64_t k, double gnorm) {
  if (!all_finite(x))
    throw RunError(fmt::format("{}: non-finite iterate at step {} (last ||g|| = {:.17g})", method, k, gnorm));
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::uint64_t checked_K(double K, const char* what) {
  if (!(K >= 1.0) || K > 9007199254740992.0)
    throw RegimeError(fmt::format("{}: derived K = {:g} is not a usable iteration count", what, K));
  return static_cast<std::uint64_t>(K);
}

// Projected (stochastic) gradient methods: x_{k+1} = P(x_k - eta_k g_k), k = 0..K-1.
inline RunRecord run_projected(const OptimizerSpec& spec, const StochOracle& oracle, RunRecord rec) {
  const Problem& p = oracle.problem();
  const ProblemConstants& pc = p.constants();
  const ProblemConstants& oc = oracle.constants();
  const double R = spec.R > 0.0 ? spec.R : pc.R;
  const std::size_t d = p.dim();
  const char* name = to_string(spec.kind);
  auto& kv = rec.params;
  kv.emplace_back("R", fmt_real(R));
  kv.emplace_back("eps", fmt_real(spec.eps));

  std::uint64_t K = 0;
  double eta_const = 0.0;
  switch (spec.kind) {
    case OptimizerKind::gd_const: {
      const double M0 = pc.M0, M1 = pc.M1, F = pc.F;
      const double Kd = std::ceil((R * M1) * (R * M1) * (F / spec.eps) + (R * M0 / spec.eps) * (R * M0 / spec.eps));
      K = spec.K ? *spec.K : checked_K(Kd, name);
      eta_const = spec.eta ? *spec.eta
                           : 1.0 / std::max(2.0 * M1 * M1 * F, M0 * std::sqrt(static_cast<double>(K) + 1.0) / R);
      kv.emplace_back("K_theory", fmt_real(Kd));
      kv.emplace_back("M0", fmt_real(M0));
      kv.emplace_back("M1", fmt_real(M1));
      kv.emplace_back("F", fmt_real(F));
      break;
    }
    case OptimizerKind::gd_normalized:
    case OptimizerKind::gd_polyak: {
      const double a = R * pc.M1, b = R * pc.M0 / spec.eps;
      const double Kd = 4.0 * std::ceil(a * a + b * b);
      K = spec.K ? *spec.K : checked_K(Kd, name);
      kv.emplace_back("K_theory", fmt_real(Kd));
      kv.emplace_back("M0", fmt_real(pc.M0));
      kv.emplace_back("M1", fmt_real(pc.M1));
      break;
    }
    case OptimizerKind::sgd_const:
    case OptimizerKind::adagrad_norm: {
      const double G0 = oc.G0, G1 = oc.G1, F = pc.F;
      const double Kd = std::ceil((R * G1) * (R * G1) * (F / spec.eps) + (R * G0 / spec.eps) * (R * G0 / spec.eps));
      K = spec.K ? *spec.K : checked_K(Kd, name);
      if (spec.kind == OptimizerKind::sgd_const)
        eta_const = spec.eta ? *spec.eta
                             : 1.0 / std::max(2.0 * G1 * G1 * F, G0 * std::sqrt(static_cast<double>(K) + 1.0) / R);
      kv.emplace_back("K_theory", fmt_real(Kd));
      kv.emplace_back("G0", fmt_real(G0));
      kv.emplace_back("G1", fmt_real(G1));
      kv.emplace_back("F", fmt_real(F));
      break;
    }
    default:
      throw ConfigError("run_projected: not a projected method");
  }
  kv.emplace_back("K_run", std::to_string(K));
  if (spec.kind == OptimizerKind::gd_const || spec.kind == OptimizerKind::sgd_const) kv.emplace_back("eta", fmt_real(eta_const));
  if (spec.kind == OptimizerKind::adagrad_norm)
    kv.emplace_back("eta_numerator", spec.eta ? fmt_real(*spec.eta) : fmt::format("R/sqrt(2) = {:.17g}", R / std::sqrt(2.0)));

  const RngStream rng(spec.seed, spec.run_id);
  const bool deterministic = spec.kind == OptimizerKind::gd_const || spec.kind == OptimizerKind::gd_normalized ||
                             spec.kind == OptimizerKind::gd_polyak;
  Vec x(d), x_next(d);
  OracleSample sample(d);
  double sum_sq = 0.0;
  double gnorm = 0.0;
  Recorder recorder(p, spec.record, rec);
  recorder.start(x);
  // The query at x_{k+1} is made at the end of step k so its gap doubles as the recorded one.
  auto query = [&](std::uint64_t k) {
    if (deterministic) {
      p.subgrad(x, sample.grad);
      return recorder.gap_of(x);
    }
    oracle.sample(x, rng, k, sample);
    return sample.gap;
  };
  double gap = K > 0 ? query(0) : 0.0;
  for (std::uint64_t k = 0; k < K; ++k) {
    gnorm = norm(sample.grad);
    double eta = 0.0;
    switch (spec.kind) {
      case OptimizerKind::gd_const:
      case OptimizerKind::sgd_const:
        eta = eta_const;
        break;
      case OptimizerKind::gd_normalized:
        eta = gnorm > 0.0 ? R / (gnorm * std::sqrt(static_cast<double>(K) + 1.0)) : 0.0;
        break;
      case OptimizerKind::gd_polyak:
        if (gnorm == 0.0 && gap > 0.0)
          throw RunError(fmt::format("gd_polyak: zero subgradient with positive gap {:.17g} at step {}", gap, k));
        eta = gnorm > 0.0 ? gap / (gnorm * gnorm) : 0.0;
        break;
      case OptimizerKind::adagrad_norm:
        sum_sq += gnorm * gnorm;
        if (sum_sq > 0.0) eta = spec.eta ? *spec.eta / std::sqrt(sum_sq) : R / std::sqrt(2.0 * sum_sq);
        break;
      default:
        break;
    }
    for (std::size_t i = 0; i < d; ++i) x_next[i] = x[i] - eta * sample.grad[i];
    project_ball_inplace(x_next, R);
    check_finite_iterate(x_next, name, k + 1, gnorm);
    const double step = distance(x_next, x);
    std::swap(x, x_next);
    gap = k + 1 < K ? query(k + 1) : recorder.gap_of(x);
    if (recorder.iterate(k + 1, x, gap, step, eta, k + 1 == K, [] { return nan(); })) break;
  }
  recorder.finish(x);
  return rec;
}

// Clipped AdamW / LeonW: x_1 = 0; for k = 1..K-1 query ghat_k at x_k, update (m, v), move to x_{k+1}.
inline RunRecord run_adam_family(const OptimizerSpec& spec, const StochOracle& oracle, RunRecord rec) {
  const Problem& p = oracle.problem();
  const std::size_t d = p.dim();
  const char* name = to_string(spec.kind);
  ProblemConstants c = oracle.constants();
  const double R = spec.R > 0.0 ? spec.R : c.R;
  c.R = R;

  ScheduleKind sk = spec.schedule ? *spec.schedule : default_schedule(spec.kind);
  if (spec.kind == OptimizerKind::adamw_avg) sk = ScheduleKind::avg;
  if (spec.kind == OptimizerKind::adamw_exp && sk == ScheduleKind::avg)
    throw ConfigError("adamw_exp: averaging schedule belongs to adamw_avg");
  if (sk == ScheduleKind::quasar_two_stage) throw ConfigError(fmt::format("{}: quasar schedules need the conversion", name));
  const Schedule s = make_schedule(sk, c, spec.eps, spec.C_hat, c.gamma);
  const std::uint64_t K = spec.K ? *spec.K : s.K_steps();
  rec.params = s.describe();
  rec.params.emplace_back("K_run", std::to_string(K));

  const bool diag = spec.kind == OptimizerKind::adamw_diag || spec.kind == OptimizerKind::leonw_diag;
  const bool matrix = spec.kind == OptimizerKind::leonw_matrix;
  const double delta = spec.delta >= 0.0 ? spec.delta : ((diag || matrix) ? kDefaultDiagDelta : 0.0);
  std::size_t rows = 0, cols = 0;
  if (diag || matrix) rec.params.emplace_back("delta", fmt_real(delta));
  if (matrix) {
    rows = spec.rows == 0 ? d : spec.rows;
    if (d % rows != 0) throw ConfigError(fmt::format("leonw_matrix: rows={} does not divide d={}", rows, d));
    cols = d / rows;
    rec.params.emplace_back("rows", std::to_string(rows));
  }

  const RngStream rng(spec.seed, spec.run_id);
  Vec x(d), x_next(d), m(d), dir(d);
  Vec vdiag(diag ? d : 0, delta);
  SymMat V = matrix ? SymMat::identity(rows, delta) : SymMat(0);
  double v = 0.0;
  OracleSample sample(d);
  double gnorm = 0.0;

  Recorder recorder(p, spec.record, rec);
  recorder.start(x);  // x_0 = 0
  if (recorder.iterate(1, x, recorder.gap_of(x), 0.0, 0.0, K == 1, [] { return nan(); }) || K == 1) {
    recorder.finish(x);
    return rec;
  }
  oracle.sample(x, rng, 1, sample);
  for (std::uint64_t k = 1; k < K; ++k) {
    gnorm = norm(sample.grad);
    const double a = s.alpha(k);
    const double a_next = s.alpha(k + 1);
    const double keep = 1.0 - a;
    for (std::size_t i = 0; i < d; ++i) m[i] = keep * m[i] + a * sample.grad[i];
    double eff = 0.0;
    if (diag) {
      for (std::size_t i = 0; i < d; ++i) vdiag[i] = keep * keep * vdiag[i] + a * a * sample.grad[i] * sample.grad[i];
      for (std::size_t i = 0; i < d; ++i) {
        if (spec.kind == OptimizerKind::adamw_diag) {
          const double r = std::sqrt(vdiag[i]);
          dir[i] = r == 0.0 ? 0.0 : std::clamp(m[i] / r, -1.0, 1.0);
        } else {
          const double r = std::sqrt(m[i] * m[i] + vdiag[i]);
          dir[i] = r == 0.0 ? 0.0 : m[i] / r;
        }
      }
      eff = nan();
    } else if (matrix) {
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = i; j < rows; ++j) {
          double acc = 0.0;
          for (std::size_t q = 0; q < cols; ++q) acc += sample.grad[i * cols + q] * sample.grad[j * cols + q];
          V(i, j) = keep * keep * V(i, j) + a * a * acc;
        }
      V.symmetrize_from_upper();
      SymMat S = V;
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = i; j < rows; ++j) {
          double acc = 0.0;
          for (std::size_t q = 0; q < cols; ++q) acc += m[i * cols + q] * m[j * cols + q];
          S(i, j) += acc;
        }
      S.symmetrize_from_upper();
      const SymMat P = inv_sqrt_psd(S);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t q = 0; q < cols; ++q) {
          double acc = 0.0;
          for (std::size_t j = 0; j < rows; ++j) acc += P(i, j) * m[j * cols + q];
          dir[i * cols + q] = acc;
        }
      eff = nan();
    } else {
      v = keep * keep * v + a * a * gnorm * gnorm;
      const double r = std::sqrt(v);
      for (std::size_t i = 0; i < d; ++i) dir[i] = r == 0.0 ? 0.0 : m[i] / r;
      clip_euclid_inplace(dir);
      eff = r == 0.0 ? 0.0 : R * a_next / r;
    }
    for (std::size_t i = 0; i < d; ++i) x_next[i] = (1.0 - a_next) * x[i] - a_next * R * dir[i];
    check_finite_iterate(x_next, name, k + 1, gnorm);
    const double step = distance(x_next, x);
    std::swap(x, x_next);
    double gap = 0.0;
    if (k + 1 < K) {
      oracle.sample(x, rng, k + 1, sample);
      gap = sample.gap;
    } else {
      gap = recorder.gap_of(x);
    }
    if (recorder.iterate(k + 1, x, gap, step, eff, k + 1 == K, [] { return nan(); })) break;
  }
  recorder.finish(x);
  return rec;
}

}  // namespace detail

inline RunRecord run_optimizer(const OptimizerSpec& spec, const StochOracle& oracle) {
  RunRecord rec;
  rec.method = to_string(spec.kind);
  rec.problem_id = oracle.id();
  rec.seed = spec.seed;
  rec.run_id = spec.run_id;
  if (!(spec.eps > 0.0)) throw RegimeError(fmt::format("{}: eps > 0 violated", rec.method));
  if (spec.eta && !(*spec.eta > 0.0)) throw ConfigError(fmt::format("{}: eta must be > 0", rec.method));
  if (is_adam_family(spec.kind)) return detail::run_adam_family(spec, oracle, std::move(rec));
  return detail::run_projected(spec, oracle, std::move(rec));
}

}  // namespace glopt
