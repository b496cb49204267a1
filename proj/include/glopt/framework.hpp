#pragma once

// Online-to-batch conversion:
//   x_k = (1 - alpha_k) x_{k-1} + alpha_k z_k,   g_k = alpha_k pi_k ghat_k,
// where z_k is the learner's play and ghat_k a stochastic gradient at x_k
// (quasar variant: a generalized gradient at a random point of [x_{k-1}, x_k]).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"
#include "glopt/online.hpp"
#include "glopt/oracle.hpp"
#include "glopt/record.hpp"
#include "glopt/rng.hpp"
#include "glopt/schedule.hpp"

namespace glopt {

inline constexpr double kRescaleThreshold = 1e100;

struct ConversionOptions {
  std::optional<std::uint64_t> K_override;
  std::optional<double> zeta_override;  // quasar runs: fixed segment position instead of a uniform draw
  double rescale_threshold = kRescaleThreshold;
  std::uint64_t seed = 0;
  std::uint64_t run_id = 0;
  RecordOptions record;
};

// What an observer sees after g_k is formed and before the learner consumes it.
struct ConversionStep {
  std::uint64_t k;
  const Vec& x;           // x_k
  const Vec& z;           // z_k
  const OracleSample& sample;  // ghat_k and its u/v split
  const Vec& g;           // alpha_k pi_k ghat_k in units of exp(log_offset)
  double alpha;
  double log_pi;
  double log_offset;
  double zeta;            // 1 for the standard conversion
};

struct NoObserver {
  void operator()(const ConversionStep&) const noexcept {}
};

namespace detail {

template <class Observer>
RunRecord conversion_loop(const StochOracle& oracle, LearnerState learner, const Schedule& s,
                          const ConversionOptions& opt, bool quasar, Observer&& observe) {
  const std::size_t d = oracle.dim();
  if (learner.z.size() != d)
    throw ConfigError(fmt::format("conversion: learner dimension {} != problem dimension {}", learner.z.size(), d));
  const std::uint64_t K = opt.K_override ? *opt.K_override : s.K_steps();

  RunRecord rec;
  rec.method = fmt::format("conversion:{}/{}", to_string(learner.kind), to_string(s.kind));
  rec.problem_id = oracle.id();
  rec.seed = opt.seed;
  rec.run_id = opt.run_id;
  rec.params = s.describe();
  rec.params.emplace_back("learner", to_string(learner.kind));
  rec.params.emplace_back("learner_R", fmt_real(learner.R));
  rec.params.emplace_back("learner_delta", fmt_real(learner.delta));
  rec.params.emplace_back("K_run", std::to_string(K));
  if (opt.zeta_override) rec.params.emplace_back("zeta_override", fmt_real(*opt.zeta_override));
  rec.pi0 = s.pi0;

  const RngStream rng(opt.seed, opt.run_id);
  const Geometry geom = learner_geometry(learner.kind);
  const double R = learner.R;
  const std::size_t rows = learner.rows;

  Vec x_prev(d), x(d), xbar(d), w(d), g(d);
  OracleSample sample(d);
  RegretAccumulator acc(d);
  PiTracker pi(s);
  double offset = 0.0;
  double prev_log_pi = pi.log_pi();
  double last_gnorm = 0.0;

  Recorder recorder(oracle.problem(), opt.record, rec);
  recorder.start(x_prev);

  for (std::uint64_t k = 1; k <= K; ++k) {
    pi.advance();
    const double a = pi.alpha();
    for (std::size_t i = 0; i < d; ++i) x[i] = (1.0 - a) * x_prev[i] + a * learner.z[i];
    if (!all_finite(x))
      throw RunError(fmt::format("{}: non-finite iterate at step {} (last ||g|| = {:.17g})", rec.method, k, last_gnorm));
    const double step_norm = distance(x, x_prev);
    const double eff = acc.sum_sq > 0.0 ? R * a * std::exp(prev_log_pi - offset) / std::sqrt(acc.sum_sq) : 0.0;

    double gap = 0.0;
    double zeta = 1.0;
    if (quasar) {
      for (std::size_t i = 0; i < d; ++i) w[i] = x[i] - x_prev[i];
      zeta = opt.zeta_override ? *opt.zeta_override : rng.uniform01(k, Substream::segment, 0);
      for (std::size_t i = 0; i < d; ++i) xbar[i] = x_prev[i] + zeta * w[i];
      oracle.sample_generalized(xbar, w, rng, k, sample);
      gap = recorder.gap_of(x);
    } else {
      oracle.sample(x, rng, k, sample);
      gap = sample.gap;
    }
    last_gnorm = norm(sample.grad);
    const double weight = pi.weight(offset);
    for (std::size_t i = 0; i < d; ++i) g[i] = weight * sample.grad[i];

    acc.add(learner.z, g);
    if (opt.record.keep_vectors) {
      rec.z_history.push_back(learner.z);
      rec.g_history.push_back(g);
    }
    observe(ConversionStep{k, x, learner.z, sample, g, a, pi.log_pi(), offset, zeta});
    learner_update(learner, g);

    if (std::max(learner_scale(learner), acc.sum_sq) > opt.rescale_threshold && pi.log_pi() > offset) {
      const double lambda = std::exp(offset - pi.log_pi());
      learner_rescale(learner, lambda);
      scale(acc.G_total, lambda);
      acc.sum_zg *= lambda;
      acc.sum_sq *= lambda * lambda;
      offset = pi.log_pi();
      rec.rescales.push_back({k, lambda});
    }

    const double log_pi = pi.log_pi();
    auto regret = [&] { return acc.regret(R, geom, rows) / std::exp(log_pi - offset); };
    const bool stop = recorder.iterate(k, x, gap, step_norm, eff, k == K, regret);
    prev_log_pi = log_pi;
    std::swap(x, x_prev);
    if (stop) break;
  }

  recorder.finish(x_prev);
  rec.regret = acc.regret(R, geom, rows);
  rec.log_offset = offset;
  rec.log_pi_final = pi.log_pi();
  return rec;
}

}  // namespace detail

template <class Observer = NoObserver>
RunRecord run_conversion(const StochOracle& oracle, LearnerState learner, const Schedule& s,
                         const ConversionOptions& opt = {}, Observer&& observe = Observer{}) {
  if (s.kind == ScheduleKind::quasar_two_stage)
    throw ConfigError("run_conversion: quasar_two_stage schedules need run_conversion_quasar");
  return detail::conversion_loop(oracle, std::move(learner), s, opt, false, std::forward<Observer>(observe));
}

template <class Observer = NoObserver>
RunRecord run_conversion_quasar(const QuasarOracle& oracle, LearnerState learner, const Schedule& s,
                                const ConversionOptions& opt = {}, Observer&& observe = Observer{}) {
  if (s.kind != ScheduleKind::quasar_two_stage)
    throw ConfigError("run_conversion_quasar: schedule must be quasar_two_stage");
  if (opt.zeta_override && !(*opt.zeta_override >= 0.0 && *opt.zeta_override <= 1.0))
    throw ConfigError("run_conversion_quasar: zeta must lie in [0, 1]");
  return detail::conversion_loop(oracle, std::move(learner), s, opt, true, std::forward<Observer>(observe));
}

}  // namespace glopt
