// SGD with a constant stepsize above the case threshold bounces between +R and -R
// on the hard instance, while two-stage clipped AdamW converges.

#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "glopt/glopt.hpp"

int main() {
  using namespace glopt;
  const double R = 1, G0 = 1, G1 = 8, eps = 0.1;
  StochOracle oracle(std::make_shared<LowerBoundInstance>(LowerBoundKind::sgd_I, R, G0, G1, eps));
  const double thr = LowerBoundInstance::sgd_case_threshold(R, G0, G1);

  OptimizerSpec sgd;
  sgd.kind = OptimizerKind::sgd_const;
  sgd.eta = 2.0 * thr;
  sgd.K = 12;
  sgd.record.keep_vectors = true;
  const RunRecord a = run_optimizer(sgd, oracle);
  fmt::print("sgd eta={:.4g} (threshold {:.4g})\n  x_k:", *sgd.eta, thr);
  for (const auto& x : a.x_history) fmt::print(" {:+g}", x[0]);
  fmt::print("\n  gap {:.4g} (floor (G0/G1)(e^2-1) = {:.4g})\n", a.final_gap, G0 / G1 * (std::exp(2.0) - 1.0));

  OptimizerSpec adamw;
  adamw.kind = OptimizerKind::adamw_exp;
  adamw.schedule = ScheduleKind::two_stage;
  adamw.eps = eps;
  adamw.record.target_gap = eps;
  const RunRecord b = run_optimizer(adamw, oracle);
  fmt::print("adamw two_stage: K={} first k with gap <= {}: {}  final gap {:.3g}\n", b.steps, eps, b.first_hit,
             b.final_gap);
}
