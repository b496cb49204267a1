// Two-stage clipped AdamW on a built-in problem with noisy gradients.
//
//   ./quickstart [problem-id] [eps]

#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "glopt/glopt.hpp"

int main(int argc, char** argv) {
  using namespace glopt;
  const std::string id = argc > 1 ? argv[1] : "exp_inf{d=3,seed=2,R=2}";
  const double eps = argc > 2 ? std::atof(argv[2]) : 1e-2;

  StochOracle oracle(make_problem(id), NoiseModel::v_bernoulli);
  const auto& c = oracle.constants();
  fmt::print("{}: R={} G0={:.4g} G1={:.4g} F={:.4g}\n", oracle.id(), c.R, c.G0, c.G1, c.F);

  OptimizerSpec spec;
  spec.kind = OptimizerKind::adamw_exp;
  spec.schedule = ScheduleKind::two_stage;
  spec.eps = eps;
  spec.seed = 7;
  spec.record.log_rows = 4;
  spec.record.target_gap = eps;
  const RunRecord rec = run_optimizer(spec, oracle);

  for (const auto& [k, v] : rec.params) fmt::print("  {} = {}\n", k, v);
  fmt::print("{:>10} {:>14} {:>14}\n", "k", "gap", "step");
  for (const auto& row : rec.rows) fmt::print("{:>10} {:>14.6g} {:>14.6g}\n", row.k, row.f_gap, row.step_norm);
  fmt::print("steps {}  first k with gap <= {}: {}  final gap {:.3g}\n", rec.steps, eps, rec.first_hit, rec.final_gap);
}
