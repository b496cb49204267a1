#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "glopt/framework.hpp"
#include "glopt/optimizers.hpp"
#include "glopt/suite.hpp"

using namespace glopt;

namespace {

ConversionOptions keep_all(std::uint64_t K, std::uint64_t seed = 0) {
  ConversionOptions opt;
  opt.K_override = K;
  opt.seed = seed;
  opt.record.keep_vectors = true;
  return opt;
}

Schedule schedule_for(const StochOracle& o, ScheduleKind kind, double eps = 0.1) {
  return make_schedule(kind, o.constants(), eps, 1.0, o.constants().gamma);
}

double rel_diff(const Vec& a, const Vec& b, double floor) {
  return distance(a, b) / std::max(norm(b), floor);
}

}  // namespace

TEST(Conversion, ZeroGradientStaysAtOrigin) {
  StochOracle o(make_problem("abs_power{q=2,R=2}"));
  const auto s = schedule_for(o, ScheduleKind::two_stage);
  const auto rec = run_conversion(o, make_learner(LearnerKind::solo_scalar, 1, 2.0), s, keep_all(200));
  ASSERT_EQ(rec.x_history.size(), 201u);
  for (const auto& x : rec.x_history) EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(rec.final_gap, 0.0);
}

// The conversion with SOLO-FTRL reproduces the literal clipped-AdamW loops.
TEST(Conversion, MatchesDirectAlgorithms) {
  for (const char* id : {"exp_inf{d=1}", "power_inf{d=3,seed=2}", "holder{nu=1,d=2}"}) {
    StochOracle o(make_problem(id), NoiseModel::v_bernoulli);
    for (auto [sk, ok] : {std::pair{ScheduleKind::avg, OptimizerKind::adamw_avg},
                          std::pair{ScheduleKind::exp_const, OptimizerKind::adamw_exp}}) {
      const auto s = schedule_for(o, sk);
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
        ASSERT_EQ(conv.x_history.size(), direct.x_history.size());
        double worst = 0.0;
        for (std::size_t k = 0; k < conv.x_history.size(); ++k)
          worst = std::max(worst, rel_diff(conv.x_history[k], direct.x_history[k], o.constants().R));
        EXPECT_LE(worst, 1e-9) << id << " " << to_string(sk) << " seed " << seed;
      }
    }
  }
}

// Near the minimizer of |t|^(3/2) the gradient map has unbounded slope, so the two
// evaluation orders drift apart after a while; they agree over the early phase.
TEST(Conversion, HolderHalfAgreesBeforeChaoticPhase) {
  StochOracle o(make_problem("holder{nu=0.5,d=2}"), NoiseModel::v_bernoulli);
  const auto s = schedule_for(o, ScheduleKind::exp_const);
  const auto conv = run_conversion(o, make_learner(LearnerKind::solo_scalar, 2, 1.0), s, keep_all(120, 1));
  OptimizerSpec spec;
  spec.kind = OptimizerKind::adamw_exp;
  spec.K = 120;
  spec.eps = 0.1;
  spec.seed = 1;
  spec.record.keep_vectors = true;
  const auto direct = run_optimizer(spec, o);
  for (std::size_t k = 0; k < conv.x_history.size(); ++k)
    ASSERT_LE(rel_diff(conv.x_history[k], direct.x_history[k], 1.0), 1e-9) << k;
}

TEST(Conversion, DiagonalAndMatrixMatchDirectLoops) {
  StochOracle o(make_problem("exp_inf{d=4,seed=3,R=2}"), NoiseModel::v_bernoulli);
  for (auto [lk, ok] : {std::pair{LearnerKind::solo_diag, OptimizerKind::adamw_diag},
                        std::pair{LearnerKind::leon_diag, OptimizerKind::leonw_diag},
                        std::pair{LearnerKind::leon_matrix, OptimizerKind::leonw_matrix}}) {
    const auto s = schedule_for(o, ScheduleKind::two_stage);
    const std::size_t rows = lk == LearnerKind::leon_matrix ? 2 : 0;
    const auto conv = run_conversion(o, make_learner(lk, 4, 2.0, -1.0, rows), s, keep_all(600, 7));
    OptimizerSpec spec;
    spec.kind = ok;
    spec.K = 600;
    spec.eps = 0.1;
    spec.seed = 7;
    spec.rows = rows;
    spec.record.keep_vectors = true;
    const auto direct = run_optimizer(spec, o);
    double worst = 0.0;
    for (std::size_t k = 0; k < conv.x_history.size(); ++k)
      worst = std::max(worst, rel_diff(conv.x_history[k], direct.x_history[k], 2.0));
    EXPECT_LE(worst, 1e-9) << to_string(ok);
  }
}

TEST(Conversion, IterateRecursionReplays) {
  StochOracle o(make_problem("exp_inf{d=3,seed=1}"), NoiseModel::v_bernoulli);
  const auto s = schedule_for(o, ScheduleKind::two_stage);
  const auto rec = run_conversion(o, make_learner(LearnerKind::solo_scalar, 3, 1.0), s, keep_all(800, 3));
  for (std::uint64_t k = 1; k < rec.x_history.size(); ++k) {
    const double a = s.alpha(k);
    for (std::size_t i = 0; i < 3; ++i)
      ASSERT_NEAR(rec.x_history[k][i], (1 - a) * rec.x_history[k - 1][i] + a * rec.z_history[k - 1][i], 1e-12);
  }
  for (double gap : rec.gap_history) EXPECT_GE(gap, 0.0);
}

TEST(Conversion, LemmaWdOnDeterministicRuns) {
  for (const char* id : {"exp_inf{d=2,seed=4}", "power_inf{d=2}", "lipschitz_inf{d=3}", "holder{nu=0.3}"}) {
    StochOracle o(make_problem(id));
    for (auto sk : {ScheduleKind::avg, ScheduleKind::exp_const, ScheduleKind::two_stage}) {
      Schedule s;
      try {
        s = schedule_for(o, sk);
      } catch (const RegimeError&) {
        continue;  // e.g. M1 = 0
      }
      for (auto lk : {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad}) {
        const auto rec = run_conversion(o, make_learner(lk, o.dim(), o.constants().R), s, keep_all(500));
        const double piK = std::exp(rec.log_pi_final - rec.log_offset);
        const double lhs = piK * rec.final_gap;
        const double rhs = rec.pi0 * std::exp(-rec.log_offset) * rec.gap0 + rec.regret;
        EXPECT_LE(lhs, rhs + 1e-8 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) << id << " " << to_string(sk);
      }
    }
  }
}

TEST(Conversion, RescalingIsInvisible) {
  StochOracle o2(make_problem("exp_inf{d=2,seed=1,R=2}"), NoiseModel::v_bernoulli);
  const auto s2 = make_schedule(ScheduleKind::exp_const, o2.constants(), 10.0, 0.01);
  ASSERT_LE(s2.inv_alpha(1), 8.0);
  auto with = keep_all(900, 5);
  auto without = keep_all(900, 5);  // still finite without rescaling
  without.rescale_threshold = INFINITY;
  const auto a = run_conversion(o2, make_learner(LearnerKind::solo_scalar, 2, 2.0), s2, with);
  const auto b = run_conversion(o2, make_learner(LearnerKind::solo_scalar, 2, 2.0), s2, without);
  EXPECT_FALSE(a.rescales.empty());
  EXPECT_TRUE(b.rescales.empty());
  for (std::size_t k = 0; k < a.x_history.size(); ++k) ASSERT_NEAR(a.x_history[k][0], b.x_history[k][0], 1e-12) << k;
}

TEST(Conversion, RejectsWrongScheduleKind) {
  StochOracle o(make_problem("abs_power{q=2,R=2}"));
  const auto q = make_schedule(ScheduleKind::quasar_two_stage, o.constants(), 0.1, 1.0, 1.0);
  EXPECT_THROW(run_conversion(o, make_learner(LearnerKind::solo_scalar, 1, 2.0), q), ConfigError);
  const auto t = make_schedule(ScheduleKind::two_stage, o.constants(), 0.1);
  EXPECT_THROW(run_conversion_quasar(o, make_learner(LearnerKind::solo_scalar, 1, 2.0), t), ConfigError);
}

TEST(Conversion, NonFiniteIterateAborts) {
  StochOracle o(make_problem("exp_inf{d=1}"));
  auto learner = make_learner(LearnerKind::solo_scalar, 1, 1.0);
  learner.z[0] = NAN;
  const auto s = make_schedule(ScheduleKind::avg, o.constants(), 0.1);
  try {
    run_conversion(o, learner, s, keep_all(10));
    FAIL();
  } catch (const RunError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Quasar, ReducesToStandardConversion) {
  // Smooth convex 1-D problem with its minimizer away from the start.
  StochOracle o(make_problem("holder{nu=1,L=1,L1=1,R=2,xs=0.5}"));
  const auto c = o.constants();
  const auto q = make_schedule(ScheduleKind::quasar_two_stage, c, 0.05, 1.0, 1.0);
  const auto t = make_schedule(ScheduleKind::two_stage, c, 0.05);
  ASSERT_EQ(q.K, t.K);
  ConversionOptions opt = keep_all(400, 2);
  opt.zeta_override = 1.0;
  const auto a = run_conversion_quasar(o, make_learner(LearnerKind::solo_scalar, 1, 2.0), q, opt);
  opt.zeta_override.reset();
  const auto b = run_conversion(o, make_learner(LearnerKind::solo_scalar, 1, 2.0), t, opt);
  ASSERT_EQ(a.x_history.size(), b.x_history.size());
  for (std::size_t k = 0; k < a.x_history.size(); ++k)
    ASSERT_LE(rel_diff(a.x_history[k], b.x_history[k], 2.0), 1e-9) << k;
  EXPECT_GT(std::abs(b.x_history.back()[0]), 0.1);
}

TEST(Quasar, DegenerateSegmentGivesValidGradient) {
  StochOracle o(make_problem("abs_power{q=1}"));
  OracleSample out(1);
  o.sample_generalized(Vec{0.0}, Vec{0.0}, RngStream(0, 0), 1, out);
  EXPECT_TRUE(all_finite(out.grad));
  EXPECT_LE(std::abs(out.grad[0]), 1.0);
  o.sample_generalized(Vec{0.3}, Vec{0.0}, RngStream(0, 0), 1, out);
  EXPECT_EQ(out.grad[0], 1.0);
}

TEST(Quasar, SegmentAverageSlopeOfAbs) {
  StochOracle o(make_problem("abs_power{q=1}"));
  const Vec a{-0.25}, b{0.75};
  const Vec w{1.0};
  const RngStream rng(11, 0);
  OracleSample out(1);
  double sum = 0.0;
  const int n = 200000;
  for (int k = 1; k <= n; ++k) {
    const double zeta = rng.uniform01(static_cast<std::uint64_t>(k), Substream::segment, 0);
    o.sample_generalized(Vec{a[0] + zeta * w[0]}, w, rng, static_cast<std::uint64_t>(k), out);
    sum += out.grad[0];
  }
  // (f(b) - f(a)) / (b - a) = 0.5.
  EXPECT_NEAR(sum / n, 0.5, 5e-3);
}
