#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "glopt/online.hpp"
#include "glopt/rng.hpp"

using namespace glopt;

namespace {

const LearnerKind kAll[] = {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad, LearnerKind::solo_diag,
                            LearnerKind::leon_diag, LearnerKind::leon_matrix};

std::vector<Vec> random_stream(std::uint64_t seed, std::size_t K, std::size_t d) {
  PhiloxEngine eng(seed);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < K; ++k) {
    Vec g(d);
    const double s = std::pow(10.0, 6.0 * eng.uniform01() - 3.0);
    for (auto& v : g) v = s * (2.0 * eng.uniform01() - 1.0);
    out.push_back(g);
  }
  return out;
}

}  // namespace

TEST(Solo, FirstPlayIsNormalizedNegativeGradient) {
  auto s = make_learner(LearnerKind::solo_scalar, 2, 2.0);
  EXPECT_EQ(s.z, (Vec{0, 0}));
  auto [s1, z] = learner_step(s, Vec{3, 4});
  EXPECT_NEAR(z[0], -1.2, 1e-15);
  EXPECT_NEAR(z[1], -1.6, 1e-15);
}

TEST(AllLearners, ZeroGradientsKeepZeroPlay) {
  for (auto k : kAll) {
    auto s = make_learner(k, 4, 1.0);
    for (int i = 0; i < 5; ++i) learner_update(s, Vec(4));
    EXPECT_EQ(s.z, Vec(4)) << to_string(k);
  }
}

TEST(LeonDiag, EqualCoordinates) {
  auto s = make_learner(LearnerKind::leon_diag, 3, 1.5, 0.0);
  learner_update(s, Vec{0.7, 0.7, 0.7});
  for (double v : s.z) EXPECT_NEAR(v, -1.5 / std::sqrt(2.0), 1e-15);
}

TEST(LeonMatrix, ColumnVectorMatchesClosedForm) {
  // One step with delta = 0: (g g^T)^{-1/2} g is g/||g|| on the range, up to the floor.
  auto s = make_learner(LearnerKind::leon_matrix, 2, 1.0, 1e-16, 2);
  learner_update(s, Vec{3, 4});
  // (2 g g^T + delta I)^{-1/2} g = g / (sqrt(2) ||g||).
  EXPECT_NEAR(s.z[0], -0.6 / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(s.z[1], -0.8 / std::sqrt(2.0), 1e-9);
}

TEST(Ogd, StepMatchesAdaGradNorm) {
  auto s = make_learner(LearnerKind::ogd_adagrad, 1, 1.0);
  learner_update(s, Vec{2.0});
  EXPECT_NEAR(s.z[0], -1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Regret, BallSupportFunction) {
  RegretRecord rec(2);
  rec.add(Vec{0, 0}, Vec{1, 0});
  rec.add(Vec{0, 0}, Vec{0, 1});
  EXPECT_NEAR(regret_eval(rec, 2.0, Geometry::euclid), 2.0 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(regret_eval(rec, 2.0, Geometry::box), 4.0, 1e-15);
}

TEST(Regret, SingleStepBestResponse) {
  RegretRecord rec(2);
  const Vec g{3, 4};
  rec.add(Vec{-0.6 * 1.5, -0.8 * 1.5}, g);
  EXPECT_NEAR(regret_eval(rec, 1.5, Geometry::euclid), 0.0, 1e-14);
}

TEST(Regret, MatchesDenseDirectionSearch) {
  const auto stream = random_stream(4, 3, 3);
  RegretRecord rec(3);
  PhiloxEngine eng(5);
  for (const auto& g : stream) {
    Vec z(3);
    for (auto& v : z) v = 2.0 * eng.uniform01() - 1.0;
    rec.add(scaled(z, 0.5), g);
  }
  const double R = 1.3;
  double best = -1e300;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 1000000; ++t) {
    Vec u{nd(gen), nd(gen), nd(gen)};
    scale(u, R / norm(u));
    double val = 0.0;
    for (std::size_t k = 0; k < stream.size(); ++k) val += dot(rec.z_history[k] - u, stream[k]);
    best = std::max(best, val);
  }
  const double exact = regret_eval(rec, R, Geometry::euclid);
  EXPECT_GE(exact, best - 1e-12 * std::abs(best));
  EXPECT_NEAR(best, exact, 1e-4 * std::abs(exact));
}

TEST(Feasibility, EveryPlayLiesInItsSet) {
  for (auto k : kAll) {
    auto s = make_learner(k, 4, 0.7, -1.0, k == LearnerKind::leon_matrix ? 2 : 0);
    for (const auto& g : random_stream(9, 300, 4)) {
      learner_update(s, g);
      switch (learner_geometry(k)) {
        case Geometry::euclid: ASSERT_LE(norm(s.z), 0.7 + 1e-12) << to_string(k); break;
        case Geometry::box: ASSERT_LE(norm_inf(s.z), 0.7) << to_string(k); break;
        case Geometry::spectral: ASSERT_LE(spectral_norm(s.z, 2, 2), 0.7 * (1 + 1e-9)) << to_string(k); break;
      }
    }
  }
}

TEST(Solo, ScaleEquivariantForPowersOfTwo) {
  const auto stream = random_stream(12, 200, 3);
  auto a = make_learner(LearnerKind::solo_scalar, 3, 1.0);
  auto b = a;
  for (const auto& g : stream) {
    learner_update(a, g);
    learner_update(b, scaled(g, 1024.0));
    ASSERT_EQ(a.z, b.z);
  }
}

TEST(Rescale, LeavesPlaysUnchanged) {
  for (auto k : kAll) {
    const auto stream = random_stream(13, 50, 4);
    auto a = make_learner(k, 4, 1.0, -1.0, k == LearnerKind::leon_matrix ? 2 : 0);
    auto b = a;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      // a sees the raw stream, is rescaled after step 20, then sees the scaled stream.
      learner_update(a, i <= 20 ? stream[i] : scaled(stream[i], 0.25));
      learner_update(b, scaled(stream[i], 0.25));
      if (i == 20) learner_rescale(a, 0.25);
      if (i >= 20) {
        for (std::size_t j = 0; j < 4; ++j) ASSERT_NEAR(a.z[j], b.z[j], 1e-12) << to_string(k);
      }
    }
  }
}

TEST(Accumulators, SumOfSquaresTracked) {
  auto s = make_learner(LearnerKind::solo_scalar, 3, 1.0);
  double expect = 0.0;
  for (const auto& g : random_stream(14, 1000, 3)) {
    learner_update(s, g);
    expect += squared_norm(g);
  }
  EXPECT_NEAR(s.V, expect, 1e-9 * expect);
}

TEST(RegretAssumption, ScalarLearnersWithinConstantFour) {
  for (auto k : {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad}) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto stream = random_stream(100 + seed, 1000, 5);
      const auto rec = play_stream(make_learner(k, 5, 1.0), stream);
      const double c = regret_eval(rec, 1.0, Geometry::euclid) / std::sqrt(rec.acc.sum_sq);
      worst = std::max(worst, c);
    }
    EXPECT_LE(worst, 4.0) << to_string(k);
  }
}
