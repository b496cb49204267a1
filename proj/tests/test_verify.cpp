#include <gtest/gtest.h>

#include <cmath>

#include "glopt/suite.hpp"
#include "glopt/verify.hpp"

using namespace glopt;

TEST(LemmaM01, ExpInfHolds) {
  const auto p = make_problem("exp_inf{d=1}");
  const auto r = check_lemma_m01(*p, 10000, 1e-8);
  EXPECT_TRUE(r.pass()) << r.to_json().dump(2);
  EXPECT_EQ(r.checked, 20000u);
}

TEST(LemmaM01, AllSuiteProblems) {
  for (const auto& id : reference_suite()) {
    const auto p = make_problem(id);
    const auto r = check_lemma_m01(*p, 10000, 1e-8, 1);
    if (!r.applicable) {
      EXPECT_EQ(id, "abs_power{q=0.5}");
      continue;
    }
    EXPECT_TRUE(r.pass()) << id << "\n" << r.to_json().dump(2);
  }
}

TEST(LemmaM01, LipschitzLimitForm) {
  const auto p = make_problem("lipschitz_inf{d=2}");
  ASSERT_EQ(p->constants().M1, 0.0);
  const auto r = check_lemma_m01(*p, 2000);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.details["M1"].get<double>(), 0.0);
}

TEST(LemmaM01, NegativeControlDetected) {
  const auto p = make_problem("exp_inf{d=1}");
  const auto r = check_lemma_m01(*p, 10000, 1e-8, 0, p->constants().M0 / 2);
  EXPECT_FALSE(r.pass());
  EXPECT_GT(r.violations, 0u);
  EXPECT_TRUE(r.witness.contains("x"));
}

TEST(TechLemma, ZeroSequences) {
  TechTrial t;
  t.alpha = {1.0, 0.5, 1.0 / 3};
  t.pi = {0.0, 1.0, 2.0, 3.0};
  t.delta = {0.0, 0.0, 0.0};
  EXPECT_LE(tech_trial_excess(TechVariant::tech, t), 0.0);
}

TEST(TechLemma, AveragingBranch) {
  TechTrial t;
  t.p = 0.5;
  for (int k = 1; k <= 50; ++k) {
    t.alpha.push_back(1.0 / k);
    t.delta.push_back(1.0 + std::sin(k));
  }
  t.pi.push_back(0.0);
  for (int k = 1; k <= 50; ++k) t.pi.push_back(k);
  EXPECT_LE(tech_trial_excess(TechVariant::tech, t), 1e-9);
}

TEST(TechLemma, RandomTrialsBothVariants) {
  for (auto v : {TechVariant::tech, TechVariant::tech2}) {
    const auto r = check_tech_lemma(v, 1000, 3);
    EXPECT_TRUE(r.pass()) << r.to_json().dump(2);
    EXPECT_EQ(r.checked, 1000u);
  }
}

TEST(TechLemma, ViolatedWhenPTooLarge) {
  // p far beyond 1/2 breaks the lemma on a constant schedule: negative control.
  TechTrial t;
  t.p = 1.9;
  t.pi.push_back(1.0);
  for (int k = 1; k <= 60; ++k) {
    t.alpha.push_back(0.3);
    t.pi.push_back(t.pi.back() / 0.7);
    t.delta.push_back(k == 1 ? 1.0 : 0.0);
  }
  EXPECT_GT(tech_trial_excess(TechVariant::tech, t), 1e-9);
}

TEST(RegretAssumption, ZeroStreams) {
  std::vector<std::vector<Vec>> streams(3, std::vector<Vec>(10, Vec(2)));
  const auto r = check_regret_assumption(LearnerKind::solo_scalar, streams, 1.0);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.details["max_C"].get<double>(), 0.0);
}

TEST(RegretAssumption, RandomStreamsSolo) {
  PhiloxEngine eng(9);
  std::vector<std::vector<Vec>> streams;
  for (int s = 0; s < 100; ++s) streams.push_back(random_stream(eng, 1000, 1 + s % 5, 1e-3, 1e3));
  const auto r = check_regret_assumption(LearnerKind::solo_scalar, streams, 1.0, 4.0);
  EXPECT_TRUE(r.pass()) << r.to_json().dump(2);
}

TEST(RegretAssumption, AlternatingReported) {
  const auto r = check_regret_assumption(LearnerKind::ogd_adagrad, {alternating_stream(1000, Vec{1.0, -2.0})}, 1.0);
  EXPECT_TRUE(std::isfinite(r.details["max_C"].get<double>()));
}

TEST(RegretAssumption, NegativeControlFails) {
  PhiloxEngine eng(4);
  const auto r = check_regret_assumption(LearnerKind::solo_scalar, {random_stream(eng, 500, 3, 1.0, 1.0)}, 1.0, 1e-3);
  EXPECT_FALSE(r.pass());
}

TEST(Quasar, CertifiesAbs) {
  const auto p = make_problem("abs_power{q=1}");
  const auto cert = certify_quasar(*p, linspace(0.01, 1.0, 100), linspace(0.0, 1.0, 101), quasar_x_grid(*p, 201));
  EXPECT_DOUBLE_EQ(cert.gamma, 1.0);
  EXPECT_TRUE(cert.report.pass()) << cert.report.to_json().dump(2);
}

TEST(Quasar, CertifiesSqrtAbsHalf) {
  const auto p = make_problem("abs_power{q=0.5}");
  const auto cert = certify_quasar(*p, linspace(0.01, 1.0, 100), linspace(0.0, 1.0, 1001), quasar_x_grid(*p, 200));
  EXPECT_NEAR(cert.gamma, 0.5, 0.01);
  EXPECT_TRUE(cert.report.pass()) << cert.report.to_json().dump(2);
  EXPECT_FALSE(cert.report.caveats.empty());
}

TEST(Quasar, CertifiesSquare) {
  const auto p = make_problem("abs_power{q=2}");
  const auto cert = certify_quasar(*p, linspace(0.01, 1.0, 100), linspace(0.0, 1.0, 101), quasar_x_grid(*p, 201));
  EXPECT_DOUBLE_EQ(cert.gamma, 1.0);
}

TEST(Quasar, SqrtDistCertificateMatchesDeclared) {
  const auto p = make_problem("sqrt_dist{a=1}");
  const auto cert = certify_quasar(*p, linspace(0.01, 1.0, 100), linspace(0.0, 1.0, 201), quasar_x_grid(*p, 401));
  EXPECT_GE(cert.gamma + 0.01, p->constants().gamma);
  EXPECT_TRUE(cert.report.pass()) << cert.report.to_json().dump(2);
}

TEST(HProperty, QuadraticIdentity) {
  // nu = 1, sigma = 0, f = L/2 x^2: h = sqrt(f) and |h(x') - h(x)|^2 <= L/2 (x' - x)^2.
  const auto p = make_problem("holder{nu=1,L=3,xs=0}");
  PhiloxEngine eng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec x{4 * eng.uniform01() - 2}, y{4 * eng.uniform01() - 2};
    const double hx = std::sqrt(p->gap(x)), hy = std::sqrt(p->gap(y));
    ASSERT_LE((hy - hx) * (hy - hx), 1.5 * (y[0] - x[0]) * (y[0] - x[0]) * (1 + 1e-12) + 1e-15);
  }
}

TEST(HProperty, BetaZeroWithoutNoise) {
  EXPECT_EQ(sl01_beta(0.5, 0.0, 2.0, 1.0), 0.0);
  EXPECT_EQ(sl01_beta(1.0, 1.0, 0.0, 2.0), 0.5);
}

TEST(HProperty, HolderMemberHolds) {
  const auto p = make_problem("holder{nu=0.5}");
  const auto r = check_h_property(*p, 10000, 8.0);
  EXPECT_TRUE(r.pass()) << r.to_json().dump(2);
  const auto e = check_h_property(*make_problem("exp_inf{d=2,seed=3}"), 10000, 8.0);
  EXPECT_TRUE(e.pass()) << e.to_json().dump(2);
}

TEST(HProperty, NegativeControlFails) {
  const auto p = make_problem("holder{nu=0.5}");
  const auto r = check_h_property(*p, 10000, 1e-3);
  EXPECT_FALSE(r.pass());
}

TEST(SlopeFit, PowerLaw) {
  std::vector<double> k, g;
  for (int i = 1; i <= 100; ++i) {
    k.push_back(10.0 * i);
    g.push_back(1.0 / std::sqrt(10.0 * i));
  }
  const auto f = slope_fit(k, g, 1.0);
  EXPECT_NEAR(f.slope, -0.5, 1e-6);
  EXPECT_FALSE(f.linear_in_k);
}

TEST(SlopeFit, GeometricFlagged) {
  std::vector<double> k, g;
  for (int i = 1; i <= 60; ++i) {
    k.push_back(i);
    g.push_back(3.0 * std::pow(0.7, i));
  }
  const auto f = slope_fit(k, g, 1.0);
  EXPECT_TRUE(f.linear_in_k);
  EXPECT_LT(f.slope, -1.0);
}

TEST(SlopeFit, ConstantAndShortSeries) {
  std::vector<double> k, g;
  for (int i = 1; i <= 30; ++i) k.push_back(i), g.push_back(2.0);
  const auto f = slope_fit(k, g, 1.0);
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.slope, 0.0);
  EXPECT_THROW(slope_fit(k, g, 15.0), ConfigError);
}

TEST(Reports, Deterministic) {
  const auto p = make_problem("power_inf{d=2}");
  EXPECT_EQ(check_lemma_m01(*p, 500, 1e-8, 7).to_json().dump(), check_lemma_m01(*p, 500, 1e-8, 7).to_json().dump());
}
