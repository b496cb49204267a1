#pragma once

// Stochastic gradient oracles with an explicit u + v split.
//
// The deterministic split of a (generalized) gradient g at x is
//   v = g * min{1, G1 * gap / ||g||},  u = g - v,
// so ||v|| <= G1 * gap and ||u|| = max{0, ||g|| - G1 * gap} <= M0.
// The returned gradient is recomputed as u + v, which makes the sum exact.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"
#include "glopt/problems.hpp"
#include "glopt/rng.hpp"

namespace glopt {

enum class NoiseModel { deterministic, v_bernoulli, u_additive };

inline const char* to_string(NoiseModel m) {
  switch (m) {
    case NoiseModel::deterministic: return "deterministic";
    case NoiseModel::v_bernoulli: return "v_bernoulli";
    case NoiseModel::u_additive: return "u_additive";
  }
  return "?";
}

inline NoiseModel parse_noise_model(const std::string& s) {
  if (s == "deterministic" || s == "det") return NoiseModel::deterministic;
  if (s == "v_bernoulli") return NoiseModel::v_bernoulli;
  if (s == "u_additive") return NoiseModel::u_additive;
  throw ConfigError(fmt::format("unknown noise model '{}'", s));
}

struct OracleSample {
  Vec grad;
  Vec u_part;
  Vec v_part;
  std::uint64_t xi = 0;  // bit record of the draws used (0 for deterministic)
  double f_value = 0.0;
  double gap = 0.0;

  explicit OracleSample(std::size_t d = 0) : grad(d), u_part(d), v_part(d) {}
};

class StochOracle {
 public:
  StochOracle(ProblemPtr problem, NoiseModel model = NoiseModel::deterministic, double noise_scale = 0.0)
      : problem_(std::move(problem)), model_(model), noise_scale_(noise_scale) {
    if (!(noise_scale >= 0.0)) throw ConfigError("oracle: noise scale must be >= 0");
    declared_ = problem_->constants();
    const double d = static_cast<double>(problem_->dim());
    split_g1_ = declared_.G1;
    switch (model_) {
      case NoiseModel::deterministic:
        break;
      case NoiseModel::v_bernoulli:
        declared_.G1 = 2.0 * declared_.G1;
        break;
      case NoiseModel::u_additive:
        declared_.G0 = std::sqrt(declared_.G0 * declared_.G0 + d * noise_scale_ * noise_scale_);
        break;
    }
  }

  const Problem& problem() const noexcept { return *problem_; }
  const ProblemPtr& problem_ptr() const noexcept { return problem_; }
  NoiseModel model() const noexcept { return model_; }
  double noise_scale() const noexcept { return noise_scale_; }
  std::size_t dim() const noexcept { return problem_->dim(); }

  // Problem constants with G0, G1 adjusted for the noise model.
  const ProblemConstants& constants() const noexcept { return declared_; }

  void sample(const Vec& x, const RngStream& rng, std::uint64_t iteration, OracleSample& out) const {
    if (out.grad.size() != dim()) out = OracleSample(dim());
    problem_->subgrad(x, out.grad);
    finish(x, rng, iteration, out);
  }

  // Generalized gradient at x in direction w, same noise model.
  void sample_generalized(const Vec& x, const Vec& w, const RngStream& rng, std::uint64_t iteration,
                          OracleSample& out) const {
    if (out.grad.size() != dim()) out = OracleSample(dim());
    problem_->generalized_grad(x, w, out.grad);
    finish(x, rng, iteration, out);
  }

  OracleSample sample(const Vec& x, const RngStream& rng, std::uint64_t iteration) const {
    OracleSample s(dim());
    sample(x, rng, iteration, s);
    return s;
  }

  std::string id() const {
    if (model_ == NoiseModel::u_additive) return fmt::format("{}+u_additive{{s={}}}", problem_->id(), noise_scale_);
    if (model_ == NoiseModel::v_bernoulli) return problem_->id() + "+v_bernoulli";
    return problem_->id();
  }

 private:
  // Splits out.grad (the raw gradient) into u + v and applies the noise model.
  void finish(const Vec& x, const RngStream& rng, std::uint64_t iteration, OracleSample& out) const {
    const std::size_t d = dim();
    out.f_value = problem_->value(x);
    out.gap = std::max(0.0, out.f_value - problem_->constants().fstar);
    const double gn = norm(out.grad);
    double share = 0.0;
    if (gn > 0.0) share = std::min(1.0, split_g1_ * out.gap / gn);
    for (std::size_t i = 0; i < d; ++i) {
      out.v_part[i] = out.grad[i] * share;
      out.u_part[i] = out.grad[i] - out.v_part[i];
    }
    out.xi = 0;
    switch (model_) {
      case NoiseModel::deterministic:
        break;
      case NoiseModel::v_bernoulli: {
        const bool keep = rng.coin(iteration, Substream::oracle, 0);
        out.xi = keep ? 1u : 0u;
        const double xi = keep ? 2.0 : 0.0;
        for (std::size_t i = 0; i < d; ++i) out.v_part[i] *= xi;
        break;
      }
      case NoiseModel::u_additive: {
        for (std::size_t i = 0; i < d; ++i) {
          const bool up = rng.coin(iteration, Substream::oracle, static_cast<std::uint32_t>(i));
          if (i < 64 && up) out.xi |= std::uint64_t{1} << i;
          out.u_part[i] += up ? noise_scale_ : -noise_scale_;
        }
        break;
      }
    }
    for (std::size_t i = 0; i < d; ++i) out.grad[i] = out.u_part[i] + out.v_part[i];
  }

  ProblemPtr problem_;
  NoiseModel model_;
  double noise_scale_;
  double split_g1_ = 0.0;
  ProblemConstants declared_;
};

// The generalized-gradient sampler is the same object; the alias names the role.
using QuasarOracle = StochOracle;

}  // namespace glopt
