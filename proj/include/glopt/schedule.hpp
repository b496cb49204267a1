#pragma once

// Step-size schedules (alpha_k, pi_k) for the online-to-batch conversion.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/problems.hpp"

namespace glopt {

enum class ScheduleKind { avg, exp_const, two_stage, universal, quasar_two_stage };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::avg: return "avg";
    case ScheduleKind::exp_const: return "exp_const";
    case ScheduleKind::two_stage: return "two_stage";
    case ScheduleKind::universal: return "universal";
    case ScheduleKind::quasar_two_stage: return "quasar_two_stage";
  }
  return "?";
}

inline ScheduleKind parse_schedule_kind(const std::string& s) {
  for (auto k : {ScheduleKind::avg, ScheduleKind::exp_const, ScheduleKind::two_stage, ScheduleKind::universal,
                 ScheduleKind::quasar_two_stage})
    if (s == to_string(k)) return k;
  if (s == "quasar") return ScheduleKind::quasar_two_stage;
  throw ConfigError(fmt::format("unknown schedule '{}'", s));
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string fmt_real(double v) { return fmt::format("{:.17g}", v); }

struct Schedule {
  ScheduleKind kind = ScheduleKind::avg;
  double pi0 = 0.0;
  bool quasar_pi = false;  // (1 - gamma alpha_k) pi_k = pi_{k-1}
  double gamma = 1.0;

  // 1/alpha_k = inv_alpha1 for k <= switch_after, inv_alpha2 afterwards (avg: 1/alpha_k = k).
  double inv_alpha1 = 0.0;
  double inv_alpha2 = 0.0;
  double switch_after = 0.0;

  double T = 0.0;
  double S = 0.0;
  double K = 0.0;  // may exceed the integer range; see K_steps()
  double C_hat = 1.0;
  double eps = 0.0;
  double F_hat = 0.0;
  ProblemConstants constants;

  double inv_alpha(std::uint64_t k) const noexcept {
    if (kind == ScheduleKind::avg) return static_cast<double>(k);
    return static_cast<double>(k) <= switch_after ? inv_alpha1 : inv_alpha2;
  }
  double alpha(std::uint64_t k) const noexcept { return 1.0 / inv_alpha(k); }

  std::uint64_t K_steps() const {
    if (!(K >= 1.0) || K > 9007199254740992.0)
      throw RegimeError(fmt::format("{} schedule: derived K = {:g} is not a usable iteration count", to_string(kind), K));
    return static_cast<std::uint64_t>(K);
  }

  KeyValues describe() const {
    KeyValues kv = {{"schedule", to_string(kind)},
                    {"pi0", fmt_real(pi0)},
                    {"pi_recursion", quasar_pi ? "quasar" : "standard"},
                    {"C_hat", fmt_real(C_hat)},
                    {"eps", fmt_real(eps)}};
    if (kind != ScheduleKind::avg) {
      kv.emplace_back("T", fmt_real(T));
      kv.emplace_back("inv_alpha_stage1", fmt_real(inv_alpha1));
      kv.emplace_back("inv_alpha_stage2", fmt_real(inv_alpha2));
      kv.emplace_back("switch_after", fmt_real(switch_after));
      kv.emplace_back("S", fmt_real(S));
    }
    if (quasar_pi) kv.emplace_back("gamma", fmt_real(gamma));
    if (kind == ScheduleKind::universal) kv.emplace_back("F_hat", fmt_real(F_hat));
    kv.emplace_back("K", fmt_real(K));
    const auto& c = constants;
    for (auto [k, v] : {std::pair{"R", c.R}, {"G0", c.G0}, {"G1", c.G1}, {"F", c.F}, {"nu", c.nu},
                        {"sigma", c.sigma}, {"L0", c.L0}, {"L1", c.L1}})
      kv.emplace_back(std::string("const_") + k, fmt_real(v));
    return kv;
  }
};

namespace detail {

inline double ceil_pos(double v) { return std::ceil(v); }

inline void require(bool ok, ScheduleKind kind, const std::string& what) {
  if (!ok) throw RegimeError(fmt::format("{} schedule: {} violated", to_string(kind), what));
}

}  // namespace detail

// Builds the schedule with derived T, S, K. `gamma` is used by the quasar kind only.
inline Schedule make_schedule(ScheduleKind kind, const ProblemConstants& c, double eps, double C_hat = 1.0,
                              double gamma = 1.0) {
  using detail::require;
  require(eps > 0.0, kind, "eps > 0");
  require(C_hat > 0.0, kind, "C_hat > 0");
  require(c.R > 0.0, kind, "R > 0");
  Schedule s;
  s.kind = kind;
  s.eps = eps;
  s.C_hat = C_hat;
  s.constants = c;
  const double R = c.R, G0 = c.G0, G1 = c.G1, F = c.F;
  const double e = std::exp(1.0);

  switch (kind) {
    case ScheduleKind::avg: {
      s.pi0 = 0.0;
      const double a = R * G0 / eps;
      const double b = (R * G1) * (R * G1) * (F / eps);
      s.K = std::ceil(a * a + b * std::log(e + a + b));
      break;
    }
    case ScheduleKind::exp_const:
    case ScheduleKind::two_stage: {
      require(R * G1 >= 1.0, kind, "R*G1 >= 1");
      s.pi0 = 1.0;
      s.T = std::ceil(C_hat * (R * G1) * (R * G1));
      const double stage1 = s.T * R * G1;
      const double q = R * G0 / eps;
      const double stage2 = std::max({stage1, q * q, s.T * R * G0 / eps});
      if (kind == ScheduleKind::exp_const) {
        s.inv_alpha1 = s.inv_alpha2 = stage2;
        s.switch_after = std::numeric_limits<double>::infinity();
        require(stage2 > 1.0, kind, "alpha < 1");
        s.K = std::ceil(2.0 * stage2 * std::log(e + F / eps));
      } else {
        require(G0 > 0.0, kind, "G0 > 0");
        require(stage1 > 1.0, kind, "alpha_1 < 1 (T*R*G1 > 1)");
        s.inv_alpha1 = stage1;
        s.inv_alpha2 = stage2;
        s.S = std::ceil(2.0 * stage1 / s.T * std::log(e + F * G1 / G0));
        s.switch_after = s.S * s.T;
        s.K = s.T * s.S + std::ceil(2.0 * stage2 * std::log(e + G0 / (G1 * eps)));
      }
      break;
    }
    case ScheduleKind::universal: {
      const double L0 = c.L0, L1 = c.L1, nu = c.nu, sigma = c.sigma;
      require(R * L1 >= 1.0, kind, "R*L1 >= 1");
      s.pi0 = 1.0;
      s.T = std::ceil(C_hat * (R * L1) * (R * L1));
      const double stage1 = s.T * R * L1;
      const double rs = R * sigma / eps;
      s.inv_alpha1 = stage1;
      s.inv_alpha2 = std::max({stage1, rs * rs, std::pow(std::pow(R, 1.0 + nu) * L0 / eps, 2.0 / (1.0 + nu)),
                               s.T * R * sigma / eps, std::pow(std::pow(s.T * R, 1.0 + nu) * L0 / eps, 1.0 / (1.0 + nu))});
      s.F_hat = L0 / std::pow(L1, 1.0 + nu) + sigma / L1;
      require(s.F_hat > 0.0, kind, "F_hat = L0/L1^(1+nu) + sigma/L1 > 0");
      require(stage1 > 1.0, kind, "alpha_1 < 1 (T*R*L1 > 1)");
      s.S = std::ceil(2.0 * stage1 / s.T * std::log(e + F / s.F_hat));
      s.switch_after = s.S * s.T;
      s.K = s.T * s.S + std::ceil(2.0 * s.inv_alpha2 * std::log(e + s.F_hat / eps));
      break;
    }
    case ScheduleKind::quasar_two_stage: {
      require(gamma > 0.0 && gamma <= 1.0, kind, "0 < gamma <= 1");
      require(R * G1 >= 1.0, kind, "R*G1 >= 1");
      require(G0 > 0.0, kind, "G0 > 0");
      s.pi0 = 1.0;
      s.quasar_pi = true;
      s.gamma = gamma;
      s.T = std::ceil(C_hat * (R * G1 / gamma) * (R * G1 / gamma));
      const double stage1 = s.T * R * G1;
      const double q = R * G0 / eps;
      s.inv_alpha1 = stage1;
      s.inv_alpha2 = std::max({stage1, q * q / gamma, s.T * R * G0 / eps / gamma});
      require(stage1 > gamma, kind, "gamma * alpha_1 < 1");
      s.S = std::ceil(2.0 * stage1 / (gamma * s.T) * std::log(e + gamma * F * G1 / G0));
      s.switch_after = s.S * s.T;
      s.K = s.T * s.S + std::ceil(2.0 * s.inv_alpha2 / gamma * std::log(e + G0 / (gamma * G1 * eps)));
      break;
    }
  }
  return s;
}

// Tracks pi_k along a schedule. pi_k is kept exactly for the averaging
// schedule (pi_k = k) and in log space otherwise.
class PiTracker {
 public:
  explicit PiTracker(const Schedule& s) : s_(&s), log_pi_(s.pi0 > 0 ? std::log(s.pi0) : -INFINITY) {}

  // Moves from k-1 to k.
  void advance() {
    ++k_;
    if (s_->kind == ScheduleKind::avg) {
      pi_exact_ = static_cast<double>(k_);
      log_pi_ = std::log(pi_exact_);
      return;
    }
    const double a = s_->alpha(k_);
    const double shrink = s_->quasar_pi ? s_->gamma * a : a;
    if (!(shrink < 1.0)) throw RegimeError(fmt::format("pi recursion: factor {} at k={} must be < 1", shrink, k_));
    log_pi_ -= std::log1p(-shrink);
  }

  std::uint64_t k() const noexcept { return k_; }
  double alpha() const noexcept { return s_->alpha(k_); }
  double log_pi() const noexcept { return log_pi_; }
  double pi() const noexcept { return s_->kind == ScheduleKind::avg ? pi_exact_ : std::exp(log_pi_); }

  // alpha_k * pi_k * exp(-log_offset); exactly 1 for the averaging schedule with zero offset.
  double weight(double log_offset = 0.0) const noexcept {
    if (s_->kind == ScheduleKind::avg && log_offset == 0.0) return 1.0;
    return std::exp(std::log(alpha()) + log_pi_ - log_offset);
  }

 private:
  const Schedule* s_;
  std::uint64_t k_ = 0;
  double log_pi_;
  double pi_exact_ = 0.0;
};

}  // namespace glopt
