#pragma once

// Objective suite with exact minimizers and generalized-Lipschitz constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"
#include "glopt/rng.hpp"

namespace glopt {

struct ProblemConstants {
  double R = 1.0;
  double M0 = 0.0;
  double M1 = 0.0;
  double G0 = 0.0;
  double G1 = 0.0;
  double F = 0.0;
  double fstar = 0.0;
  Vec xstar;
  // Hölder-type constants; defaults describe the generalized Lipschitz case.
  double nu = 0.0;
  double sigma = 0.0;
  double L0 = 0.0;
  double L1 = 0.0;
  double gamma = 1.0;

  void validate() const {
    auto bad = [](const char* what) { throw ConfigError(fmt::format("ProblemConstants: {}", what)); };
    if (!(R > 0.0)) bad("R must be > 0");
    if (norm(xstar) > R * (1.0 + 1e-12)) bad("||xstar|| must be <= R");
    if (M0 < 0 || M1 < 0 || G0 < 0 || G1 < 0 || sigma < 0 || L0 < 0 || L1 < 0) bad("constants must be >= 0");
    if (F < 0) bad("F must be >= 0");
    if (nu < 0 || nu > 1) bad("nu must lie in [0, 1]");
    if (nu == 0.0 && sigma != 0.0) bad("sigma must be 0 when nu = 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) bad("gamma must lie in (0, 1]");
  }
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual void subgrad(const Vec& x, Vec& out) const = 0;

  // An element g of the Clarke subdifferential with <w, g> = f'(x; w).
  virtual void generalized_grad(const Vec& x, const Vec& w, Vec& out) const {
    (void)w;
    subgrad(x, out);
  }

  // max_{||x|| <= R} f(x) - f*, when a closed form is available.
  virtual std::optional<double> analytic_F(double R) const {
    (void)R;
    return std::nullopt;
  }

  virtual bool convex() const { return true; }
  // False when no finite (M0, M1) exists (e.g. |x|^q with q < 1).
  virtual bool generalized_lipschitz() const { return true; }

  const ProblemConstants& constants() const noexcept { return c_; }
  double gap(const Vec& x) const { return value(x) - c_.fstar; }

  Vec subgrad(const Vec& x) const {
    Vec g(dim());
    subgrad(x, g);
    return g;
  }

 protected:
  ProblemConstants c_;
};

using ProblemPtr = std::shared_ptr<const Problem>;

namespace detail {

// Index of the entry of r with the largest magnitude (lowest index on ties).
inline std::size_t argmax_abs(const Vec& r) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.size(); ++i)
    if (std::abs(r[i]) > std::abs(r[best])) best = i;
  return best;
}

inline double sign(double v) noexcept { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace detail

// f(x) = phi(||Ax - b||_inf) for an increasing phi.
class InfNormComposite : public Problem {
 public:
  using Problem::subgrad;

  InfNormComposite(Matrix a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != b_.size()) throw ConfigError("InfNormComposite: rows(A) != size(b)");
    if (a_.rows() == 0 || a_.cols() == 0) throw ConfigError("InfNormComposite: empty A");
  }

  std::size_t dim() const override { return a_.cols(); }

  double value(const Vec& x) const override { return phi(norm_inf(residual(x))); }

  void subgrad(const Vec& x, Vec& out) const override {
    const Vec r = residual(x);
    const std::size_t i = detail::argmax_abs(r);
    const double t = std::abs(r[i]);
    const double s = detail::sign(r[i]) * dphi(t);
    const double* row = a_.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = s * row[j];
  }

  void generalized_grad(const Vec& x, const Vec& w, Vec& out) const override {
    const Vec r = residual(x);
    const double t = norm_inf(r);
    // f'(x; w) = phi'(t) max over active i of s_i <a_i, w>, with s_i free when r_i = 0.
    std::size_t best = a_.rows();
    double best_val = -std::numeric_limits<double>::infinity();
    double best_sign = 0.0;
    for (std::size_t i = 0; i < a_.rows(); ++i) {
      if (std::abs(r[i]) != t) continue;
      double aw = 0.0;
      const double* row = a_.row(i);
      for (std::size_t j = 0; j < w.size(); ++j) aw += row[j] * w[j];
      const double s = (t > 0.0) ? detail::sign(r[i]) : (aw >= 0.0 ? 1.0 : -1.0);
      if (s * aw > best_val) {
        best_val = s * aw;
        best = i;
        best_sign = s;
      }
    }
    const double scale = best_sign * dphi(t);
    const double* row = a_.row(best);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = scale * row[j];
  }

  std::optional<double> analytic_F(double R) const override {
    double t = 0.0;
    for (std::size_t i = 0; i < a_.rows(); ++i) t = std::max(t, R * row_norm(a_, i) + std::abs(b_[i]));
    return phi(t) - c_.fstar;
  }

  const Matrix& A() const noexcept { return a_; }
  const Vec& b() const noexcept { return b_; }

 protected:
  virtual double phi(double t) const = 0;
  virtual double dphi(double t) const = 0;

  Vec residual(const Vec& x) const {
    Vec r = matvec(a_, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b_[i];
    return r;
  }

  Matrix a_;
  Vec b_;
};

// f(x) = ||Ax - b||_inf^p, p > 1.
class PowerInf final : public InfNormComposite {
 public:
  PowerInf(Matrix a, Vec b, double p, double m1, Vec xstar, double R)
      : InfNormComposite(std::move(a), std::move(b)), p_(p) {
    if (!(p > 1.0)) throw ConfigError(fmt::format("power_inf: p must be > 1 (got {})", p));
    if (!(m1 > 0.0)) throw ConfigError("power_inf: M1 must be > 0");
    c_.R = R;
    c_.xstar = std::move(xstar);
    c_.fstar = value(c_.xstar);
    c_.M1 = m1;
    c_.M0 = std::pow(operator_norm(a_), p) * std::pow((p - 1.0) / m1, p - 1.0) + m1 * c_.fstar;
    c_.G0 = c_.M0;
    c_.G1 = c_.M1;
    c_.L0 = c_.G0;
    c_.L1 = c_.G1;
    c_.F = *analytic_F(R);
  }

  std::string id() const override { return fmt::format("power_inf{{d={},p={}}}", dim(), p_); }

 private:
  double phi(double t) const override { return std::pow(t, p_); }
  double dphi(double t) const override { return p_ * std::pow(t, p_ - 1.0); }
  double p_;
};

// f(x) = exp(||Ax - b||_inf).
class ExpInf final : public InfNormComposite {
 public:
  ExpInf(Matrix a, Vec b, Vec xstar, double R) : InfNormComposite(std::move(a), std::move(b)) {
    c_.R = R;
    c_.xstar = std::move(xstar);
    c_.fstar = value(c_.xstar);
    c_.M1 = operator_norm(a_);
    if (!(c_.M1 > 0.0)) throw ConfigError("exp_inf: A must be nonzero");
    c_.M0 = c_.M1 * c_.fstar;
    c_.G0 = c_.M0;
    c_.G1 = c_.M1;
    // The deterministic split puts sign * M0 into u, so ||u|| <= sigma with nu = 1.
    c_.nu = 1.0;
    c_.sigma = c_.M0;
    c_.L0 = 0.0;
    c_.L1 = c_.M1;
    c_.F = *analytic_F(R);
  }

  std::string id() const override { return fmt::format("exp_inf{{d={}}}", dim()); }

 private:
  double phi(double t) const override { return std::exp(t); }
  double dphi(double t) const override { return std::exp(t); }
};

// f(x) = ||x - x*||_inf, Lipschitz with M0 = 1, M1 = 0.
class LipschitzInf final : public InfNormComposite {
 public:
  LipschitzInf(Vec xstar, double R) : InfNormComposite(Matrix::identity(xstar.size()), xstar) {
    c_.R = R;
    c_.xstar = std::move(xstar);
    c_.fstar = 0.0;
    c_.M0 = 1.0;
    c_.M1 = 0.0;
    c_.G0 = 1.0;
    c_.G1 = 0.0;
    c_.L0 = 1.0;
    c_.L1 = 0.0;
    c_.F = *analytic_F(R);
  }

  std::string id() const override { return fmt::format("lipschitz_inf{{d={}}}", dim()); }

 private:
  double phi(double t) const override { return t; }
  double dphi(double) const override { return 1.0; }
};

// f(x) = psi(||x - x*||) for increasing psi with psi(0) = 0.
class RadialProblem : public Problem {
 public:
  using Problem::subgrad;

  std::size_t dim() const override { return c_.xstar.size(); }

  double value(const Vec& x) const override { return psi(distance(x, c_.xstar)); }

  void subgrad(const Vec& x, Vec& out) const override {
    const double t = distance(x, c_.xstar);
    if (t == 0.0) {
      out.fill(0.0);
      return;
    }
    const double s = dpsi(t) / t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * (x[i] - c_.xstar[i]);
  }

  void generalized_grad(const Vec& x, const Vec& w, Vec& out) const override {
    const double t = distance(x, c_.xstar);
    const double nw = norm(w);
    if (t > 0.0 || nw == 0.0) {
      subgrad(x, out);
      return;
    }
    // At the minimizer the one-sided derivative along w is psi'(0+) ||w||.
    const double s = dpsi(0.0) / nw;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * w[i];
  }

  std::optional<double> analytic_F(double R) const override {
    return psi(R + norm(c_.xstar)) - c_.fstar;
  }

 protected:
  virtual double psi(double t) const = 0;
  // Right derivative; at t = 0 this is psi'(0+), possibly infinite.
  virtual double dpsi(double t) const = 0;
};

// f(x) = L/(1+nu) ||x - x*||^{1+nu}.
class Holder final : public RadialProblem {
 public:
  Holder(double nu, double L, Vec xstar, double R, double L1) : nu_(nu), L_(L) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError(fmt::format("holder: nu must lie in [0, 1] (got {})", nu));
    if (!(L > 0.0)) throw ConfigError("holder: L must be > 0");
    if (!(L1 > 0.0)) throw ConfigError("holder: L1 must be > 0");
    c_.R = R;
    c_.xstar = std::move(xstar);
    c_.fstar = 0.0;
    c_.M1 = nu > 0.0 ? L1 : 0.0;
    c_.M0 = nu > 0.0 ? L * std::pow(nu / L1, nu) / (1.0 + nu) : L;
    c_.G0 = c_.M0;
    c_.G1 = c_.M1;
    c_.nu = nu;
    c_.sigma = 0.0;
    // ||grad|| = L t^nu = L0^{1/(1+nu)} gap^{nu/(1+nu)} exactly for this L0.
    c_.L0 = L * std::pow(1.0 + nu, nu);
    c_.L1 = L1;
    c_.F = *analytic_F(R);
  }

  std::string id() const override { return fmt::format("holder{{d={},nu={},L={}}}", dim(), nu_, L_); }

 private:
  double psi(double t) const override { return L_ / (1.0 + nu_) * std::pow(t, 1.0 + nu_); }
  double dpsi(double t) const override { return nu_ == 0.0 ? L_ : L_ * std::pow(t, nu_); }
  double nu_;
  double L_;
};

// f(x) = sqrt(a + ||x - x*||) - sqrt(a): Lipschitz, not convex, quasar-convex on bounded sets.
class SqrtDist final : public RadialProblem {
 public:
  SqrtDist(double a, Vec xstar, double R, double G1) : a_(a) {
    if (!(a > 0.0)) throw ConfigError("sqrt_dist: a must be > 0");
    c_.R = R;
    c_.xstar = std::move(xstar);
    c_.fstar = 0.0;
    c_.M0 = 0.5 / std::sqrt(a);
    c_.M1 = 0.0;
    c_.G0 = c_.M0;
    c_.G1 = G1;
    c_.L0 = c_.G0;
    c_.L1 = c_.G1;
    // <x - x*, grad> / gap = (sqrt(a+t) + sqrt(a)) / (2 sqrt(a+t)), smallest at the largest t.
    const double tmax = R + norm(c_.xstar);
    c_.gamma = (std::sqrt(a + tmax) + std::sqrt(a)) / (2.0 * std::sqrt(a + tmax));
    c_.F = *analytic_F(R);
  }

  std::string id() const override { return fmt::format("sqrt_dist{{d={},a={}}}", dim(), a_); }
  bool convex() const override { return false; }

 private:
  double psi(double t) const override { return std::sqrt(a_ + t) - std::sqrt(a_); }
  double dpsi(double t) const override { return 0.5 / std::sqrt(a_ + t); }
  double a_;
};

// f(x) = |x|^q in one dimension.
class AbsPower final : public RadialProblem {
 public:
  AbsPower(double q, double R) : q_(q) {
    if (!(q > 0.0)) throw ConfigError("abs_power: q must be > 0");
    c_.R = R;
    c_.xstar = Vec{0.0};
    c_.fstar = 0.0;
    if (q == 1.0) {
      c_.M0 = 1.0;
    } else if (q > 1.0) {
      c_.M1 = 1.0;
      c_.M0 = std::pow(q - 1.0, q - 1.0);
    } else {
      c_.M0 = std::numeric_limits<double>::infinity();
    }
    c_.G0 = c_.M0;
    c_.G1 = c_.M1;
    c_.L0 = c_.G0;
    c_.L1 = c_.G1;
    c_.gamma = q >= 1.0 ? 1.0 : q;
    c_.F = *analytic_F(R);
  }

  std::string id() const override { return fmt::format("abs_power{{q={}}}", q_); }
  bool convex() const override { return q_ >= 1.0; }
  bool generalized_lipschitz() const override { return q_ >= 1.0; }

 private:
  double psi(double t) const override { return std::pow(t, q_); }
  double dpsi(double t) const override {
    if (t == 0.0) return q_ == 1.0 ? 1.0 : (q_ > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return q_ * std::pow(t, q_ - 1.0);
  }
  double q_;
};

// One-dimensional piecewise function built from linear and exp(|.|) pieces.
class Piecewise1D : public Problem {
 public:
  using Problem::subgrad;

  struct Piece {
    enum Kind { linear, exp_abs } kind = linear;
    // linear: slope * (x - x0) + offset
    // exp_abs: coef / rate * (exp(rate |x - x0|) - 1) + offset
    double x0 = 0.0;
    double slope = 0.0;
    double coef = 0.0;
    double rate = 0.0;
    double offset = 0.0;

    double value(double x) const {
      if (kind == linear) return slope * (x - x0) + offset;
      return coef / rate * std::expm1(rate * std::abs(x - x0)) + offset;
    }
    double deriv(double x, int side) const {
      if (kind == linear) return slope;
      const double d = x - x0;
      if (d == 0.0) return side * coef;
      return detail::sign(d) * coef * std::exp(rate * std::abs(d));
    }
  };

  std::size_t dim() const override { return 1; }

  double value(const Vec& x) const override { return pieces_[locate(x[0], 0)].value(x[0]); }

  void subgrad(const Vec& x, Vec& out) const override { out[0] = pieces_[locate(x[0], 0)].deriv(x[0], 0); }

  void generalized_grad(const Vec& x, const Vec& w, Vec& out) const override {
    const int side = w[0] > 0 ? 1 : (w[0] < 0 ? -1 : 0);
    out[0] = pieces_[locate(x[0], side)].deriv(x[0], side);
  }

  std::optional<double> analytic_F(double R) const override {
    return std::max(value(Vec{-R}), value(Vec{R})) - c_.fstar;
  }

 protected:
  // Piece i covers the span between breaks_[i-1] and breaks_[i]. owner_left_[i]
  // says whether breaks_[i] itself belongs to piece i (else to piece i+1).
  std::size_t locate(double x, int side) const {
    std::size_t i = 0;
    for (std::size_t j = 0; j < breaks_.size(); ++j) {
      const bool right_of = side > 0   ? x >= breaks_[j]
                            : side < 0 ? x > breaks_[j]
                                       : (owner_left_[j] ? x > breaks_[j] : x >= breaks_[j]);
      if (right_of) i = j + 1;
    }
    return i;
  }

  std::vector<double> breaks_;
  std::vector<bool> owner_left_;
  std::vector<Piece> pieces_;
};

enum class LowerBoundKind { sgd_I, sgd_II, ada_I, ada_II, ada_III };

inline const char* to_string(LowerBoundKind k) {
  switch (k) {
    case LowerBoundKind::sgd_I: return "sgd_I";
    case LowerBoundKind::sgd_II: return "sgd_II";
    case LowerBoundKind::ada_I: return "ada_I";
    case LowerBoundKind::ada_II: return "ada_II";
    case LowerBoundKind::ada_III: return "ada_III";
  }
  return "?";
}

inline LowerBoundKind parse_lower_bound_kind(const std::string& s) {
  if (s == "sgd_I") return LowerBoundKind::sgd_I;
  if (s == "sgd_II") return LowerBoundKind::sgd_II;
  if (s == "ada_I") return LowerBoundKind::ada_I;
  if (s == "ada_II") return LowerBoundKind::ada_II;
  if (s == "ada_III") return LowerBoundKind::ada_III;
  throw ConfigError(fmt::format("unknown lower-bound kind '{}'", s));
}

inline bool is_sgd_kind(LowerBoundKind k) { return k == LowerBoundKind::sgd_I || k == LowerBoundKind::sgd_II; }

// Checks the parameter regime of the SGD or AdaGrad-Norm lower-bound family.
inline void check_lower_bound_regime(LowerBoundKind kind, double R, double G0, double G1, double eps) {
  if (!(R > 0 && G0 > 0 && G1 > 0 && eps > 0))
    throw RegimeError("lower bound: R, G0, G1, eps must all be > 0");
  if (is_sgd_kind(kind)) {
    if (!(R * G1 >= 8.0)) throw RegimeError(fmt::format("lower bound: R*G1 >= 8 violated (R*G1 = {})", R * G1));
    if (!(eps <= G0 / G1 * std::exp(R * G1 / 8.0)))
      throw RegimeError("lower bound: eps <= (G0/G1) exp(R*G1/8) violated");
  } else {
    if (!(R * G1 >= 32.0)) throw RegimeError(fmt::format("lower bound: R*G1 >= 32 violated (R*G1 = {})", R * G1));
    if (!(eps <= G0 / G1 * std::exp(R * G1 / 64.0)))
      throw RegimeError("lower bound: eps <= (G0/G1) exp(R*G1/64) violated");
  }
}

class LowerBoundInstance final : public Piecewise1D {
 public:
  LowerBoundInstance(LowerBoundKind kind, double R, double G0, double G1, double eps)
      : kind_(kind), R_(R), G0_(G0), G1_(G1), eps_(eps) {
    check_lower_bound_regime(kind, R, G0, G1, eps);
    using P = Piece;
    auto exp_piece = [&](double center, double coef, double offset) {
      P p;
      p.kind = P::exp_abs;
      p.x0 = center;
      p.coef = coef;
      p.rate = G1;
      p.offset = offset;
      return p;
    };
    auto lin_piece = [](double x0, double slope, double offset) {
      P p;
      p.kind = P::linear;
      p.x0 = x0;
      p.slope = slope;
      p.offset = offset;
      return p;
    };
    const double core_gain = std::exp(R * G1 / 4.0);
    switch (kind) {
      case LowerBoundKind::sgd_I:
      case LowerBoundKind::ada_I: {
        // x < R/2: linear; x >= R/2: exp(|x - 3R/4|) core.
        breaks_ = {R / 2.0};
        owner_left_ = {false};
        pieces_ = {lin_piece(R / 2.0, -G0 * core_gain, G0 / G1 * (core_gain - 1.0)),
                   exp_piece(0.75 * R, G0, 0.0)};
        xstar_ = 0.75 * R;
        break;
      }
      case LowerBoundKind::sgd_II: {
        r_ = std::max(0.0, std::log(8.0 * eps / (R * G0)) / G1);
        const double slope = 8.0 * eps / R;
        const double core = G0 / G1 * std::expm1(G1 * r_);
        breaks_ = {R / 2.0 - r_, R / 2.0 + r_};
        owner_left_ = {false, true};
        pieces_ = {lin_piece(R / 2.0 - r_, -slope, core), exp_piece(R / 2.0, G0, 0.0),
                   lin_piece(R / 2.0 + r_, slope, core)};
        xstar_ = R / 2.0;
        break;
      }
      case LowerBoundKind::ada_II: {
        r_ = std::max(0.0, std::log(32.0 * eps / (R * G0)) / G1);
        const double slope = 32.0 * eps / R;
        const double core = G0 / G1 * std::expm1(G1 * r_);
        breaks_ = {R / 16.0 + r_};
        owner_left_ = {true};
        pieces_ = {exp_piece(R / 16.0, G0, 0.0), lin_piece(R / 16.0 + r_, slope, core)};
        xstar_ = R / 16.0;
        break;
      }
      case LowerBoundKind::ada_III: {
        r_ = std::max(0.0, std::log(32.0 * eps / (R * G0)) / G1);
        const double slope = 32.0 * eps / R;
        const double core = G0 / G1 * std::expm1(G1 * r_);
        const double m = std::max(G0, slope);
        breaks_ = {R / 4.0, R - r_, R};
        owner_left_ = {false, false, false};
        pieces_ = {exp_piece(R / 4.0, m, slope * (0.75 * R - r_) + core),
                   lin_piece(R - r_, -slope, core), exp_piece(R, G0, 0.0), lin_piece(R, 0.0, 0.0)};
        xstar_ = R;
        break;
      }
    }
    c_.R = R;
    c_.xstar = Vec{xstar_};
    c_.fstar = 0.0;
    c_.M0 = G0;
    c_.M1 = G1;
    c_.G0 = G0;
    c_.G1 = G1;
    c_.L0 = G0;
    c_.L1 = G1;
    c_.F = *analytic_F(R);
  }

  std::string id() const override {
    return fmt::format("lower:{}{{R={},G0={},G1={},eps={}}}", to_string(kind_), R_, G0_, G1_, eps_);
  }

  LowerBoundKind kind() const noexcept { return kind_; }
  double eps() const noexcept { return eps_; }
  double core_radius() const noexcept { return r_; }

  // SGD stepsize threshold separating the two cases of the SGD family.
  static double sgd_case_threshold(double R, double G0, double G1) { return 2.0 * R / G0 * std::exp(-R * G1 / 4.0); }

 private:
  LowerBoundKind kind_;
  double R_, G0_, G1_, eps_;
  double r_ = 0.0;
  double xstar_ = 0.0;
};

// max_{||x|| <= R} (f(x) - f*): closed form when available, otherwise a dense
// sample of the ball followed by projected ascent from the best points.
inline double exact_F(const Problem& p, double R, std::uint64_t seed = 0) {
  if (!(R > 0.0)) throw ConfigError("exact_F: R must be > 0");
  if (auto f = p.analytic_F(R)) return *f;
  const std::size_t d = p.dim();
  PhiloxEngine eng(seed, 0, Substream::aux);
  constexpr std::size_t kSamples = std::size_t{1} << 16;
  std::vector<std::pair<double, Vec>> best;
  Vec x(d);
  for (std::size_t s = 0; s < kSamples; ++s) {
    // Box-Muller directions; radius R on even draws, uniform-in-ball on odd.
    for (std::size_t i = 0; i < d; ++i) {
      const double u1 = 1.0 - eng.uniform01();
      const double u2 = eng.uniform01();
      x[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double n = norm(x);
    const double rad = (s % 2 == 0) ? R : R * std::pow(eng.uniform01(), 1.0 / static_cast<double>(d));
    if (n > 0) scale(x, rad / n);
    const double v = p.value(x);
    if (best.size() < 8 || v > best.back().first) {
      best.emplace_back(v, x);
      std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (best.size() > 8) best.pop_back();
    }
  }
  double top = best.front().first;
  Vec g(d);
  for (auto& [v, y] : best) {
    double step = 0.1 * R;
    for (int it = 0; it < 200 && step > 1e-12 * R; ++it) {
      p.subgrad(y, g);
      const double gn = norm(g);
      if (gn == 0.0) break;
      Vec cand = y;
      axpy(step / gn, g, cand);
      project_ball_inplace(cand, R);
      const double cv = p.value(cand);
      if (cv > v) {
        v = cv;
        y = cand;
      } else {
        step *= 0.5;
      }
    }
    top = std::max(top, v);
  }
  return top - p.constants().fstar;
}

struct MFBound {
  double M;
  double F;
};

// Lipschitz constant and gap bound on Q_R implied by (M0, M1).
inline MFBound mf_bound(double M0, double M1, double R) {
  if (!(R > 0.0)) throw ConfigError("mf_bound: R must be > 0");
  const double M = M0 * std::exp(2.0 * R * M1);
  const double F = M1 > 0.0 ? M0 / M1 * std::expm1(2.0 * R * M1) : 2.0 * R * M0;
  return {M, F};
}

}  // namespace glopt
