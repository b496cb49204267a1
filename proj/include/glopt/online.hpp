#pragma once

// Online linear-optimization learners over a radius-R set, and regret evaluation.
//
// A learner holds its current play z. Feeding a gradient g updates the
// accumulators and the play; the first play (before any gradient) is 0.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "glopt/errors.hpp"
#include "glopt/numerics.hpp"

namespace glopt {

enum class LearnerKind { solo_scalar, ogd_adagrad, solo_diag, leon_diag, leon_matrix };

inline const char* to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::solo_scalar: return "solo_scalar";
    case LearnerKind::ogd_adagrad: return "ogd_adagrad";
    case LearnerKind::solo_diag: return "solo_diag";
    case LearnerKind::leon_diag: return "leon_diag";
    case LearnerKind::leon_matrix: return "leon_matrix";
  }
  return "?";
}

inline LearnerKind parse_learner_kind(const std::string& s) {
  for (auto k : {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad, LearnerKind::solo_diag, LearnerKind::leon_diag,
                 LearnerKind::leon_matrix})
    if (s == to_string(k)) return k;
  throw ConfigError(fmt::format("unknown learner '{}'", s));
}

enum class Geometry { euclid, box, spectral };

inline Geometry learner_geometry(LearnerKind k) {
  switch (k) {
    case LearnerKind::solo_diag:
    case LearnerKind::leon_diag: return Geometry::box;
    case LearnerKind::leon_matrix: return Geometry::spectral;
    default: return Geometry::euclid;
  }
}

inline constexpr double kDefaultDiagDelta = 1e-16;

inline double default_delta(LearnerKind k) {
  return (k == LearnerKind::solo_scalar || k == LearnerKind::ogd_adagrad) ? 0.0 : kDefaultDiagDelta;
}

struct LearnerState {
  LearnerKind kind = LearnerKind::solo_scalar;
  double R = 1.0;
  double delta = 0.0;
  std::size_t rows = 0;  // matrix learner: play is rows x cols, row-major
  std::size_t cols = 0;
  std::uint64_t steps = 0;

  Vec G;        // running sum of gradients
  double V = 0.0;  // running sum of squared norms (scalar learners)
  Vec Vdiag;    // delta + running sum of squares (diagonal learners)
  SymMat Vmat;  // delta I + sum g g^T (matrix learner)
  Vec z;        // current play
};

inline LearnerState make_learner(LearnerKind kind, std::size_t d, double R, double delta = -1.0, std::size_t rows = 0) {
  if (!(R > 0.0)) throw ConfigError("learner: R must be > 0");
  if (d == 0) throw ConfigError("learner: dimension must be >= 1");
  LearnerState s;
  s.kind = kind;
  s.R = R;
  s.delta = delta < 0.0 ? default_delta(kind) : delta;
  s.G = Vec(d);
  s.z = Vec(d);
  switch (kind) {
    case LearnerKind::solo_diag:
    case LearnerKind::leon_diag:
      s.Vdiag = Vec(d, s.delta);
      break;
    case LearnerKind::leon_matrix:
      s.rows = rows == 0 ? d : rows;
      if (d % s.rows != 0) throw ConfigError(fmt::format("leon_matrix: rows={} does not divide d={}", s.rows, d));
      s.cols = d / s.rows;
      s.Vmat = SymMat::identity(s.rows, s.delta);
      break;
    default:
      break;
  }
  return s;
}

namespace detail {

// z = -R * (G G^T + V)^{-1/2} G for the matrix learner.
inline void matrix_play(LearnerState& s) {
  const std::size_t r = s.rows, c = s.cols;
  SymMat S = s.Vmat;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i; j < r; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < c; ++k) acc += s.G[i * c + k] * s.G[j * c + k];
      S(i, j) += acc;
    }
  S.symmetrize_from_upper();
  const SymMat P = inv_sqrt_psd(S);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < c; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < r; ++j) acc += P(i, j) * s.G[j * c + k];
      s.z[i * c + k] = -s.R * acc;
    }
}

}  // namespace detail

// Feeds one gradient and refreshes the play, in place.
inline void learner_update(LearnerState& s, const Vec& g) {
  const std::size_t d = s.z.size();
  if (g.size() != d) throw ConfigError(fmt::format("learner: gradient size {} != {}", g.size(), d));
  if (!all_finite(g)) throw NumericError(fmt::format("learner: non-finite gradient at step {}", s.steps + 1));
  ++s.steps;
  switch (s.kind) {
    case LearnerKind::solo_scalar: {
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        s.G[i] += g[i];
        sq += g[i] * g[i];
      }
      s.V += sq;
      const double root = std::sqrt(s.V + s.delta);
      if (root == 0.0) {
        s.z.fill(0.0);
        return;
      }
      for (std::size_t i = 0; i < d; ++i) s.z[i] = s.G[i] / root;
      clip_euclid_inplace(s.z);
      for (std::size_t i = 0; i < d; ++i) s.z[i] = -s.R * s.z[i];
      return;
    }
    case LearnerKind::ogd_adagrad: {
      s.V += squared_norm(g);
      if (s.V + s.delta == 0.0) return;
      const double eta = s.R / std::sqrt(2.0 * (s.V + s.delta));
      axpy(-eta, g, s.z);
      project_ball_inplace(s.z, s.R);
      return;
    }
    case LearnerKind::solo_diag: {
      for (std::size_t i = 0; i < d; ++i) {
        s.G[i] += g[i];
        s.Vdiag[i] += g[i] * g[i];
        const double root = std::sqrt(s.Vdiag[i]);
        const double q = root == 0.0 ? 0.0 : s.G[i] / root;
        s.z[i] = -s.R * std::clamp(q, -1.0, 1.0);
      }
      return;
    }
    case LearnerKind::leon_diag: {
      for (std::size_t i = 0; i < d; ++i) {
        s.G[i] += g[i];
        s.Vdiag[i] += g[i] * g[i];
        const double root = std::sqrt(s.G[i] * s.G[i] + s.Vdiag[i]);
        s.z[i] = root == 0.0 ? 0.0 : -s.R * s.G[i] / root;
      }
      return;
    }
    case LearnerKind::leon_matrix: {
      const std::size_t r = s.rows, c = s.cols;
      for (std::size_t i = 0; i < d; ++i) s.G[i] += g[i];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = i; j < r; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < c; ++k) acc += g[i * c + k] * g[j * c + k];
          s.Vmat(i, j) += acc;
        }
      s.Vmat.symmetrize_from_upper();
      detail::matrix_play(s);
      return;
    }
  }
}

// Value-semantics form: returns the new state and the next play.
inline std::pair<LearnerState, Vec> learner_step(LearnerState s, const Vec& g) {
  learner_update(s, g);
  Vec z = s.z;
  return {std::move(s), std::move(z)};
}

// Largest accumulator magnitude, used to trigger rescaling.
inline double learner_scale(const LearnerState& s) {
  double m = std::max(norm_inf(s.G), s.V);
  if (!s.Vdiag.empty()) m = std::max(m, norm_inf(s.Vdiag));
  if (s.Vmat.dim() > 0) m = std::max(m, s.Vmat.max_abs());
  return m;
}

// Replaces the past gradient stream g_i by lambda * g_i. Plays of the SOLO and
// Leon learners depend on G / sqrt(V) only, so they are unchanged when
// delta = 0; delta is scaled along with V so that this holds for any delta.
inline void learner_rescale(LearnerState& s, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw NumericError("learner_rescale: lambda must be positive and finite");
  const double l2 = lambda * lambda;
  scale(s.G, lambda);
  s.V *= l2;
  s.delta *= l2;
  if (!s.Vdiag.empty()) scale(s.Vdiag, l2);
  if (s.Vmat.dim() > 0)
    for (std::size_t i = 0; i < s.Vmat.dim(); ++i)
      for (std::size_t j = 0; j < s.Vmat.dim(); ++j) s.Vmat(i, j) *= l2;
}

// Running pieces of the regret against the best fixed comparator.
struct RegretAccumulator {
  Vec G_total;
  double sum_zg = 0.0;
  double sum_sq = 0.0;  // sum of ||g_k||^2

  explicit RegretAccumulator(std::size_t d = 0) : G_total(d) {}

  void add(const Vec& z, const Vec& g) {
    sum_zg += dot(z, g);
    sum_sq += squared_norm(g);
    for (std::size_t i = 0; i < g.size(); ++i) G_total[i] += g[i];
  }

  // max over comparators u in the set of sum <z_k - u, g_k>.
  double regret(double R, Geometry geom, std::size_t rows = 0) const {
    switch (geom) {
      case Geometry::euclid: return sum_zg + R * norm(G_total);
      case Geometry::box: return sum_zg + R * norm1(G_total);
      case Geometry::spectral: {
        // Support function of the spectral ball is R times the nuclear norm.
        const std::size_t r = rows == 0 ? G_total.size() : rows;
        const std::size_t c = G_total.size() / r;
        SymMat ggt(r);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = i; j < r; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < c; ++k) acc += G_total[i * c + k] * G_total[j * c + k];
            ggt(i, j) = acc;
          }
        ggt.symmetrize_from_upper();
        const auto eig = jacobi_eigen(ggt);
        double nuc = 0.0;
        for (double l : eig.values) nuc += std::sqrt(std::max(0.0, l));
        return sum_zg + R * nuc;
      }
    }
    return 0.0;
  }
};

struct RegretRecord {
  std::vector<Vec> z_history;
  std::vector<Vec> g_history;
  RegretAccumulator acc;

  explicit RegretRecord(std::size_t d = 0) : acc(d) {}

  void add(const Vec& z, const Vec& g) {
    z_history.push_back(z);
    g_history.push_back(g);
    acc.add(z, g);
  }
};

inline double regret_eval(const RegretRecord& rec, double R, Geometry geom) {
  if (rec.z_history.empty()) throw ConfigError("regret_eval: empty history");
  return rec.acc.regret(R, geom);
}

// Plays the learner on a fixed gradient stream and records (z_k, g_k).
inline RegretRecord play_stream(LearnerState s, const std::vector<Vec>& stream) {
  RegretRecord rec(s.z.size());
  for (const Vec& g : stream) {
    rec.add(s.z, g);
    learner_update(s, g);
  }
  return rec;
}

}  // namespace glopt
