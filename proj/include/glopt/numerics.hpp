#pragma once

// Dense vector and small symmetric-matrix kernels.
//
// All reductions run in a fixed left-to-right order so that trajectories are
// bit-reproducible for a fixed seed. Nothing here allocates except the
// value-returning helpers; hot loops use the in-place forms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "glopt/errors.hpp"

namespace glopt {

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  void resize(std::size_t n, double fill = 0.0) { data_.assign(n, fill); }
  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const Vec& a) noexcept { return dot(a, a); }

inline double norm(const Vec& a) noexcept {
  const double n = std::sqrt(squared_norm(a));
  if (std::isfinite(n) && n > 1e-150) return n;
  // Over/underflow of the squares: redo with the largest magnitude factored out.
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  if (m == 0.0 || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : a) s += (v / m) * (v / m);
  return m * std::sqrt(s);
}

// Relative slack so that re-applying a projection or clip is a no-op.
inline constexpr double kBoundarySlack = 4.0 * std::numeric_limits<double>::epsilon();

inline double norm_inf(const Vec& a) noexcept {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double norm1(const Vec& a) noexcept {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double distance(const Vec& a, const Vec& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(const Vec& a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) noexcept {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline void scale(Vec& x, double a) noexcept {
  for (double& v : x) v *= a;
}

inline Vec scaled(const Vec& x, double a) {
  Vec out = x;
  scale(out, a);
  return out;
}

inline Vec operator+(const Vec& a, const Vec& b) {
  Vec out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline Vec operator-(const Vec& a, const Vec& b) {
  Vec out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

inline void require_finite(const Vec& x, const char* what) {
  if (!all_finite(x)) throw NumericError(fmt::format("{}: non-finite input", what));
}

// Euclidean projection onto {x : ||x|| <= radius}, in place.
inline void project_ball_inplace(Vec& x, double radius) {
  const double n = norm(x);
  if (n <= radius * (1.0 + kBoundarySlack)) return;
  // x_i / n * R keeps the 1-D case exact: the result is exactly +-R.
  for (double& v : x) v = v / n * radius;
}

inline Vec project_ball(const Vec& x, double radius) {
  require_finite(x, "project_ball");
  if (!(radius >= 0.0)) throw NumericError("project_ball: radius must be >= 0");
  Vec out = x;
  project_ball_inplace(out, radius);
  return out;
}

// x * min{1, 1/||x||} with 0/0 = 0.
inline void clip_euclid_inplace(Vec& x) {
  const double n = norm(x);
  if (n <= 1.0 + kBoundarySlack) return;
  for (double& v : x) v = v / n;
}

inline Vec clip_euclid(const Vec& x) {
  require_finite(x, "clip_euclid");
  Vec out = x;
  clip_euclid_inplace(out);
  return out;
}

inline void clip_coord_inplace(Vec& x) noexcept {
  for (double& v : x) v = std::clamp(v, -1.0, 1.0);
}

inline Vec clip_coord(const Vec& x) {
  require_finite(x, "clip_coord");
  Vec out = x;
  clip_coord_inplace(out);
  return out;
}

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw NumericError("Matrix::from_rows: ragged rows");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  const double* row(std::size_t i) const noexcept { return data_.data() + i * cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Vec matvec(const Matrix& a, const Vec& x) {
  Vec out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    const double* r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
    out[i] = s;
  }
  return out;
}

inline double row_norm(const Matrix& a, std::size_t i) noexcept {
  double s = 0.0;
  const double* r = a.row(i);
  for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * r[j];
  return std::sqrt(s);
}

// Symmetric d x d matrix with full storage. Writers keep both triangles equal.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static SymMat identity(std::size_t n, double diag = 1.0) {
    SymMat m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = diag;
    return m;
  }

  static SymMat diagonal(const Vec& d) {
    SymMat m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t dim() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  // Mirrors the upper triangle into the lower one.
  void symmetrize_from_upper() noexcept {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) (*this)(j, i) = (*this)(i, j);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_asymmetry() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  friend bool operator==(const SymMat&, const SymMat&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline SymMat multiply(const SymMat& a, const SymMat& b) {
  const std::size_t n = a.dim();
  SymMat out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Vec sym_matvec(const SymMat& a, const Vec& x) {
  Vec out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

struct EigenDecomposition {
  Vec values;         // unsorted, paired with columns of `vectors`
  SymMat vectors;     // column j is the eigenvector of values[j] (stored in full, not symmetric)
  int sweeps = 0;
};

inline constexpr int kMaxJacobiSweeps = 100;

// Cyclic Jacobi eigendecomposition for a symmetric matrix.
inline EigenDecomposition jacobi_eigen(const SymMat& s, double symmetry_tol = 1e-12) {
  const std::size_t n = s.dim();
  const double scale = std::max(1.0, s.max_abs());
  if (!std::isfinite(s.max_abs())) throw NumericError("jacobi_eigen: non-finite entries");
  if (s.max_asymmetry() > symmetry_tol * scale)
    throw NumericError(fmt::format("jacobi_eigen: matrix is not symmetric (max |a_ij - a_ji| = {:g})",
                                   s.max_asymmetry()));

  SymMat a = s;
  SymMat v = SymMat::identity(n);
  double frob = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) frob += a(i, j) * a(i, j);
  const double target = 1e-30 * frob;

  EigenDecomposition out;
  int sweep = 0;
  for (; sweep < kMaxJacobiSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= target || off == 0.0) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxJacobiSweeps)
    throw NumericError(fmt::format("jacobi_eigen: no convergence after {} sweeps", kMaxJacobiSweeps));

  out.values = Vec(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  out.sweeps = sweep;
  return out;
}

inline constexpr double kDefaultEigenFloor = 1e-12;

// Q diag(max(lambda, floor)^{-1/2}) Q^T.
inline SymMat inv_sqrt_psd(const SymMat& s, double floor = kDefaultEigenFloor) {
  if (!(floor > 0.0)) throw NumericError("inv_sqrt_psd: floor must be positive");
  const EigenDecomposition eig = jacobi_eigen(s);
  const std::size_t n = s.dim();
  double lmax = 0.0;
  for (double l : eig.values) lmax = std::max(lmax, std::abs(l));
  Vec w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = eig.values[i];
    if (l < -1e-10 * std::max(1.0, lmax))
      throw NumericError(fmt::format("inv_sqrt_psd: eigenvalue {:g} is negative", l));
    w[i] = 1.0 / std::sqrt(std::max(l, floor));
  }
  SymMat out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += eig.vectors(i, k) * w[k] * eig.vectors(j, k);
      out(i, j) = acc;
    }
  out.symmetrize_from_upper();
  return out;
}

// Largest eigenvalue magnitude of a symmetric matrix.
inline double spectral_radius(const SymMat& s) {
  const EigenDecomposition eig = jacobi_eigen(s);
  double m = 0.0;
  for (double l : eig.values) m = std::max(m, std::abs(l));
  return m;
}

// ||A||_op via the largest eigenvalue of A^T A.
inline double operator_norm(const Matrix& a) {
  SymMat ata(a.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * a(k, j);
      ata(i, j) = s;
    }
  ata.symmetrize_from_upper();
  return std::sqrt(spectral_radius(ata));
}

// Largest singular value of the rows x cols matrix stored row-major in `x`.
inline double spectral_norm(const Vec& x, std::size_t rows, std::size_t cols) {
  SymMat xxt(rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = i; j < rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < cols; ++k) s += x[i * cols + k] * x[j * cols + k];
      xxt(i, j) = s;
    }
  xxt.symmetrize_from_upper();
  return std::sqrt(spectral_radius(xxt));
}

}  // namespace glopt
