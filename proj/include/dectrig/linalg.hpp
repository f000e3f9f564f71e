#pragma once

// Small dense real linear algebra: enough for n <= ~10 state-space designs.
// All norms are Euclidean for vectors and induced 2-norms for matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dectrig/errors.hpp"

namespace dectrig {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> v) {
  // hypot-style scaling keeps tiny states (scale-invariance runs at 1e-3) exact
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) {
    const double y = x / scale;
    s += y * y;
  }
  return scale * std::sqrt(s);
}

inline Vector operator+(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector operator*(double s, const Vector& a) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Dense row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
      : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (data_.size() != rows_ * cols_) {
      throw ValidationError("matrix entry count does not match shape");
    }
    if (!all_finite(data_)) throw ValidationError("matrix has non-finite entries");
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ValidationError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!all_finite(data_)) throw ValidationError("matrix has non-finite entries");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static Matrix column(std::span<const double> v) {
    return Matrix(v.size(), 1, Vector(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  Vector col(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  double frobenius() const { return norm2(data_); }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw ValidationError("matrix product shape mismatch");
    Matrix p(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) p(i, j) += aik * b(k, j);
      }
    return p;
  }

  friend Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw ValidationError("matrix-vector shape mismatch");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) y[i] = dot(a.row(i), x);
    return y;
  }

  friend Vector operator*(const Matrix& a, const Vector& x) {
    return a * std::span<const double>(x);
  }

  friend Matrix operator+(const Matrix& a, const Matrix& b) {
    a.require_same_shape(b);
    Matrix r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] += b.data_[i];
    return r;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    a.require_same_shape(b);
    Matrix r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] -= b.data_[i];
    return r;
  }

  friend Matrix operator*(double s, const Matrix& a) {
    Matrix r = a;
    for (double& x : r.data_) x *= s;
    return r;
  }

  bool operator==(const Matrix&) const = default;

  std::string shape_string() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
  }

 private:
  void require_same_shape(const Matrix& b) const {
    if (rows_ != b.rows_ || cols_ != b.cols_) {
      throw ValidationError("matrix shape mismatch: " + shape_string() + " vs " +
                            b.shape_string());
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Quadratic form xᵀ M x.
inline double quad_form(const Matrix& m, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += x[i] * dot(m.row(i), x);
  return s;
}

struct SpectralSummary {
  double min_eigenvalue;
  double max_eigenvalue;
};

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

inline void require_symmetric(const Matrix& m) {
  if (!m.square()) {
    throw ValidationError("symmetric eigensolve needs a square matrix, got " + m.shape_string());
  }
  const double scale = m.frobenius();
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) {
        std::ostringstream os;
        os << "matrix is not symmetric: entry (" << i << "," << j << ") differs by "
           << std::abs(m(i, j) - m(j, i));
        throw ValidationError(os.str());
      }
}

/// Cyclic Jacobi rotations; stops once the off-diagonal Frobenius mass drops
/// below 1e-14 of the matrix norm.
inline SymmetricEigen sym_eig_decompose(const Matrix& m) {
  require_symmetric(m);
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const double threshold = 1e-14 * m.frobenius();

  auto off_mass = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_mass() > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

inline Vector sym_eig(const Matrix& m) { return sym_eig_decompose(m).values; }

inline SpectralSummary spectral_summary(const Matrix& m) {
  const Vector ev = sym_eig(m);
  if (ev.empty()) throw ValidationError("spectral summary of an empty matrix");
  return {ev.front(), ev.back()};
}

/// Induced 2-norm: sqrt of the largest eigenvalue of the smaller Gram matrix.
inline double spectral_norm(const Matrix& m) {
  if (!all_finite(m.data())) throw ValidationError("spectral_norm: non-finite entries");
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return norm2(m.data());
  const Matrix mt = m.transpose();
  Matrix gram = m.rows() <= m.cols() ? m * mt : mt * m;
  // symmetrize away roundoff from the product
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = i + 1; j < gram.cols(); ++j) {
      const double avg = 0.5 * (gram(i, j) + gram(j, i));
      gram(i, j) = gram(j, i) = avg;
    }
  return std::sqrt(std::max(0.0, sym_eig(gram).back()));
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline Vector solve_linear(Matrix a, Vector b) {
  if (!a.square() || a.rows() != b.size()) throw ValidationError("solve_linear: shape mismatch");
  const std::size_t n = a.rows();
  double scale = 0.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) throw NumericalError("solve_linear: zero matrix");

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= 1e-13 * scale) {
      throw NumericalError("solve_linear: matrix is singular to working precision");
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
    x[ii] = s / a(ii, ii);
  }
  return x;
}

inline double lyapunov_residual(const Matrix& a_cl, const Matrix& q, const Matrix& p) {
  return spectral_norm(p * a_cl + a_cl.transpose() * p + q);
}

/// P·A_cl + A_clᵀ·P = −Q via the n²×n² vectorized system. Throws
/// NumericalError when A_cl is not Hurwitz (singular system or indefinite P).
inline Matrix solve_lyapunov(const Matrix& a_cl, const Matrix& q) {
  if (!a_cl.square() || !q.square() || a_cl.rows() != q.rows()) {
    throw ValidationError("solve_lyapunov: A_cl and Q must be square and of equal size");
  }
  if (spectral_summary(q).min_eigenvalue <= 0.0) {
    throw ValidationError("solve_lyapunov: Q must be positive definite");
  }
  const std::size_t n = a_cl.rows();
  const std::size_t nn = n * n;
  Matrix lhs(nn, nn);
  Vector rhs(nn);
  // unknown P(i,k) sits at index i*n+k; equation (i,j) is
  // sum_k P(i,k) A(k,j) + sum_k A(k,i) P(k,j) = -Q(i,j)
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t eq = i * n + j;
      for (std::size_t k = 0; k < n; ++k) {
        lhs(eq, i * n + k) += a_cl(k, j);
        lhs(eq, k * n + j) += a_cl(k, i);
      }
      rhs[eq] = -q(i, j);
    }

  Vector vec_p;
  try {
    vec_p = solve_linear(std::move(lhs), std::move(rhs));
  } catch (const NumericalError&) {
    throw NumericalError(
        "solve_lyapunov: singular Lyapunov operator (closed loop is not Hurwitz)");
  }
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = 0.5 * (vec_p[i * n + j] + vec_p[j * n + i]);

  if (spectral_summary(p).min_eigenvalue <= 0.0) {
    throw NumericalError("solve_lyapunov: solution is not positive definite (closed loop is not Hurwitz)");
  }
  return p;
}

/// Hurwitz test through the Lyapunov route: A is Hurwitz iff AᵀP + PA = −I
/// has a positive definite solution.
inline bool is_hurwitz(const Matrix& a) {
  if (!a.square()) return false;
  try {
    solve_lyapunov(a, Matrix::identity(a.rows()));
    return true;
  } catch (const NumericalError&) {
    return false;
  }
}

}  // namespace dectrig
