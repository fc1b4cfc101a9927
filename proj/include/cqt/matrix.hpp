#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "cqt/error.hpp"

namespace cqt {

using Complex = std::complex<double>;

/// Dense square complex matrix stored row-major.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  explicit ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {
    if (dim == 0) throw Error("matrix dimension must be positive");
  }

  ComplexMatrix(std::size_t dim, std::vector<Complex> entries)
      : dim_(dim), data_(std::move(entries)) {
    if (dim == 0) throw Error("matrix dimension must be positive");
    if (data_.size() != dim * dim)
      throw Error("matrix entry count " + std::to_string(data_.size()) +
                  " does not match dim^2 = " + std::to_string(dim * dim));
  }

  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
      : dim_(rows.size()) {
    if (dim_ == 0) throw Error("matrix dimension must be positive");
    data_.reserve(dim_ * dim_);
    for (const auto& row : rows) {
      if (row.size() != dim_) throw Error("matrix rows must be square");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static ComplexMatrix identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix diagonal(std::span<const double> values) {
    ComplexMatrix m(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  /// |u><v|
  static ComplexMatrix outer(std::span<const Complex> u,
                             std::span<const Complex> v) {
    if (u.size() != v.size()) throw Error("outer product dimension mismatch");
    ComplexMatrix m(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j)
        m(i, j) = u[i] * std::conj(v[j]);
    return m;
  }

  std::size_t dim() const { return dim_; }
  std::span<const Complex> entries() const { return data_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r * dim_ + c];
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  Complex trace() const {
    Complex t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  /// (A + A^dagger) / 2
  ComplexMatrix hermitian_part() const {
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c)
        out(r, c) = 0.5 * ((*this)(r, c) + std::conj((*this)(c, r)));
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  /// max_ij |A_ij - conj(A_ji)|
  double hermiticity_residual() const {
    double m = 0.0;
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = r; c < dim_; ++c)
        m = std::max(m, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    return m;
  }

  bool is_hermitian(double tol = 1e-10) const {
    return hermiticity_residual() <= tol;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ComplexMatrix& operator*=(Complex s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, double s) { return a *= s; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    a.check_same(b);
    const std::size_t n = a.dim_;
    ComplexMatrix out(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{}) continue;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend std::vector<Complex> operator*(const ComplexMatrix& a,
                                        std::span<const Complex> v) {
    if (v.size() != a.dim_) throw Error("matrix-vector dimension mismatch");
    std::vector<Complex> out(a.dim_);
    for (std::size_t i = 0; i < a.dim_; ++i)
      for (std::size_t j = 0; j < a.dim_; ++j) out[i] += a(i, j) * v[j];
    return out;
  }

  friend double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    a.check_same(b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.data_.size(); ++i)
      m = std::max(m, std::abs(a.data_[i] - b.data_[i]));
    return m;
  }

 private:
  void check_same(const ComplexMatrix& o) const {
    if (o.dim_ != dim_)
      throw Error("matrix dimension mismatch: " + std::to_string(dim_) + " vs " +
                  std::to_string(o.dim_));
  }

  std::size_t dim_ = 0;
  std::vector<Complex> data_;
};

/// Kronecker product; a is the more significant factor.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t m = a.dim(), n = b.dim();
  ComplexMatrix out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex{}) continue;
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) out(i * n + k, j * n + l) = aij * b(k, l);
    }
  return out;
}

inline std::vector<Complex> kron(std::span<const Complex> u, std::span<const Complex> v) {
  std::vector<Complex> out;
  out.reserve(u.size() * v.size());
  for (const auto& x : u)
    for (const auto& y : v) out.push_back(x * y);
  return out;
}

/// Tr(A B) without forming the product.
inline Complex trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) throw Error("trace_of_product dimension mismatch");
  Complex t = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t k = 0; k < a.dim(); ++k) t += a(i, k) * b(k, i);
  return t;
}

/// <u|A|u>
inline Complex expectation(const ComplexMatrix& a, std::span<const Complex> u) {
  const auto au = a * u;
  Complex t = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) t += std::conj(u[i]) * au[i];
  return t;
}

/// Partial trace over a tensor product with arbitrary factor dimensions.
/// `keep` lists the factors to retain; the result keeps their original order.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const std::size_t> dims,
                                   std::vector<std::size_t> keep) {
  if (keep.empty()) throw Error("cannot trace out all subsystems");
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (total != m.dim()) throw Error("subsystem dimensions do not match matrix dimension");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw Error("duplicate subsystem index in keep set");
  if (keep.back() >= dims.size()) throw Error("subsystem index out of range");

  const std::size_t nsys = dims.size();
  std::vector<bool> kept(nsys, false);
  for (auto k : keep) kept[k] = true;

  std::size_t dim_keep = 1, dim_trace = 1;
  for (std::size_t s = 0; s < nsys; ++s) (kept[s] ? dim_keep : dim_trace) *= dims[s];

  // Map (kept index, traced index) -> full index by interleaving digits.
  std::vector<std::size_t> full(dim_keep * dim_trace);
  std::vector<std::size_t> digit(nsys);
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    for (std::size_t s = nsys; s-- > 0;) {
      digit[s] = rem % dims[s];
      rem /= dims[s];
    }
    std::size_t ik = 0, it = 0;
    for (std::size_t s = 0; s < nsys; ++s) {
      if (kept[s])
        ik = ik * dims[s] + digit[s];
      else
        it = it * dims[s] + digit[s];
    }
    full[ik * dim_trace + it] = f;
  }

  ComplexMatrix out(dim_keep);
  for (std::size_t r = 0; r < dim_keep; ++r)
    for (std::size_t c = 0; c < dim_keep; ++c) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < dim_trace; ++t)
        acc += m(full[r * dim_trace + t], full[c * dim_trace + t]);
      out(r, c) = acc;
    }
  return out;
}

namespace pauli {
inline ComplexMatrix i2() { return ComplexMatrix::identity(2); }
inline ComplexMatrix x() { return ComplexMatrix{{0.0, 1.0}, {1.0, 0.0}}; }
inline ComplexMatrix y() {
  return ComplexMatrix{{0.0, Complex(0, -1)}, {Complex(0, 1), 0.0}};
}
inline ComplexMatrix z() { return ComplexMatrix{{1.0, 0.0}, {0.0, -1.0}}; }
}  // namespace pauli

}  // namespace cqt
