#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cqt/error.hpp"
#include "cqt/matrix.hpp"

namespace cqt {

/// Eigenvalues ascending; column k of `eigenvectors` pairs with eigenvalues[k].
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  ComplexMatrix eigenvectors;

  std::vector<Complex> eigenvector(std::size_t k) const {
    std::vector<Complex> v(eigenvectors.dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = eigenvectors(i, k);
    return v;
  }

  /// V f(diag) V^dagger
  template <typename F>
  ComplexMatrix apply(F&& f) const {
    const std::size_t n = eigenvectors.dim();
    ComplexMatrix out(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = f(eigenvalues[k]);
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const Complex vik = eigenvectors(i, k) * w;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * std::conj(eigenvectors(j, k));
      }
    }
    return out;
  }

  ComplexMatrix reconstruct() const {
    return apply([](double x) { return x; });
  }
};

/// Cyclic complex Jacobi diagonalisation of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot a_pq, then applies the
/// real symmetric Jacobi rotation that zeroes it. Sweeps run over (p, q) in
/// row-major order, so results are reproducible run to run.
inline EigenDecomposition eig_hermitian(const ComplexMatrix& input, double herm_tol = 1e-10) {
  const double residual = input.hermiticity_residual();
  if (residual > herm_tol)
    throw Error("eig_hermitian: matrix is not Hermitian (residual " +
                std::to_string(residual) + ")");

  const std::size_t n = input.dim();
  ComplexMatrix a = input.hermitian_part();
  ComplexMatrix v = ComplexMatrix::identity(n);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += std::norm(a(p, q));
    return std::sqrt(s);
  };
  double scale = 0.0;
  for (const auto& z : a.entries()) scale += std::norm(z);
  scale = std::sqrt(scale);
  const double target = std::max(scale, 1e-300) * 1e-16;

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r <= target * 1e-3) continue;
        const Complex phase = apq / r;  // e^{i phi}
        const double app = a(p, p).real(), aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // 2x2 block of J acting on columns (p, q): diag(1, e^{-i phi}) [[c, s], [-s, c]]
        const Complex jpp = c, jpq = s;
        const Complex jqp = -s * std::conj(phase), jqq = c * std::conj(phase);

        for (std::size_t i = 0; i < n; ++i) {  // A <- A J
          const Complex aip = a(i, p), aiq = a(i, q);
          a(i, p) = aip * jpp + aiq * jqp;
          a(i, q) = aip * jpq + aiq * jqq;
        }
        for (std::size_t i = 0; i < n; ++i) {  // A <- J^dagger A
          const Complex api = a(p, i), aqi = a(q, i);
          a(p, i) = std::conj(jpp) * api + std::conj(jqp) * aqi;
          a(q, i) = std::conj(jpq) * api + std::conj(jqq) * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {  // V <- V J
          const Complex vip = v(i, p), viq = v(i, q);
          v(i, p) = vip * jpp + viq * jqp;
          v(i, q) = vip * jpq + viq * jqq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
  if (off_norm() > target * 1e3)
    throw NumericalError("eig_hermitian: Jacobi sweeps did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

  EigenDecomposition out{std::vector<double>(n), ComplexMatrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline double min_eigenvalue(const ComplexMatrix& m) {
  return eig_hermitian(m.hermitian_part(), 1e300).eigenvalues.front();
}

inline double max_eigenvalue(const ComplexMatrix& m) {
  return eig_hermitian(m.hermitian_part(), 1e300).eigenvalues.back();
}

/// Sum of |eigenvalues| of a Hermitian matrix.
inline double trace_norm(const ComplexMatrix& m) {
  double s = 0.0;
  for (double x : eig_hermitian(m.hermitian_part(), 1e300).eigenvalues) s += std::abs(x);
  return s;
}

/// Inverse square root of a positive definite matrix.
inline ComplexMatrix inverse_sqrt(const ComplexMatrix& m) {
  const auto e = eig_hermitian(m.hermitian_part(), 1e300);
  if (e.eigenvalues.front() <= 0.0) throw NumericalError("inverse_sqrt: matrix not positive definite");
  return e.apply([](double x) { return 1.0 / std::sqrt(x); });
}

inline ComplexMatrix inverse_psd(const ComplexMatrix& m) {
  const auto e = eig_hermitian(m.hermitian_part(), 1e300);
  if (e.eigenvalues.front() <= 0.0) throw NumericalError("inverse_psd: matrix not positive definite");
  return e.apply([](double x) { return 1.0 / x; });
}

/// Project onto the PSD cone by clipping negative eigenvalues.
inline ComplexMatrix clip_to_psd(const ComplexMatrix& m) {
  return eig_hermitian(m.hermitian_part(), 1e300).apply([](double x) { return std::max(x, 0.0); });
}

}  // namespace cqt
