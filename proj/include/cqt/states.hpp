#pragma once

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cqt/eig.hpp"
#include "cqt/error.hpp"
#include "cqt/matrix.hpp"

namespace cqt {

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = -1e-9;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kNormTol = 1e-10;

/// Normalised state vector.
class PureState {
 public:
  explicit PureState(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.empty()) throw Error("pure state must have positive dimension");
    double n2 = 0.0;
    for (const auto& a : amps_) n2 += std::norm(a);
    if (std::abs(std::sqrt(n2) - 1.0) > kNormTol)
      throw Error("pure state is not normalised (norm " + std::to_string(std::sqrt(n2)) + ")");
  }

  /// Normalises the given amplitudes; throws on a zero vector.
  static PureState normalized(std::vector<Complex> amplitudes) {
    double n2 = 0.0;
    for (const auto& a : amplitudes) n2 += std::norm(a);
    if (n2 <= 0.0) throw Error("cannot normalise a zero vector");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& a : amplitudes) a *= inv;
    return PureState(std::move(amplitudes));
  }

  std::size_t dim() const { return amps_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  ComplexMatrix projector() const { return ComplexMatrix::outer(amps_, amps_); }

 private:
  std::vector<Complex> amps_;
};

inline PureState kron(const PureState& a, const PureState& b) {
  return PureState::normalized(kron(a.amplitudes(), b.amplitudes()));
}

/// Hermitian, PSD, unit-trace operator on a tensor product of factors.
class DensityMatrix {
 public:
  /// Qubit register: dim must be a power of two.
  explicit DensityMatrix(const ComplexMatrix& m) : DensityMatrix(m, qubit_dims(m.dim())) {}

  DensityMatrix(ComplexMatrix m, std::vector<std::size_t> dims)
      : m_(std::move(m)), dims_(std::move(dims)) {
    std::size_t total = 1;
    for (auto d : dims_) {
      if (d == 0) throw Error("subsystem dimension must be positive");
      total *= d;
    }
    if (total != m_.dim()) throw Error("subsystem dimensions do not multiply to matrix dimension");
    const double herm = m_.hermiticity_residual();
    if (herm > kHermitianTol)
      throw Error("density matrix not Hermitian (residual " + std::to_string(herm) + ")");
    m_ = m_.hermitian_part();
    const double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > kTraceTol)
      throw Error("density matrix trace is " + std::to_string(tr) + ", expected 1");
    const double lo = eig_hermitian(m_).eigenvalues.front();
    if (lo < kPsdTol)
      throw Error("density matrix not PSD (min eigenvalue " + std::to_string(lo) + ")");
  }

  static DensityMatrix from_pure(const PureState& psi) { return DensityMatrix(psi.projector()); }

  static DensityMatrix maximally_mixed(std::size_t n_qubits) {
    const std::size_t d = std::size_t{1} << n_qubits;
    return DensityMatrix(ComplexMatrix::identity(d) * (1.0 / static_cast<double>(d)));
  }

  const ComplexMatrix& matrix() const { return m_; }
  std::size_t dim() const { return m_.dim(); }
  std::span<const std::size_t> dims() const { return dims_; }

  /// Number of factors when every factor is a qubit.
  std::size_t n_qubits() const {
    for (auto d : dims_)
      if (d != 2) throw Error("density matrix is not a pure qubit register");
    return dims_.size();
  }

 private:
  static std::vector<std::size_t> qubit_dims(std::size_t dim) {
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dim) ++n;
    if ((std::size_t{1} << n) != dim || n == 0)
      throw Error("dimension " + std::to_string(dim) + " is not 2^n with n >= 1");
    return std::vector<std::size_t>(n, 2);
  }

  ComplexMatrix m_;
  std::vector<std::size_t> dims_;
};

/// Reduced state on the kept factors, in their original order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::set<std::size_t>& keep) {
  if (keep.empty()) throw Error("cannot trace out all subsystems");
  std::vector<std::size_t> k(keep.begin(), keep.end());
  std::vector<std::size_t> kept_dims;
  for (auto i : k) {
    if (i >= rho.dims().size()) throw Error("subsystem index out of range");
    kept_dims.push_back(rho.dims()[i]);
  }
  auto reduced = partial_trace(rho.matrix(), rho.dims(), k);
  // Renormalise away accumulated rounding so the invariant check is against 1e-10.
  const double tr = reduced.trace().real();
  return DensityMatrix(reduced * (1.0 / tr), std::move(kept_dims));
}

/// <phi|rho|phi>
inline double fidelity_pure(const DensityMatrix& rho, const PureState& phi) {
  if (rho.dim() != phi.dim()) throw Error("fidelity_pure: dimension mismatch");
  const Complex f = expectation(rho.matrix(), phi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

}  // namespace cqt
