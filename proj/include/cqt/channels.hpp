#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "cqt/eig.hpp"
#include "cqt/error.hpp"
#include "cqt/matrix.hpp"
#include "cqt/states.hpp"

namespace cqt {

/// Unit vector on the Bloch sphere.
class BlochVector {
 public:
  BlochVector(double x, double y, double z) : x_(x), y_(y), z_(z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (std::abs(n - 1.0) > 1e-10)
      throw Error("Bloch vector is not a unit vector (norm " + std::to_string(n) + ")");
  }

  static BlochVector from_angles(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
  }

  static BlochVector normalized(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n == 0.0) throw Error("cannot normalise a zero Bloch vector");
    return {x / n, y / n, z / n};
  }

  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  std::array<double, 3> components() const { return {x_, y_, z_}; }

  /// a . sigma
  ComplexMatrix sigma() const {
    return ComplexMatrix{{z_, Complex(x_, -y_)}, {Complex(x_, y_), -z_}};
  }

  /// Projector onto the +-1 eigenspace of a . sigma.
  ComplexMatrix projector(int outcome) const {
    if (outcome != 1 && outcome != -1) throw Error("spin outcome must be +1 or -1");
    return (pauli::i2() + sigma() * static_cast<double>(outcome)) * 0.5;
  }

  BlochVector operator-() const { return {-x_, -y_, -z_}; }

 private:
  double x_, y_, z_;
};

/// (|000> + |111>) / sqrt(2)
inline PureState make_ghz() {
  std::vector<Complex> a(8);
  a[0] = a[7] = std::numbers::sqrt2 / 2.0;
  return PureState(std::move(a));
}

/// Bell basis labelled as the sender's two outcome bits:
/// 00: |00>+|11>, 01: |00>-|11>, 10: |01>+|10>, 11: |01>-|10> (all / sqrt 2).
inline PureState make_bell(int c0, int c1) {
  if ((c0 != 0 && c0 != 1) || (c1 != 0 && c1 != 1)) throw Error("Bell labels must be bits");
  const double h = std::numbers::sqrt2 / 2.0;
  const double sign = c1 == 0 ? 1.0 : -1.0;
  std::vector<Complex> a(4);
  if (c0 == 0) {
    a[0] = h;
    a[3] = sign * h;
  } else {
    a[1] = h;
    a[2] = sign * h;
  }
  return PureState(std::move(a));
}

inline PureState make_bell(int index) { return make_bell(index >> 1, index & 1); }

/// (I + a . sigma) / 2
inline DensityMatrix bloch_state(const BlochVector& a) {
  return DensityMatrix((pauli::i2() + a.sigma()) * 0.5);
}

/// Corrective unitaries R_{s0 s1 gamma}, stored as the SU(2) element whose
/// Bloch action is the listed pi rotation. The receiver undoes R with R^dagger.
class CorrectionTable {
 public:
  CorrectionTable() {
    const auto i = pauli::i2(), x = pauli::x(), y = pauli::y(), z = pauli::z();
    set(0, 0, +1, i);
    set(0, 1, +1, z);
    set(1, 0, +1, x);
    set(1, 1, +1, y);
    set(0, 0, -1, z);
    set(0, 1, -1, i);
    set(1, 0, -1, y);
    set(1, 1, -1, x);
  }

  const ComplexMatrix& rotation(int s0, int s1, int gamma) const { return table_[index(s0, s1, gamma)]; }

  /// R^dagger rho R
  ComplexMatrix undo(int s0, int s1, int gamma, const ComplexMatrix& rho) const {
    const auto& r = rotation(s0, s1, gamma);
    return r.adjoint() * rho * r;
  }

 private:
  static std::size_t index(int s0, int s1, int gamma) {
    if ((s0 != 0 && s0 != 1) || (s1 != 0 && s1 != 1)) throw Error("outcome labels must be bits");
    if (gamma != 1 && gamma != -1) throw Error("controller outcome must be +1 or -1");
    return static_cast<std::size_t>((s0 << 2) | (s1 << 1) | (gamma == 1 ? 0 : 1));
  }
  void set(int s0, int s1, int gamma, ComplexMatrix m) { table_[index(s0, s1, gamma)] = std::move(m); }

  std::array<ComplexMatrix, 8> table_;
};

inline CorrectionTable correction_table() { return CorrectionTable{}; }

/// Single-qubit operator acting on `qubit` of an n-qubit register (qubit 0 leftmost).
inline ComplexMatrix embed(const ComplexMatrix& op, std::size_t qubit, std::size_t n_qubits) {
  if (qubit >= n_qubits) throw Error("qubit index out of range");
  ComplexMatrix out = qubit == 0 ? op : pauli::i2();
  for (std::size_t q = 1; q < n_qubits; ++q) out = kron(out, q == qubit ? op : pauli::i2());
  return out;
}

class KrausChannel {
 public:
  explicit KrausChannel(std::vector<ComplexMatrix> ops) : ops_(std::move(ops)) {
    if (ops_.empty()) throw Error("Kraus channel needs at least one operator");
    const std::size_t d = ops_.front().dim();
    ComplexMatrix sum(d);
    for (const auto& e : ops_) {
      if (e.dim() != d) throw Error("Kraus operators must share a dimension");
      sum += e.adjoint() * e;
    }
    if (max_abs_diff(sum, ComplexMatrix::identity(d)) > 1e-9)
      throw Error("Kraus operators are not complete");
  }

  std::span<const ComplexMatrix> operators() const { return ops_; }

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    ComplexMatrix out(rho.dim());
    for (const auto& e : ops_) out += e * rho * e.adjoint();
    return out;
  }

  /// Applies the channel's n-fold tensor power as a sum over all product Kraus operators.
  ComplexMatrix apply_tensor_power(const ComplexMatrix& rho, std::size_t n) const {
    const std::size_t k = ops_.size();
    std::size_t terms = 1;
    for (std::size_t i = 0; i < n; ++i) terms *= k;
    ComplexMatrix out(rho.dim());
    for (std::size_t t = 0; t < terms; ++t) {
      std::size_t rem = t;
      ComplexMatrix e;
      for (std::size_t q = 0; q < n; ++q) {
        const auto& f = ops_[rem % k];
        rem /= k;
        e = q == 0 ? f : kron(e, f);
      }
      out += e * rho * e.adjoint();
    }
    return out;
  }

 private:
  std::vector<ComplexMatrix> ops_;
};

/// Qubit depolarising channel that replaces the state by I/2 with probability p:
/// E0 = sqrt(1 - 3p/4) I, Ei = sqrt(p/4) sigma_i.
inline KrausChannel depolarizing_kraus(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("depolarizing probability must lie in [0, 1]");
  return KrausChannel({pauli::i2() * std::sqrt(1.0 - 0.75 * p), pauli::x() * std::sqrt(p / 4.0),
                       pauli::y() * std::sqrt(p / 4.0), pauli::z() * std::sqrt(p / 4.0)});
}

/// p I/d + (1 - p) |psi><psi|
inline DensityMatrix depolarize_total(const PureState& psi, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("depolarizing probability must lie in [0, 1]");
  const std::size_t d = psi.dim();
  auto m = psi.projector() * (1.0 - p) + ComplexMatrix::identity(d) * (p / static_cast<double>(d));
  return DensityMatrix(m);
}

/// Tr_q(rho) with I/2 re-inserted at position q.
inline ComplexMatrix replace_with_mixed(const ComplexMatrix& rho, std::size_t qubit, std::size_t n_qubits) {
  const std::vector<std::size_t> dims(n_qubits, 2);
  std::vector<std::size_t> keep;
  for (std::size_t q = 0; q < n_qubits; ++q)
    if (q != qubit) keep.push_back(q);
  const std::size_t shift = n_qubits - 1 - qubit;
  const auto drop = [shift](std::size_t i) {
    const std::size_t low = i & ((std::size_t{1} << shift) - 1);
    return ((i >> (shift + 1)) << shift) | low;
  };
  const std::size_t d = rho.dim();
  if (keep.empty()) return ComplexMatrix::identity(2) * (rho.trace() * 0.5);
  const auto reduced = partial_trace(rho, dims, keep);
  ComplexMatrix out(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (((i >> shift) & 1) == ((j >> shift) & 1)) out(i, j) = 0.5 * reduced(drop(i), drop(j));
  return out;
}

/// Each qubit independently replaced by I/2 with probability p.
inline DensityMatrix depolarize_qubit(const PureState& psi, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("depolarizing probability must lie in [0, 1]");
  std::size_t n = 0;
  while ((std::size_t{1} << n) < psi.dim()) ++n;
  if ((std::size_t{1} << n) != psi.dim()) throw Error("depolarize_qubit needs a qubit register");
  ComplexMatrix rho = psi.projector();
  for (std::size_t q = 0; q < n; ++q) rho = rho * (1.0 - p) + replace_with_mixed(rho, q, n) * p;
  return DensityMatrix(rho);
}

/// sum_k sqrt(lambda_k) |L_k>|L_k> over eigenpairs with lambda_k > 1e-12; the
/// ancilla is the second factor with the system's dimension. The largest-magnitude
/// amplitude is made real positive.
inline PureState purify(const DensityMatrix& rho) {
  const auto e = eig_hermitian(rho.matrix());
  const std::size_t d = rho.dim();
  std::vector<Complex> amps(d * d);
  for (std::size_t k = 0; k < d; ++k) {
    const double lam = e.eigenvalues[k];
    if (lam <= 1e-12) continue;
    const double w = std::sqrt(lam);
    for (std::size_t i = 0; i < d; ++i) {
      const Complex vi = e.eigenvectors(i, k) * w;
      if (vi == Complex{}) continue;
      for (std::size_t j = 0; j < d; ++j) amps[i * d + j] += vi * e.eigenvectors(j, k);
    }
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < amps.size(); ++i)
    if (std::abs(amps[i]) > std::abs(amps[arg]) + 1e-14) arg = i;
  const Complex phase = std::conj(amps[arg]) / std::abs(amps[arg]);
  for (auto& a : amps) a *= phase;
  return PureState::normalized(std::move(amps));
}

enum class Channel { total, qubit };

inline std::string to_string(Channel c) { return c == Channel::total ? "total" : "qubit"; }

inline Channel parse_channel(std::string_view name) {
  if (name == "total") return Channel::total;
  if (name == "qubit") return Channel::qubit;
  throw Error("unknown channel '" + std::string(name) + "' (expected total or qubit)");
}

inline DensityMatrix depolarize(Channel c, const PureState& psi, double p) {
  return c == Channel::total ? depolarize_total(psi, p) : depolarize_qubit(psi, p);
}

}  // namespace cqt
