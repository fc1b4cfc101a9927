#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cqt/channels.hpp"
#include "cqt/error.hpp"
#include "cqt/matrix.hpp"
#include "cqt/states.hpp"

namespace cqt {

/// Exp(-i theta sigma / 2) for sigma in {y, z}.
inline ComplexMatrix rotation_z(double t) {
  return ComplexMatrix{{std::polar(1.0, -t / 2), 0.0}, {0.0, std::polar(1.0, t / 2)}};
}
inline ComplexMatrix rotation_y(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  return ComplexMatrix{{c, -s}, {s, c}};
}

/// Inputs of the three boxes. Alice's box teleports bloch_state(alice_inputs[j])
/// through her share after rotating that share by alice_frame.
struct SettingsTriple {
  std::array<BlochVector, 2> alice_inputs{BlochVector(0, 0, 1), BlochVector(1, 0, 0)};
  std::array<BlochVector, 2> bob_dirs{BlochVector(0, 0, 1), BlochVector(1, 0, 0)};
  std::array<BlochVector, 2> charlie_dirs{BlochVector(0, 0, 1), BlochVector(1, 0, 0)};
  ComplexMatrix alice_frame = ComplexMatrix::identity(2);
};

/// Outcome +1 maps to slot 0, -1 to slot 1.
inline constexpr std::size_t slot(int outcome) { return outcome == 1 ? 0 : 1; }

inline void require_outcome(int v) {
  if (v != 1 && v != -1) throw Error("outcomes must be +1 or -1");
}
inline void require_setting(int v) {
  if (v != 0 && v != 1) throw Error("settings must be 0 or 1");
}

/// p(alpha, beta, gamma | j, k, l).
class CorrelationTable {
 public:
  double operator()(int alpha, int beta, int gamma, int j, int k, int l) const {
    return p_[index(alpha, beta, gamma, j, k, l)];
  }
  double& at(int alpha, int beta, int gamma, int j, int k, int l) { return p_[index(alpha, beta, gamma, j, k, l)]; }

  static CorrelationTable white_noise() {
    CorrelationTable t;
    t.p_.fill(1.0 / 8.0);
    return t;
  }

  /// lambda a + (1 - lambda) b
  static CorrelationTable mix(const CorrelationTable& a, const CorrelationTable& b, double lambda) {
    CorrelationTable t;
    for (std::size_t i = 0; i < t.p_.size(); ++i) t.p_[i] = lambda * a.p_[i] + (1.0 - lambda) * b.p_[i];
    return t;
  }

  double normalization_error() const {
    double worst = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double s = 0.0;
          for (int a : {1, -1})
            for (int b : {1, -1})
              for (int c : {1, -1}) s += (*this)(a, b, c, j, k, l);
          worst = std::max(worst, std::abs(s - 1.0));
        }
    return worst;
  }

  double min_entry() const { return *std::min_element(p_.begin(), p_.end()); }

  void validate() const {
    if (normalization_error() > 1e-9) throw Error("correlation table conditionals do not sum to 1");
    if (min_entry() < -1e-12) throw Error("correlation table has negative entries");
  }

  /// E(j, k, l) = sum alpha beta gamma p(alpha, beta, gamma | j, k, l)
  double correlator(int j, int k, int l) const {
    double e = 0.0;
    for (int a : {1, -1})
      for (int b : {1, -1})
        for (int c : {1, -1}) e += a * b * c * (*this)(a, b, c, j, k, l);
    return e;
  }

  double alice_marginal(int alpha, int j, int k, int l) const {
    double s = 0.0;
    for (int b : {1, -1})
      for (int c : {1, -1}) s += (*this)(alpha, b, c, j, k, l);
    return s;
  }

  /// sum beta gamma p(beta, gamma | j, alpha, k, l); zero when alpha never occurs.
  double conditioned_correlator(int alpha, int j, int k, int l) const {
    const double pa = alice_marginal(alpha, j, k, l);
    if (pa < 1e-14) return 0.0;
    double s = 0.0;
    for (int b : {1, -1})
      for (int c : {1, -1}) s += b * c * (*this)(alpha, b, c, j, k, l);
    return s / pa;
  }

 private:
  static std::size_t index(int alpha, int beta, int gamma, int j, int k, int l) {
    require_outcome(alpha);
    require_outcome(beta);
    require_outcome(gamma);
    require_setting(j);
    require_setting(k);
    require_setting(l);
    return (((((j * 2 + k) * 2 + l) * 2 + slot(alpha)) * 2 + slot(beta)) * 2) + slot(gamma);
  }

  std::array<double, 64> p_{};
};

/// p(alpha, beta | j, k) for two boxes.
class BipartiteTable {
 public:
  double operator()(int alpha, int beta, int j, int k) const { return p_[index(alpha, beta, j, k)]; }
  double& at(int alpha, int beta, int j, int k) { return p_[index(alpha, beta, j, k)]; }

  double correlator(int j, int k) const {
    double e = 0.0;
    for (int a : {1, -1})
      for (int b : {1, -1}) e += a * b * (*this)(a, b, j, k);
    return e;
  }

 private:
  static std::size_t index(int alpha, int beta, int j, int k) {
    require_outcome(alpha);
    require_outcome(beta);
    require_setting(j);
    require_setting(k);
    return ((j * 2 + k) * 2 + slot(alpha)) * 2 + slot(beta);
  }
  std::array<double, 16> p_{};
};

/// Alice-Bob statistics with Charlie's outcome summed at his setting l.
inline BipartiteTable restrict_ab(const CorrelationTable& t, int l = 0) {
  BipartiteTable out;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int a : {1, -1})
        for (int b : {1, -1}) out.at(a, b, j, k) = t(a, b, 1, j, k, l) + t(a, b, -1, j, k, l);
  return out;
}

/// E(0,0) + E(0,1) + E(1,0) - E(1,1)
inline double chsh_value(const BipartiteTable& t) {
  return t.correlator(0, 0) + t.correlator(0, 1) + t.correlator(1, 0) - t.correlator(1, 1);
}

/// E^{alpha j}_{00} + E^{alpha j}_{01} + E^{alpha j}_{10} - E^{alpha j}_{11}, (k, l) subscripts.
inline double chsh_conditioned(const CorrelationTable& t, int alpha, int j) {
  return t.conditioned_correlator(alpha, j, 0, 0) + t.conditioned_correlator(alpha, j, 0, 1) +
         t.conditioned_correlator(alpha, j, 1, 0) - t.conditioned_correlator(alpha, j, 1, 1);
}

/// E^{alpha j}_{00} - E^{alpha j}_{01} - E^{alpha j}_{10} - E^{alpha j}_{11}
inline double chsh_prime_conditioned(const CorrelationTable& t, int alpha, int j) {
  return t.conditioned_correlator(alpha, j, 0, 0) - t.conditioned_correlator(alpha, j, 0, 1) -
         t.conditioned_correlator(alpha, j, 1, 0) - t.conditioned_correlator(alpha, j, 1, 1);
}

/// Marginal-weighted conditioned CHSH combinations. Alice's marginal is taken
/// per (k, l) term, which keeps S linear for tables where it depends on k.
inline double svetlichny_value(const CorrelationTable& t) {
  static constexpr std::array<std::array<double, 4>, 2> coeff{{{1, 1, 1, -1}, {1, -1, -1, -1}}};
  double s = 0.0;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        for (int a : {1, -1})
          s += coeff[j][k * 2 + l] * a * t.alice_marginal(a, j, k, l) * t.conditioned_correlator(a, j, k, l);
  return s;
}

inline double mermin_value(const CorrelationTable& t) {
  return t.correlator(0, 0, 1) + t.correlator(0, 1, 0) + t.correlator(1, 0, 0) - t.correlator(1, 1, 1);
}

enum class Objective { svetlichny, mermin, chsh };

inline Objective parse_objective(std::string_view name) {
  if (name == "svetlichny") return Objective::svetlichny;
  if (name == "mermin") return Objective::mermin;
  if (name == "chsh") return Objective::chsh;
  throw Error("unknown objective '" + std::string(name) + "'");
}

inline double evaluate(const CorrelationTable& t, Objective o) {
  switch (o) {
    case Objective::svetlichny:
      return svetlichny_value(t);
    case Objective::mermin:
      return mermin_value(t);
    case Objective::chsh:
      return chsh_value(restrict_ab(t));
  }
  return 0.0;
}

namespace detail {

/// Alice's box as a two-outcome POVM on her share: element for alpha at input j.
inline std::array<std::array<ComplexMatrix, 2>, 2> alice_effects(const SettingsTriple& s) {
  std::array<std::array<ComplexMatrix, 2>, 2> out;
  for (int j = 0; j < 2; ++j) {
    const auto input = bloch_state(s.alice_inputs[j]).matrix();
    out[j] = {ComplexMatrix(2), ComplexMatrix(2)};
    for (int c0 = 0; c0 < 2; ++c0)
      for (int c1 = 0; c1 < 2; ++c1) {
        const auto phi = make_bell(c0, c1);
        const int bit = j == 0 ? c0 : c1;
        auto& g = out[j][slot(2 * bit - 1)];
        // Tr(sigma G) is the probability for share state sigma.
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t a2 = 0; a2 < 2; ++a2) {
            Complex acc = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
              for (std::size_t i2 = 0; i2 < 2; ++i2)
                acc += std::conj(phi[i * 2 + a]) * input(i, i2) * phi[i2 * 2 + a2];
            g(a2, a) += acc;
          }
      }
  }
  return out;
}

/// Tr_last(rho (I (x) m)) for a qubit last factor.
inline ComplexMatrix condition_last_qubit(const ComplexMatrix& rho, const ComplexMatrix& m) {
  const std::size_t dr = rho.dim() / 2;
  ComplexMatrix out(dr);
  for (std::size_t i = 0; i < dr; ++i)
    for (std::size_t j = 0; j < dr; ++j)
      out(i, j) = rho(2 * i, 2 * j) * m(0, 0) + rho(2 * i, 2 * j + 1) * m(1, 0) +
                  rho(2 * i + 1, 2 * j) * m(0, 1) + rho(2 * i + 1, 2 * j + 1) * m(1, 1);
  return out;
}

}  // namespace detail

/// Born-rule statistics of the three boxes. Alice's output bit is alpha = 2 s_j - 1
/// where s_j is bit j of her Bell outcome (s0, s1).
inline CorrelationTable correlations_from_state(const DensityMatrix& resource, const SettingsTriple& s) {
  if (resource.dim() != 8) throw Error("resource must be a three-qubit state");
  const auto w = kron(s.alice_frame, ComplexMatrix::identity(4));
  const auto rho = w * resource.matrix() * w.adjoint();
  const auto effects = detail::alice_effects(s);
  CorrelationTable t;
  for (int l = 0; l < 2; ++l)
    for (int c : {1, -1}) {
      const auto r_ab = detail::condition_last_qubit(rho, s.charlie_dirs[l].projector(c));
      for (int k = 0; k < 2; ++k)
        for (int b : {1, -1}) {
          const auto r_a = detail::condition_last_qubit(r_ab, s.bob_dirs[k].projector(b));
          for (int j = 0; j < 2; ++j)
            for (int a : {1, -1})
              t.at(a, b, c, j, k, l) = std::max(0.0, trace_of_product(r_a, effects[j][slot(a)]).real());
        }
    }
  return t;
}

/// Spin measurements along alice_dirs[j] and bob_dirs[k] on a two-qubit state.
inline BipartiteTable spin_correlations(const DensityMatrix& rho_ab, const std::array<BlochVector, 2>& alice_dirs,
                                        const std::array<BlochVector, 2>& bob_dirs) {
  if (rho_ab.dim() != 4) throw Error("spin_correlations needs a two-qubit state");
  BipartiteTable t;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int a : {1, -1})
        for (int b : {1, -1})
          t.at(a, b, j, k) =
              trace_of_product(rho_ab.matrix(), kron(alice_dirs[j].projector(a), bob_dirs[k].projector(b))).real();
  return t;
}

/// Teleportation boxes on a two-qubit resource shared by Alice and Bob.
inline BipartiteTable teleport_box_correlations(const DensityMatrix& rho_ab, const SettingsTriple& s) {
  if (rho_ab.dim() != 4) throw Error("teleport_box_correlations needs a two-qubit state");
  const auto w = kron(s.alice_frame, ComplexMatrix::identity(2));
  const auto rho = w * rho_ab.matrix() * w.adjoint();
  const auto effects = detail::alice_effects(s);
  BipartiteTable t;
  for (int k = 0; k < 2; ++k)
    for (int b : {1, -1}) {
      const auto r_a = detail::condition_last_qubit(rho, s.bob_dirs[k].projector(b));
      for (int j = 0; j < 2; ++j)
        for (int a : {1, -1}) t.at(a, b, j, k) = trace_of_product(r_a, effects[j][slot(a)]).real();
    }
  return t;
}

// ---------------------------------------------------------------------------
// Classical strategies

/// Deterministic responses when Bob's input k is broadcast to Alice and Charlie.
struct BroadcastStrategy {
  std::array<std::array<int, 2>, 2> alpha{};  // alpha[j][k]
  std::array<int, 2> beta{};                  // beta[k]
  std::array<std::array<int, 2>, 2> gamma{};  // gamma[l][k]

  CorrelationTable table() const {
    CorrelationTable t;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) t.at(alpha[j][k], beta[k], gamma[l][k], j, k, l) = 1.0;
    return t;
  }
};

inline int bit_to_outcome(unsigned bits, unsigned pos) { return ((bits >> pos) & 1u) ? -1 : 1; }

inline std::vector<BroadcastStrategy> broadcast_strategies() {
  std::vector<BroadcastStrategy> out;
  out.reserve(1024);
  for (unsigned code = 0; code < 1024; ++code) {
    BroadcastStrategy s;
    for (unsigned j = 0; j < 2; ++j)
      for (unsigned k = 0; k < 2; ++k) {
        s.alpha[j][k] = bit_to_outcome(code, j * 2 + k);
        s.gamma[j][k] = bit_to_outcome(code, 6 + j * 2 + k);
      }
    s.beta = {bit_to_outcome(code, 4), bit_to_outcome(code, 5)};
    out.push_back(s);
  }
  return out;
}

/// Deterministic local responses alpha(j), beta(k), gamma(l).
inline std::vector<CorrelationTable> local_deterministic_tables() {
  std::vector<CorrelationTable> out;
  for (unsigned code = 0; code < 64; ++code) {
    CorrelationTable t;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          t.at(bit_to_outcome(code, j), bit_to_outcome(code, 2 + k), bit_to_outcome(code, 4 + l), j, k, l) = 1.0;
    out.push_back(t);
  }
  return out;
}

/// Largest |objective| over all 1024 deterministic broadcasting strategies.
inline double classical_broadcast_bound(Objective o) {
  double best = 0.0;
  for (const auto& s : broadcast_strategies()) best = std::max(best, std::abs(evaluate(s.table(), o)));
  return best;
}

inline double classical_local_bound(Objective o) {
  double best = 0.0;
  for (const auto& t : local_deterministic_tables()) best = std::max(best, std::abs(evaluate(t, o)));
  return best;
}

/// Mixture curves of a maximally violating GHZ share and classical strategies
/// reaching S = 4.
inline double closed_form_max_s(Channel c, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("p must lie in [0, 1]");
  const double q = c == Channel::total ? 1.0 - p : std::pow(1.0 - p, 3);
  return q * 4.0 * std::numbers::sqrt2 + 4.0 * (1.0 - q);
}

// ---------------------------------------------------------------------------
// Settings search

inline constexpr std::size_t kSettingsParameters = 15;
using SettingsParameters = std::array<double, kSettingsParameters>;

/// Angles (theta, phi) for a0, a1, b0, b1, c0, c1, then Euler angles of the
/// Alice frame Rz Ry Rz.
inline SettingsTriple settings_from_parameters(const SettingsParameters& x) {
  auto dir = [&](std::size_t i) { return BlochVector::from_angles(x[2 * i], x[2 * i + 1]); };
  SettingsTriple s;
  s.alice_inputs = {dir(0), dir(1)};
  s.bob_dirs = {dir(2), dir(3)};
  s.charlie_dirs = {dir(4), dir(5)};
  s.alice_frame = rotation_z(x[12]) * rotation_y(x[13]) * rotation_z(x[14]);
  return s;
}

struct OptimizeResult {
  SettingsTriple settings;
  double value = 0.0;
  std::size_t restart = 0;
};

/// Coordinate ascent from random starts. Every parameter enters the objective as
/// A cos t + B sin t + C, so three evaluations fix the exact maximiser along each
/// coordinate. Ties between restarts go to the lowest index.
inline OptimizeResult optimize_settings(const DensityMatrix& resource, Objective objective, int restarts = 20,
                                        std::uint64_t seed = 42) {
  if (restarts < 1) throw Error("optimize_settings: restarts must be at least 1");
  constexpr int kMaxSweeps = 300;
  constexpr double kSweepTol = 1e-12;
  const double two_pi = 2.0 * std::numbers::pi;
  auto f = [&](const SettingsParameters& x) {
    return evaluate(correlations_from_state(resource, settings_from_parameters(x)), objective);
  };

  OptimizeResult best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ull);
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    SettingsParameters x;
    for (auto& v : x) v = angle(rng);
    double fx = f(x);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      const double start = fx;
      for (std::size_t c = 0; c < kSettingsParameters; ++c) {
        const double t0 = x[c];
        std::array<double, 3> vals{fx, 0.0, 0.0};
        for (int m = 1; m < 3; ++m) {
          auto y = x;
          y[c] = t0 + m * two_pi / 3.0;
          vals[m] = f(y);
        }
        double a = 0.0, b = 0.0;
        for (int m = 0; m < 3; ++m) {
          a += vals[m] * std::cos(m * two_pi / 3.0);
          b += vals[m] * std::sin(m * two_pi / 3.0);
        }
        if (a == 0.0 && b == 0.0) continue;
        auto y = x;
        y[c] = std::remainder(t0 + std::atan2(b, a), two_pi);
        const double fy = f(y);
        if (fy >= fx) {
          x = y;
          fx = fy;
        }
      }
      if (fx - start < kSweepTol) break;
    }
    if (!have || fx > best.value) {
      best = {settings_from_parameters(x), fx, static_cast<std::size_t>(r)};
      have = true;
    }
  }
  return best;
}

}  // namespace cqt
