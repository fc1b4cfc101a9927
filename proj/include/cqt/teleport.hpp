#pragma once

#include <array>
#include <optional>
#include <set>
#include <vector>

#include "cqt/channels.hpp"
#include "cqt/error.hpp"
#include "cqt/matrix.hpp"
#include "cqt/povm.hpp"
#include "cqt/states.hpp"

namespace cqt {

/// Branches with smaller probability are dropped before conditioning.
inline constexpr double kBranchCutoff = 1e-14;

struct TeleportOutcome {
  int s0 = 0;
  int s1 = 0;
  std::optional<int> gamma;
  std::optional<std::size_t> delta;
  double probability = 0.0;
  DensityMatrix bob_state = DensityMatrix::maximally_mixed(1);
};

struct FidelityReport {
  double f_c_ne = 0.0;
  double f_nc_e = 0.0;
  double f_nc_guess = 0.0;
  double ecp = 0.0;
  double sdp_gap = 0.0;
  int sdp_iterations = 0;
};

/// Mean of f over the six axial Bloch vectors; exact for quadratic f.
template <class F>
double bloch_average(F&& f) {
  static const std::array<BlochVector, 6> axes{BlochVector(1, 0, 0),  BlochVector(-1, 0, 0),
                                               BlochVector(0, 1, 0),  BlochVector(0, -1, 0),
                                               BlochVector(0, 0, 1),  BlochVector(0, 0, -1)};
  double sum = 0.0;
  for (const auto& a : axes) sum += f(a);
  return sum / 6.0;
}

namespace detail {

/// Tr_last(rho (I (x) m)) with the last factor of dimension m.dim().
inline ComplexMatrix condition_last(const ComplexMatrix& rho, const ComplexMatrix& m) {
  const std::size_t dl = m.dim();
  if (rho.dim() % dl != 0) throw Error("conditioning operator does not match the last factor");
  const std::size_t dr = rho.dim() / dl;
  ComplexMatrix out(dr);
  for (std::size_t i = 0; i < dr; ++i)
    for (std::size_t j = 0; j < dr; ++j) {
      Complex acc = 0.0;
      for (std::size_t c = 0; c < dl; ++c)
        for (std::size_t c2 = 0; c2 < dl; ++c2) acc += rho(i * dl + c, j * dl + c2) * m(c2, c);
      out(i, j) = acc;
    }
  return out;
}

/// Unnormalised receiver states, indexed 2 s0 + s1, after the Bell measurement on
/// input (x) A for a (sub-normalised) two-qubit operator on A,B.
inline std::array<ComplexMatrix, 4> bell_measure(const ComplexMatrix& input, const ComplexMatrix& sigma_ab) {
  std::array<ComplexMatrix, 4> out{ComplexMatrix(2), ComplexMatrix(2), ComplexMatrix(2), ComplexMatrix(2)};
  for (int s = 0; s < 4; ++s) {
    const auto phi = make_bell(s);
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t b2 = 0; b2 < 2; ++b2) {
        Complex acc = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t a = 0; a < 2; ++a) {
            const Complex l = std::conj(phi[i * 2 + a]);
            if (l == Complex{}) continue;
            for (std::size_t i2 = 0; i2 < 2; ++i2)
              for (std::size_t a2 = 0; a2 < 2; ++a2) {
                const Complex r = phi[i2 * 2 + a2];
                if (r == Complex{}) continue;
                acc += l * input(i, i2) * sigma_ab(a * 2 + b, a2 * 2 + b2) * r;
              }
          }
        out[s](b, b2) = acc;
      }
  }
  return out;
}

/// Averages can overshoot [0, 1] by rounding.
inline double clamp_unit(double f) { return std::clamp(f, 0.0, 1.0); }

inline double fidelity_of(const BlochVector& a, const ComplexMatrix& bob) {
  return std::clamp(trace_of_product(bloch_state(a).matrix(), bob).real(), 0.0, 1.0);
}

inline void require_three_qubits(const DensityMatrix& resource) {
  if (resource.dim() != 8) throw Error("resource must be a three-qubit state");
}

}  // namespace detail

/// Controlled protocol for one input: Charlie measures sigma_x, Alice measures in
/// the Bell basis, Bob applies the tabulated correction for (s0, s1, gamma).
inline std::vector<TeleportOutcome> run_controlled(const DensityMatrix& resource, const BlochVector& a,
                                                   const CorrectionTable& corrections = correction_table()) {
  detail::require_three_qubits(resource);
  const auto input = bloch_state(a).matrix();
  const BlochVector x(1, 0, 0);
  std::vector<TeleportOutcome> out;
  for (int gamma : {+1, -1}) {
    const auto sigma = detail::condition_last(resource.matrix(), x.projector(gamma));
    const auto bob = detail::bell_measure(input, sigma);
    for (int s = 0; s < 4; ++s) {
      const double prob = bob[s].trace().real();
      if (prob < kBranchCutoff) continue;
      const int s0 = s >> 1, s1 = s & 1;
      auto corrected = corrections.undo(s0, s1, gamma, bob[s]) * (1.0 / prob);
      out.push_back({s0, s1, gamma, std::nullopt, prob, DensityMatrix(corrected.hermitian_part())});
    }
  }
  return out;
}

inline double fidelity_with_control(const DensityMatrix& resource,
                                    const CorrectionTable& corrections = correction_table()) {
  return detail::clamp_unit(bloch_average([&](const BlochVector& a) {
    double f = 0.0;
    for (const auto& o : run_controlled(resource, a, corrections))
      f += o.probability * detail::fidelity_of(a, o.bob_state.matrix());
    return f;
  }));
}

/// Charlie's outcome is withheld and Bob picks gamma' uniformly at random.
inline double fidelity_no_control_guess(const DensityMatrix& resource,
                                        const CorrectionTable& corrections = correction_table()) {
  return detail::clamp_unit(bloch_average([&](const BlochVector& a) {
    double f = 0.0;
    for (const auto& o : run_controlled(resource, a, corrections))
      for (int guess : {+1, -1}) {
        // Swap Charlie's correction for the guessed one.
        const auto raw = corrections.rotation(o.s0, o.s1, *o.gamma) * o.bob_state.matrix() *
                         corrections.rotation(o.s0, o.s1, *o.gamma).adjoint();
        f += 0.5 * o.probability * detail::fidelity_of(a, corrections.undo(o.s0, o.s1, guess, raw));
      }
    return f;
  }));
}

/// Bob's gamma for each of Derek's outcomes. The default reads outcome i as the
/// Bell label (c0, c1) = (i / 2, i % 2) and takes gamma = (-1)^c1.
inline std::vector<int> bell_label_decoding() { return {+1, -1, +1, -1}; }

/// Uncontrolled protocol assisted by Derek's measurement on his purifying system.
inline std::vector<TeleportOutcome> run_adversarial(const DensityMatrix& rho_abd, const Povm& povm,
                                                    const std::vector<int>& decoding, const BlochVector& a,
                                                    const CorrectionTable& corrections = correction_table()) {
  if (rho_abd.dim() != 4 * povm.dim())
    throw Error("POVM dimension " + std::to_string(povm.dim()) + " does not match Derek's factor of a " +
                std::to_string(rho_abd.dim()) + "-dimensional state");
  if (decoding.size() != povm.size()) throw Error("decoding needs one gamma per POVM outcome");
  const auto input = bloch_state(a).matrix();
  std::vector<TeleportOutcome> out;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const auto sigma = detail::condition_last(rho_abd.matrix(), povm[i]);
    const auto bob = detail::bell_measure(input, sigma);
    for (int s = 0; s < 4; ++s) {
      const double prob = bob[s].trace().real();
      if (prob < kBranchCutoff) continue;
      const int s0 = s >> 1, s1 = s & 1;
      auto corrected = corrections.undo(s0, s1, decoding[i], bob[s]) * (1.0 / prob);
      out.push_back({s0, s1, std::nullopt, i, prob, DensityMatrix(corrected.hermitian_part())});
    }
  }
  return out;
}

inline double fidelity_no_control_adversarial(const DensityMatrix& rho_abd, const Povm& povm,
                                              const std::vector<int>& decoding = bell_label_decoding(),
                                              const CorrectionTable& corrections = correction_table()) {
  return detail::clamp_unit(bloch_average([&](const BlochVector& a) {
    double f = 0.0;
    for (const auto& o : run_adversarial(rho_abd, povm, decoding, a, corrections))
      f += o.probability * detail::fidelity_of(a, o.bob_state.matrix());
    return f;
  }));
}

/// Tr_C of the purified resource, ordered A, B, D with D of dimension 8.
inline DensityMatrix adversary_state(const DensityMatrix& resource) {
  detail::require_three_qubits(resource);
  const auto psi = purify(resource);
  const DensityMatrix full(psi.projector(), {2, 2, 2, 8});
  return partial_trace(full, std::set<std::size_t>{0, 1, 3});
}

struct EcpOptions {
  double sdp_tol = 1e-7;
  int max_iters = 5000;
};

inline FidelityReport ecp_report(Channel channel, double p, const EcpOptions& options = {}) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("p must lie in [0, 1]");
  const auto resource = depolarize(channel, make_ghz(), p);
  FidelityReport rep;
  rep.f_c_ne = fidelity_with_control(resource);
  rep.f_nc_guess = fidelity_no_control_guess(resource);
  const auto rho_abd = adversary_state(resource);
  const auto instance = build_instance(rho_abd, 8);
  const auto sol = solve_discrimination(instance, options.sdp_tol, options.max_iters);
  rep.f_nc_e = fidelity_no_control_adversarial(rho_abd, sol.povm);
  rep.ecp = rep.f_c_ne - rep.f_nc_e;
  rep.sdp_gap = sol.gap;
  rep.sdp_iterations = sol.iterations;
  return rep;
}

}  // namespace cqt
