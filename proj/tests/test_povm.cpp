#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "cqt/channels.hpp"
#include "cqt/povm.hpp"
#include "cqt/teleport.hpp"
#include "test_support.hpp"

using namespace cqt;

namespace {

DiscriminationInstance make_instance(const std::vector<oracle::Mat>& ops) {
  DiscriminationInstance inst;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    inst.rho_tilde.push_back(oracle::from_eigen(0.5 * (ops[i] + ops[i].adjoint())));
    inst.labels.push_back(std::to_string(i));
  }
  return inst;
}

/// Random ensemble of `n` weighted mixed states on C^d.
std::vector<oracle::Mat> random_ensemble(std::mt19937_64& rng, int n, int d) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = u(rng));
  std::vector<oracle::Mat> out;
  for (int i = 0; i < n; ++i) out.push_back(w[i] / total * oracle::random_density(rng, d, 1 + i % d));
  return out;
}

/// Iterative maximum-likelihood style fixed point for the optimal POVM:
/// M_i <- L^{-1/2} rho_i M_i rho_i L^{-1/2}, L = sum_j rho_j M_j rho_j.
double fixed_point_value(const std::vector<oracle::Mat>& rho, int iters) {
  const int d = static_cast<int>(rho[0].rows());
  std::vector<oracle::Mat> m(rho.size(), oracle::Mat::Identity(d, d) / double(rho.size()));
  for (int it = 0; it < iters; ++it) {
    oracle::Mat l = oracle::Mat::Zero(d, d);
    for (std::size_t i = 0; i < rho.size(); ++i) l += rho[i] * m[i] * rho[i];
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(0.5 * (l + l.adjoint()));
    const oracle::Mat w =
        es.eigenvectors() * es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().cast<oracle::cd>().asDiagonal() *
        es.eigenvectors().adjoint();
    for (std::size_t i = 0; i < rho.size(); ++i) m[i] = w * rho[i] * m[i] * rho[i] * w;
  }
  double v = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) v += (rho[i] * m[i]).trace().real();
  return v;
}

void expect_certified(const DiscriminationInstance& inst, const SolveResult& res, double tol) {
  const auto v = verify_result(inst, res);
  EXPECT_TRUE(v.primal_feasible()) << "completeness " << v.completeness_residual << " min eig "
                                   << v.min_element_eigenvalue;
  EXPECT_TRUE(v.dual_feasible());
  EXPECT_LE(v.gap, tol);
  EXPECT_GE(v.gap, -1e-9);
  EXPECT_NEAR(v.primal_value, res.primal_value, 1e-12);
  EXPECT_NEAR(v.dual_value, res.dual_value, 1e-12);
}

}  // namespace

TEST(Povm, ValidatesElements) {
  EXPECT_NO_THROW(Povm({pauli::i2()}));
  EXPECT_THROW(Povm({pauli::i2(), pauli::i2()}), Error);
  EXPECT_THROW(Povm({pauli::z(), pauli::i2() - pauli::z()}), Error);
  EXPECT_THROW(Povm(std::vector<ComplexMatrix>{}), Error);
  EXPECT_THROW(Povm({pauli::i2(), ComplexMatrix(4)}), Error);
}

TEST(BuildInstance, PhiPlusTimesDerekState) {
  std::mt19937_64 rng(31);
  const auto rd = oracle::random_density(rng, 3);
  const oracle::Mat rho = oracle::kron(oracle::projector(oracle::bell(0, 0)), rd);
  const auto inst = build_instance(DensityMatrix(oracle::from_eigen(rho), {2, 2, 3}), 3);
  ASSERT_EQ(inst.size(), 4u);
  EXPECT_LE(max_abs_diff(inst.rho_tilde[0], oracle::from_eigen(rd)), 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_LE(inst.rho_tilde[i].max_abs(), 1e-12);
  EXPECT_EQ(inst.labels, (std::vector<std::string>{"00", "01", "10", "11"}));
}

TEST(BuildInstance, MatchesProjectionOracle) {
  std::mt19937_64 rng(32);
  const auto rho = oracle::random_density(rng, 16, 5);
  const auto inst = build_instance(DensityMatrix(oracle::from_eigen(rho), {2, 2, 4}), 4);
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    const oracle::Mat op = oracle::kron(oracle::projector(oracle::bell(i >> 1, i & 1)), oracle::Mat::Identity(4, 4));
    const auto expected = oracle::partial_trace(op * rho * op, {4, 4}, {1});
    EXPECT_LE(max_abs_diff(inst.rho_tilde[i], oracle::from_eigen(expected)), 1e-12);
    EXPECT_GE(min_eigenvalue(inst.rho_tilde[i]), -1e-12);
    total += inst.rho_tilde[i].trace().real();
  }
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(BuildInstance, GhzPipelineAtZeroNoise) {
  // Oracle: Charlie's share is traced out of GHZ (x) |d>, so A,B hold
  // (|00><00| + |11><11|)/2 and Derek is in a fixed pure state.
  const auto rho_abd = adversary_state(DensityMatrix::from_pure(make_ghz()));
  const auto inst = build_instance(rho_abd, 8);
  const std::array<double, 4> expected{0.5, 0.5, 0.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(inst.rho_tilde[i].trace().real(), expected[i], 1e-12) << inst.labels[i];
    EXPECT_LE(eig_hermitian(inst.rho_tilde[i].hermitian_part(), 1e300).eigenvalues[6], 1e-12);  // rank <= 1
  }
  EXPECT_LE(max_abs_diff(inst.rho_tilde[0], inst.rho_tilde[1]), 1e-12);
}

TEST(BuildInstance, TracesSumToOneForTotalChannel) {
  const auto inst = build_instance(adversary_state(depolarize_total(make_ghz(), 0.3)), 8);
  double total = 0.0;
  for (const auto& r : inst.rho_tilde) total += r.trace().real();
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(BuildInstance, DimensionMismatch) {
  EXPECT_THROW(build_instance(DensityMatrix::maximally_mixed(3), 4), Error);
  EXPECT_THROW(build_instance(DensityMatrix::maximally_mixed(3), 0), Error);
}

TEST(Solve, HelstromClosedForm) {
  const auto start = std::chrono::steady_clock::now();
  oracle::Mat r0 = oracle::Mat::Zero(2, 2), rp(2, 2);
  r0(0, 0) = 1.0;
  rp << 0.5, 0.5, 0.5, 0.5;
  const auto inst = make_instance({0.5 * r0, 0.5 * rp});
  const auto res = solve_discrimination(inst, 1e-7);
  const double expected = 0.5 * (1.0 + oracle::trace_norm(0.5 * r0 - 0.5 * rp));
  EXPECT_NEAR(expected, 0.5 * (1.0 + 1.0 / std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(res.primal_value, expected, 1e-7);
  expect_certified(inst, res, 1e-7);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5.0);
}

TEST(Solve, HelstromRandomPairs) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + t % 3;
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const double q = u(rng);
    const auto a = oracle::random_density(rng, d, 1 + t % d), b = oracle::random_density(rng, d);
    const auto inst = make_instance({q * a, (1 - q) * b});
    const auto res = solve_discrimination(inst, 1e-7);
    EXPECT_NEAR(res.primal_value, 0.5 * (1.0 + oracle::trace_norm(q * a - (1 - q) * b)), 1e-7);
    expect_certified(inst, res, 1e-7);
  }
}

TEST(Solve, OrthogonalPureStatesAreDiscriminatedPerfectly) {
  oracle::Mat a = oracle::Mat::Zero(2, 2), b = oracle::Mat::Zero(2, 2);
  a(0, 0) = 0.5;
  b(1, 1) = 0.5;
  const auto inst = make_instance({a, b});
  const auto res = solve_discrimination(inst, 1e-7);
  EXPECT_NEAR(res.primal_value, 1.0, 1e-7);
  expect_certified(inst, res, 1e-7);
  // Projective: M_0 close to |0><0|.
  EXPECT_NEAR(res.povm[0](0, 0).real(), 1.0, 1e-6);
  EXPECT_NEAR(res.povm[0](1, 1).real(), 0.0, 1e-6);
}

TEST(Solve, OrthogonalSupportsGiveTotalTrace) {
  std::mt19937_64 rng(34);
  const auto u = oracle::random_unitary(rng, 6);
  std::vector<oracle::Mat> ops;
  const std::array<double, 3> w{0.2, 0.3, 0.5};
  for (int i = 0; i < 3; ++i) {
    oracle::Mat block = oracle::Mat::Zero(6, 6);
    block.block(2 * i, 2 * i, 2, 2) = oracle::random_density(rng, 2);
    ops.push_back(w[i] * u * block * u.adjoint());
  }
  const auto inst = make_instance(ops);
  const auto res = solve_discrimination(inst, 1e-7);
  EXPECT_NEAR(res.primal_value, 1.0, 1e-7);
  expect_certified(inst, res, 1e-7);
}

TEST(Solve, EqualOperatorsGiveTheirTrace) {
  std::mt19937_64 rng(35);
  const auto r = oracle::random_density(rng, 3);
  const auto inst = make_instance({0.25 * r, 0.25 * r, 0.25 * r, 0.25 * r});
  const auto res = solve_discrimination(inst, 1e-7);
  EXPECT_NEAR(res.primal_value, 0.25, 1e-7);
  expect_certified(inst, res, 1e-7);
  // Any feasible POVM attains the same value.
  const auto id = ComplexMatrix::identity(3);
  const Povm other({id * 0.5, id * 0.5, ComplexMatrix(3), ComplexMatrix(3)});
  double v = 0.0;
  for (std::size_t i = 0; i < 4; ++i) v += trace_of_product(inst.rho_tilde[i], other[i]).real();
  EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Solve, ZeroOperatorsGetZeroElements) {
  std::mt19937_64 rng(36);
  const auto a = oracle::random_density(rng, 3, 2), b = oracle::random_density(rng, 3, 2);
  const auto inst = make_instance({0.6 * a, oracle::Mat::Zero(3, 3), 0.4 * b, oracle::Mat::Zero(3, 3)});
  const auto res = solve_discrimination(inst, 1e-7);
  EXPECT_LE(res.povm[1].max_abs(), 1e-15);
  EXPECT_LE(res.povm[3].max_abs(), 1e-15);
  EXPECT_NEAR(res.primal_value, 0.5 * (1.0 + oracle::trace_norm(0.6 * a - 0.4 * b)), 1e-7);
  expect_certified(inst, res, 1e-7);
}

TEST(Solve, RankDeficientMeasuredSpace) {
  std::mt19937_64 rng(37);
  // Supports confined to a 2-dimensional subspace of C^5.
  const auto u = oracle::random_unitary(rng, 5);
  std::vector<oracle::Mat> ops;
  for (double w : {0.3, 0.7}) {
    oracle::Mat block = oracle::Mat::Zero(5, 5);
    block.block(0, 0, 2, 2) = oracle::random_density(rng, 2);
    ops.push_back(w * u * block * u.adjoint());
  }
  const auto inst = make_instance(ops);
  const auto res = solve_discrimination(inst, 1e-7);
  EXPECT_NEAR(res.primal_value, 0.5 * (1.0 + oracle::trace_norm(ops[0] - ops[1])), 1e-7);
  expect_certified(inst, res, 1e-7);
}

TEST(Solve, MatchesFixedPointOracleOnRandomEnsembles) {
  std::mt19937_64 rng(38);
  for (int t = 0; t < 10; ++t) {
    const auto ops = random_ensemble(rng, 4, 3 + t % 4);
    const auto inst = make_instance(ops);
    const auto res = solve_discrimination(inst, 1e-7);
    expect_certified(inst, res, 1e-7);
    const double reference = fixed_point_value(ops, 20000);
    // The fixed point approaches the optimum from below.
    EXPECT_LE(reference, res.dual_value + 1e-9);
    EXPECT_NEAR(res.primal_value, reference, 1e-5);
  }
}

TEST(Solve, UnitaryCovariance) {
  std::mt19937_64 rng(39);
  const auto ops = random_ensemble(rng, 4, 4);
  const auto u = oracle::random_unitary(rng, 4);
  std::vector<oracle::Mat> rotated;
  for (const auto& o : ops) rotated.push_back(u * o * u.adjoint());
  const auto a = solve_discrimination(make_instance(ops), 1e-9);
  const auto b = solve_discrimination(make_instance(rotated), 1e-9);
  EXPECT_NEAR(a.primal_value, b.primal_value, 1e-8);
  // U M U^dagger is optimal for the rotated instance.
  double v = 0.0;
  for (std::size_t i = 0; i < ops.size(); ++i)
    v += (rotated[i] * u * oracle::to_eigen(a.povm[i]) * u.adjoint()).trace().real();
  EXPECT_NEAR(v, b.primal_value, 1e-8);
}

TEST(Solve, InvariantsOnAdversaryInstances) {
  for (auto c : {Channel::total, Channel::qubit})
    for (double p : {0.0, 0.1, 0.45, 0.8, 1.0}) {
      const auto inst = build_instance(adversary_state(depolarize(c, make_ghz(), p)), 8);
      const auto res = solve_discrimination(inst, 1e-7);
      expect_certified(inst, res, 1e-7);
      EXPECT_LE(res.primal_value, 1.0 + 1e-9);
      EXPECT_GE(res.dual_value, res.primal_value - 1e-9);
    }
}

TEST(Solve, RejectsBadArguments) {
  const auto inst = make_instance({oracle::Mat::Identity(2, 2) * 0.5});
  EXPECT_THROW(solve_discrimination(inst, 0.0), Error);
  EXPECT_THROW(solve_discrimination(DiscriminationInstance{}, 1e-7), Error);
}

TEST(Solve, IterationBudgetExhaustedCarriesBestResult) {
  std::mt19937_64 rng(40);
  const auto inst = make_instance(random_ensemble(rng, 4, 6));
  try {
    solve_discrimination(inst, 1e-12, 1);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.best().gap, 1e-12);
    const auto v = verify_result(inst, e.best());
    EXPECT_TRUE(v.primal_feasible());
    EXPECT_TRUE(v.dual_feasible());
  }
}

TEST(Verify, FlagsIncompletePovm) {
  const auto inst = make_instance({oracle::Mat::Identity(2, 2) * 0.25, oracle::Mat::Identity(2, 2) * 0.25});
  const auto two = ComplexMatrix::identity(2);
  const SolveResult bogus{Povm::unchecked({two, two}), 0.0, 0.0, two, 0.0, 0};
  const auto v = verify_result(inst, bogus);
  EXPECT_NEAR(v.completeness_residual, 1.0, 1e-15);
  EXPECT_FALSE(v.primal_feasible());
}

TEST(Verify, ScaledIdentityIsDualFeasible) {
  std::mt19937_64 rng(41);
  const auto ops = random_ensemble(rng, 3, 4);
  const auto inst = make_instance(ops);
  double top = 0.0;
  for (const auto& r : inst.rho_tilde) top = std::max(top, max_eigenvalue(r));
  const auto y = ComplexMatrix::identity(4) * top;
  const auto id = ComplexMatrix::identity(4);
  const SolveResult candidate{Povm({id * 0.2, id * 0.3, id * 0.5}), 0.0, 0.0, y, 0.0, 0};
  const auto v = verify_result(inst, candidate);
  EXPECT_TRUE(v.dual_feasible());
  EXPECT_TRUE(v.primal_feasible());
  EXPECT_GE(v.dual_value, v.primal_value);
}
