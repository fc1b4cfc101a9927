#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqt/eig.hpp"
#include "cqt/error.hpp"
#include "cqt/matrix.hpp"
#include "cqt/states.hpp"

namespace cqt {

/// Positive operator-valued measure on one Hilbert space.
class Povm {
 public:
  explicit Povm(std::vector<ComplexMatrix> elements) : elements_(std::move(elements)) {
    check_shape();
    const auto r = residuals();
    if (r.hermiticity > 1e-10) throw Error("POVM element not Hermitian");
    if (r.min_eigenvalue < -1e-9) throw Error("POVM element not PSD");
    if (r.completeness > 1e-9) throw Error("POVM elements do not sum to identity");
  }

  /// No feasibility checks; for diagnostics on candidate measurements.
  static Povm unchecked(std::vector<ComplexMatrix> elements) {
    Povm p;
    p.elements_ = std::move(elements);
    p.check_shape();
    return p;
  }

  struct Residuals {
    double hermiticity = 0.0;     // max over elements of max |M - M^dagger|
    double min_eigenvalue = 0.0;  // min over elements
    double completeness = 0.0;    // max |sum M - I| entry
  };

  Residuals residuals() const {
    Residuals r{0.0, std::numeric_limits<double>::infinity(), 0.0};
    ComplexMatrix sum(dim());
    for (const auto& m : elements_) {
      r.hermiticity = std::max(r.hermiticity, m.hermiticity_residual());
      r.min_eigenvalue = std::min(r.min_eigenvalue, min_eigenvalue(m));
      sum += m;
    }
    r.completeness = max_abs_diff(sum, ComplexMatrix::identity(dim()));
    return r;
  }

  std::size_t size() const { return elements_.size(); }
  std::size_t dim() const { return elements_.front().dim(); }
  const ComplexMatrix& operator[](std::size_t i) const { return elements_[i]; }
  std::span<const ComplexMatrix> elements() const { return elements_; }

 private:
  Povm() = default;
  void check_shape() const {
    if (elements_.empty()) throw Error("POVM needs at least one element");
    for (const auto& m : elements_)
      if (m.dim() != elements_.front().dim()) throw Error("POVM elements must share a dimension");
  }

  std::vector<ComplexMatrix> elements_;
};

/// Weighted operators rho_tilde_i to be discriminated on the measured system.
struct DiscriminationInstance {
  std::vector<ComplexMatrix> rho_tilde;
  std::vector<std::string> labels;

  std::size_t dim() const { return rho_tilde.front().dim(); }
  std::size_t size() const { return rho_tilde.size(); }
};

struct SolveResult {
  Povm povm;
  double primal_value = 0.0;
  double dual_value = 0.0;
  ComplexMatrix dual_certificate;
  double gap = 0.0;
  int iterations = 0;
};

/// Thrown when the solver exhausts its iteration budget; carries the best
/// certified candidate found.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, SolveResult best)
      : NumericalError(what), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

 private:
  SolveResult best_;
};

/// rho_tilde_i = Tr_AB((|phi_i><phi_i| (x) I_D) rho_ABD) for the four Bell states,
/// labelled "00", "01", "10", "11".
inline DiscriminationInstance build_instance(const DensityMatrix& rho_abd, std::size_t derek_dim) {
  if (derek_dim == 0 || rho_abd.dim() != 4 * derek_dim)
    throw Error("build_instance: state dimension " + std::to_string(rho_abd.dim()) +
                " is not 4 x derek_dim = " + std::to_string(4 * derek_dim));
  const auto& rho = rho_abd.matrix();
  DiscriminationInstance inst;
  for (int c0 = 0; c0 < 2; ++c0)
    for (int c1 = 0; c1 < 2; ++c1) {
      // Bell vectors written inline to keep this header independent of channels.hpp.
      const double h = std::sqrt(0.5), sign = c1 == 0 ? 1.0 : -1.0;
      std::array<Complex, 4> phi{};
      if (c0 == 0) {
        phi[0] = h;
        phi[3] = sign * h;
      } else {
        phi[1] = h;
        phi[2] = sign * h;
      }
      // <phi| (x) I_D applied on both sides of rho.
      ComplexMatrix out(derek_dim);
      for (std::size_t d1 = 0; d1 < derek_dim; ++d1)
        for (std::size_t d2 = 0; d2 < derek_dim; ++d2) {
          Complex acc = 0.0;
          for (std::size_t a = 0; a < 4; ++a) {
            if (phi[a] == Complex{}) continue;
            for (std::size_t b = 0; b < 4; ++b) {
              if (phi[b] == Complex{}) continue;
              acc += std::conj(phi[a]) * rho(a * derek_dim + d1, b * derek_dim + d2) * phi[b];
            }
          }
          out(d1, d2) = acc;
        }
      inst.rho_tilde.push_back(out.hermitian_part());
      inst.labels.push_back(std::to_string(c0) + std::to_string(c1));
    }
  return inst;
}

namespace detail {

/// Orthonormal columns spanning a subspace of C^d.
using Basis = std::vector<std::vector<Complex>>;

inline ComplexMatrix compress(const ComplexMatrix& m, const Basis& w) {
  const std::size_t r = w.size(), d = m.dim();
  ComplexMatrix out(r);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < r; ++b) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        Complex row = 0.0;
        for (std::size_t j = 0; j < d; ++j) row += m(i, j) * w[b][j];
        acc += std::conj(w[a][i]) * row;
      }
      out(a, b) = acc;
    }
  return out.hermitian_part();
}

inline ComplexMatrix lift(const ComplexMatrix& m, const Basis& w, std::size_t d) {
  ComplexMatrix out(d);
  for (std::size_t a = 0; a < w.size(); ++a)
    for (std::size_t b = 0; b < w.size(); ++b) {
      const Complex mab = m(a, b);
      for (std::size_t i = 0; i < d; ++i) {
        const Complex wi = w[a][i] * mab;
        for (std::size_t j = 0; j < d; ++j) out(i, j) += wi * std::conj(w[b][j]);
      }
    }
  return out.hermitian_part();
}

/// Real coordinates of a Hermitian matrix: diagonal, then (Re, Im) of each upper entry.
inline std::vector<double> to_coords(const ComplexMatrix& h) {
  const std::size_t n = h.dim();
  std::vector<double> x;
  x.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) x.push_back(h(i, i).real());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      x.push_back(h(i, j).real());
      x.push_back(h(i, j).imag());
    }
  return x;
}

inline ComplexMatrix from_coords(std::span<const double> x, std::size_t n) {
  ComplexMatrix h(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) h(i, i) = x[k++];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      h(i, j) = Complex(x[k], x[k + 1]);
      h(j, i) = Complex(x[k], -x[k + 1]);
      k += 2;
    }
  return h;
}

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == 0.0) throw NumericalError("singular Newton system");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return x;
}

/// Largest t with X + t D still PSD, for positive definite X.
inline double max_step(const ComplexMatrix& x, const ComplexMatrix& d) {
  const auto w = inverse_sqrt(x);
  const double lo = min_eigenvalue(w * d * w);
  return lo >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lo;
}

}  // namespace detail

/// Maximises sum_i Tr(rho_tilde_i M_i) over POVMs {M_i}.
///
/// The measured space is first compressed to the support of sum_i rho_tilde_i and
/// outcomes with rho_tilde_i = 0 are fixed to M_i = 0. On the compressed problem a
/// feasible-start primal-dual path-following method (HKM direction) drives the
/// complementarity sum_i Tr(M_i (Y - rho_tilde_i)) to zero. Every candidate is
/// repaired to exact feasibility before its gap is reported: the POVM is clipped
/// to PSD and renormalised by S^{-1/2} M_i S^{-1/2}, and Y is shifted by
/// max(0, -min_i lambda_min(Y - rho_tilde_i)) I.
inline SolveResult solve_discrimination(const DiscriminationInstance& instance, double tol = 1e-7,
                                        int max_iters = 5000) {
  if (!(tol > 0.0)) throw Error("solve_discrimination: tol must be positive");
  if (instance.rho_tilde.empty()) throw Error("solve_discrimination: empty instance");
  const std::size_t d = instance.dim();
  const std::size_t n_all = instance.size();
  for (const auto& r : instance.rho_tilde)
    if (r.dim() != d) throw Error("solve_discrimination: operators must share a dimension");

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n_all; ++i)
    if (instance.rho_tilde[i].max_abs() > 1e-14) active.push_back(i);

  ComplexMatrix total(d);
  for (auto i : active) total += instance.rho_tilde[i];
  detail::Basis support;
  {
    const auto e = eig_hermitian(total.hermitian_part(), 1e300);
    const double top = std::max(e.eigenvalues.back(), 0.0);
    for (std::size_t k = 0; k < d; ++k)
      if (e.eigenvalues[k] > 1e-11 * std::max(1.0, top)) support.push_back(e.eigenvector(k));
  }
  const std::size_t r = support.size();

  std::vector<ComplexMatrix> c;
  for (auto i : active) c.push_back(detail::compress(instance.rho_tilde[i], support));
  const std::size_t n = c.size();

  // Assemble a full-space candidate from compressed iterates and certify it.
  auto certify = [&](const std::vector<ComplexMatrix>& m_small, const ComplexMatrix& y_small,
                     int iters) {
    std::vector<ComplexMatrix> elems(n_all, ComplexMatrix(d));
    ComplexMatrix complement = ComplexMatrix::identity(d);
    if (r > 0) complement -= detail::lift(ComplexMatrix::identity(r), support, d);
    if (n == 0) {
      elems[0] = ComplexMatrix::identity(d);
    } else {
      std::vector<ComplexMatrix> m;
      ComplexMatrix s(r);
      for (const auto& mi : m_small) {
        m.push_back(clip_to_psd(mi));
        s += m.back();
      }
      const auto norm = inverse_sqrt(s);
      for (std::size_t k = 0; k < n; ++k)
        elems[active[k]] = detail::lift((norm * m[k] * norm).hermitian_part(), support, d);
      elems[active[0]] += complement.hermitian_part();
    }
    ComplexMatrix y = r > 0 ? detail::lift(y_small, support, d) : ComplexMatrix(d);
    double shift = 0.0;
    for (const auto& rt : instance.rho_tilde) shift = std::max(shift, -min_eigenvalue(y - rt));
    y += ComplexMatrix::identity(d) * shift;

    double primal = 0.0;
    for (std::size_t i = 0; i < n_all; ++i)
      primal += trace_of_product(instance.rho_tilde[i], elems[i]).real();
    const double dual = y.trace().real();
    SolveResult res{Povm::unchecked(std::move(elems)), primal, dual, y, dual - primal, iters};
    return res;
  };

  if (n == 0 || r == 0) return certify({}, ComplexMatrix(std::max<std::size_t>(r, 1)), 0);

  const auto id = ComplexMatrix::identity(r);
  std::vector<ComplexMatrix> m(n, id * (1.0 / static_cast<double>(n)));
  double top = 0.0;
  for (const auto& ci : c) top = std::max(top, max_eigenvalue(ci));
  ComplexMatrix y = id * (top + 1.0);

  constexpr double kSigma = 0.1;
  constexpr double kStepFraction = 0.95;
  const std::size_t nvar = r * r;
  std::optional<SolveResult> best;

  for (int it = 0; it < max_iters; ++it) {
    std::vector<ComplexMatrix> z, zinv;
    double gap = 0.0;
    ComplexMatrix rp = id;
    for (std::size_t i = 0; i < n; ++i) {
      z.push_back(y - c[i]);
      zinv.push_back(inverse_psd(z.back()));
      gap += trace_of_product(m[i], z.back()).real();
      rp -= m[i];
    }

    if (gap < 0.25 * tol) {
      auto cand = certify(m, y, it);
      if (!best || cand.gap < best->gap) best = cand;
      if (cand.gap <= tol) return cand;
    }

    const double mu = kSigma * gap / static_cast<double>(n * r);
    ComplexMatrix rhs = rp * -1.0;
    for (std::size_t i = 0; i < n; ++i) rhs += zinv[i] * mu - m[i];

    // Schur operator L(H) = sum_i sym(M_i H Z_i^{-1}) in real coordinates.
    std::vector<double> lmat(nvar * nvar);
    for (std::size_t k = 0; k < nvar; ++k) {
      std::vector<double> e(nvar, 0.0);
      e[k] = 1.0;
      const auto h = detail::from_coords(e, r);
      ComplexMatrix lh(r);
      for (std::size_t i = 0; i < n; ++i) lh += m[i] * h * zinv[i];
      const auto col = detail::to_coords(lh.hermitian_part());
      for (std::size_t row = 0; row < nvar; ++row) lmat[row * nvar + k] = col[row];
    }
    const auto dy = detail::from_coords(detail::solve_dense(std::move(lmat), detail::to_coords(rhs.hermitian_part())), r);

    std::vector<ComplexMatrix> dm;
    double step_p = 1.0 / kStepFraction, step_d = 1.0 / kStepFraction;
    for (std::size_t i = 0; i < n; ++i) {
      dm.push_back((zinv[i] * mu - m[i] - m[i] * dy * zinv[i]).hermitian_part());
      step_p = std::min(step_p, detail::max_step(m[i], dm.back()));
      step_d = std::min(step_d, detail::max_step(z[i], dy));
    }
    step_p *= kStepFraction;
    step_d *= kStepFraction;
    for (std::size_t i = 0; i < n; ++i) m[i] = (m[i] + dm[i] * step_p).hermitian_part();
    y = (y + dy * step_d).hermitian_part();
  }

  auto cand = certify(m, y, max_iters);
  if (!best || cand.gap < best->gap) best = cand;
  if (best->gap <= tol) return *best;
  throw SolverError("solve_discrimination: no certified solution within " + std::to_string(max_iters) +
                        " iterations (gap " + std::to_string(best->gap) + ")",
                    *best);
}

struct VerificationReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double completeness_residual = 0.0;
  double hermiticity_residual = 0.0;
  double min_element_eigenvalue = 0.0;
  /// lambda_min(Y - rho_tilde_i) for each i.
  std::vector<double> dual_min_eigenvalues;

  bool primal_feasible(double tol = 1e-9) const {
    return completeness_residual <= tol && hermiticity_residual <= tol && min_element_eigenvalue >= -tol;
  }
  bool dual_feasible(double tol = 1e-8) const {
    return std::all_of(dual_min_eigenvalues.begin(), dual_min_eigenvalues.end(),
                       [tol](double v) { return v >= -tol; });
  }
};

/// Recomputes every certificate quantity from scratch.
inline VerificationReport verify_result(const DiscriminationInstance& instance, const SolveResult& result) {
  if (result.povm.size() != instance.size() || result.povm.dim() != instance.dim())
    throw Error("verify_result: POVM shape does not match instance");
  VerificationReport rep;
  const auto res = result.povm.residuals();
  rep.completeness_residual = res.completeness;
  rep.hermiticity_residual = res.hermiticity;
  rep.min_element_eigenvalue = res.min_eigenvalue;
  for (std::size_t i = 0; i < instance.size(); ++i) {
    rep.primal_value += trace_of_product(instance.rho_tilde[i], result.povm[i]).real();
    rep.dual_min_eigenvalues.push_back(min_eigenvalue(result.dual_certificate - instance.rho_tilde[i]));
  }
  rep.dual_value = result.dual_certificate.trace().real();
  rep.gap = rep.dual_value - rep.primal_value;
  return rep;
}

}  // namespace cqt
