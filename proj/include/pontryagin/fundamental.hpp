#ifndef PONTRYAGIN_FUNDAMENTAL_HPP
#define PONTRYAGIN_FUNDAMENTAL_HPP

#include <string>
#include <utility>
#include <vector>

#include "pontryagin/cascade.hpp"

namespace pontryagin {

enum class SplitKind { plus_invariant, minus_invariant };

inline const char* to_string(SplitKind k) {
  return k == SplitKind::plus_invariant ? "plus_invariant" : "minus_invariant";
}

/// Fundamental decomposition X = Xplus + Xminus with one part A-invariant.
struct FundamentalSplit {
  SplitKind which;
  IndefiniteSubspace Xplus;
  IndefiniteSubspace Xminus;
  double invariance_residual = 0.0;  // ||(I - P) A P|| / max(1, ||A||)
  double minus_gram_max = 0.0;       // largest eigenvalue of normalized Gram(Xminus)
  double plus_gram_min = 0.0;        // smallest eigenvalue of normalized Gram(Xplus)
};

namespace detail {

inline double max_eigenvalue(const Matrix& h) {
  if (h.rows() == 0) return -1.0;
  return eig_hermitian(h).values.maxCoeff();
}

inline double min_eigenvalue(const Matrix& h) {
  if (h.rows() == 0) return 1.0;
  return eig_hermitian(h).values.minCoeff();
}

inline double invariance_residual(const Matrix& a, const IndefiniteSubspace& x,
                                  const Tolerances& tol) {
  const Matrix p = j_projection(x, tol);
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  return spectral_norm((identity(n) - p) * a * p) / std::max(1.0, spectral_norm(a));
}

// Unimodular eigenvalues are admissible only on a positive generalized
// eigenspace.
inline void require_unimodular_positive(const Matrix& a, const SignatureSpace& sp,
                                        const Tolerances& tol) {
  const IndefiniteSubspace band =
      spectral_subspace(a, sp, SpectralRegion::modulus_one_band, tol);
  if (band.dim() == 0) return;
  if (subspace_classify(band, tol) != SubspaceClass::hilbert) {
    const Eigen::VectorXcd ev = eig_general(a);
    cplx on_circle = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (std::abs(std::abs(ev(i)) - 1.0) <= tol.metric_tol) on_circle = ev(i);
    }
    throw AmbiguityError(
        "fundamental decomposition: unimodular eigenvalue with a non-positive "
        "eigenspace",
        on_circle);
  }
}

// Outside-disc invariant subspace of m, which must be kappa-dimensional
// anti-Hilbert.
inline IndefiniteSubspace outside_part(const Matrix& m, const SignatureSpace& sp,
                                       const Tolerances& tol, const char* what) {
  const double edge = 1.0 + tol.metric_tol;
  const Matrix q = invariant_subspace(m, [edge](cplx l) { return std::abs(l) > edge; });
  IndefiniteSubspace x = IndefiniteSubspace::from_orthonormal(sp, q);
  if (x.dim() != sp.kappa() || !is_antihilbert(subspace_classify(x, tol))) {
    throw InputError(std::string(what) + ": outside-disc spectral subspace has dimension " +
                     std::to_string(x.dim()) + " and class " +
                     to_string(subspace_classify(x, tol)) +
                     "; expected an anti-Hilbert space of dimension " +
                     std::to_string(sp.kappa()));
  }
  return x;
}

inline void require_index_preserving(const Colligation& s, const Tolerances& tol,
                                     const char* what) {
  if (!classify(s, tol).passive()) {
    throw InputError(std::string(what) + ": system is not passive");
  }
  const KrylovReport kr = krylov_report(s, tol);
  if (!is_hilbert(kr.Xs_perp_class)) {
    throw InputError(std::string(what) +
                     ": orthocomplement of the simple subspace is not Hilbert, "
                     "the transfer function has a smaller index than the state space");
  }
}

}  // namespace detail

/// Returns (plus-invariant split X1, minus-invariant split X2): A X1+ in X1+
/// and A X2- in X2-. X2- is the outside-disc spectral subspace of A and X1-
/// that of A^[*].
inline std::pair<FundamentalSplit, FundamentalSplit> invariant_fundamental_decompositions(
    const Colligation& s, const Tolerances& tol) {
  detail::require_index_preserving(s, tol, "invariant_fundamental_decompositions");
  const SignatureSpace& sp = s.state();
  const Matrix j = s.J();
  const Matrix a = s.A();
  const Matrix a_star = j * a.adjoint() * j;
  detail::require_unimodular_positive(a, sp, tol);
  detail::require_unimodular_positive(a_star, sp, tol);

  const IndefiniteSubspace x2_minus =
      detail::outside_part(a, sp, tol, "invariant_fundamental_decompositions");
  const IndefiniteSubspace x1_minus =
      detail::outside_part(a_star, sp, tol, "invariant_fundamental_decompositions");
  const IndefiniteSubspace x2_plus = j_complement(x2_minus, tol);
  const IndefiniteSubspace x1_plus = j_complement(x1_minus, tol);

  auto make = [&](SplitKind which, const IndefiniteSubspace& plus,
                  const IndefiniteSubspace& minus) {
    FundamentalSplit f{which, plus, minus};
    f.invariance_residual = detail::invariance_residual(
        a, which == SplitKind::plus_invariant ? plus : minus, tol);
    f.minus_gram_max = detail::max_eigenvalue(minus.normalized_gram());
    f.plus_gram_min = detail::min_eigenvalue(plus.normalized_gram());
    if (plus.dim() + minus.dim() != sp.dim() ||
        !is_hilbert(subspace_classify(plus, tol))) {
      throw ConsistencyError(
          "invariant_fundamental_decompositions: complement is not a Hilbert space");
    }
    return f;
  };
  return {make(SplitKind::plus_invariant, x1_plus, x1_minus),
          make(SplitKind::minus_invariant, x2_plus, x2_minus)};
}

// ---------------------------------------------------------------------------
// System-level Krein-Langer factorization

enum class FactorMode { right, left };

inline const char* to_string(FactorMode m) {
  return m == FactorMode::right ? "right" : "left";
}

/// right: Sigma ~ Sigma_theta o Sigma_{B^{-1}}  (the Blaschke part acts first)
/// left:  Sigma ~ Sigma_{B^{-1}} o Sigma_theta
struct SystemFactorization {
  FactorMode mode;
  Colligation theta;             // Hilbert state
  Colligation blaschke_inverse;  // anti-Hilbert state of dimension kappa
  Colligation product;           // cascade of the two factors
  Matrix Z;                      // product state = Z * original state
  double residual_a = 0.0;
  double residual_b = 0.0;
  double residual_c = 0.0;
  double residual_metric = 0.0;  // ||Z^H J_product Z - J|| / ||Z||^2
  double block_residual = 0.0;   // off-diagonal block of the adapted A
  double completion_residual = 0.0;
};

namespace detail {

// Rows [C D] completing the top rows [A B] of a J-unitary operator with
// metric diag(-I_k, I_m) on both sides.
inline Matrix complete_rows(const Matrix& top, const Eigen::VectorXd& metric,
                            const Tolerances& tol) {
  const Eigen::Index n = top.cols();
  const Matrix j = metric.cast<cplx>().asDiagonal();
  const Matrix w = top.rows() ? null_space(top * j, tol.rank_tol) : identity(n);
  const Matrix g = hermitian_part(w.adjoint() * j * w);
  const HermitianEigen es = eig_hermitian(g);
  if (es.values.size() && es.values.minCoeff() <= tol.psd_tol) {
    throw ConsistencyError("kl_factorize_system: completion Gram is not positive");
  }
  const Matrix g_inv_sqrt = es.vectors *
                            es.values.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
                            es.vectors.adjoint();
  return (w * g_inv_sqrt).adjoint();
}

inline Eigen::VectorXd signed_metric(int neg, int pos) {
  Eigen::VectorXd d = Eigen::VectorXd::Ones(neg + pos);
  d.head(neg).setConstant(-1.0);
  return d;
}

}  // namespace detail

inline SystemFactorization kl_factorize_system(const Colligation& s, FactorMode mode,
                                               const Tolerances& tol) {
  const SystemClass cls = classify(s, tol);
  const bool ok = cls.conservative() ||
                  (mode == FactorMode::right && cls.coisometric() && cls.observable) ||
                  (mode == FactorMode::left && cls.isometric() && cls.controllable);
  if (!ok) {
    throw InputError(std::string("kl_factorize_system: ") + to_string(mode) +
                     " mode needs a conservative system or " +
                     (mode == FactorMode::right ? "a co-isometric observable"
                                                : "an isometric controllable") +
                     " one");
  }
  const auto [x1, x2] = invariant_fundamental_decompositions(s, tol);
  const int n = s.state_dim();
  const int k = s.kappa();
  const int m = s.input_dim();
  const int p = s.output_dim();
  const Matrix j = s.J();

  // Adapted J-orthonormal basis: the invariant block comes second.
  Matrix q(n, n);
  Eigen::VectorXd jt(n);
  if (mode == FactorMode::right) {
    const Matrix vm = j_orthonormal_basis(x1.Xminus, tol).basis;
    const Matrix vp = j_orthonormal_basis(x1.Xplus, tol).basis;
    q = hstack(vm, vp);
    jt = detail::signed_metric(k, n - k);
  } else {
    const Matrix vp = j_orthonormal_basis(x2.Xplus, tol).basis;
    const Matrix vm = j_orthonormal_basis(x2.Xminus, tol).basis;
    q = hstack(vp, vm);
    jt = -detail::signed_metric(n - k, k);
  }
  const Matrix jt_m = jt.cast<cplx>().asDiagonal();
  const Matrix q_inv = jt_m * q.adjoint() * j;
  const Matrix at = q_inv * s.A() * q;
  const Matrix bt = q_inv * s.B();
  const Matrix ct = s.C() * q;
  const double scale = std::max(1.0, spectral_norm(system_operator(s).T));
  const double cond = n ? spectral_norm(q) * spectral_norm(q_inv) : 1.0;
  if (cond > 1.0 / std::sqrt(tol.rank_tol)) {
    throw ConsistencyError("kl_factorize_system: adapted basis is ill-conditioned");
  }

  const int n1 = mode == FactorMode::right ? k : n - k;  // first block
  const int n2 = n - n1;
  const Matrix a11 = at.topLeftCorner(n1, n1);
  const Matrix a21 = at.bottomLeftCorner(n2, n1);
  const Matrix a22 = at.bottomRightCorner(n2, n2);
  const Matrix b_top = bt.topRows(n1);
  const Matrix b_bot = bt.bottomRows(n2);
  const Matrix c_left = ct.leftCols(n1);
  const Matrix c_right = ct.rightCols(n2);
  SystemFactorization out{mode,
                          Colligation::feedthrough(identity(0)),
                          Colligation::feedthrough(identity(0)),
                          Colligation::feedthrough(identity(0)),
                          Matrix()};
  out.block_residual = n1 && n2 ? spectral_norm(at.topRightCorner(n1, n2)) / scale : 0.0;
  if (out.block_residual > tol.metric_tol * cond) {
    throw ConsistencyError("kl_factorize_system: adapted main operator is not block triangular");
  }

  // M = [[A21, B_bot], [C_left, D]] = [B2; D2] [C1 D1].
  const Matrix big_m = vstack(hstack(a21, b_bot), hstack(c_left, s.D()));
  Colligation first = Colligation::feedthrough(identity(0));
  Colligation second = Colligation::feedthrough(identity(0));
  if (mode == FactorMode::right) {
    const Matrix top = hstack(a11, b_top);
    const Matrix cd1 = detail::complete_rows(top, detail::signed_metric(k, m), tol);
    const LeastSquares ls = solve_least_squares(cd1.adjoint(), big_m.adjoint());
    const Matrix bd2 = ls.solution.adjoint();
    out.completion_residual = ls.residual / std::max(1.0, spectral_norm(big_m));
    first = Colligation(SignatureSpace(0, k), a11, b_top, cd1.leftCols(k), cd1.rightCols(m));
    second = Colligation(SignatureSpace(n - k, 0), a22, bd2.topRows(n - k), c_right,
                         bd2.bottomRows(p));
  } else {
    const Matrix left = vstack(a22, c_right);
    const Matrix bd2 =
        detail::complete_rows(left.adjoint(), detail::signed_metric(k, p), tol).adjoint();
    const LeastSquares ls = solve_least_squares(bd2, big_m);
    const Matrix cd1 = ls.solution;
    out.completion_residual = ls.residual / std::max(1.0, spectral_norm(big_m));
    first = Colligation(SignatureSpace(n - k, 0), a11, b_top, cd1.leftCols(n - k),
                        cd1.rightCols(m));
    second = Colligation(SignatureSpace(0, k), a22, bd2.topRows(k), c_right, bd2.bottomRows(p));
  }
  if (out.completion_residual > tol.metric_tol * cond) {
    throw ConsistencyError("kl_factorize_system: factor equations are inconsistent");
  }
  const CascadeParts cp = cascade_parts(first, second);
  out.product = cp.product;
  out.Z = cp.perm * q_inv;
  const Matrix z_inv = q * cp.perm.transpose();
  const auto rel = [](const Matrix& d, const Matrix& ref) {
    return d.size() ? spectral_norm(d) / std::max(1.0, spectral_norm(ref)) : 0.0;
  };
  out.residual_a = rel(out.Z * s.A() * z_inv - cp.product.A(), s.A());
  out.residual_b = rel(out.Z * s.B() - cp.product.B(), s.B());
  out.residual_c = rel(s.C() * z_inv - cp.product.C(), s.C());
  // Congruence residual scaled by ||Z||^2; the adapted basis is unique up to
  // block unitaries, so its conditioning is intrinsic to the system.
  out.residual_metric =
      n ? spectral_norm(out.Z.adjoint() * cp.product.J() * out.Z - j) /
              std::max(1.0, std::pow(spectral_norm(out.Z), 2))
        : 0.0;
  const double worst =
      std::max({out.residual_a, out.residual_b, out.residual_c, out.residual_metric});
  if (worst > tol.metric_tol * cond) {
    throw ConsistencyError("kl_factorize_system: recovered cascade is not unitarily similar "
                           "to the input");
  }
  if (mode == FactorMode::right) {
    out.blaschke_inverse = first;
    out.theta = second;
  } else {
    out.theta = first;
    out.blaschke_inverse = second;
  }
  const SystemClass bc = classify(out.blaschke_inverse, tol);
  if (!bc.conservative() || !bc.minimal) {
    throw ConsistencyError(
        "kl_factorize_system: Blaschke factor is not minimal conservative");
  }
  if (!classify(out.theta, tol).passive()) {
    throw ConsistencyError("kl_factorize_system: Schur factor is not passive");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability classes

struct StabilityClass {
  double rho_plus = 0.0;       // spectral radius of A on X1+
  double rho_star_plus = 0.0;  // spectral radius of A^[*] on X2+
  bool p0dot = false;
  bool pdot0 = false;
  bool p00 = false;
  bool c0dot = false;
  bool cdot0 = false;
  bool c00 = false;
  bool i0dot = false;
  bool istar_dot0 = false;
  int kappa = 0;

  /// Class names held, most specific first.
  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    const std::string k = std::to_string(kappa);
    if (c00) out.push_back("C^" + k + "_00");
    if (c0dot) out.push_back("C^" + k + "_0.");
    if (cdot0) out.push_back("C^" + k + "_.0");
    if (i0dot) out.push_back("I^" + k + "_0.");
    if (istar_dot0) out.push_back("I*^" + k + "_.0");
    if (p00) out.push_back("P^" + k + "_00");
    if (p0dot) out.push_back("P^" + k + "_0.");
    if (pdot0) out.push_back("P^" + k + "_.0");
    return out;
  }

  std::string primary() const {
    const std::vector<std::string> c = classes();
    return c.empty() ? "none" : c.front();
  }
};

namespace detail {

// Spectral radius of m restricted to the invariant subspace x.
inline double restricted_spectral_radius(const Matrix& m, const IndefiniteSubspace& x) {
  if (x.dim() == 0) return 0.0;
  const Matrix& q = x.orthonormal_basis();
  const Matrix r = q.adjoint() * m * q;
  return eig_general(r).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Finite dimension: a Hilbert-space contraction is in C_0. (and then in
/// C_00) iff its spectral radius is below one.
inline StabilityClass stability_classify(const Colligation& s, const Tolerances& tol) {
  const auto [x1, x2] = invariant_fundamental_decompositions(s, tol);
  const Matrix j = s.J();
  const Matrix a_star = j * s.A().adjoint() * j;
  StabilityClass c;
  c.kappa = s.kappa();
  c.rho_plus = detail::restricted_spectral_radius(s.A(), x1.Xplus);
  c.rho_star_plus = detail::restricted_spectral_radius(a_star, x2.Xplus);
  const double edge = 1.0 - tol.metric_tol;
  c.p0dot = c.rho_plus < edge;
  c.p00 = c.p0dot;
  c.pdot0 = c.rho_star_plus < edge;
  const SystemClass sc = classify(s, tol);
  const bool simple_conservative = sc.conservative() && sc.simple;
  c.c0dot = simple_conservative && c.p0dot;
  c.cdot0 = simple_conservative && c.pdot0;
  c.c00 = simple_conservative && c.p00;
  c.i0dot = sc.isometric() && sc.controllable && c.p0dot;
  c.istar_dot0 = sc.coisometric() && sc.observable && c.pdot0;
  return c;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_FUNDAMENTAL_HPP
