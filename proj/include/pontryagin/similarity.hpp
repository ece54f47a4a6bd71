#ifndef PONTRYAGIN_SIMILARITY_HPP
#define PONTRYAGIN_SIMILARITY_HPP

#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "pontryagin/colligation.hpp"

namespace pontryagin {

enum class SimilarityKind { unitary, weak };

struct SimilarityResult {
  SimilarityKind kind = SimilarityKind::unitary;
  Matrix Z;
  // Intertwining defects: ||Z A1 - A2 Z||, ||Z B1 - B2||, ||C2 Z - C1||, and
  // ||Z^H J2 Z - J1|| (unitary) or the inverse condition estimate (weak).
  double residual_a = 0.0;
  double residual_b = 0.0;
  double residual_c = 0.0;
  double residual_metric = 0.0;
  double condition = 1.0;
  bool invertible = false;
};

struct SimilarityFailure {
  std::string reason;
};

namespace detail {

inline double rel(double value, double scale) {
  return value / std::max(1.0, scale);
}

}  // namespace detail

/// Solves Z A1 = A2 Z, Z B1 = B2, C2 Z = C1 by a vectorized linear system and
/// certifies that the unique solution is J-unitary. Returns nullopt (with a
/// reason when `why` is given) if no certified J-unitary solution exists.
inline std::optional<SimilarityResult> unitary_similarity(
    const Colligation& s1, const Colligation& s2, const Tolerances& tol,
    SimilarityFailure* why = nullptr) {
  auto fail = [&](const std::string& reason) -> std::optional<SimilarityResult> {
    if (why) why->reason = reason;
    return std::nullopt;
  };
  if (s1.state() != s2.state() || s1.input_dim() != s2.input_dim() ||
      s1.output_dim() != s2.output_dim()) {
    return fail("dimensions or signatures differ");
  }
  const double dscale = std::max(1.0, spectral_norm(s1.D()));
  if (spectral_norm(s1.D() - s2.D()) > tol.metric_tol * dscale) {
    return fail("feedthrough operators differ");
  }
  const Eigen::Index n = s1.state_dim();
  const Eigen::Index m = s1.input_dim();
  const Eigen::Index p = s1.output_dim();
  SimilarityResult r;
  r.kind = SimilarityKind::unitary;
  if (n == 0) {
    r.Z = Matrix(0, 0);
    r.invertible = true;
    return r;
  }
  // Column-major vec: vec(Z A1) = (A1^T kron I) vec Z, vec(A2 Z) = (I kron A2)
  // vec Z, vec(Z B1) = (B1^T kron I) vec Z, vec(C2 Z) = (I kron C2) vec Z.
  const Matrix in = identity(n);
  const Eigen::Index rows = n * n + n * m + p * n;
  Matrix k = Matrix::Zero(rows, n * n);
  Vector rhs = Vector::Zero(rows);
  k.topRows(n * n) = Eigen::kroneckerProduct(s1.A().transpose(), in) -
                     Eigen::kroneckerProduct(in, s2.A());
  if (m > 0) {
    k.middleRows(n * n, n * m) = Eigen::kroneckerProduct(s1.B().transpose(), in);
    rhs.segment(n * n, n * m) = s2.B().reshaped();
  }
  if (p > 0) {
    k.bottomRows(p * n) = Eigen::kroneckerProduct(in, s2.C());
    rhs.tail(p * n) = s1.C().reshaped();
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(k);
  cod.setThreshold(tol.rank_tol);
  if (cod.rank() < n * n) {
    return fail("intertwining solution is not unique; realizations are not minimal");
  }
  const Vector vz = cod.solve(rhs);
  r.Z = vz.reshaped(n, n);
  const double sa = std::max(spectral_norm(s1.A()), spectral_norm(s2.A()));
  r.residual_a = detail::rel(spectral_norm(r.Z * s1.A() - s2.A() * r.Z),
                             sa * spectral_norm(r.Z));
  r.residual_b = detail::rel(spectral_norm(r.Z * s1.B() - s2.B()),
                             spectral_norm(s2.B()));
  r.residual_c = detail::rel(spectral_norm(s2.C() * r.Z - s1.C()),
                             spectral_norm(s1.C()));
  r.residual_metric =
      spectral_norm(r.Z.adjoint() * s2.J() * r.Z - s1.J());
  Eigen::JacobiSVD<Matrix> svd(r.Z);
  const auto& sv = svd.singularValues();
  r.condition = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
  r.invertible = sv(sv.size() - 1) > tol.rank_tol * std::max(1.0, sv(0));
  const double lim = tol.metric_tol;
  if (r.residual_a > lim || r.residual_b > lim || r.residual_c > lim) {
    return fail("intertwining equations have no solution within tolerance");
  }
  if (r.residual_metric > lim * std::max(1.0, sv(0) * sv(0))) {
    return fail("intertwining solution is not J-unitary");
  }
  return r;
}

/// Raw Krylov matrix [B, AB, ..., A^{n-1} B].
inline Matrix krylov_matrix(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  Matrix out(n, n * b.cols());
  Matrix x = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.middleCols(k * b.cols(), b.cols()) = x;
    x = a * x;
  }
  return out;
}

/// Weak similarity of two minimal realizations of the same function: Z maps
/// A1^k B1 u to A2^k B2 u.
inline SimilarityResult weak_similarity(const Colligation& s1,
                                        const Colligation& s2,
                                        const Tolerances& tol) {
  require(s1.input_dim() == s2.input_dim() && s1.output_dim() == s2.output_dim(),
          "weak_similarity: input/output dimensions differ");
  const int n1 = s1.state_dim();
  const int n2 = s2.state_dim();
  const int terms = 2 * std::max(n1, n2) + 1;
  for (int k = 0; k < terms; ++k) {
    const Matrix h1 = markov(s1, k);
    const Matrix h2 = markov(s2, k);
    const double scale = std::max(1.0, std::max(h1.norm(), h2.norm()));
    if ((h1 - h2).norm() > tol.metric_tol * scale) {
      throw InputError("weak_similarity: Markov parameters differ at order " +
                       std::to_string(k));
    }
  }
  require(n1 == n2, "weak_similarity: state dimensions differ");
  SimilarityResult r;
  r.kind = SimilarityKind::weak;
  if (n1 == 0) {
    r.Z = Matrix(0, 0);
    r.invertible = true;
    return r;
  }
  const Matrix k1 = krylov_matrix(s1.A(), s1.B());
  const Matrix k2 = krylov_matrix(s2.A(), s2.B());
  if (numerical_rank(k1, tol.rank_tol) < n1 ||
      numerical_rank(k2, tol.rank_tol) < n2) {
    throw InputError("weak_similarity: realizations are not controllable");
  }
  r.Z = k2 * k1.completeOrthogonalDecomposition().pseudoInverse();
  const double sa = std::max(spectral_norm(s1.A()), spectral_norm(s2.A()));
  r.residual_a = detail::rel(spectral_norm(r.Z * s1.A() - s2.A() * r.Z),
                             sa * spectral_norm(r.Z));
  r.residual_b = detail::rel(spectral_norm(r.Z * s1.B() - s2.B()),
                             spectral_norm(s2.B()));
  r.residual_c = detail::rel(spectral_norm(s2.C() * r.Z - s1.C()),
                             spectral_norm(s1.C()));
  Eigen::JacobiSVD<Matrix> svd(r.Z);
  const auto& sv = svd.singularValues();
  r.condition = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
  r.residual_metric = 1.0 / r.condition;
  r.invertible = sv(sv.size() - 1) > tol.rank_tol * std::max(1.0, sv(0));
  return r;
}

// ---------------------------------------------------------------------------
// Realization from Taylor data

namespace detail {

inline Matrix block_hankel(const std::vector<Matrix>& h, int n, int shift) {
  const Eigen::Index p = h[0].rows();
  const Eigen::Index m = h[0].cols();
  Matrix out(n * p, n * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.block(i * p, j * m, p, m) = h[i + j + shift];
    }
  }
  return out;
}

}  // namespace detail

/// Ho-Kalman realization of coefficients h_0 = D, h_k = C A^{k-1} B with an
/// a-priori order bound n; requires at least 2n + 2 coefficients.
inline BareRealization realize_from_taylor(const std::vector<Matrix>& coeffs,
                                           int order_bound,
                                           const Tolerances& tol) {
  require(order_bound >= 0, "realize_from_taylor: order bound must be >= 0");
  require(!coeffs.empty(), "realize_from_taylor: no coefficients");
  const int n = order_bound;
  require(static_cast<int>(coeffs.size()) >= 2 * n + 2,
          "realize_from_taylor: need at least 2n + 2 coefficients");
  const Eigen::Index p = coeffs[0].rows();
  const Eigen::Index m = coeffs[0].cols();
  for (const Matrix& h : coeffs) {
    require(h.rows() == p && h.cols() == m,
            "realize_from_taylor: coefficient shapes differ");
    require_finite(h, "Taylor coefficient");
  }
  if (n == 0) {
    return BareRealization(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), coeffs[0]);
  }
  const Matrix h0 = detail::block_hankel(coeffs, n, 1);
  // Rank of the n x n and (n+1) x (n+1) Hankel matrices built from h_1 on.
  std::vector<Matrix> tail(coeffs.begin() + 1, coeffs.end());
  const Eigen::Index r_n = numerical_rank(detail::block_hankel(tail, n, 0), tol.rank_tol);
  const Eigen::Index r_n1 =
      numerical_rank(detail::block_hankel(tail, n + 1, 0), tol.rank_tol);
  if (r_n != r_n1) {
    throw ConsistencyError(
        "realize_from_taylor: Hankel rank did not stabilize within the order "
        "bound (" + std::to_string(r_n) + " vs " + std::to_string(r_n1) + ")");
  }
  const Matrix h1 = detail::block_hankel(coeffs, n, 2);
  Eigen::BDCSVD<Matrix> svd(h0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index r = r_n;
  if (r == 0) {
    return BareRealization(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), coeffs[0]);
  }
  const Eigen::VectorXd s = svd.singularValues().head(r);
  const Eigen::VectorXd sq = s.cwiseSqrt();
  const Eigen::VectorXd isq = sq.cwiseInverse();
  const Matrix ur = svd.matrixU().leftCols(r);
  const Matrix vr = svd.matrixV().leftCols(r);
  const Matrix obs = ur * sq.cast<cplx>().asDiagonal();
  const Matrix ctr = sq.cast<cplx>().asDiagonal() * vr.adjoint();
  const Matrix a = isq.cast<cplx>().asDiagonal() * ur.adjoint() * h1 * vr *
                   isq.cast<cplx>().asDiagonal();
  BareRealization out(a, ctr.leftCols(m), obs.topRows(p), coeffs[0]);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const Matrix diff = markov(out, static_cast<int>(k)) - coeffs[k];
    const double scale = std::max(1.0, coeffs[k].norm());
    if (diff.norm() > 1e3 * tol.rank_tol * scale * std::max(1.0, s(0))) {
      throw ConsistencyError(
          "realize_from_taylor: realization does not reproduce coefficient " +
          std::to_string(k));
    }
  }
  return out;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_SIMILARITY_HPP
