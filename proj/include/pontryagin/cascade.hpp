#ifndef PONTRYAGIN_CASCADE_HPP
#define PONTRYAGIN_CASCADE_HPP

#include <string>
#include <vector>

#include "pontryagin/colligation.hpp"

namespace pontryagin {

/// Cascade connection Sigma2 o Sigma1 (Sigma1 acts first). The product state
/// is X1 + X2; `raw` keeps the block coordinates [x1; x2] with metric
/// diag(J1, J2), and `perm` maps them to the canonical coordinates of
/// `product` (canonical = perm * raw).
struct CascadeParts {
  Colligation product;
  BareRealization raw;
  Eigen::VectorXd raw_metric;
  Matrix perm;
  int n1 = 0;
  int n2 = 0;
};

inline CascadeParts cascade_parts(const Colligation& s1, const Colligation& s2) {
  require(s1.output_dim() == s2.input_dim(),
          "cascade: output of the first system must match input of the second");
  const int n1 = s1.state_dim();
  const int n2 = s2.state_dim();
  const int n = n1 + n2;
  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(n1, n1) = s1.A();
  a.bottomLeftCorner(n2, n1) = s2.B() * s1.C();
  a.bottomRightCorner(n2, n2) = s2.A();
  const Matrix b = vstack(s1.B(), s2.B() * s1.D());
  const Matrix c = hstack(s2.D() * s1.C(), s2.C());
  const Matrix d = s2.D() * s1.D();

  CascadeParts out;
  out.n1 = n1;
  out.n2 = n2;
  out.raw = BareRealization(a, b.rows() == n ? b : Matrix(n, d.cols()),
                            c.cols() == n ? c : Matrix(d.rows(), n), d);
  out.raw_metric.resize(n);
  out.raw_metric << s1.state().metric_diagonal(), s2.state().metric_diagonal();
  const auto [sig, perm] = direct_sum(s1.state(), s2.state());
  out.perm = perm;
  const Matrix pt = perm.transpose();
  out.product = Colligation(sig, perm * out.raw.A * pt, perm * out.raw.B,
                            out.raw.C * pt, d);
  return out;
}

inline Colligation cascade(const Colligation& s1, const Colligation& s2) {
  return cascade_parts(s1, s2).product;
}

/// Metric-free cascade in block coordinates [x1; x2].
inline BareRealization cascade(const BareRealization& r1, const BareRealization& r2) {
  require(r1.output_dim() == r2.input_dim(),
          "cascade: output of the first system must match input of the second");
  const int n1 = r1.state_dim();
  const int n2 = r2.state_dim();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = r1.A;
  a.bottomLeftCorner(n2, n1) = r2.B * r1.C;
  a.bottomRightCorner(n2, n2) = r2.A;
  return BareRealization(a, vstack(r1.B, r2.B * r1.D), hstack(r2.D * r1.C, r2.C),
                         r2.D * r1.D);
}

// ---------------------------------------------------------------------------
// Obstructions to observability / controllability of a product

struct ObstructionReport {
  Matrix basis;   // orthonormal solution pairs in raw coordinates [x1; x2]
  Matrix x1;      // first n1 rows of basis
  Matrix x2;      // last n2 rows of basis
  int dimension = 0;
  double agreement = 0.0;  // principal-angle sine between the two methods
  int taylor_orders = 0;
};

namespace detail {

inline Matrix normalized_rows(const std::vector<Matrix>& blocks, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const Matrix& b : blocks) rows += b.rows();
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Matrix& b : blocks) {
    const double nb = b.size() ? spectral_norm(b) : 0.0;
    out.middleRows(r, b.rows()) = nb > 0 ? Matrix(b / nb) : b;
    r += b.rows();
  }
  return out;
}

inline std::vector<Matrix> markov_sequence(const Colligation& s, int count) {
  std::vector<Matrix> h;
  h.reserve(count);
  h.push_back(s.D());
  Matrix x = s.B();
  for (int k = 1; k < count; ++k) {
    h.push_back(s.C() * x);
    x = s.A() * x;
  }
  return h;
}

// Taylor rows of  theta2(z) C1 (I - zA1)^{-1} x1 + C2 (I - zA2)^{-1} x2 = 0.
inline std::vector<Matrix> observability_taylor_rows(const Colligation& s1,
                                                     const Colligation& s2,
                                                     int orders) {
  const int n1 = s1.state_dim();
  const int n2 = s2.state_dim();
  const std::vector<Matrix> h2 = markov_sequence(s2, orders + 1);
  std::vector<Matrix> c1a1{s1.C()};  // C1 A1^k
  std::vector<Matrix> c2a2{s2.C()};
  for (int k = 1; k <= orders; ++k) {
    c1a1.push_back(c1a1.back() * s1.A());
    c2a2.push_back(c2a2.back() * s2.A());
  }
  std::vector<Matrix> rows;
  for (int k = 0; k <= orders; ++k) {
    Matrix left = Matrix::Zero(s2.output_dim(), n1);
    for (int j = 0; j <= k; ++j) left += h2[j] * c1a1[k - j];
    Matrix row(s2.output_dim(), n1 + n2);
    if (n1) row.leftCols(n1) = left;
    if (n2) row.rightCols(n2) = c2a2[k];
    rows.push_back(row);
  }
  return rows;
}

// Taylor rows of  theta1^#(z) B2^[*] (I - zA2^[*])^{-1} x2
//                + B1^[*] (I - zA1^[*])^{-1} x1 = 0.
inline std::vector<Matrix> controllability_taylor_rows(const Colligation& s1,
                                                       const Colligation& s2,
                                                       int orders) {
  const int n1 = s1.state_dim();
  const int n2 = s2.state_dim();
  const std::vector<Matrix> h1 = markov_sequence(s1, orders + 1);
  const Matrix j1 = s1.J();
  const Matrix j2 = s2.J();
  std::vector<Matrix> b1a1{s1.B().adjoint()};  // B1^H (A1^H)^k
  std::vector<Matrix> b2a2{s2.B().adjoint()};
  for (int k = 1; k <= orders; ++k) {
    b1a1.push_back(b1a1.back() * s1.A().adjoint());
    b2a2.push_back(b2a2.back() * s2.A().adjoint());
  }
  std::vector<Matrix> rows;
  for (int k = 0; k <= orders; ++k) {
    Matrix right = Matrix::Zero(s1.input_dim(), n2);
    for (int j = 0; j <= k; ++j) right += h1[j].adjoint() * b2a2[k - j];
    Matrix row(s1.input_dim(), n1 + n2);
    if (n1) row.leftCols(n1) = b1a1[k] * j1;
    if (n2) row.rightCols(n2) = right * j2;
    rows.push_back(row);
  }
  return rows;
}

inline ObstructionReport make_obstruction(const Matrix& primary,
                                          const Matrix& secondary, int n1,
                                          int orders, const char* what) {
  ObstructionReport r;
  r.taylor_orders = orders;
  r.agreement = max_principal_angle_sine(primary, secondary);
  if (r.agreement > 1e-8) {
    throw ConsistencyError(std::string(what) +
                           ": Krylov and Taylor solution spaces disagree "
                           "(dimensions " + std::to_string(primary.cols()) +
                           " vs " + std::to_string(secondary.cols()) +
                           ", sine " + std::to_string(r.agreement) + ")");
  }
  r.basis = primary;
  r.dimension = static_cast<int>(primary.cols());
  r.x1 = primary.topRows(n1);
  r.x2 = primary.bottomRows(primary.rows() - n1);
  return r;
}

inline Matrix null_or_empty(const Matrix& m, Eigen::Index n, double rel_tol) {
  if (n == 0) return Matrix(0, 0);
  return null_space(m, rel_tol);
}

}  // namespace detail

/// Unobservable vectors of Sigma2 o Sigma1, by the Krylov nullspace and,
/// independently, by the Taylor system of theta2 C1 (I-zA1)^{-1} x1 =
/// -C2 (I-zA2)^{-1} x2 through order 2n.
inline ObstructionReport obstruction_observable(const Colligation& s1,
                                                const Colligation& s2,
                                                const Tolerances& tol) {
  const CascadeParts cp = cascade_parts(s1, s2);
  const Eigen::Index n = cp.n1 + cp.n2;
  const Matrix xo = observable_basis(cp.raw, tol.rank_tol);
  const Matrix primary = n ? euclidean_complement(xo, n) : Matrix(0, 0);
  const int orders = 2 * static_cast<int>(n);
  const Matrix rows = detail::normalized_rows(
      detail::observability_taylor_rows(s1, s2, orders), n);
  const Matrix secondary = detail::null_or_empty(rows, n, tol.rank_tol);
  return detail::make_obstruction(primary, secondary, cp.n1, orders,
                                  "obstruction_observable");
}

/// Dual: J-orthogonal complement of the controllable space of the product,
/// checked against the Taylor system of the adjoint equation.
inline ObstructionReport obstruction_controllable(const Colligation& s1,
                                                  const Colligation& s2,
                                                  const Tolerances& tol) {
  const CascadeParts cp = cascade_parts(s1, s2);
  const Eigen::Index n = cp.n1 + cp.n2;
  const Matrix j = cp.raw_metric.cast<cplx>().asDiagonal();
  const Matrix xc = controllable_basis(cp.raw, tol.rank_tol);
  Matrix primary;
  if (n == 0) {
    primary = Matrix(0, 0);
  } else if (xc.cols() == 0) {
    primary = identity(n);
  } else {
    primary = null_space(xc.adjoint() * j, 1e-12);
  }
  const int orders = 2 * static_cast<int>(n);
  const Matrix rows = detail::normalized_rows(
      detail::controllability_taylor_rows(s1, s2, orders), n);
  const Matrix secondary = detail::null_or_empty(rows, n, tol.rank_tol);
  return detail::make_obstruction(primary, secondary, cp.n1, orders,
                                  "obstruction_controllable");
}

/// Non-simple directions: solutions of both equations at once.
inline ObstructionReport obstruction_simple(const Colligation& s1,
                                            const Colligation& s2,
                                            const Tolerances& tol) {
  const CascadeParts cp = cascade_parts(s1, s2);
  const Eigen::Index n = cp.n1 + cp.n2;
  const Matrix j = cp.raw_metric.cast<cplx>().asDiagonal();
  const Matrix xo = observable_basis(cp.raw, tol.rank_tol);
  const Matrix xc = controllable_basis(cp.raw, tol.rank_tol);
  const Matrix constraints = vstack(
      xo.cols() ? Matrix(xo.adjoint()) : Matrix(0, n),
      xc.cols() ? Matrix(xc.adjoint() * j) : Matrix(0, n));
  const Matrix primary = n ? null_space(constraints, 1e-12) : Matrix(0, 0);
  const int orders = 2 * static_cast<int>(n);
  std::vector<Matrix> blocks = detail::observability_taylor_rows(s1, s2, orders);
  for (Matrix& b : detail::controllability_taylor_rows(s1, s2, orders)) {
    blocks.push_back(std::move(b));
  }
  const Matrix secondary = detail::null_or_empty(
      detail::normalized_rows(blocks, n), n, tol.rank_tol);
  return detail::make_obstruction(primary, secondary, cp.n1, orders,
                                  "obstruction_simple");
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_CASCADE_HPP
