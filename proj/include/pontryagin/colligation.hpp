#ifndef PONTRYAGIN_COLLIGATION_HPP
#define PONTRYAGIN_COLLIGATION_HPP

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pontryagin/indefinite.hpp"

namespace pontryagin {

/// Metric-free state-space quadruple. theta(z) = D + z C (I - zA)^{-1} B.
struct BareRealization {
  Matrix A, B, C, D;

  BareRealization() = default;
  BareRealization(Matrix a, Matrix b, Matrix c, Matrix d)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
    validate();
  }

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return D.cols(); }
  Eigen::Index output_dim() const { return D.rows(); }

  void validate() const {
    const Eigen::Index n = A.rows();
    require(A.cols() == n, "A must be square");
    require(B.rows() == n && C.cols() == n,
            "B rows and C columns must equal the state dimension");
    require(B.cols() == D.cols() && C.rows() == D.rows(),
            "B/C/D shapes are inconsistent with the input/output dimensions");
    require_finite(A, "A");
    require_finite(B, "B");
    require_finite(C, "C");
    require_finite(D, "D");
  }
};

/// Operator colligation with Pontryagin state space and Hilbert input/output.
/// The state coordinates are canonical: metric diag(I_pos, -I_neg).
class Colligation {
 public:
  Colligation() = default;
  Colligation(SignatureSpace state, Matrix a, Matrix b, Matrix c, Matrix d)
      : state_(state), r_(std::move(a), std::move(b), std::move(c), std::move(d)) {
    require(r_.A.rows() == state_.dim(),
            "A does not act on the declared state space");
  }

  /// A system without state: the constant function D.
  static Colligation feedthrough(const Matrix& d) {
    return Colligation(SignatureSpace(), Matrix(0, 0), Matrix(0, d.cols()),
                       Matrix(d.rows(), 0), d);
  }

  const SignatureSpace& state() const { return state_; }
  int kappa() const { return state_.neg; }
  int state_dim() const { return state_.dim(); }
  int input_dim() const { return static_cast<int>(r_.D.cols()); }
  int output_dim() const { return static_cast<int>(r_.D.rows()); }

  const Matrix& A() const { return r_.A; }
  const Matrix& B() const { return r_.B; }
  const Matrix& C() const { return r_.C; }
  const Matrix& D() const { return r_.D; }
  const BareRealization& bare() const { return r_; }
  Matrix J() const { return state_.metric(); }

 private:
  SignatureSpace state_;
  BareRealization r_;
};

/// System operator T = [[A, B], [C, D]] in block coordinates [x; u] -> [x; y].
/// `dom`/`cod` give the signature counts; `dom_metric`/`cod_metric` give the
/// diagonal metric in the block coordinate order.
struct SystemOperator {
  Matrix T;
  SignatureSpace dom;
  SignatureSpace cod;
  Eigen::VectorXd dom_metric;
  Eigen::VectorXd cod_metric;
};

inline SystemOperator system_operator(const Colligation& s) {
  const int n = s.state_dim();
  const int m = s.input_dim();
  const int p = s.output_dim();
  SystemOperator op;
  op.T.resize(n + p, n + m);
  op.T << s.A(), s.B(), s.C(), s.D();
  op.dom = SignatureSpace(s.state().pos + m, s.state().neg);
  op.cod = SignatureSpace(s.state().pos + p, s.state().neg);
  op.dom_metric.resize(n + m);
  op.dom_metric << s.state().metric_diagonal(), Eigen::VectorXd::Ones(m);
  op.cod_metric.resize(n + p);
  op.cod_metric << s.state().metric_diagonal(), Eigen::VectorXd::Ones(p);
  return op;
}

/// Inverse of system_operator.
inline Colligation from_system_operator(const Matrix& t, SignatureSpace state,
                                        int input_dim, int output_dim) {
  const int n = state.dim();
  require(t.rows() == n + output_dim && t.cols() == n + input_dim,
          "system operator shape does not match the given dimensions");
  return Colligation(state, t.topLeftCorner(n, n),
                     t.topRightCorner(n, input_dim),
                     t.bottomLeftCorner(output_dim, n),
                     t.bottomRightCorner(output_dim, input_dim));
}

// ---------------------------------------------------------------------------
// Transfer functions

inline Matrix transfer_eval(const BareRealization& r, cplx z,
                            const Tolerances& tol = Tolerances{}) {
  const Eigen::Index n = r.state_dim();
  if (z == cplx(0.0) || n == 0) return r.D;
  const Matrix m = identity(n) - z * r.A;
  Eigen::FullPivLU<Matrix> lu(m);
  // rcond alone is scale-free; also compare the smallest pivot with the
  // scale of I - zA.
  const double scale = std::max(1.0, std::abs(z) * r.A.cwiseAbs().maxCoeff());
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (lu.rcond() < tol.rank_tol || min_pivot < tol.rank_tol * scale) {
    const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Matrix>(r.A, false).eigenvalues();
    cplx nearest = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i)) == 0.0) continue;
      const cplx pole = 1.0 / ev(i);
      if (std::abs(pole - z) < best) {
        best = std::abs(pole - z);
        nearest = pole;
      }
    }
    std::ostringstream os;
    os << "transfer_eval: z = " << z << " is too close to the pole " << nearest;
    throw PoleProximityError(os.str(), nearest);
  }
  return r.D + z * r.C * lu.solve(r.B);
}

inline Matrix transfer_eval(const Colligation& s, cplx z,
                            const Tolerances& tol = Tolerances{}) {
  return transfer_eval(s.bare(), z, tol);
}

/// Taylor coefficient of order k at the origin.
inline Matrix markov(const BareRealization& r, int k) {
  require(k >= 0, "markov: order must be non-negative");
  if (k == 0) return r.D;
  Matrix x = r.B;
  for (int i = 1; i < k; ++i) x = r.A * x;
  return r.C * x;
}

inline Matrix markov(const Colligation& s, int k) { return markov(s.bare(), k); }

/// Sigma* = (A^[*], C^[*], B^[*], D^H) with input and output exchanged.
inline Colligation adjoint_system(const Colligation& s) {
  const Matrix j = s.J();
  return Colligation(s.state(), j * s.A().adjoint() * j, j * s.C().adjoint(),
                     s.B().adjoint() * j, s.D().adjoint());
}

/// Metric-free adjoint: its transfer function is theta^#(z) = theta(conj z)^H.
inline BareRealization adjoint_bare(const BareRealization& r) {
  return BareRealization(r.A.adjoint(), r.C.adjoint(), r.B.adjoint(),
                         r.D.adjoint());
}

/// Similarity transform x -> Z x with Z invertible.
inline BareRealization state_change(const BareRealization& r, const Matrix& z) {
  Eigen::FullPivLU<Matrix> lu(z);
  require(lu.isInvertible(), "state_change: transformation is singular");
  const Matrix zi = lu.inverse();
  return BareRealization(z * r.A * zi, z * r.B, r.C * zi, r.D);
}

// ---------------------------------------------------------------------------
// Krylov subspaces

/// Orthonormal basis of span{A^k B}.
inline Matrix controllable_basis(const BareRealization& r, double rel_tol) {
  return krylov_basis(r.A, r.B, rel_tol);
}

/// Orthonormal basis of the Euclidean complement of the unobservable space
/// (the intersection of ker C A^k); equals span{(A^H)^k C^H}.
inline Matrix observable_basis(const BareRealization& r, double rel_tol) {
  return krylov_basis(r.A.adjoint(), r.C.adjoint(), rel_tol);
}

struct KrylovReport {
  IndefiniteSubspace Xc{SignatureSpace(), Matrix(0, 0)};
  IndefiniteSubspace Xo{SignatureSpace(), Matrix(0, 0)};
  IndefiniteSubspace Xs{SignatureSpace(), Matrix(0, 0)};
  IndefiniteSubspace Xc_perp{SignatureSpace(), Matrix(0, 0)};
  IndefiniteSubspace Xo_perp{SignatureSpace(), Matrix(0, 0)};
  IndefiniteSubspace Xs_perp{SignatureSpace(), Matrix(0, 0)};
  SubspaceClass Xc_perp_class = SubspaceClass::zero;
  SubspaceClass Xo_perp_class = SubspaceClass::zero;
  SubspaceClass Xs_perp_class = SubspaceClass::zero;
  bool controllable = false;
  bool observable = false;
  bool simple = false;
  bool minimal() const { return controllable && observable; }
};

namespace detail {

// J-orthogonal complement of span(q) for any q, degenerate or not.
inline IndefiniteSubspace j_perp(const SignatureSpace& sp, const Matrix& q) {
  if (q.cols() == 0) {
    return IndefiniteSubspace::from_orthonormal(sp, identity(sp.dim()));
  }
  return IndefiniteSubspace::from_orthonormal(
      sp, null_space(q.adjoint() * sp.metric(), 1e-12));
}

}  // namespace detail

inline KrylovReport krylov_report(const Colligation& s, const Tolerances& tol) {
  const SignatureSpace& sp = s.state();
  const Matrix j = s.J();
  const Matrix xc = krylov_basis(s.A(), s.B(), tol.rank_tol);
  // span{(A^[*])^k C^[*]} = J span{(A^H)^k C^H}.
  const Matrix xo = column_space(j * observable_basis(s.bare(), tol.rank_tol),
                                 tol.rank_tol);
  const Matrix xs = column_space(hstack(xc, xo), tol.rank_tol);

  KrylovReport r;
  r.Xc = IndefiniteSubspace::from_orthonormal(sp, xc.cols() ? xc : Matrix(sp.dim(), 0));
  r.Xo = IndefiniteSubspace::from_orthonormal(sp, xo.cols() ? xo : Matrix(sp.dim(), 0));
  r.Xs = IndefiniteSubspace::from_orthonormal(sp, xs.cols() ? xs : Matrix(sp.dim(), 0));
  r.Xc_perp = detail::j_perp(sp, xc);
  r.Xo_perp = detail::j_perp(sp, xo);
  r.Xs_perp = detail::j_perp(sp, xs);
  r.Xc_perp_class = subspace_classify(r.Xc_perp, tol);
  r.Xo_perp_class = subspace_classify(r.Xo_perp, tol);
  r.Xs_perp_class = subspace_classify(r.Xs_perp, tol);
  r.controllable = r.Xc.dim() == sp.dim();
  r.observable = r.Xo.dim() == sp.dim();
  r.simple = r.Xs.dim() == sp.dim();
  return r;
}

// ---------------------------------------------------------------------------
// Classification

enum class SystemKind { none, passive, isometric, coisometric, conservative };

inline const char* to_string(SystemKind k) {
  switch (k) {
    case SystemKind::none: return "none";
    case SystemKind::passive: return "passive";
    case SystemKind::isometric: return "isometric";
    case SystemKind::coisometric: return "coisometric";
    case SystemKind::conservative: return "conservative";
  }
  return "none";
}

struct SystemClass {
  SystemKind kind = SystemKind::none;
  MetricReport metric;
  bool controllable = false;
  bool observable = false;
  bool simple = false;
  bool minimal = false;
  // Passive systems have contractive A, [A; C] and [A B] (and J-adjoints).
  bool bicontraction_check = false;

  bool passive() const { return kind != SystemKind::none; }
  bool isometric() const {
    return kind == SystemKind::isometric || kind == SystemKind::conservative;
  }
  bool coisometric() const {
    return kind == SystemKind::coisometric || kind == SystemKind::conservative;
  }
  bool conservative() const { return kind == SystemKind::conservative; }
};

inline SystemClass classify(const Colligation& s, const Tolerances& tol) {
  const SystemOperator op = system_operator(s);
  SystemClass c;
  c.metric = metric_classify(op.T, op.dom_metric, op.cod_metric, tol);
  switch (c.metric.verdict) {
    case MetricClass::unitary: c.kind = SystemKind::conservative; break;
    case MetricClass::isometry: c.kind = SystemKind::isometric; break;
    case MetricClass::coisometry: c.kind = SystemKind::coisometric; break;
    case MetricClass::contraction: c.kind = SystemKind::passive; break;
    case MetricClass::none: c.kind = SystemKind::none; break;
  }
  // A contraction between spaces of equal negative index has a contractive
  // adjoint as well; a failure here means the input is not passive.
  if (c.passive() && !c.metric.dual_contraction) c.kind = SystemKind::none;

  const KrylovReport kr = krylov_report(s, tol);
  c.controllable = kr.controllable;
  c.observable = kr.observable;
  c.simple = kr.simple;
  c.minimal = kr.minimal();

  if (c.passive()) {
    const Eigen::VectorXd jx = s.state().metric_diagonal();
    const int n = s.state_dim();
    Eigen::VectorXd jxy(n + s.output_dim());
    jxy << jx, Eigen::VectorXd::Ones(s.output_dim());
    Eigen::VectorXd jxu(n + s.input_dim());
    jxu << jx, Eigen::VectorXd::Ones(s.input_dim());
    const MetricReport a = metric_classify(s.A(), jx, jx, tol);
    const MetricReport ac = metric_classify(vstack(s.A(), s.C()), jx, jxy, tol);
    const MetricReport ab = metric_classify(hstack(s.A(), s.B()), jxu, jx, tol);
    c.bicontraction_check = a.contraction && a.dual_contraction &&
                            ac.contraction && ab.dual_contraction;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Minimality and poles

/// Kalman reduction: compress to the controllable space, then to the
/// orthogonal complement of the unobservable space.
inline BareRealization minimal_reduction(const BareRealization& r,
                                         const Tolerances& tol) {
  const Matrix qc = controllable_basis(r, tol.rank_tol);
  const Eigen::Index nc = qc.cols();
  BareRealization c(qc.adjoint() * r.A * qc, qc.adjoint() * r.B, r.C * qc, r.D);
  if (nc == 0) return BareRealization(Matrix(0, 0), Matrix(0, r.D.cols()),
                                      Matrix(r.D.rows(), 0), r.D);
  const Matrix qo = observable_basis(c, tol.rank_tol);
  if (qo.cols() == 0) return BareRealization(Matrix(0, 0), Matrix(0, r.D.cols()),
                                             Matrix(r.D.rows(), 0), r.D);
  return BareRealization(qo.adjoint() * c.A * qo, qo.adjoint() * c.B, c.C * qo,
                         c.D);
}

/// Poles of theta in the open unit disc: reciprocals of the eigenvalues of
/// modulus > 1 of the main operator (of a minimal realization for an exact
/// count).
inline std::vector<cplx> disc_poles(const BareRealization& r) {
  std::vector<cplx> poles;
  if (r.state_dim() == 0) return poles;
  const Eigen::VectorXcd ev = eig_general(r.A);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > 1.0) poles.push_back(1.0 / ev(i));
  }
  return poles;
}

/// Number of poles in the disc counted with multiplicity.
inline int pole_multiplicity(const BareRealization& r, const Tolerances& tol) {
  return static_cast<int>(disc_poles(minimal_reduction(r, tol)).size());
}

// ---------------------------------------------------------------------------
// Restrictions and dilations

/// Compression (P_X A|X, P_X B, C|X, D) onto a regular subspace, expressed in
/// a J-orthonormal basis of X with canonical signature.
inline Colligation restriction(const Colligation& s, const IndefiniteSubspace& x,
                               const Tolerances& tol) {
  require(x.ambient() == s.state(), "restriction: subspace lives elsewhere");
  const JOrthonormalBasis jb = j_orthonormal_basis(x, tol);
  const Matrix& v = jb.basis;
  // Coordinates of P_X y in the basis v: J_X v^H J y.
  const Matrix coord = jb.signature.metric() * v.adjoint() * s.J();
  return Colligation(jb.signature, coord * s.A() * v, coord * s.B(),
                     s.C() * v, s.D());
}

struct DilationReport {
  bool is_dilation = false;
  double d_invariance = 0.0;    // ||(I - P_D) A P_D||
  double d_output = 0.0;        // ||C P_D||
  double dstar_invariance = 0.0;  // ||(I - P_D*) A^[*] P_D*||
  double dstar_input = 0.0;     // ||B^[*] P_D*||
  double transfer_residual = 0.0;
  std::string failure;
};

/// Checks that `big` is a dilation of `small` along the decomposition
/// D + X + D_* given by a J-orthonormal frame of the big state space whose
/// columns are [D | X | D_*] with the stated dimensions. The X block must
/// already be the coordinates of `small`.
inline DilationReport is_dilation_of(const Colligation& big,
                                     const Colligation& small,
                                     const Matrix& frame, int dim_d,
                                     int dim_dstar, const Tolerances& tol) {
  const int n = big.state_dim();
  const int nx = small.state_dim();
  require(frame.rows() == n && frame.cols() == n,
          "is_dilation_of: frame must be square of the big state dimension");
  require(dim_d + nx + dim_dstar == n,
          "is_dilation_of: block dimensions do not add up");
  require(big.input_dim() == small.input_dim() &&
              big.output_dim() == small.output_dim(),
          "is_dilation_of: input/output dimensions differ");
  DilationReport rep;
  const Matrix j = big.J();
  const Matrix aj = j * big.A().adjoint() * j;
  const double scale = std::max(1.0, spectral_norm(big.A()));

  auto invariance = [&](const Matrix& a, const Matrix& q) {
    if (q.cols() == 0) return 0.0;
    const IndefiniteSubspace sub(big.state(), q, tol);
    const Matrix p = j_projection(sub, tol);
    return spectral_norm((identity(n) - p) * a * p);
  };
  const Matrix d = frame.leftCols(dim_d);
  const Matrix x = frame.middleCols(dim_d, nx);
  const Matrix dstar = frame.rightCols(dim_dstar);
  rep.d_invariance = invariance(big.A(), d);
  rep.dstar_invariance = invariance(aj, dstar);
  rep.d_output = d.cols() ? spectral_norm(big.C() * d) : 0.0;
  rep.dstar_input = dstar.cols() ? spectral_norm(big.B().adjoint() * j * dstar) : 0.0;

  const double lim = tol.metric_tol * scale;
  if (rep.d_invariance > lim) rep.failure = "A D is not contained in D";
  else if (rep.d_output > lim) rep.failure = "C D is not zero";
  else if (rep.dstar_invariance > lim) rep.failure = "A^[*] D_* is not contained in D_*";
  else if (rep.dstar_input > lim) rep.failure = "B^[*] D_* is not zero";

  // The compression onto X must reproduce the small system.
  if (rep.failure.empty()) {
    const IndefiniteSubspace xs(big.state(), x, tol);
    const Colligation r = restriction(big, xs, tol);
    if (r.state() != small.state()) rep.failure = "signature of X differs";
  }
  if (rep.failure.empty()) {
    const std::vector<cplx> pts = circle_points(tol.disc_samples, 0.1);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const cplx z = pts[k] * (0.3 + 0.6 * static_cast<double>(k % 3) / 2.0);
      const Matrix diff = transfer_eval(big, z, tol) - transfer_eval(small, z, tol);
      rep.transfer_residual = std::max(rep.transfer_residual, spectral_norm(diff));
    }
    if (rep.transfer_residual > 1e-9) rep.failure = "transfer functions differ";
  }
  rep.is_dilation = rep.failure.empty();
  return rep;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_COLLIGATION_HPP
