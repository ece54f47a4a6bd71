#ifndef PONTRYAGIN_INDEFINITE_HPP
#define PONTRYAGIN_INDEFINITE_HPP

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pontryagin/linalg.hpp"

namespace pontryagin {

/// Finite-dimensional Pontryagin space in a fundamental basis: the first
/// `pos` coordinates carry metric +1 and the last `neg` carry -1.
struct SignatureSpace {
  int pos = 0;
  int neg = 0;

  SignatureSpace() = default;
  SignatureSpace(int p, int n) : pos(p), neg(n) {
    require(p >= 0 && n >= 0, "signature counts must be non-negative");
  }

  static SignatureSpace hilbert(int n) { return SignatureSpace(n, 0); }

  int dim() const { return pos + neg; }
  int kappa() const { return neg; }

  Eigen::VectorXd metric_diagonal() const {
    Eigen::VectorXd d(dim());
    d.head(pos).setOnes();
    d.tail(neg).setConstant(-1.0);
    return d;
  }

  Matrix metric() const {
    return metric_diagonal().cast<cplx>().asDiagonal();
  }

  bool operator==(const SignatureSpace& other) const {
    return pos == other.pos && neg == other.neg;
  }
  bool operator!=(const SignatureSpace& other) const {
    return !(*this == other);
  }
};

/// Orthogonal sum with the positive coordinates of both summands first. The
/// returned permutation maps the naive concatenation [x_a; x_b] to canonical
/// coordinates: canonical = perm * naive.
inline std::pair<SignatureSpace, Matrix> direct_sum(const SignatureSpace& a,
                                                    const SignatureSpace& b) {
  const int n = a.dim() + b.dim();
  Matrix perm = Matrix::Zero(n, n);
  int row = 0;
  for (int i = 0; i < a.pos; ++i) perm(row++, i) = 1.0;
  for (int i = 0; i < b.pos; ++i) perm(row++, a.dim() + i) = 1.0;
  for (int i = 0; i < a.neg; ++i) perm(row++, a.pos + i) = 1.0;
  for (int i = 0; i < b.neg; ++i) perm(row++, a.dim() + b.pos + i) = 1.0;
  return {SignatureSpace(a.pos + b.pos, a.neg + b.neg), perm};
}

/// [x, y] = y^H J x.
inline cplx j_inner(const Vector& x, const Vector& y, const SignatureSpace& sp) {
  require(x.size() == sp.dim() && y.size() == sp.dim(),
          "j_inner: vector length does not match the space dimension");
  const Eigen::VectorXd d = sp.metric_diagonal();
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    acc += std::conj(y(i)) * d(i) * x(i);
  }
  return acc;
}

/// Adjoint with respect to the indefinite metrics: J_dom M^H J_cod.
inline Matrix j_adjoint(const Matrix& m, const SignatureSpace& dom,
                        const SignatureSpace& cod) {
  require(m.rows() == cod.dim() && m.cols() == dom.dim(),
          "j_adjoint: matrix shape does not match domain/codomain");
  const Eigen::VectorXd jd = dom.metric_diagonal();
  const Eigen::VectorXd jc = cod.metric_diagonal();
  Matrix out = m.adjoint();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= jd(i);
  for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) *= jc(j);
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian spectra and inertia

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;
};

inline void require_hermitian(const Matrix& h, const std::string& name) {
  require(h.rows() == h.cols(), name + " must be square");
  require_finite(h, name);
  const double scale = std::max(1.0, h.norm());
  if ((h - h.adjoint()).norm() > 1e-12 * scale) {
    throw InputError(name + " is not Hermitian within tolerance");
  }
}

inline HermitianEigen eig_hermitian(const Matrix& h) {
  require_hermitian(h, "eig_hermitian input");
  HermitianEigen out;
  if (h.rows() == 0) {
    out.values = Eigen::VectorXd(0);
    out.vectors = Matrix(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

struct Inertia {
  int plus = 0;
  int zero = 0;
  int minus = 0;
  bool operator==(const Inertia& o) const {
    return plus == o.plus && zero == o.zero && minus == o.minus;
  }
};

inline std::string to_string(const Inertia& in) {
  std::ostringstream os;
  os << "(" << in.plus << "," << in.zero << "," << in.minus << ")";
  return os.str();
}

/// Eigenvalue sign counts with the band +-psd_tol * max(1, ||H||) as zero.
inline Inertia inertia(const Matrix& h, const Tolerances& tol) {
  const HermitianEigen es = eig_hermitian(h);
  Inertia out;
  if (es.values.size() == 0) return out;
  const double scale =
      std::max(1.0, std::max(std::abs(es.values(0)),
                             std::abs(es.values(es.values.size() - 1))));
  const double band = tol.psd_tol * scale;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) > band) {
      ++out.plus;
    } else if (es.values(i) < -band) {
      ++out.minus;
    } else {
      ++out.zero;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operators between Pontryagin spaces

enum class MetricClass { none, contraction, isometry, coisometry, unitary };

inline const char* to_string(MetricClass c) {
  switch (c) {
    case MetricClass::none: return "none";
    case MetricClass::contraction: return "contraction";
    case MetricClass::isometry: return "isometry";
    case MetricClass::coisometry: return "coisometry";
    case MetricClass::unitary: return "unitary";
  }
  return "none";
}

struct MetricReport {
  MetricClass verdict = MetricClass::none;
  bool contraction = false;
  bool dual_contraction = false;       // the J-adjoint is a contraction
  bool isometry = false;
  bool coisometry = false;
  double defect_min_eigenvalue = 0.0;  // of J_dom - M^H J_cod M
  double dual_min_eigenvalue = 0.0;    // of J_cod - M J_dom M^H
  double isometry_residual = 0.0;      // ||J_dom - M^H J_cod M||
  double coisometry_residual = 0.0;    // ||J_cod - M J_dom M^H||
};

/// Classification against arbitrary diagonal +-1 metrics, for operators whose
/// coordinates are in block order rather than canonical order.
inline MetricReport metric_classify(const Matrix& m,
                                    const Eigen::VectorXd& dom_metric,
                                    const Eigen::VectorXd& cod_metric,
                                    const Tolerances& tol) {
  require(m.rows() == cod_metric.size() && m.cols() == dom_metric.size(),
          "metric_classify: matrix shape does not match domain/codomain");
  require_finite(m, "metric_classify input");
  const Matrix jd = dom_metric.cast<cplx>().asDiagonal();
  const Matrix jc = cod_metric.cast<cplx>().asDiagonal();
  const Matrix defect = hermitian_part(jd - m.adjoint() * jc * m);
  const Matrix dual = hermitian_part(jc - m * jd * m.adjoint());
  const double norm_m = spectral_norm(m);
  const double scale = std::max(1.0, norm_m * norm_m);

  MetricReport r;
  r.isometry_residual = spectral_norm(defect);
  r.coisometry_residual = spectral_norm(dual);
  if (defect.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(defect, Eigen::EigenvaluesOnly);
    r.defect_min_eigenvalue = es.eigenvalues()(0);
  }
  if (dual.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(dual, Eigen::EigenvaluesOnly);
    r.dual_min_eigenvalue = es.eigenvalues()(0);
  }
  r.isometry = r.isometry_residual <= tol.metric_tol * scale;
  r.coisometry = r.coisometry_residual <= tol.metric_tol * scale;
  r.contraction = r.isometry || r.defect_min_eigenvalue >= -tol.psd_tol * scale;
  r.dual_contraction =
      r.coisometry || r.dual_min_eigenvalue >= -tol.psd_tol * scale;

  if (r.isometry && r.coisometry) {
    r.verdict = MetricClass::unitary;
  } else if (r.isometry) {
    r.verdict = MetricClass::isometry;
  } else if (r.coisometry) {
    r.verdict = MetricClass::coisometry;
  } else if (r.contraction) {
    r.verdict = MetricClass::contraction;
  }
  return r;
}

inline MetricReport metric_classify(const Matrix& m, const SignatureSpace& dom,
                                    const SignatureSpace& cod,
                                    const Tolerances& tol) {
  require(m.rows() == cod.dim() && m.cols() == dom.dim(),
          "metric_classify: matrix shape does not match domain/codomain");
  return metric_classify(m, dom.metric_diagonal(), cod.metric_diagonal(), tol);
}

// ---------------------------------------------------------------------------
// Subspaces

class IndefiniteSubspace {
 public:
  IndefiniteSubspace(SignatureSpace ambient, Matrix basis,
                     const Tolerances& tol = Tolerances{})
      : ambient_(ambient), basis_(std::move(basis)) {
    require(basis_.rows() == ambient_.dim(),
            "subspace basis rows must equal the ambient dimension");
    require_finite(basis_, "subspace basis");
    if (basis_.cols() > 0) {
      orthonormal_ = column_space(basis_, tol.rank_tol);
      require(orthonormal_.cols() == basis_.cols(),
              "subspace basis is not of full column rank");
    } else {
      orthonormal_ = Matrix(ambient_.dim(), 0);
    }
  }

  /// Subspace given by an orthonormal basis computed elsewhere.
  static IndefiniteSubspace from_orthonormal(SignatureSpace ambient,
                                             const Matrix& q) {
    IndefiniteSubspace s(ambient);
    s.basis_ = q;
    s.orthonormal_ = q;
    return s;
  }

  const SignatureSpace& ambient() const { return ambient_; }
  const Matrix& basis() const { return basis_; }
  const Matrix& orthonormal_basis() const { return orthonormal_; }
  int dim() const { return static_cast<int>(basis_.cols()); }

  /// Gram matrix basis^H J basis of the caller's basis.
  Matrix gram() const {
    return hermitian_part(basis_.adjoint() * ambient_.metric() * basis_);
  }

  /// Gram matrix of the Euclidean-orthonormal basis (spectrum in [-1, 1]).
  Matrix normalized_gram() const {
    return hermitian_part(orthonormal_.adjoint() * ambient_.metric() *
                          orthonormal_);
  }

 private:
  explicit IndefiniteSubspace(SignatureSpace ambient) : ambient_(ambient) {}

  SignatureSpace ambient_;
  Matrix basis_;
  Matrix orthonormal_;
};

enum class SubspaceClass { zero, hilbert, antihilbert, regular, degenerate };

inline const char* to_string(SubspaceClass c) {
  switch (c) {
    case SubspaceClass::zero: return "zero";
    case SubspaceClass::hilbert: return "hilbert";
    case SubspaceClass::antihilbert: return "antihilbert";
    case SubspaceClass::regular: return "regular";
    case SubspaceClass::degenerate: return "degenerate";
  }
  return "degenerate";
}

/// The zero subspace counts as both Hilbert and anti-Hilbert.
inline bool is_hilbert(SubspaceClass c) {
  return c == SubspaceClass::zero || c == SubspaceClass::hilbert;
}
inline bool is_antihilbert(SubspaceClass c) {
  return c == SubspaceClass::zero || c == SubspaceClass::antihilbert;
}
inline bool is_nondegenerate(SubspaceClass c) {
  return c != SubspaceClass::degenerate;
}

inline SubspaceClass subspace_classify(const IndefiniteSubspace& s,
                                       const Tolerances& tol) {
  if (s.dim() == 0) return SubspaceClass::zero;
  const Inertia in = inertia(s.normalized_gram(), tol);
  if (in.zero > 0) return SubspaceClass::degenerate;
  if (in.minus == 0) return SubspaceClass::hilbert;
  if (in.plus == 0) return SubspaceClass::antihilbert;
  return SubspaceClass::regular;
}

inline void require_regular(const IndefiniteSubspace& s, const Tolerances& tol,
                            const std::string& what) {
  if (subspace_classify(s, tol) == SubspaceClass::degenerate) {
    throw DegenerateSubspaceError(what + ": subspace is degenerate");
  }
}

/// J-orthogonal projection onto a regular subspace.
inline Matrix j_projection(const IndefiniteSubspace& s,
                           const Tolerances& tol = Tolerances{}) {
  require_regular(s, tol, "j_projection");
  const Matrix& q = s.orthonormal_basis();
  const Matrix j = s.ambient().metric();
  if (q.cols() == 0) return Matrix::Zero(j.rows(), j.cols());
  const Matrix g = s.normalized_gram();
  return q * g.lu().solve(q.adjoint() * j);
}

/// J-orthogonal complement of a regular subspace.
inline IndefiniteSubspace j_complement(const IndefiniteSubspace& s,
                                       const Tolerances& tol = Tolerances{}) {
  require_regular(s, tol, "j_complement");
  const int n = s.ambient().dim();
  if (s.dim() == 0) {
    return IndefiniteSubspace::from_orthonormal(s.ambient(), identity(n));
  }
  const Matrix constraint = s.orthonormal_basis().adjoint() * s.ambient().metric();
  Matrix q = null_space(constraint, 1e-12);
  return IndefiniteSubspace::from_orthonormal(s.ambient(), q);
}

/// Basis of a regular subspace whose Gram matrix is the canonical
/// diag(I_pos, -I_neg), together with that signature.
struct JOrthonormalBasis {
  Matrix basis;
  SignatureSpace signature;
};

inline JOrthonormalBasis j_orthonormal_basis(const IndefiniteSubspace& s,
                                             const Tolerances& tol) {
  require_regular(s, tol, "j_orthonormal_basis");
  const Matrix& q = s.orthonormal_basis();
  if (q.cols() == 0) return {Matrix(s.ambient().dim(), 0), SignatureSpace()};
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.normalized_gram());
  const Eigen::VectorXd& vals = es.eigenvalues();
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = vals.size() - 1; i >= 0; --i) {
    if (vals(i) > 0) order.push_back(i);
  }
  const int pos = static_cast<int>(order.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) <= 0) order.push_back(i);
  }
  Matrix basis(q.rows(), q.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Eigen::Index i = order[k];
    basis.col(static_cast<Eigen::Index>(k)) =
        q * es.eigenvectors().col(i) / std::sqrt(std::abs(vals(i)));
  }
  return {basis, SignatureSpace(pos, static_cast<int>(q.cols()) - pos)};
}

// ---------------------------------------------------------------------------
// Positive semidefinite factorization

/// E with E E^H = M, full column rank equal to the numerical rank of M.
/// Negative eigenvalues within the psd slack are clamped to zero.
inline Matrix psd_factor(const Matrix& m, const Tolerances& tol) {
  const HermitianEigen es = eig_hermitian(m);
  const Eigen::Index n = es.values.size();
  if (n == 0) return Matrix(0, 0);
  const double scale = std::max(
      1.0, std::max(std::abs(es.values(0)), std::abs(es.values(n - 1))));
  if (es.values(0) < -tol.psd_tol * scale) {
    std::ostringstream os;
    os << "psd_factor: matrix is indefinite (min eigenvalue " << es.values(0)
       << ")";
    throw InputError(os.str());
  }
  const double cutoff = tol.rank_tol * scale;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (es.values(i) > cutoff) keep.push_back(i);
  }
  Matrix e(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    e.col(static_cast<Eigen::Index>(k)) =
        es.vectors.col(keep[k]) * std::sqrt(es.values(keep[k]));
  }
  return e;
}

// ---------------------------------------------------------------------------
// General spectra

inline Eigen::VectorXcd eig_general(const Matrix& a) {
  require(a.rows() == a.cols(), "eig_general: matrix must be square");
  require_finite(a, "eig_general input");
  if (a.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::ComplexEigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw ConsistencyError("eig_general: QR iteration did not converge");
  }
  return es.eigenvalues();
}

/// Complex Schur form A = Q T Q^H.
struct SchurForm {
  Matrix q;
  Matrix t;
  cplx eigenvalue(Eigen::Index i) const { return t(i, i); }
};

inline SchurForm complex_schur(const Matrix& a) {
  require(a.rows() == a.cols(), "complex_schur: matrix must be square");
  require_finite(a, "complex_schur input");
  SchurForm f;
  if (a.rows() == 0) {
    f.q = Matrix(0, 0);
    f.t = Matrix(0, 0);
    return f;
  }
  Eigen::ComplexSchur<Matrix> cs(a);
  if (cs.info() != Eigen::Success) {
    throw ConsistencyError("complex_schur: QR iteration did not converge");
  }
  f.q = cs.matrixU();
  f.t = cs.matrixT();
  return f;
}

namespace detail {

// Swap the adjacent diagonal entries k and k+1 of an upper triangular T with
// one Givens rotation, updating Q so that Q T Q^H is unchanged.
inline void swap_schur_pair(SchurForm& f, Eigen::Index k) {
  const cplx t11 = f.t(k, k);
  const cplx t22 = f.t(k + 1, k + 1);
  const cplx a = f.t(k, k + 1);
  const cplx b = t22 - t11;
  const double nrm = std::hypot(std::abs(a), std::abs(b));
  if (nrm == 0.0) return;  // equal eigenvalues, nothing to move
  double c;
  cplx s;
  if (std::abs(a) == 0.0) {
    c = 0.0;
    s = std::conj(b) / std::abs(b);
  } else {
    c = std::abs(a) / nrm;
    s = std::conj(b) * a / (std::abs(a) * nrm);
  }
  Eigen::Matrix2cd g;
  g << c, s, -std::conj(s), c;
  const Eigen::Index n = f.t.rows();
  f.t.middleRows(k, 2) = (g * f.t.middleRows(k, 2)).eval();
  f.t.middleCols(k, 2) = (f.t.middleCols(k, 2) * g.adjoint()).eval();
  f.q.middleCols(k, 2) = (f.q.middleCols(k, 2) * g.adjoint()).eval();
  f.t(k + 1, k) = 0.0;
  (void)n;
}

}  // namespace detail

/// Reorders a Schur form so that the selected eigenvalues occupy the leading
/// diagonal positions; returns the number selected.
inline Eigen::Index schur_reorder(SchurForm& f,
                                  const std::function<bool(cplx)>& select) {
  const Eigen::Index n = f.t.rows();
  Eigen::Index target = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!select(f.t(j, j))) continue;
    for (Eigen::Index k = j; k > target; --k) detail::swap_schur_pair(f, k - 1);
    ++target;
  }
  return target;
}

/// Orthonormal basis of the A-invariant subspace belonging to the selected
/// eigenvalues (algebraic multiplicities included).
inline Matrix invariant_subspace(const Matrix& a,
                                 const std::function<bool(cplx)>& select) {
  SchurForm f = complex_schur(a);
  const Eigen::Index k = schur_reorder(f, select);
  return f.q.leftCols(k);
}

enum class SpectralRegion { inside_open_disc, outside_closed_disc, modulus_one_band };

inline IndefiniteSubspace spectral_subspace(const Matrix& a,
                                            const SignatureSpace& space,
                                            SpectralRegion region,
                                            const Tolerances& tol) {
  require(a.rows() == space.dim() && a.cols() == space.dim(),
          "spectral_subspace: matrix does not act on the given space");
  const Eigen::VectorXcd ev = eig_general(a);
  if (region != SpectralRegion::modulus_one_band) {
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (std::abs(std::abs(ev(i)) - 1.0) <= tol.metric_tol) {
        std::ostringstream os;
        os << "spectral_subspace: eigenvalue " << ev(i)
           << " lies on the unit circle within tolerance";
        throw AmbiguityError(os.str(), ev(i));
      }
    }
  }
  const double band = tol.metric_tol;
  std::function<bool(cplx)> select;
  switch (region) {
    case SpectralRegion::inside_open_disc:
      select = [](cplx l) { return std::abs(l) < 1.0; };
      break;
    case SpectralRegion::outside_closed_disc:
      select = [](cplx l) { return std::abs(l) > 1.0; };
      break;
    case SpectralRegion::modulus_one_band:
      select = [band](cplx l) { return std::abs(std::abs(l) - 1.0) <= band; };
      break;
  }
  return IndefiniteSubspace::from_orthonormal(space, invariant_subspace(a, select));
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_INDEFINITE_HPP
