#ifndef PONTRYAGIN_LINALG_HPP
#define PONTRYAGIN_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pontryagin {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Error taxonomy. The CLI maps ConsistencyError to exit code 1 and every
// other Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatches, non-finite entries, parameters out
/// of their domain, violated operation preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Subspace whose Gram matrix is singular where a regular one is required.
class DegenerateSubspaceError : public InputError {
 public:
  using InputError::InputError;
};

/// Spectrum too close to a region boundary to decide membership.
class AmbiguityError : public Error {
 public:
  AmbiguityError(const std::string& what, cplx eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  cplx eigenvalue() const { return eigenvalue_; }

 private:
  cplx eigenvalue_;
};

/// Evaluation point too close to a pole of the transfer function.
class PoleProximityError : public Error {
 public:
  PoleProximityError(const std::string& what, cplx nearest_pole)
      : Error(what), nearest_pole_(nearest_pole) {}
  cplx nearest_pole() const { return nearest_pole_; }

 private:
  cplx nearest_pole_;
};

/// Two independent computations of the same quantity disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The request lies outside what can be computed at finite dimension.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Numerical thresholds shared by every rank, sign and metric decision.
struct Tolerances {
  double rank_tol = 1e-10;   // relative singular-value cutoff
  double psd_tol = 1e-9;     // eigenvalue negativity slack
  double metric_tol = 1e-8;  // operator classification slack
  int boundary_samples = 256;
  int disc_samples = 64;
  std::uint64_t seed = 20240601;

  void validate() const {
    if (!(rank_tol > 0) || !(psd_tol > 0) || !(metric_tol > 0) ||
        boundary_samples <= 0 || disc_samples <= 0) {
      throw InputError("tolerances must be positive");
    }
  }
};

inline void require_finite(const Matrix& m, const std::string& name) {
  if (!m.allFinite()) throw InputError(name + " has non-finite entries");
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline Matrix hermitian_part(const Matrix& h) {
  return 0.5 * (h + h.adjoint());
}

/// Orthonormal basis of range(m), keeping singular values above `cutoff`.
inline Matrix column_space_abs(const Matrix& m, double cutoff) {
  if (m.rows() == 0) return Matrix(0, 0);
  if (m.cols() == 0) return Matrix(m.rows(), 0);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cutoff) ++r;
  return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of range(m); the cutoff is rel_tol * max(1, sigma_max).
inline Matrix column_space(const Matrix& m, double rel_tol) {
  return column_space_abs(m, rel_tol * std::max(1.0, spectral_norm(m)));
}

inline Eigen::Index numerical_rank(const Matrix& m, double rel_tol) {
  return column_space(m, rel_tol).cols();
}

/// Orthonormal basis of ker(m) with the same cutoff convention as
/// column_space.
inline Matrix null_space(const Matrix& m, double rel_tol) {
  const Eigen::Index n = m.cols();
  if (n == 0) return Matrix(0, 0);
  if (m.rows() == 0) return identity(n);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cutoff = rel_tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cutoff) ++r;
  return svd.matrixV().rightCols(n - r);
}

/// Orthonormal basis of the Euclidean orthogonal complement of range(basis),
/// where `basis` is already orthonormal.
inline Matrix euclidean_complement(const Matrix& basis, Eigen::Index ambient) {
  if (basis.cols() == 0) return identity(ambient);
  return null_space(basis.adjoint(), 1e-12);
}

/// Largest sine of the principal angles between two subspaces spanned by
/// orthonormal columns. Subspaces of different dimension are at angle pi/2.
inline double max_principal_angle_sine(const Matrix& u1, const Matrix& u2) {
  if (u1.cols() != u2.cols()) return 1.0;
  if (u1.cols() == 0) return 0.0;
  const Matrix residual = u2 - u1 * (u1.adjoint() * u2);
  return std::min(1.0, spectral_norm(residual));
}

/// Orthonormal basis of the Krylov space span{M^k R : k >= 0}. Each new block
/// is orthogonalized against the current basis before the rank decision,
/// which keeps the computation stable when M has large eigenvalues.
inline Matrix krylov_basis(const Matrix& m, const Matrix& r, double rel_tol) {
  const Eigen::Index n = m.rows();
  if (n == 0) return Matrix(0, 0);
  Matrix basis = column_space(r, rel_tol);
  const double cutoff = rel_tol * std::max(1.0, spectral_norm(m));
  Matrix frontier = basis;
  for (Eigen::Index step = 0; step < n && frontier.cols() > 0; ++step) {
    Matrix w = m * frontier;
    // Two passes of classical Gram-Schmidt against the current basis.
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) w -= basis * (basis.adjoint() * w);
    }
    frontier = column_space_abs(w, cutoff);
    if (frontier.cols() == 0) break;
    Matrix grown(n, basis.cols() + frontier.cols());
    grown << basis, frontier;
    basis = grown;
    if (basis.cols() >= n) break;
  }
  return basis;
}

/// Least-squares solve with a residual the caller can certify.
struct LeastSquares {
  Matrix solution;
  double residual = 0.0;
};

inline LeastSquares solve_least_squares(const Matrix& a, const Matrix& b) {
  LeastSquares out;
  if (a.cols() == 0) {
    out.solution = Matrix::Zero(0, b.cols());
    out.residual = b.size() ? spectral_norm(b) : 0.0;
    return out;
  }
  out.solution = a.completeOrthogonalDecomposition().solve(b);
  out.residual = b.size() ? spectral_norm(a * out.solution - b) : 0.0;
  return out;
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline Matrix hstack(const Matrix& a, const Matrix& b) {
  const Eigen::Index rows = std::max(a.rows(), b.rows());
  Matrix out(rows, a.cols() + b.cols());
  if (a.cols() > 0) out.leftCols(a.cols()) = a;
  if (b.cols() > 0) out.rightCols(b.cols()) = b;
  return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b) {
  const Eigen::Index cols = std::max(a.cols(), b.cols());
  Matrix out(a.rows() + b.rows(), cols);
  if (a.rows() > 0) out.topRows(a.rows()) = a;
  if (b.rows() > 0) out.bottomRows(b.rows()) = b;
  return out;
}

/// Uniform grid of `count` points on the unit circle rotated by `offset`.
inline std::vector<cplx> circle_points(int count, double offset = 0.0) {
  std::vector<cplx> pts;
  pts.reserve(count);
  const double two_pi = 2.0 * M_PI;
  for (int k = 0; k < count; ++k) {
    pts.push_back(std::polar(1.0, offset + two_pi * k / count));
  }
  return pts;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_LINALG_HPP
