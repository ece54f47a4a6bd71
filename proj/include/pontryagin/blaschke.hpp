#ifndef PONTRYAGIN_BLASCHKE_HPP
#define PONTRYAGIN_BLASCHKE_HPP

#include <variant>
#include <vector>

#include "pontryagin/cascade.hpp"

namespace pontryagin {

/// Parameters of I - P + rho (z - alpha)/(1 - conj(alpha) z) P, P = u u^H.
struct BlaschkeFactorSpec {
  cplx alpha;
  cplx rho = 1.0;
  Vector direction;  // unit vector; length is the ambient dimension
};

/// Conservative one-dimensional Hilbert-state realization of a simple
/// Blaschke-Potapov factor.
inline Colligation blaschke_potapov_factor(cplx alpha, cplx rho, const Vector& u) {
  require(std::abs(alpha) > 0.0 && std::abs(alpha) < 1.0,
          "blaschke_potapov_factor: need 0 < |alpha| < 1");
  require(std::abs(std::abs(rho) - 1.0) <= 1e-12,
          "blaschke_potapov_factor: |rho| must be 1");
  require(u.size() > 0 && std::abs(u.norm() - 1.0) <= 1e-12,
          "blaschke_potapov_factor: direction must be a unit vector");
  require_finite(u, "blaschke direction");
  const Eigen::Index m = u.size();
  const double s = std::sqrt(1.0 - std::norm(alpha));
  const Matrix p = u * u.adjoint();
  Matrix a(1, 1);
  a << std::conj(alpha);
  return Colligation(SignatureSpace(1, 0), a, s * u.adjoint(), rho * s * u,
                     identity(m) - p - rho * alpha * p);
}

inline Colligation blaschke_potapov_factor(const BlaschkeFactorSpec& f) {
  return blaschke_potapov_factor(f.alpha, f.rho, f.direction);
}

/// Scalar factor (z - alpha) / (1 - conj(alpha) z).
inline Colligation scalar_blaschke(cplx alpha) {
  Vector u(1);
  u << 1.0;
  return blaschke_potapov_factor(alpha, 1.0, u);
}

/// Cascade of factors; the transfer function is b_n ... b_2 b_1.
inline Colligation blaschke_product(const std::vector<Colligation>& factors) {
  require(!factors.empty(), "blaschke_product: no factors");
  Colligation acc = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) {
    acc = cascade(acc, factors[k]);
  }
  return acc;
}

inline Colligation blaschke_product(const std::vector<BlaschkeFactorSpec>& specs) {
  std::vector<Colligation> f;
  f.reserve(specs.size());
  for (const BlaschkeFactorSpec& s : specs) f.push_back(blaschke_potapov_factor(s));
  return blaschke_product(f);
}

/// Realization of theta^{-1}: (A - B D^{-1} C, B D^{-1}, -D^{-1} C, D^{-1}).
/// A conservative input yields a conservative inverse whose state metric is
/// the negative of the original one; the state is then reordered to
/// canonical coordinates. Otherwise the inverse is returned metric-free.
inline std::variant<Colligation, BareRealization> invert_system(
    const Colligation& s, const Tolerances& tol) {
  require(s.input_dim() == s.output_dim(), "invert_system: D must be square");
  Eigen::FullPivLU<Matrix> lu(s.D());
  if (s.D().rows() > 0 && lu.rcond() < tol.rank_tol) {
    throw InputError("invert_system: feedthrough operator D is singular");
  }
  const Matrix di = s.D().rows() ? lu.inverse() : Matrix(0, 0);
  const Matrix a = s.A() - s.B() * di * s.C();
  const Matrix b = s.B() * di;
  const Matrix c = -di * s.C();
  BareRealization bare(a, b, c, di);

  if (!classify(s, tol).conservative()) return bare;

  // New metric -J: old negative coordinates become the positive ones.
  const int pos = s.state().pos;
  const int neg = s.state().neg;
  const int n = pos + neg;
  Matrix perm = Matrix::Zero(n, n);
  for (int i = 0; i < neg; ++i) perm(i, pos + i) = 1.0;
  for (int i = 0; i < pos; ++i) perm(neg + i, i) = 1.0;
  const Matrix pt = perm.transpose();
  Colligation inv(SignatureSpace(neg, pos), perm * a * pt, perm * b, c * pt, di);
  if (!classify(inv, tol).conservative()) return bare;
  return inv;
}

/// invert_system for inputs known to be conservative; throws otherwise.
inline Colligation invert_conservative(const Colligation& s, const Tolerances& tol) {
  auto r = invert_system(s, tol);
  if (!std::holds_alternative<Colligation>(r)) {
    throw InputError("invert_conservative: input is not conservative");
  }
  return std::get<Colligation>(r);
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_BLASCHKE_HPP
