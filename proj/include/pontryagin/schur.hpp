#ifndef PONTRYAGIN_SCHUR_HPP
#define PONTRYAGIN_SCHUR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "pontryagin/blaschke.hpp"
#include "pontryagin/fundamental.hpp"
#include "pontryagin/kernel.hpp"

namespace pontryagin {

/// second o first: the function second * first.
inline TransferFunction compose(const TransferFunction& first,
                                const TransferFunction& second) {
  if (first.colligation() && second.colligation()) {
    return TransferFunction(cascade(*first.colligation(), *second.colligation()));
  }
  return TransferFunction(cascade(first.realization(), second.realization()));
}

// ---------------------------------------------------------------------------
// Boundary behavior

inline const char* kRationalBoundaryNote =
    "rational function: a.e. boundary conditions are checked at finitely many "
    "circle samples; a rational function vanishing a.e. on the circle vanishes "
    "identically";

struct BoundarySample {
  double theta = 0.0;
  double sigma_max = 0.0;
  double defect_right_norm = 0.0;  // ||I - S^H S||
  double defect_left_norm = 0.0;   // ||I - S S^H||
};

struct BoundaryReport {
  std::vector<BoundarySample> samples;
  double max_sigma = 0.0;
  double max_defect_right = 0.0;
  double max_defect_left = 0.0;
  bool contractive = false;
  bool inner = false;
  bool co_inner = false;
  bool bi_inner = false;
  std::string note = kRationalBoundaryNote;
};

inline BoundaryReport boundary_behavior(const TransferFunction& s, const Tolerances& tol) {
  BoundaryReport r;
  const int m = s.input_dim();
  const int p = s.output_dim();
  for (cplx zeta : boundary_sample_points(tol.boundary_samples, tol.seed)) {
    const Matrix v = s(zeta, tol);
    BoundarySample b;
    b.theta = std::arg(zeta);
    b.sigma_max = v.size() ? spectral_norm(v) : 0.0;
    b.defect_right_norm = m ? spectral_norm(identity(m) - v.adjoint() * v) : 0.0;
    b.defect_left_norm = p ? spectral_norm(identity(p) - v * v.adjoint()) : 0.0;
    r.max_sigma = std::max(r.max_sigma, b.sigma_max);
    r.max_defect_right = std::max(r.max_defect_right, b.defect_right_norm);
    r.max_defect_left = std::max(r.max_defect_left, b.defect_left_norm);
    r.samples.push_back(b);
  }
  r.contractive = r.max_sigma <= 1.0 + tol.metric_tol;
  r.inner = r.contractive && r.max_defect_right <= tol.metric_tol;
  r.co_inner = r.contractive && r.max_defect_left <= tol.metric_tol;
  r.bi_inner = r.inner && r.co_inner;
  return r;
}

inline void write_boundary_csv(const BoundaryReport& r, std::ostream& os) {
  os << "theta,sigma_max,defect_right_norm,defect_left_norm\n";
  os.precision(17);
  for (const BoundarySample& b : r.samples) {
    os << b.theta << ',' << b.sigma_max << ',' << b.defect_right_norm << ','
       << b.defect_left_norm << '\n';
  }
}

// ---------------------------------------------------------------------------
// Function-level Krein-Langer factorization

struct FunctionFactorization {
  int kappa = 0;
  std::string route;  // "system", "function" or "mixed" (one side each)
  TransferFunction S_r{BareRealization()};
  TransferFunction B_r{BareRealization()};
  TransferFunction S_l{BareRealization()};
  TransferFunction B_l{BareRealization()};
  double residual_right = 0.0;  // max ||S - S_r B_r^{-1}|| / max(1, ||S||)
  double residual_left = 0.0;
  NegativeSquaresEstimate negsq_r;
  NegativeSquaresEstimate negsq_l;
  double sigma_max_r = 0.0;  // boundary sup of S_r
  double sigma_max_l = 0.0;
  int degree_r = 0;
  int degree_l = 0;
  double common_zero_margin_r = 0.0;  // min singular value of [B(w); S(w)]
  double common_zero_margin_l = 0.0;
  bool no_common_zeros_r = false;
  bool no_common_zeros_l = false;
};

namespace detail {

// Solves A P A^H - P = Q for P by vectorization.
inline Matrix solve_stein(const Matrix& a, const Matrix& q) {
  const Eigen::Index k = a.rows();
  const Matrix kron = Eigen::kroneckerProduct(Matrix(a.conjugate()), a).eval();
  const Matrix lhs = kron - identity(k * k);
  const Eigen::Map<const Eigen::VectorXcd> rhs(q.data(), k * k);
  const Eigen::VectorXcd x = lhs.fullPivLu().solve(Eigen::VectorXcd(rhs));
  return Eigen::Map<const Matrix>(x.data(), k, k);
}

struct RightFactors {
  BareRealization s_r;
  Colligation b_r;     // Hilbert-state conservative
  Colligation b_rinv;  // anti-Hilbert conservative
};

// S = S_r B_r^{-1} from the poles of a minimal realization.
inline RightFactors right_factors_from_poles(const BareRealization& s,
                                             const Tolerances& tol) {
  const BareRealization r = minimal_reduction(s, tol);
  const Eigen::Index n = r.state_dim();
  const int m = static_cast<int>(r.input_dim());
  SchurForm f = complex_schur(r.A);
  const Eigen::Index inside = schur_reorder(f, [](cplx l) { return std::abs(l) <= 1.0; });
  const int k = static_cast<int>(n - inside);
  RightFactors out;
  if (k == 0) {
    out.s_r = r;
    out.b_r = Colligation::feedthrough(identity(m));
    out.b_rinv = out.b_r;
    return out;
  }
  // The outside block is a quotient: B_r^{-1} acts first with the same
  // (A, B) pair.
  const Matrix a1 = f.t.bottomRightCorner(k, k);
  const Matrix b1 = (f.q.adjoint() * r.B).bottomRows(k);
  // State metric -P with A1 P A1^H - P = B1 B1^H, P > 0.
  const Matrix p = hermitian_part(solve_stein(a1, b1 * b1.adjoint()));
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) {
    throw ConsistencyError("kl_factorize_function: Stein solution is not positive definite");
  }
  const Matrix l = llt.matrixL();
  const Matrix rinv = l.inverse();
  const Matrix at = rinv * a1 * l;
  const Matrix bt = rinv * b1;
  Eigen::VectorXd metric = Eigen::VectorXd::Ones(k + m);
  metric.head(k).setConstant(-1.0);
  const Matrix cd = complete_rows(hstack(at, bt), metric, tol);
  out.b_rinv = Colligation(SignatureSpace(0, k), at, bt, cd.leftCols(k), cd.rightCols(m));
  out.b_r = invert_conservative(out.b_rinv, tol);
  out.s_r = minimal_reduction(cascade(out.b_r.bare(), r), tol);
  return out;
}

inline bool system_route(const TransferFunction& s, FactorMode mode, const Tolerances& tol) {
  if (!s.colligation()) return false;
  const Colligation& c = *s.colligation();
  const SystemClass cls = classify(c, tol);
  const bool kind = cls.conservative() ||
                    (mode == FactorMode::right && cls.coisometric() && cls.observable) ||
                    (mode == FactorMode::left && cls.isometric() && cls.controllable);
  if (!kind) return false;
  return is_hilbert(krylov_report(c, tol).Xs_perp_class);
}

// Unit-circle spectrum leaves the fundamental decomposition ambiguous; the
// pole-based route still applies.
inline std::optional<SystemFactorization> try_factorize_system(const Colligation& s,
                                                               FactorMode mode,
                                                               const Tolerances& tol) {
  try {
    return kl_factorize_system(s, mode, tol);
  } catch (const AmbiguityError&) {
    return std::nullopt;
  }
}

inline double max_reconstruction_error(const TransferFunction& s,
                                       const TransferFunction& theta,
                                       const TransferFunction& b, FactorMode mode,
                                       const Tolerances& tol) {
  int per_radius = std::max(1, (tol.disc_samples + 2) / 3);
  double worst = 0.0;
  for (cplx z : disc_sample_points(s, per_radius, tol.seed, tol)) {
    const Matrix sv = s(z, tol);
    const Matrix binv = b(z, tol).inverse();
    const Matrix rec = mode == FactorMode::right ? Matrix(theta(z, tol) * binv)
                                                 : Matrix(binv * theta(z, tol));
    worst = std::max(worst, spectral_norm(sv - rec) / std::max(1.0, spectral_norm(sv)));
  }
  return worst;
}

inline double boundary_sup(const TransferFunction& s, const Tolerances& tol) {
  double worst = 0.0;
  for (cplx zeta : boundary_sample_points(tol.boundary_samples, tol.seed)) {
    worst = std::max(worst, spectral_norm(s(zeta, tol)));
  }
  return worst;
}

// Smallest singular value of [B(w); S(w)] over the zeros w of B (right) or
// of [B(w) S(w)] (left).
inline double common_zero_margin(const TransferFunction& b, const TransferFunction& theta,
                                 FactorMode mode, const Tolerances& tol) {
  const Matrix a = b.realization().A;
  if (a.rows() == 0) return 1.0;
  // Zeros of B are the poles of B^{-1}: 1/lambda for lambda in the spectrum
  // of A - B D^{-1} C.
  const BareRealization& br = b.realization();
  const Matrix ainv = br.A - br.B * br.D.inverse() * br.C;
  double margin = std::numeric_limits<double>::infinity();
  const Eigen::VectorXcd ev = eig_general(ainv);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= 1.0) continue;
    const cplx w = 1.0 / ev(i);
    const Matrix bw = b(w, tol);
    const Matrix tw = theta(w, tol);
    const Matrix stack = mode == FactorMode::right ? vstack(bw, tw) : hstack(bw, tw);
    Eigen::JacobiSVD<Matrix> svd(stack);
    margin = std::min(margin, svd.singularValues().minCoeff() /
                                  std::max(1.0, svd.singularValues().maxCoeff()));
  }
  return std::isfinite(margin) ? margin : 1.0;
}

}  // namespace detail

/// S = S_r B_r^{-1} = B_l^{-1} S_l. Conservative, co-isometric observable or
/// isometric controllable index-preserving backings go through
/// kl_factorize_system; any other backing through the poles of a minimal
/// realization.
inline FunctionFactorization kl_factorize_function(const TransferFunction& s,
                                                   const Tolerances& tol) {
  FunctionFactorization out;
  out.kappa = pole_multiplicity(s, tol);
  const bool sys_r = detail::system_route(s, FactorMode::right, tol);
  const bool sys_l = detail::system_route(s, FactorMode::left, tol);
  std::optional<SystemFactorization> fr, fl;
  if (sys_r) fr = detail::try_factorize_system(*s.colligation(), FactorMode::right, tol);
  if (sys_l) fl = detail::try_factorize_system(*s.colligation(), FactorMode::left, tol);
  out.route = fr && fl ? "system" : (fr || fl ? "mixed" : "function");

  if (fr) {
    out.S_r = TransferFunction(fr->theta);
    out.B_r = TransferFunction(invert_conservative(fr->blaschke_inverse, tol));
  } else {
    const detail::RightFactors f = detail::right_factors_from_poles(s.realization(), tol);
    out.S_r = TransferFunction(f.s_r);
    out.B_r = TransferFunction(f.b_r);
  }
  if (fl) {
    out.S_l = TransferFunction(fl->theta);
    out.B_l = TransferFunction(invert_conservative(fl->blaschke_inverse, tol));
  } else {
    // Left factorization of S is the sharp of the right one of S^#.
    const detail::RightFactors f =
        detail::right_factors_from_poles(adjoint_bare(s.realization()), tol);
    out.S_l = TransferFunction(f.s_r).sharp();
    out.B_l = TransferFunction(f.b_r).sharp();
  }

  out.degree_r = out.B_r.realization().state_dim();
  out.degree_l = out.B_l.realization().state_dim();
  out.residual_right = detail::max_reconstruction_error(s, out.S_r, out.B_r, FactorMode::right, tol);
  out.residual_left = detail::max_reconstruction_error(s, out.S_l, out.B_l, FactorMode::left, tol);
  out.negsq_r = negative_squares_estimate(out.S_r, tol);
  out.negsq_l = negative_squares_estimate(out.S_l, tol);
  out.sigma_max_r = detail::boundary_sup(out.S_r, tol);
  out.sigma_max_l = detail::boundary_sup(out.S_l, tol);
  out.common_zero_margin_r = detail::common_zero_margin(out.B_r, out.S_r, FactorMode::right, tol);
  out.common_zero_margin_l = detail::common_zero_margin(out.B_l, out.S_l, FactorMode::left, tol);
  const double zero_tol = std::sqrt(tol.rank_tol);
  out.no_common_zeros_r = out.common_zero_margin_r > zero_tol;
  out.no_common_zeros_l = out.common_zero_margin_l > zero_tol;

  const double recon_tol = 1e-7;
  const bool ok = out.degree_r == out.kappa && out.degree_l == out.kappa &&
                  out.residual_right <= recon_tol && out.residual_left <= recon_tol &&
                  out.negsq_r.stabilized && out.negsq_r.kappa_hat == 0 &&
                  out.negsq_l.stabilized && out.negsq_l.kappa_hat == 0 &&
                  out.sigma_max_r <= 1.0 + tol.metric_tol &&
                  out.sigma_max_l <= 1.0 + tol.metric_tol && out.no_common_zeros_r &&
                  out.no_common_zeros_l;
  if (!ok) {
    std::ostringstream os;
    os << "kl_factorize_function: certification failed (kappa " << out.kappa
       << ", degrees " << out.degree_r << "/" << out.degree_l << ", residuals "
       << out.residual_right << "/" << out.residual_left << ", negative squares "
       << out.negsq_r.kappa_hat << "/" << out.negsq_l.kappa_hat << ", boundary sup "
       << out.sigma_max_r << "/" << out.sigma_max_l << ", common-zero margins "
       << out.common_zero_margin_r << "/" << out.common_zero_margin_l << ")";
    throw ConsistencyError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Defect functions

/// Scalar rational function num(z) / den(z), coefficients in ascending powers.
struct ScalarRational {
  Eigen::VectorXcd num;
  Eigen::VectorXcd den;

  static cplx poly(const Eigen::VectorXcd& c, cplx z) {
    cplx acc = 0.0;
    for (Eigen::Index i = c.size() - 1; i >= 0; --i) acc = acc * z + c(i);
    return acc;
  }
  cplx operator()(cplx z) const { return poly(num, z) / poly(den, z); }

  /// f^#(z) = conj(f(conj z)).
  ScalarRational sharp() const { return {num.conjugate(), den.conjugate()}; }
};

struct DefectResult {
  bool phi_zero = false;
  bool psi_zero = false;
  std::optional<ScalarRational> phi;
  std::optional<ScalarRational> psi;
  double max_defect_right = 0.0;
  double max_defect_left = 0.0;
  double phi_residual = 0.0;  // max | |phi|^2 - (1 - |S|^2) | on the circle
  double psi_residual = 0.0;
  double phi_min_root_modulus = std::numeric_limits<double>::infinity();
  double psi_min_root_modulus = std::numeric_limits<double>::infinity();
  std::string note = kRationalBoundaryNote;
};

namespace detail {

inline Eigen::VectorXcd poly_from_roots(const std::vector<cplx>& roots, cplx lead = 1.0) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(roots.size() + 1);
  c(0) = lead;
  for (std::size_t k = 0; k < roots.size(); ++k) {
    // multiply by (z - r)
    for (Eigen::Index i = static_cast<Eigen::Index>(k) + 1; i >= 1; --i) {
      c(i) = c(i - 1) - roots[k] * c(i);
    }
    c(0) = -roots[k] * c(0);
  }
  return c;
}

inline std::vector<cplx> poly_roots(const Eigen::VectorXcd& c) {
  const Eigen::Index deg = c.size() - 1;
  if (deg <= 0) return {};
  Matrix comp = Matrix::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) comp(i, deg - 1) = -c(i) / c(deg);
  const Eigen::VectorXcd ev = eig_general(comp);
  return std::vector<cplx>(ev.data(), ev.data() + ev.size());
}

// Polynomial coefficients of degree <= n from values at 2(n+1) roots of unity.
inline Eigen::VectorXcd coefficients_from_values(const std::vector<cplx>& pts,
                                                 const std::vector<cplx>& vals, int n) {
  const int count = static_cast<int>(pts.size());
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n + 1);
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j < count; ++j) c(k) += vals[j] * std::pow(std::conj(pts[j]), k);
    c(k) /= static_cast<double>(count);
  }
  return c;
}

struct OuterFactor {
  std::optional<ScalarRational> phi;
  double residual = 0.0;
  double min_root_modulus = std::numeric_limits<double>::infinity();
};

// Fejer-Riesz: phi outer with |phi|^2 = 1 - |S|^2 on the circle.
inline OuterFactor scalar_outer_factor(const TransferFunction& s, const Tolerances& tol) {
  if (s.input_dim() != 1 || s.output_dim() != 1) {
    throw UnsupportedError("defect: outer factorization is implemented for scalar functions only");
  }
  const BareRealization r = minimal_reduction(s.realization(), tol);
  const int n = static_cast<int>(r.state_dim());
  // q(z) = det(I - zA) = prod (1 - z lambda); p = q S.
  std::vector<cplx> lambdas;
  if (n) {
    const Eigen::VectorXcd ev = eig_general(r.A);
    lambdas.assign(ev.data(), ev.data() + ev.size());
  }
  Eigen::VectorXcd q = Eigen::VectorXcd::Zero(n + 1);
  q(0) = 1.0;
  for (int k = 0; k < n; ++k) {
    for (int i = k + 1; i >= 1; --i) q(i) = q(i) - lambdas[k] * q(i - 1);
  }
  const std::vector<cplx> pts = circle_points(2 * (n + 1));
  std::vector<cplx> pv;
  for (cplx z : pts) pv.push_back(ScalarRational::poly(q, z) * s(z, tol)(0, 0));
  const Eigen::VectorXcd p = coefficients_from_values(pts, pv, n);

  // N(zeta) = |q|^2 - |p|^2 = sum_k c_k zeta^k, c_{-k} = conj(c_k).
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n + 1);
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j + k <= n; ++j) {
      c(k) += q(j + k) * std::conj(q(j)) - p(j + k) * std::conj(p(j));
    }
  }
  const double cmax = c.cwiseAbs().maxCoeff();
  OuterFactor out;
  if (cmax <= tol.metric_tol) return out;  // zero defect
  int d = n;
  while (d > 0 && std::abs(c(d)) <= tol.rank_tol * cmax) --d;

  // Roots of z^d N(z): pairs (r, 1/conj r); keep the d of largest modulus.
  Eigen::VectorXcd big(2 * d + 1);
  for (int j = 0; j <= 2 * d; ++j) {
    const int k = j - d;
    big(j) = k >= 0 ? c(k) : std::conj(c(-k));
  }
  std::vector<cplx> roots = poly_roots(big);
  std::sort(roots.begin(), roots.end(),
            [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  roots.resize(d);
  for (cplx rt : roots) out.min_root_modulus = std::min(out.min_root_modulus, std::abs(rt));

  // |c|^2 by least squares on the circle.
  const std::vector<cplx> fit = circle_points(4 * (d + 1) + 8, 0.123);
  double num = 0.0, den = 0.0;
  const Eigen::VectorXcd h_monic = poly_from_roots(roots);
  auto n_value = [&](cplx z) {
    cplx acc = c(0);
    for (int k = 1; k <= n; ++k) acc += c(k) * std::pow(z, k) + std::conj(c(k)) * std::pow(z, -k);
    return acc.real();
  };
  for (cplx z : fit) {
    const double h2 = std::norm(ScalarRational::poly(h_monic, z));
    num += n_value(z) * h2;
    den += h2 * h2;
  }
  const Eigen::VectorXcd h = h_monic * std::sqrt(num / den);
  // q reflected: zeros of q inside the disc move to their mirror images.
  Eigen::VectorXcd qt = Eigen::VectorXcd::Ones(1);
  for (cplx l : lambdas) {
    Eigen::VectorXcd factor(2);
    if (std::abs(l) > 1.0) {
      factor << -std::conj(l), 1.0;  // z - conj(l)
    } else {
      factor << 1.0, -l;  // 1 - z l
    }
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(qt.size() + 1);
    for (Eigen::Index i = 0; i < qt.size(); ++i) {
      next(i) += qt(i) * factor(0);
      next(i + 1) += qt(i) * factor(1);
    }
    qt = next;
  }
  out.phi = ScalarRational{h, qt};
  for (cplx z : boundary_sample_points(tol.boundary_samples, tol.seed)) {
    const double target = 1.0 - std::norm(s(z, tol)(0, 0));
    out.residual = std::max(out.residual, std::abs(std::norm((*out.phi)(z)) - target));
  }
  return out;
}

}  // namespace detail

/// Zero tests for the right and left defect functions, plus the scalar outer
/// factors when they do not vanish.
inline DefectResult defect(const TransferFunction& s, const Tolerances& tol) {
  const BoundaryReport b = boundary_behavior(s, tol);
  DefectResult r;
  r.max_defect_right = b.max_defect_right;
  r.max_defect_left = b.max_defect_left;
  r.phi_zero = b.max_defect_right <= tol.metric_tol;
  r.psi_zero = b.max_defect_left <= tol.metric_tol;
  const bool scalar = s.input_dim() == 1 && s.output_dim() == 1;
  if (!scalar) {
    if (!r.phi_zero || !r.psi_zero) {
      r.note += "; matrix-valued outer factors are not computed";
    }
    return r;
  }
  if (!r.phi_zero) {
    const detail::OuterFactor f = detail::scalar_outer_factor(s, tol);
    r.phi = f.phi;
    r.phi_residual = f.residual;
    r.phi_min_root_modulus = f.min_root_modulus;
  }
  if (!r.psi_zero) {
    const detail::OuterFactor f = detail::scalar_outer_factor(s.sharp(), tol);
    if (f.phi) r.psi = f.phi->sharp();
    r.psi_min_root_modulus = f.min_root_modulus;
    // |psi| = |phi_{S#}| at conjugate points; |S#(conj z)| = |S(z)|.
    r.psi_residual = f.residual;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Canonical co-isometric realization

struct CanonicalRealization {
  Colligation system;
  int rank = 0;
  std::vector<int> rank_history;
  std::vector<cplx> points;
  double fit_residual = 0.0;          // relative least-squares residual for A and B
  double transfer_residual = 0.0;     // at held-out points
  double reproducing_residual = 0.0;  // C (I - zA)^{-1} e_k vs f_k(z)
};

namespace detail {

// Kernel section combination sum_j c_j K(w_j, z) e_j evaluated at z.
inline Matrix kernel_sections_at(const TransferFunction& s, const std::vector<cplx>& pts,
                                 const std::vector<Matrix>& values, const Matrix& coeffs,
                                 cplx z, const Tolerances& tol) {
  const int p = s.output_dim();
  const Matrix sz = s(z, tol);
  Matrix out = Matrix::Zero(p, coeffs.cols());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const Matrix k = (identity(p) - sz * values[j].adjoint()) / (1.0 - z * std::conj(pts[j]));
    out += k * coeffs.middleRows(static_cast<Eigen::Index>(j) * p, p);
  }
  return out;
}

}  // namespace detail

/// Model of H(S) on kernel sections at seeded disc samples: A is the
/// backward shift, B u = (S(z) - S(0)) u / z, C h = h(0), D = S(0).
inline CanonicalRealization canonical_coisometric_realization(const TransferFunction& s,
                                                              const Tolerances& tol,
                                                              int max_per_radius = 128) {
  const int p = s.output_dim();
  const int m = s.input_dim();
  CanonicalRealization out;
  KernelGram k;
  bool saturated = false;
  for (int per = 2; per <= max_per_radius; per *= 2) {
    k = kernel_gram(s, disc_sample_points(s, per, tol.seed, tol), tol);
    const int rank = k.inertia.plus + k.inertia.minus;
    out.rank_history.push_back(rank);
    const std::size_t h = out.rank_history.size();
    if (h >= 4 && out.rank_history[h - 1] == out.rank_history[h - 2] &&
        out.rank_history[h - 2] == out.rank_history[h - 3] &&
        out.rank_history[h - 3] == out.rank_history[h - 4]) {
      saturated = true;
      break;
    }
  }
  if (!saturated) {
    std::ostringstream os;
    os << "canonical_coisometric_realization: kernel rank does not saturate (ranks";
    for (int r : out.rank_history) os << ' ' << r;
    os << "); H(S) appears infinite-dimensional";
    throw UnsupportedError(os.str());
  }
  out.points = k.points;
  const std::vector<cplx>& pts = k.points;
  std::vector<Matrix> values;
  for (cplx w : pts) values.push_back(s(w, tol));

  // Eigenvectors of the Gram with |lambda| above the rank cutoff, positive
  // first; c_k = v_k / sqrt|lambda_k| gives J-orthonormal sections.
  const HermitianEigen es = eig_hermitian(k.gram);
  const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
  const double cutoff = std::max(tol.rank_tol, tol.psd_tol) * scale;
  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index i = es.values.size() - 1; i >= 0; --i) {
    if (es.values(i) > cutoff) pos.push_back(i);
  }
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) < -cutoff) neg.push_back(i);
  }
  const int r = static_cast<int>(pos.size() + neg.size());
  out.rank = r;
  Matrix coeffs(k.gram.rows(), r);
  {
    int col = 0;
    for (Eigen::Index i : pos) {
      coeffs.col(col++) = es.vectors.col(i) / std::sqrt(es.values(i));
    }
    for (Eigen::Index i : neg) {
      coeffs.col(col++) = es.vectors.col(i) / std::sqrt(-es.values(i));
    }
  }
  const SignatureSpace sig(static_cast<int>(pos.size()), static_cast<int>(neg.size()));
  const Matrix s0 = s(0.0, tol);
  if (r == 0) {
    out.system = Colligation::feedthrough(s0);
  } else {
    // Values of the basis at the samples: F = G c (stacked p-blocks).
    const Matrix f = k.gram * coeffs;
    const Matrix c0 = detail::kernel_sections_at(s, pts, values, coeffs, 0.0, tol);
    Matrix ya(f.rows(), r), yb(f.rows(), m);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(i) * p;
      ya.middleRows(row, p) = (f.middleRows(row, p) - c0) / pts[i];
      yb.middleRows(row, p) = (values[i] - s0) / pts[i];
    }
    const LeastSquares la = solve_least_squares(f, ya);
    const LeastSquares lb = solve_least_squares(f, yb);
    out.fit_residual = std::max(la.residual / std::max(1.0, spectral_norm(ya)),
                                lb.residual / std::max(1.0, spectral_norm(yb)));
    out.system = Colligation(sig, la.solution, lb.solution, c0, s0);
  }

  // Held-out checks.
  const std::vector<cplx> held = disc_sample_points(s, 5, tol.seed + 1, tol);
  for (cplx z : held) {
    const Matrix sz = s(z, tol);
    out.transfer_residual = std::max(
        out.transfer_residual,
        spectral_norm(transfer_eval(out.system, z, tol) - sz) / std::max(1.0, spectral_norm(sz)));
    if (r) {
      const Matrix fz = detail::kernel_sections_at(s, pts, values, coeffs, z, tol);
      const Matrix model =
          out.system.C() * (identity(r) - z * out.system.A()).lu().solve(identity(r));
      out.reproducing_residual = std::max(
          out.reproducing_residual,
          spectral_norm(model - fz) / std::max(1.0, spectral_norm(fz)));
    }
  }
  const SystemClass cls = classify(out.system, tol);
  const double fit_tol = 1e-6;
  if (!cls.coisometric() || !cls.observable || out.fit_residual > fit_tol ||
      out.transfer_residual > fit_tol || out.reproducing_residual > fit_tol) {
    std::ostringstream os;
    os << "canonical_coisometric_realization: certification failed (co-isometric "
       << cls.coisometric() << ", observable " << cls.observable << ", fit "
       << out.fit_residual << ", transfer " << out.transfer_residual << ", reproducing "
       << out.reproducing_residual << ")";
    throw ConsistencyError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel decomposition H(S) = S2 H(S1) + H(S2)

struct KernelDecompositionReport {
  int rank_s1 = 0;
  int rank_s2 = 0;
  int rank_s = 0;
  double inclusion_residual_1 = 0.0;  // S2 H(S1) inside H(S)
  double inclusion_residual_2 = 0.0;  // H(S2) inside H(S)
  double isometry_residual = 0.0;     // M^H J_S M - J_1
  double orthogonality_residual = 0.0;
  double complement_residual = 0.0;   // N^H J_S N - J_2
  bool condition_i = false;
  bool condition_ii = false;
  bool holds = false;
  int obstruction_dimension = 0;  // observability obstruction of the canonical cascade
  bool agree = false;
};

/// Decides (i) H(S) = S2 H(S1) (+) H(S2) and (ii) h1 -> S2 h1 isometric, for
/// finite-rank kernels, and cross-checks against the observability of the
/// cascade of canonical co-isometric realizations.
inline KernelDecompositionReport check_kernel_decomposition(const TransferFunction& s1,
                                                            const TransferFunction& s2,
                                                            const Tolerances& tol) {
  require(s1.output_dim() == s2.input_dim(),
          "check_kernel_decomposition: dimensions are not compatible");
  const TransferFunction s = compose(s1, s2);
  const CanonicalRealization c1 = canonical_coisometric_realization(s1, tol);
  const CanonicalRealization c2 = canonical_coisometric_realization(s2, tol);
  const CanonicalRealization cs = canonical_coisometric_realization(s, tol);
  KernelDecompositionReport rep;
  rep.rank_s1 = c1.rank;
  rep.rank_s2 = c2.rank;
  rep.rank_s = cs.rank;

  auto basis_values = [&](const Colligation& sys, cplx z) -> Matrix {
    const int n = sys.state_dim();
    if (n == 0) return Matrix(sys.output_dim(), 0);
    return sys.C() * (identity(n) - z * sys.A()).lu().solve(identity(n));
  };
  const int p = s.output_dim();
  const std::vector<cplx> pts = disc_sample_points(s, 16, tol.seed + 2, tol);
  const Eigen::Index rows = static_cast<Eigen::Index>(pts.size()) * p;
  Matrix g(rows, cs.rank), y1(rows, c1.rank), y2(rows, c2.rank);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Index row = static_cast<Eigen::Index>(i) * p;
    const cplx z = pts[i];
    g.middleRows(row, p) = basis_values(cs.system, z);
    y1.middleRows(row, p) = s2(z, tol) * basis_values(c1.system, z);
    y2.middleRows(row, p) = basis_values(c2.system, z);
  }
  const double decision_tol = 1e-6;
  const Matrix js = cs.system.J();
  const Matrix j1 = c1.system.J();
  const Matrix j2 = c2.system.J();
  Matrix mm = Matrix::Zero(cs.rank, c1.rank);
  Matrix nn = Matrix::Zero(cs.rank, c2.rank);
  if (cs.rank > 0) {
    const LeastSquares l1 = solve_least_squares(g, y1);
    const LeastSquares l2 = solve_least_squares(g, y2);
    mm = l1.solution;
    nn = l2.solution;
    rep.inclusion_residual_1 = y1.size() ? l1.residual / std::max(1.0, spectral_norm(y1)) : 0.0;
    rep.inclusion_residual_2 = y2.size() ? l2.residual / std::max(1.0, spectral_norm(y2)) : 0.0;
  } else {
    rep.inclusion_residual_1 = y1.size() ? spectral_norm(y1) : 0.0;
    rep.inclusion_residual_2 = y2.size() ? spectral_norm(y2) : 0.0;
  }
  auto norm_or_zero = [](const Matrix& x) { return x.size() ? spectral_norm(x) : 0.0; };
  rep.isometry_residual = norm_or_zero(mm.adjoint() * js * mm - j1);
  rep.orthogonality_residual = norm_or_zero(mm.adjoint() * js * nn);
  rep.complement_residual = norm_or_zero(nn.adjoint() * js * nn - j2);
  rep.condition_ii = rep.inclusion_residual_1 <= decision_tol &&
                     rep.isometry_residual <= decision_tol;
  rep.condition_i = rep.inclusion_residual_1 <= decision_tol &&
                    rep.inclusion_residual_2 <= decision_tol &&
                    rep.orthogonality_residual <= decision_tol &&
                    rep.complement_residual <= decision_tol &&
                    rep.rank_s1 + rep.rank_s2 == rep.rank_s;
  rep.holds = rep.condition_i && rep.condition_ii;

  rep.obstruction_dimension = obstruction_observable(c1.system, c2.system, tol).dimension;
  rep.agree = rep.holds == (rep.obstruction_dimension == 0);
  if (!rep.agree) {
    throw ConsistencyError(
        "check_kernel_decomposition: kernel test and obstruction test disagree");
  }
  return rep;
}

/// Dual version on sharp transforms: H(S#) = S1# H(S2#) (+) H(S1#).
inline KernelDecompositionReport check_kernel_decomposition_dual(const TransferFunction& s1,
                                                                 const TransferFunction& s2,
                                                                 const Tolerances& tol) {
  return check_kernel_decomposition(s2.sharp(), s1.sharp(), tol);
}

// ---------------------------------------------------------------------------
// The counterexample S = (a, 1/b) / sqrt(2)

/// a: conservative realization of a scalar inner function.
inline Colligation counterexample_system(cplx alpha, const Colligation& a,
                                         const Tolerances& tol) {
  require(a.input_dim() == 1 && a.output_dim() == 1 && a.kappa() == 0,
          "counterexample: a must be a scalar Hilbert-state system");
  const Colligation binv = invert_conservative(scalar_blaschke(alpha), tol);
  const double r = 1.0 / std::sqrt(2.0);
  const auto [sig, perm] = direct_sum(a.state(), binv.state());
  const Matrix pt = perm.transpose();
  const Matrix am = block_diag(a.A(), binv.A());
  const Matrix bm = block_diag(a.B(), binv.B());
  const Matrix cm = hstack(a.C(), binv.C()) * r;
  const Matrix dm = hstack(a.D(), binv.D()) * r;
  return Colligation(sig, perm * am * pt, perm * bm, cm * pt, dm);
}

/// S_l = (a b, 1) / sqrt(2), realized as a Hilbert-state system.
inline Colligation counterexample_left_factor(cplx alpha, const Colligation& a) {
  const Colligation ab = cascade(a, scalar_blaschke(alpha));
  const double r = 1.0 / std::sqrt(2.0);
  const Matrix b = hstack(ab.B(), Matrix::Zero(ab.state_dim(), 1));
  Matrix d(1, 2);
  d << ab.D()(0, 0) * r, r;
  return Colligation(ab.state(), ab.A(), b, ab.C() * r, d);
}

inline Colligation shift_system() {
  Matrix a(1, 1), b(1, 1), c(1, 1), d(1, 1);
  a << 0.0;
  b << 1.0;
  c << 1.0;
  d << 0.0;
  return Colligation(SignatureSpace(1, 0), a, b, c, d);
}

struct CounterexampleReport {
  Colligation sigma_sl;    // canonical co-isometric realization of S_l
  Colligation sigma_binv;  // canonical co-isometric realization of 1/b
  ObstructionReport observable;    // of Sigma_{1/b} o Sigma_{S_l}
  ObstructionReport controllable;  // of the adjoint cascade
  int rank_s = 0;
};

inline CounterexampleReport run_counterexample(cplx alpha, const Colligation& a,
                                               const Tolerances& tol) {
  const Colligation binv = invert_conservative(scalar_blaschke(alpha), tol);
  const CanonicalRealization sl =
      canonical_coisometric_realization(TransferFunction(counterexample_left_factor(alpha, a)), tol);
  const CanonicalRealization bi = canonical_coisometric_realization(TransferFunction(binv), tol);
  const CanonicalRealization sc = canonical_coisometric_realization(
      TransferFunction(counterexample_system(alpha, a, tol)), tol);
  CounterexampleReport r{sl.system, bi.system, {}, {}, sc.rank};
  r.observable = obstruction_observable(sl.system, bi.system, tol);
  r.controllable =
      obstruction_controllable(adjoint_system(bi.system), adjoint_system(sl.system), tol);
  return r;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_SCHUR_HPP
