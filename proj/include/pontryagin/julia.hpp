#ifndef PONTRYAGIN_JULIA_HPP
#define PONTRYAGIN_JULIA_HPP

#include <string>

#include "pontryagin/colligation.hpp"

namespace pontryagin {

/// Julia operator of a J-contraction T between spaces with diagonal metrics
/// Jd (domain) and Jc (codomain):
///
///   U = [[T, D_T*], [D_T^[*], -L^H]] : dom + D_T* -> cod + D_T
///
/// with Hilbert defect spaces. E E^H = Jd - T^H Jc T and F F^H = Jc - T Jd T^H
/// are the factored metric defects; D_T = Jd E and D_T* = F.
struct JuliaParts {
  Matrix T;
  Eigen::VectorXd dom_metric;
  Eigen::VectorXd cod_metric;
  Matrix E;        // dom x dim(D_T)
  Matrix F;        // cod x dim(D_T*)
  Matrix D_T;      // Jd E
  Matrix D_Tstar;  // F
  Matrix L;        // dim(D_T*) x dim(D_T)
  Matrix U;
  Eigen::VectorXd U_dom_metric;  // diag(Jd, I)
  Eigen::VectorXd U_cod_metric;  // diag(Jc, I)
  double unitarity_residual = 0.0;     // max of ||U^[*]U - I||, ||UU^[*] - I||
  double link_residual = 0.0;          // ||E L^H - T^H Jc F||
  int defect_dim() const { return static_cast<int>(E.cols()); }
  int defect_star_dim() const { return static_cast<int>(F.cols()); }
};

namespace detail {

inline Matrix diag_metric(const Eigen::VectorXd& d) {
  return d.cast<cplx>().asDiagonal();
}

inline void require_equal_negative_index(const Eigen::VectorXd& dm,
                                         const Eigen::VectorXd& cm) {
  const int nd = static_cast<int>((dm.array() < 0).count());
  const int nc = static_cast<int>((cm.array() < 0).count());
  require(nd == nc,
          "julia: domain and codomain must have equal negative index");
}

// Completes E, F (given) to the Julia operator and certifies it.
inline JuliaParts julia_assemble(const Matrix& t, const Eigen::VectorXd& dm,
                                 const Eigen::VectorXd& cm, const Matrix& e,
                                 const Matrix& f, const Tolerances& tol) {
  JuliaParts j;
  j.T = t;
  j.dom_metric = dm;
  j.cod_metric = cm;
  j.E = e;
  j.F = f;
  const Matrix jd = diag_metric(dm);
  const Matrix jc = diag_metric(cm);
  j.D_T = jd * e;
  j.D_Tstar = f;
  const Eigen::Index nd = t.cols();
  const Eigen::Index nc = t.rows();
  const Eigen::Index de = e.cols();
  const Eigen::Index df = f.cols();

  // E L^H = T^H Jc F; E has full column rank so the solution is unique.
  const LeastSquares ls = solve_least_squares(e, t.adjoint() * jc * f);
  const Matrix lh = ls.solution;  // de x df
  j.L = lh.adjoint();
  const double scale = std::max(1.0, spectral_norm(t));
  j.link_residual = ls.residual;
  if (j.link_residual > tol.metric_tol * scale * scale) {
    throw ConsistencyError("julia: link equation E L^H = T^H Jc F is inconsistent");
  }

  j.U = Matrix::Zero(nc + de, nd + df);
  j.U.topLeftCorner(nc, nd) = t;
  if (df > 0) j.U.topRightCorner(nc, df) = j.D_Tstar;
  if (de > 0) j.U.bottomLeftCorner(de, nd) = e.adjoint();
  if (de > 0 && df > 0) j.U.bottomRightCorner(de, df) = -lh;
  j.U_dom_metric.resize(nd + df);
  j.U_dom_metric << dm, Eigen::VectorXd::Ones(df);
  j.U_cod_metric.resize(nc + de);
  j.U_cod_metric << cm, Eigen::VectorXd::Ones(de);

  const Matrix ud = diag_metric(j.U_dom_metric);
  const Matrix uc = diag_metric(j.U_cod_metric);
  // U^[*] = Jdom U^H Jcod.
  const Matrix ustar = ud * j.U.adjoint() * uc;
  j.unitarity_residual =
      std::max(spectral_norm(ustar * j.U - identity(nd + df)),
               spectral_norm(j.U * ustar - identity(nc + de)));
  if (j.unitarity_residual > tol.metric_tol * scale * scale) {
    throw ConsistencyError("julia: assembled operator is not J-unitary (residual " +
                           std::to_string(j.unitarity_residual) + ")");
  }
  return j;
}

}  // namespace detail

struct DefectOperators {
  Matrix D_T;
  Matrix D_Tstar;
  Matrix E;
  Matrix F;
};

inline DefectOperators defect_operators(const Matrix& t,
                                        const Eigen::VectorXd& dom_metric,
                                        const Eigen::VectorXd& cod_metric,
                                        const Tolerances& tol) {
  require(t.rows() == cod_metric.size() && t.cols() == dom_metric.size(),
          "defect_operators: matrix shape does not match the metrics");
  require_finite(t, "defect_operators input");
  detail::require_equal_negative_index(dom_metric, cod_metric);
  const Matrix jd = detail::diag_metric(dom_metric);
  const Matrix jc = detail::diag_metric(cod_metric);
  const MetricReport rep = metric_classify(t, dom_metric, cod_metric, tol);
  if (!rep.contraction) {
    throw InputError("defect_operators: operator is not a J-contraction");
  }
  DefectOperators d;
  d.E = psd_factor(hermitian_part(jd - t.adjoint() * jc * t), tol);
  d.F = psd_factor(hermitian_part(jc - t * jd * t.adjoint()), tol);
  if (d.E.rows() == 0) d.E = Matrix(t.cols(), 0);
  if (d.F.rows() == 0) d.F = Matrix(t.rows(), 0);
  d.D_T = jd * d.E;
  d.D_Tstar = d.F;
  return d;
}

inline DefectOperators defect_operators(const Matrix& t, const SignatureSpace& dom,
                                        const SignatureSpace& cod,
                                        const Tolerances& tol) {
  return defect_operators(t, dom.metric_diagonal(), cod.metric_diagonal(), tol);
}

inline JuliaParts julia_operator(const Matrix& t, const Eigen::VectorXd& dom_metric,
                                 const Eigen::VectorXd& cod_metric,
                                 const Tolerances& tol) {
  const DefectOperators d = defect_operators(t, dom_metric, cod_metric, tol);
  return detail::julia_assemble(t, dom_metric, cod_metric, d.E, d.F, tol);
}

inline JuliaParts julia_operator(const Matrix& t, const SignatureSpace& dom,
                                 const SignatureSpace& cod, const Tolerances& tol) {
  return julia_operator(t, dom.metric_diagonal(), cod.metric_diagonal(), tol);
}

/// Julia operator from caller-supplied factors E, F of the metric defects
/// (any full-column-rank factors, e.g. rotated ones).
inline JuliaParts julia_operator_from_factors(const Matrix& t,
                                              const SignatureSpace& dom,
                                              const SignatureSpace& cod,
                                              const Matrix& e, const Matrix& f,
                                              const Tolerances& tol) {
  const Eigen::VectorXd dm = dom.metric_diagonal();
  const Eigen::VectorXd cm = cod.metric_diagonal();
  detail::require_equal_negative_index(dm, cm);
  const Matrix jd = dom.metric();
  const Matrix jc = cod.metric();
  const double scale = std::max(1.0, spectral_norm(t));
  require(e.rows() == t.cols() && f.rows() == t.rows(),
          "julia_operator_from_factors: factor shapes do not match");
  if (spectral_norm(e * e.adjoint() - (jd - t.adjoint() * jc * t)) >
          tol.psd_tol * scale * scale ||
      spectral_norm(f * f.adjoint() - (jc - t * jd * t.adjoint())) >
          tol.psd_tol * scale * scale) {
    throw InputError("julia_operator_from_factors: factors do not reproduce the defects");
  }
  return detail::julia_assemble(t, dm, cm, e, f, tol);
}

/// Essential uniqueness: finds unitaries W1 (on D_T) and W2 (on D_T*) with
/// U' = diag(I, W1) U diag(I, W2) and reports the residual.
struct JuliaComparison {
  Matrix W1;
  Matrix W2;
  double residual = 0.0;
};

inline JuliaComparison compare_julia(const JuliaParts& a, const JuliaParts& b) {
  require(a.defect_dim() == b.defect_dim() &&
              a.defect_star_dim() == b.defect_star_dim() &&
              a.T.rows() == b.T.rows() && a.T.cols() == b.T.cols(),
          "compare_julia: operators have different shapes");
  auto procrustes = [](const Matrix& m) -> Matrix {
    if (m.size() == 0) return Matrix(m.rows(), m.cols());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
  };
  JuliaComparison c;
  // b.E^H = W1 a.E^H  and  b.F = a.F W2.
  c.W1 = procrustes(b.E.adjoint() * a.E);
  c.W2 = procrustes(a.F.adjoint() * b.F);
  const Eigen::Index nd = a.T.cols();
  const Eigen::Index nc = a.T.rows();
  const Matrix left = block_diag(identity(nc), c.W1);
  const Matrix right = block_diag(identity(nd), c.W2);
  c.residual = spectral_norm(left * a.U * right - b.U);
  return c;
}

/// Conservative embedding with the same state space and main operator: the
/// system operator of the result is the Julia operator of T_Sigma.
inline Colligation julia_embedding(const Colligation& s, const Tolerances& tol,
                                   JuliaParts* parts = nullptr) {
  const SystemOperator op = system_operator(s);
  const MetricReport rep =
      metric_classify(op.T, op.dom_metric, op.cod_metric, tol);
  if (!rep.contraction) throw InputError("julia_embedding: system is not passive");
  const JuliaParts j = julia_operator(op.T, op.dom_metric, op.cod_metric, tol);
  const int n = s.state_dim();
  const int m = s.input_dim();
  const int p = s.output_dim();
  const int df = j.defect_star_dim();
  const int de = j.defect_dim();
  // U acts on [x; u; d*] -> [x; y; d].
  const Matrix& u = j.U;
  Colligation out(s.state(), u.topLeftCorner(n, n), u.block(0, n, n, m + df),
                  u.block(n, 0, p + de, n), u.block(n, n, p + de, m + df));
  if (parts) *parts = j;
  return out;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_JULIA_HPP
