#ifndef PONTRYAGIN_KERNEL_HPP
#define PONTRYAGIN_KERNEL_HPP

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pontryagin/colligation.hpp"

namespace pontryagin {

/// Rational function backed by a realization. When the backing is a
/// Colligation the state metric is kept, so sharp() goes through the adjoint
/// system; otherwise through the metric-free adjoint.
class TransferFunction {
 public:
  explicit TransferFunction(BareRealization r)
      : bare_(std::move(r)), poles_(disc_poles(bare_)) {}

  explicit TransferFunction(const Colligation& s)
      : bare_(s.bare()), system_(s), poles_(disc_poles(bare_)) {}

  const BareRealization& realization() const { return bare_; }
  const std::optional<Colligation>& colligation() const { return system_; }
  int input_dim() const { return bare_.input_dim(); }
  int output_dim() const { return bare_.output_dim(); }

  /// Points 1/lambda in the open disc for eigenvalues |lambda| > 1 of A.
  /// Unreduced, so it may contain removable points.
  const std::vector<cplx>& poles() const { return poles_; }

  Matrix operator()(cplx z, const Tolerances& tol = Tolerances{}) const {
    return transfer_eval(bare_, z, tol);
  }

  TransferFunction sharp() const {
    if (system_) return TransferFunction(adjoint_system(*system_));
    return TransferFunction(adjoint_bare(bare_));
  }

 private:
  BareRealization bare_;
  std::optional<Colligation> system_;
  std::vector<cplx> poles_;
};

inline Matrix evaluate(const TransferFunction& s, cplx z,
                       const Tolerances& tol = Tolerances{}) {
  return s(z, tol);
}

inline TransferFunction sharp(const TransferFunction& s) { return s.sharp(); }

/// Pole multiplicity in the disc, counted on a minimal realization.
inline int pole_multiplicity(const TransferFunction& s, const Tolerances& tol) {
  return pole_multiplicity(s.realization(), tol);
}

// ---------------------------------------------------------------------------
// Sample plans

/// Points closer than this to a pole are skipped.
inline double pole_exclusion_radius(const Tolerances& tol) {
  return std::max(10.0 * tol.rank_tol, 1e-3);
}

inline double seeded_offset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Radii {0.3, 0.6, 0.9} times `per_radius` equally spaced angles with a
/// seeded rotation. Doubling `per_radius` gives a superset.
inline std::vector<cplx> disc_sample_points(const TransferFunction& s,
                                            int per_radius, std::uint64_t seed,
                                            const Tolerances& tol) {
  require(per_radius > 0, "disc_sample_points: need at least one angle");
  const double offset = seeded_offset(seed) * 2.0 * M_PI / per_radius;
  const double exclusion = pole_exclusion_radius(tol);
  std::vector<cplx> out;
  for (double r : {0.3, 0.6, 0.9}) {
    for (int k = 0; k < per_radius; ++k) {
      const cplx w = std::polar(r, offset + 2.0 * M_PI * k / per_radius);
      bool near = false;
      for (cplx p : s.poles()) near = near || std::abs(w - p) < exclusion;
      if (!near) out.push_back(w);
    }
  }
  return out;
}

/// Roots of unity rotated by a seeded offset.
inline std::vector<cplx> boundary_sample_points(int count, std::uint64_t seed) {
  return circle_points(count, seeded_offset(seed) * 2.0 * M_PI / count);
}

// ---------------------------------------------------------------------------
// Schur kernel

struct KernelGram {
  std::vector<cplx> points;
  Matrix gram;
  Inertia inertia;
};

/// Block (i, j) = (I - S(w_i) S(w_j)^H) / (1 - w_i conj(w_j)).
inline KernelGram kernel_gram(const TransferFunction& s,
                              const std::vector<cplx>& points,
                              const Tolerances& tol) {
  const int p = s.output_dim();
  const double exclusion = pole_exclusion_radius(tol);
  std::vector<Matrix> values;
  values.reserve(points.size());
  for (cplx w : points) {
    require(std::abs(w) < 1.0, "kernel_gram: sample points must lie in the open disc");
    for (cplx pole : s.poles()) {
      if (std::abs(w - pole) < exclusion) {
        throw PoleProximityError("kernel_gram: sample point is too close to a pole",
                                 pole);
      }
    }
    values.push_back(s(w, tol));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  KernelGram k;
  k.points = points;
  k.gram.resize(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const cplx den = 1.0 - points[i] * std::conj(points[j]);
      k.gram.block(i * p, j * p, p, p) =
          (identity(p) - values[i] * values[j].adjoint()) / den;
    }
  }
  k.gram = hermitian_part(k.gram);
  k.inertia = inertia(k.gram, tol);
  return k;
}

struct NegativeSquaresEstimate {
  int kappa_hat = 0;
  int pole_multiplicity = 0;
  bool stabilized = false;
  bool agreement = false;
  std::vector<int> history;  // n_minus per sample size
  int samples = 0;           // points in the last Gram
};

/// Grows nested sample sets (angles doubling from 2 per radius) until
/// n_minus is unchanged over three enlargements, or the budget is spent.
inline NegativeSquaresEstimate negative_squares_estimate(
    const TransferFunction& s, const Tolerances& tol, int max_per_radius = 128) {
  NegativeSquaresEstimate e;
  e.pole_multiplicity = pole_multiplicity(s, tol);
  for (int m = 2; m <= max_per_radius; m *= 2) {
    const std::vector<cplx> pts = disc_sample_points(s, m, tol.seed, tol);
    const KernelGram k = kernel_gram(s, pts, tol);
    e.history.push_back(k.inertia.minus);
    e.samples = static_cast<int>(pts.size());
    const std::size_t h = e.history.size();
    if (h >= 4 && e.history[h - 1] == e.history[h - 2] &&
        e.history[h - 2] == e.history[h - 3] && e.history[h - 3] == e.history[h - 4]) {
      e.stabilized = true;
      break;
    }
  }
  e.kappa_hat = e.history.back();
  e.agreement = e.stabilized && e.kappa_hat == e.pole_multiplicity;
  return e;
}

// ---------------------------------------------------------------------------
// Index preservation of a passive system

struct SimpKarReport {
  SubspaceClass Xc_perp_class = SubspaceClass::zero;
  SubspaceClass Xo_perp_class = SubspaceClass::zero;
  SubspaceClass Xs_perp_class = SubspaceClass::zero;
  int kappa = 0;
  bool index_preserving = false;  // all three complements Hilbert
  NegativeSquaresEstimate negsq;
  bool index_matches = false;     // kappa_hat == kappa
  bool cross_validated = false;   // the two verdicts agree
};

inline SimpKarReport simp_kar_check(const Colligation& s, const Tolerances& tol) {
  if (!classify(s, tol).passive()) {
    throw InputError("simp_kar_check: system is not passive");
  }
  const KrylovReport kr = krylov_report(s, tol);
  SimpKarReport r;
  r.Xc_perp_class = kr.Xc_perp_class;
  r.Xo_perp_class = kr.Xo_perp_class;
  r.Xs_perp_class = kr.Xs_perp_class;
  r.kappa = s.kappa();
  r.index_preserving = is_hilbert(r.Xc_perp_class) && is_hilbert(r.Xo_perp_class) &&
                       is_hilbert(r.Xs_perp_class);
  r.negsq = negative_squares_estimate(TransferFunction(s), tol);
  r.index_matches = r.negsq.stabilized && r.negsq.kappa_hat == r.kappa;
  r.cross_validated = r.index_matches == r.index_preserving;
  return r;
}

}  // namespace pontryagin

#endif  // PONTRYAGIN_KERNEL_HPP
