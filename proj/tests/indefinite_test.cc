#include "pontryagin/indefinite.hpp"

#include <gtest/gtest.h>

#include "random_systems.h"

namespace pontryagin {
namespace {

using test::Rng;

Vector unit(int n, int i) {
  Vector v = Vector::Zero(n);
  v(i) = 1.0;
  return v;
}

GTEST_TEST(JInner, Basis) {
  const SignatureSpace sp(1, 1);
  EXPECT_EQ(j_inner(unit(2, 0), unit(2, 0), sp), cplx(1.0));
  EXPECT_EQ(j_inner(unit(2, 1), unit(2, 1), sp), cplx(-1.0));
  EXPECT_EQ(j_inner(unit(2, 0), unit(2, 1), sp), cplx(0.0));
  EXPECT_THROW(j_inner(unit(3, 0), unit(2, 0), sp), InputError);
}

GTEST_TEST(JInner, ConjugateSymmetric) {
  Rng rng(1);
  const SignatureSpace sp(3, 2);
  const Vector x = test::random_matrix(5, 1, rng);
  const Vector y = test::random_matrix(5, 1, rng);
  EXPECT_NEAR(std::abs(j_inner(x, y, sp) - std::conj(j_inner(y, x, sp))), 0.0,
              1e-14);
}

GTEST_TEST(JAdjoint, Nilpotent) {
  const SignatureSpace sp(1, 1);
  Matrix m(2, 2);
  // clang-format off
  m << 0, 1,
       0, 0;
  // clang-format on
  Matrix expected(2, 2);
  // clang-format off
  expected << 0, 0,
             -1, 0;
  // clang-format on
  EXPECT_LT((j_adjoint(m, sp, sp) - expected).norm(), 1e-15);
  EXPECT_LT((j_adjoint(identity(2), sp, sp) - identity(2)).norm(), 1e-15);
}

GTEST_TEST(JAdjoint, DefiningIdentityOnRandomData) {
  Rng rng(2);
  const SignatureSpace dom(2, 1);
  const SignatureSpace cod(3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = test::random_matrix(5, 3, rng);
    const Matrix ms = j_adjoint(m, dom, cod);
    const Vector x = test::random_matrix(3, 1, rng);
    const Vector y = test::random_matrix(5, 1, rng);
    // Oracle: evaluate both inner products directly from the definitions.
    const cplx lhs = j_inner(m * x, y, cod);
    const cplx rhs = j_inner(x, ms * y, dom);
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12 * (1 + std::abs(lhs)));
    EXPECT_LT((j_adjoint(ms, cod, dom) - m).norm(), 1e-14);
  }
}

GTEST_TEST(Inertia, Diagonal) {
  const Tolerances tol;
  Matrix h = Matrix::Zero(3, 3);
  h(0, 0) = 1.0;
  h(1, 1) = -1.0;
  EXPECT_EQ(inertia(h, tol), (Inertia{1, 1, 1}));
  EXPECT_EQ(inertia(identity(4), tol), (Inertia{4, 0, 0}));
}

GTEST_TEST(Inertia, RejectsNonHermitian) {
  Matrix h = identity(2);
  h(0, 1) = 1.0;
  EXPECT_THROW(inertia(h, Tolerances{}), InputError);
}

GTEST_TEST(Inertia, SylvesterCongruence) {
  Rng rng(3);
  const Tolerances tol;
  for (int n = 1; n <= 12; ++n) {
    // Prescribed signs: eigenvalues of modulus in [0.5, 2].
    const int plus = test::uniform_int(rng, 0, n);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
      d(i) = (i < plus ? 1.0 : -1.0) * test::uniform(rng, 0.5, 2.0);
    }
    const Matrix q = test::random_unitary(n, rng);
    const Matrix h = hermitian_part(q * d.cast<cplx>().asDiagonal() * q.adjoint());
    const Matrix p = identity(n) + 0.3 * test::random_matrix(n, n, rng);
    const Inertia base = inertia(h, tol);
    EXPECT_EQ(base, (Inertia{plus, 0, n - plus}));
    EXPECT_EQ(inertia(hermitian_part(p.adjoint() * h * p), tol), base);
  }
}

GTEST_TEST(MetricClassify, Examples) {
  const Tolerances tol;
  const SignatureSpace h1(1, 0);
  Matrix half(1, 1);
  half << 0.5;
  const MetricReport r = metric_classify(half, h1, h1, tol);
  EXPECT_EQ(r.verdict, MetricClass::contraction);
  EXPECT_FALSE(r.isometry);

  const SignatureSpace sp(1, 1);
  Matrix rot = Matrix::Zero(2, 2);
  rot(0, 0) = 1.0;
  rot(1, 1) = std::polar(1.0, 0.7);
  EXPECT_EQ(metric_classify(rot, sp, sp, tol).verdict, MetricClass::unitary);

  const double t = 0.8;
  Matrix hyp(2, 2);
  // clang-format off
  hyp << std::cosh(t), std::sinh(t),
         std::sinh(t), std::cosh(t);
  // clang-format on
  // Oracle: M^H J M = J directly.
  EXPECT_LT((hyp.adjoint() * sp.metric() * hyp - sp.metric()).norm(), 1e-14);
  EXPECT_EQ(metric_classify(hyp, sp, sp, tol).verdict, MetricClass::unitary);
  EXPECT_EQ(metric_classify(j_adjoint(hyp, sp, sp), sp, sp, tol).verdict,
            MetricClass::unitary);

  Matrix big(1, 1);
  big << 2.0;
  EXPECT_EQ(metric_classify(big, h1, h1, tol).verdict, MetricClass::none);
}

GTEST_TEST(MetricClassify, UnitaryImpliesAdjointUnitary) {
  Rng rng(4);
  const Tolerances tol;
  for (int trial = 0; trial < 20; ++trial) {
    const SignatureSpace sp(test::uniform_int(rng, 0, 4), test::uniform_int(rng, 0, 3));
    const Matrix u = test::random_j_unitary(sp, rng);
    EXPECT_EQ(metric_classify(u, sp, sp, tol).verdict, MetricClass::unitary);
    EXPECT_EQ(metric_classify(j_adjoint(u, sp, sp), sp, sp, tol).verdict,
              MetricClass::unitary);
  }
}

GTEST_TEST(SubspaceClassify, Examples) {
  const Tolerances tol;
  const SignatureSpace sp(1, 1);
  EXPECT_EQ(subspace_classify(IndefiniteSubspace(sp, unit(2, 0)), tol),
            SubspaceClass::hilbert);
  EXPECT_EQ(subspace_classify(IndefiniteSubspace(sp, unit(2, 1)), tol),
            SubspaceClass::antihilbert);
  EXPECT_EQ(subspace_classify(IndefiniteSubspace(sp, unit(2, 0) + unit(2, 1)), tol),
            SubspaceClass::degenerate);
  EXPECT_EQ(subspace_classify(IndefiniteSubspace(sp, identity(2)), tol),
            SubspaceClass::regular);
  EXPECT_THROW(IndefiniteSubspace(sp, Matrix::Ones(2, 2)), InputError);
}

GTEST_TEST(JProjection, Examples) {
  const SignatureSpace sp(1, 1);
  const Matrix p = j_projection(IndefiniteSubspace(sp, unit(2, 0)));
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  EXPECT_LT((p - expected).norm(), 1e-14);
  EXPECT_LT((j_projection(IndefiniteSubspace(sp, identity(2))) - identity(2)).norm(),
            1e-14);
  EXPECT_THROW(j_projection(IndefiniteSubspace(sp, unit(2, 0) + unit(2, 1))),
               DegenerateSubspaceError);
}

GTEST_TEST(JProjection, RandomRegular) {
  Rng rng(5);
  const Tolerances tol;
  for (int trial = 0; trial < 30; ++trial) {
    const SignatureSpace sp(test::uniform_int(rng, 1, 5), test::uniform_int(rng, 1, 4));
    const int k = test::uniform_int(rng, 1, sp.dim() - 1);
    const IndefiniteSubspace s(sp, test::random_matrix(sp.dim(), k, rng));
    if (subspace_classify(s, tol) == SubspaceClass::degenerate) continue;
    const Matrix p = j_projection(s, tol);
    EXPECT_LT((p * p - p).norm(), 1e-10);
    EXPECT_LT((j_adjoint(p, sp, sp) - p).norm(), 1e-10);
    // range(P) = span(V).
    EXPECT_LT((p * s.basis() - s.basis()).norm(), 1e-10);

    const IndefiniteSubspace c = j_complement(s, tol);
    EXPECT_EQ(s.dim() + c.dim(), sp.dim());
    EXPECT_LT((s.basis().adjoint() * sp.metric() * c.basis()).norm(), 1e-10);
    const IndefiniteSubspace cc = j_complement(c, tol);
    EXPECT_LT(max_principal_angle_sine(cc.orthonormal_basis(), s.orthonormal_basis()),
              1e-9);
  }
}

GTEST_TEST(JComplement, Examples) {
  const Tolerances tol;
  const SignatureSpace sp(1, 1);
  const IndefiniteSubspace c = j_complement(IndefiniteSubspace(sp, unit(2, 0)), tol);
  ASSERT_EQ(c.dim(), 1);
  EXPECT_NEAR(std::abs(c.orthonormal_basis()(1, 0)), 1.0, 1e-14);

  // span{e1 + 0.5 e2}: complement spanned by 0.5 e1 + e2, neutral-free.
  const IndefiniteSubspace s(sp, unit(2, 0) + 0.5 * unit(2, 1));
  const IndefiniteSubspace sc = j_complement(s, tol);
  ASSERT_EQ(sc.dim(), 1);
  Vector expected = 0.5 * unit(2, 0) + unit(2, 1);
  expected /= expected.norm();
  EXPECT_NEAR(std::abs(sc.orthonormal_basis().col(0).dot(expected)), 1.0, 1e-12);
  EXPECT_EQ(subspace_classify(sc, tol), SubspaceClass::antihilbert);

  // Hilbert subspace: complement carries the whole negative index.
  const SignatureSpace big(3, 2);
  const Matrix v = Matrix::Identity(5, 2);
  const IndefiniteSubspace hc = j_complement(IndefiniteSubspace(big, v), tol);
  const Inertia in = inertia(hc.normalized_gram(), tol);
  EXPECT_EQ(in.minus, big.neg);
}

GTEST_TEST(JOrthonormalBasis, CanonicalGram) {
  Rng rng(6);
  const Tolerances tol;
  const SignatureSpace sp(3, 2);
  const IndefiniteSubspace s(sp, test::random_matrix(5, 3, rng));
  const JOrthonormalBasis b = j_orthonormal_basis(s, tol);
  EXPECT_EQ(b.signature.dim(), 3);
  EXPECT_LT((b.basis.adjoint() * sp.metric() * b.basis - b.signature.metric()).norm(),
            1e-10);
}

GTEST_TEST(PsdFactor, Examples) {
  const Tolerances tol;
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.75;
  const Matrix e = psd_factor(m, tol);
  ASSERT_EQ(e.cols(), 1);
  EXPECT_NEAR(std::abs(e(0, 0)), std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_NEAR(std::abs(e(1, 0)), 0.0, 1e-15);
  EXPECT_EQ(psd_factor(Matrix::Zero(3, 3), tol).cols(), 0);

  Matrix indefinite = identity(2);
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(psd_factor(indefinite, tol), InputError);
}

GTEST_TEST(PsdFactor, RandomLowRank) {
  Rng rng(7);
  const Tolerances tol;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = test::uniform_int(rng, 1, 8);
    const int r = test::uniform_int(rng, 0, n);
    const Matrix x = test::random_matrix(n, r, rng);
    const Matrix m = x * x.adjoint();
    const Matrix e = psd_factor(m, tol);
    EXPECT_EQ(e.cols(), r);
    EXPECT_LT((e * e.adjoint() - m).norm(), 1e-10 * std::max(1.0, m.norm()));
  }
}

GTEST_TEST(SpectralSubspace, Diagonal) {
  const Tolerances tol;
  const SignatureSpace sp(2, 0);
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 0.5;
  a(1, 1) = 2.0;
  const IndefiniteSubspace out =
      spectral_subspace(a, sp, SpectralRegion::outside_closed_disc, tol);
  ASSERT_EQ(out.dim(), 1);
  EXPECT_NEAR(std::abs(out.orthonormal_basis()(1, 0)), 1.0, 1e-14);
  const IndefiniteSubspace in =
      spectral_subspace(a, sp, SpectralRegion::inside_open_disc, tol);
  ASSERT_EQ(in.dim(), 1);
  EXPECT_NEAR(std::abs(in.orthonormal_basis()(0, 0)), 1.0, 1e-14);
}

GTEST_TEST(SpectralSubspace, JordanBlock) {
  const Tolerances tol;
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 2.0;
  a(0, 1) = 1.0;
  a(1, 1) = 2.0;
  a(2, 2) = 0.3;
  Rng rng(8);
  const Matrix s = identity(3) + 0.4 * test::random_matrix(3, 3, rng);
  const Matrix as = s * a * s.inverse();
  const IndefiniteSubspace out = spectral_subspace(
      as, SignatureSpace(3, 0), SpectralRegion::outside_closed_disc, tol);
  ASSERT_EQ(out.dim(), 2);
  // Oracle: the generalized eigenspace is ker (A - 2I)^2.
  const Matrix n2 = (as - 2.0 * identity(3)) * (as - 2.0 * identity(3));
  const Matrix ker = null_space(n2, 1e-8);
  ASSERT_EQ(ker.cols(), 2);
  EXPECT_LT(max_principal_angle_sine(ker, out.orthonormal_basis()), 1e-7);
}

GTEST_TEST(SpectralSubspace, SplitsAmbientAndIsInvariant) {
  Rng rng(9);
  const Tolerances tol;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = test::uniform_int(rng, 1, 10);
    const Matrix a = 0.6 * test::random_matrix(n, n, rng);
    const SignatureSpace sp(n, 0);
    const IndefiniteSubspace in =
        spectral_subspace(a, sp, SpectralRegion::inside_open_disc, tol);
    const IndefiniteSubspace out =
        spectral_subspace(a, sp, SpectralRegion::outside_closed_disc, tol);
    EXPECT_EQ(in.dim() + out.dim(), n);
    EXPECT_EQ(numerical_rank(hstack(in.orthonormal_basis(), out.orthonormal_basis()),
                             1e-8),
              n);
    for (const IndefiniteSubspace* s : {&in, &out}) {
      const Matrix& q = s->orthonormal_basis();
      if (q.cols() == 0) continue;
      EXPECT_LT((a * q - q * (q.adjoint() * a * q)).norm(), 1e-10 * (1 + a.norm()));
    }
  }
}

GTEST_TEST(SpectralSubspace, AmbiguityNearCircle) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = std::polar(1.0 + 1e-12, 0.3);
  a(1, 1) = 0.5;
  try {
    spectral_subspace(a, SignatureSpace(2, 0), SpectralRegion::outside_closed_disc,
                      Tolerances{});
    FAIL() << "expected AmbiguityError";
  } catch (const AmbiguityError& e) {
    EXPECT_NEAR(std::abs(e.eigenvalue() - a(0, 0)), 0.0, 1e-12);
  }
  const IndefiniteSubspace band = spectral_subspace(
      a, SignatureSpace(2, 0), SpectralRegion::modulus_one_band, Tolerances{});
  EXPECT_EQ(band.dim(), 1);
}

}  // namespace
}  // namespace pontryagin
