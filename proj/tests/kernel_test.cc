#include "pontryagin/kernel.hpp"

#include <gtest/gtest.h>

#include "pontryagin/blaschke.hpp"
#include "random_systems.h"

namespace pontryagin {
namespace {

using test::Rng;

cplx blaschke_value(cplx alpha, cplx z) {
  return (z - alpha) / (1.0 - std::conj(alpha) * z);
}

GTEST_TEST(TransferFunction, EvaluateAndSharp) {
  const TransferFunction b(scalar_blaschke(0.5));
  EXPECT_NEAR(std::abs(b(0.0)(0, 0) + 0.5), 0.0, 1e-15);
  const TransferFunction bs = b.sharp();
  for (cplx z : circle_points(7, 0.1)) {
    EXPECT_NEAR(std::abs(bs(0.7 * z)(0, 0) - blaschke_value(0.5, 0.7 * z)), 0.0, 1e-14);
  }
  EXPECT_TRUE(b.poles().empty());
  EXPECT_EQ(TransferFunction(invert_conservative(scalar_blaschke(0.5), Tolerances{})).poles().size(),
            1u);

  Rng rng(51);
  const Colligation s = test::random_passive(SignatureSpace(2, 1), 2, 3, rng);
  const TransferFunction f(s);
  const TransferFunction fs = sharp(f);
  const TransferFunction fss = sharp(fs);
  int used = 0;
  while (used < 20) {
    const cplx z = test::random_disc_point(rng, 0.0, 0.9);
    try {
      const Matrix v = f(z);
      EXPECT_LT((fs(std::conj(z)) - v.adjoint()).norm(), 1e-10 * std::max(1.0, v.norm()));
      EXPECT_LT((fss(z) - v).norm(), 1e-10 * std::max(1.0, v.norm()));
      ++used;
    } catch (const PoleProximityError&) {
    }
  }
  // Metric-free backing goes through the bare adjoint.
  const TransferFunction bare(s.bare());
  EXPECT_FALSE(bare.colligation().has_value());
  EXPECT_LT((bare.sharp()(0.3) - fs(0.3)).norm(), 1e-12);
}

GTEST_TEST(KernelGram, Examples) {
  const Tolerances tol;
  const KernelGram kb = kernel_gram(TransferFunction(scalar_blaschke(0.5)), {0.0}, tol);
  EXPECT_NEAR(kb.gram(0, 0).real(), 0.75, 1e-15);
  EXPECT_EQ(kb.inertia.plus, 1);

  const TransferFunction binv(invert_conservative(scalar_blaschke(0.5), tol));
  const KernelGram ki = kernel_gram(binv, {0.0}, tol);
  EXPECT_NEAR(ki.gram(0, 0).real(), -3.0, 1e-13);
  EXPECT_EQ(ki.inertia.minus, 1);
  EXPECT_THROW(kernel_gram(binv, {0.5}, tol), PoleProximityError);
  EXPECT_THROW(kernel_gram(binv, {1.5}, tol), InputError);

  Rng rng(52);
  const TransferFunction u(Colligation::feedthrough(test::random_unitary(2, rng)));
  const KernelGram ku = kernel_gram(u, {0.1, 0.5, cplx(0.0, -0.3)}, tol);
  EXPECT_LT(ku.gram.norm(), 1e-14);
  EXPECT_EQ(ku.inertia.zero, 6);
}

GTEST_TEST(KernelGram, ProductIdentity) {
  // K_{S2 S1}(w, z) = K_{S2}(w, z) + S2(z) K_{S1}(w, z) S2(w)^H.
  Rng rng(53);
  const Tolerances tol;
  const Colligation s1 = test::random_passive(SignatureSpace(2, 1), 2, 2, rng);
  const Colligation s2 = test::random_passive(SignatureSpace(1, 1), 2, 2, rng);
  const TransferFunction f1(s1), f2(s2);
  const TransferFunction f(cascade(s1, s2));
  int used = 0;
  while (used < 20) {
    const cplx z = test::random_disc_point(rng, 0.0, 0.9);
    const cplx w = test::random_disc_point(rng, 0.0, 0.9);
    try {
      const Matrix k = kernel_gram(f, {z, w}, tol).gram.block(0, 2, 2, 2);
      const Matrix k1 = kernel_gram(f1, {z, w}, tol).gram.block(0, 2, 2, 2);
      const Matrix k2 = kernel_gram(f2, {z, w}, tol).gram.block(0, 2, 2, 2);
      const Matrix rhs = k2 + f2(z) * k1 * f2(w).adjoint();
      EXPECT_LT((k - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
      ++used;
    } catch (const PoleProximityError&) {
    }
  }
}

GTEST_TEST(KernelGram, MonotoneInSamples) {
  Rng rng(54);
  const Tolerances tol;
  const TransferFunction f(test::random_kl_system(1, 2, 2, rng));
  int last = 0;
  for (int m = 2; m <= 32; m *= 2) {
    const int minus = kernel_gram(f, disc_sample_points(f, m, tol.seed, tol), tol).inertia.minus;
    EXPECT_GE(minus, last);
    EXPECT_LE(minus, 2);
    last = minus;
  }
}

GTEST_TEST(NegativeSquares, Examples) {
  const Tolerances tol;
  const NegativeSquaresEstimate b = negative_squares_estimate(TransferFunction(scalar_blaschke(0.5)), tol);
  EXPECT_EQ(b.kappa_hat, 0);
  EXPECT_TRUE(b.agreement);
  const NegativeSquaresEstimate bi = negative_squares_estimate(
      TransferFunction(invert_conservative(scalar_blaschke(0.5), tol)), tol);
  EXPECT_EQ(bi.kappa_hat, 1);
  EXPECT_EQ(bi.pole_multiplicity, 1);
  EXPECT_TRUE(bi.stabilized);
  EXPECT_TRUE(bi.agreement);
}

GTEST_TEST(NegativeSquares, EqualsPoleMultiplicity) {
  Rng rng(55);
  const Tolerances tol;
  for (int kappa = 0; kappa <= 3; ++kappa) {
    for (int trial = 0; trial < 3; ++trial) {
      const Colligation s = test::random_kl_system(test::uniform_int(rng, 0, 2), kappa,
                                                   test::uniform_int(rng, 1, 2), rng);
      const NegativeSquaresEstimate e = negative_squares_estimate(TransferFunction(s), tol);
      EXPECT_TRUE(e.stabilized);
      EXPECT_EQ(e.kappa_hat, kappa);
      EXPECT_EQ(e.pole_multiplicity, kappa);
    }
  }
}

GTEST_TEST(SimpKar, Examples) {
  const Tolerances tol;
  Rng rng(56);
  const SimpKarReport p = simp_kar_check(test::random_blaschke(3, 2, rng), tol);
  EXPECT_TRUE(p.index_preserving);
  EXPECT_EQ(p.Xs_perp_class, SubspaceClass::zero);
  EXPECT_TRUE(p.cross_validated);

  // Blaschke factor plus a decoupled expanding negative coordinate.
  const double s3 = std::sqrt(3.0) / 2;
  Matrix a(2, 2), b(2, 1), c(1, 2), d(1, 1);
  // clang-format off
  a << 0.5, 0.0,
       0.0, 2.0;
  // clang-format on
  b << s3, 0.0;
  c << s3, 0.0;
  d << -0.5;
  const SimpKarReport q = simp_kar_check(Colligation(SignatureSpace(1, 1), a, b, c, d), tol);
  EXPECT_EQ(q.Xs_perp_class, SubspaceClass::antihilbert);
  EXPECT_FALSE(q.index_preserving);
  EXPECT_EQ(q.negsq.kappa_hat, 0);
  EXPECT_FALSE(q.index_matches);
  EXPECT_TRUE(q.cross_validated);

  const SimpKarReport h = simp_kar_check(test::random_passive(SignatureSpace(3, 0), 1, 2, rng), tol);
  EXPECT_TRUE(h.index_preserving);
  EXPECT_EQ(h.kappa, 0);
  EXPECT_TRUE(h.cross_validated);
}

}  // namespace
}  // namespace pontryagin
