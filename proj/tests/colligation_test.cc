#include "pontryagin/colligation.hpp"

#include <gtest/gtest.h>

#include "pontryagin/blaschke.hpp"
#include "pontryagin/similarity.hpp"
#include "random_systems.h"

namespace pontryagin {
namespace {

using test::Rng;

const double kSqrt3 = std::sqrt(3.0);

Matrix scalar(cplx v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

// Taylor coefficients by the trapezoid rule on a circle of radius r.
Matrix taylor_oracle(const Colligation& s, int k, double r = 0.3, int n = 64) {
  Matrix acc = Matrix::Zero(s.output_dim(), s.input_dim());
  for (int j = 0; j < n; ++j) {
    const cplx z = std::polar(r, 2.0 * M_PI * j / n);
    acc += transfer_eval(s, z) * std::pow(z, -k);
  }
  return acc / static_cast<double>(n);
}

GTEST_TEST(SystemOperator, Blocks) {
  const Colligation b = scalar_blaschke(0.5);
  const SystemOperator op = system_operator(b);
  Matrix expected(2, 2);
  // clang-format off
  expected << 0.5,         kSqrt3 / 2,
              kSqrt3 / 2, -0.5;
  // clang-format on
  EXPECT_LT((op.T - expected).norm(), 1e-15);
  const Colligation back = from_system_operator(op.T, b.state(), 1, 1);
  EXPECT_EQ(back.A(), b.A());
  EXPECT_EQ(back.D(), b.D());

  const Colligation f = Colligation::feedthrough(identity(2));
  EXPECT_EQ(system_operator(f).T, identity(2));

  // State 2, input 1, output 3 needs a 5 x 3 operator; a 5 x 4 one is refused.
  EXPECT_THROW(from_system_operator(Matrix::Zero(5, 4), SignatureSpace(2, 0), 1, 3),
               InputError);
  EXPECT_THROW(Colligation(SignatureSpace(2, 0), Matrix::Zero(2, 2), Matrix::Zero(2, 1),
                           Matrix::Zero(3, 1), Matrix::Zero(3, 2)),
               InputError);
}

GTEST_TEST(Classify, Examples) {
  const Tolerances tol;
  const Colligation b = scalar_blaschke(0.5);
  const SystemClass cb = classify(b, tol);
  EXPECT_EQ(cb.kind, SystemKind::conservative);
  EXPECT_TRUE(cb.minimal);
  const SystemOperator op = system_operator(b);
  EXPECT_LT((op.T.adjoint() * op.T - identity(2)).norm(), 1e-15);

  const SystemClass half = classify(Colligation::feedthrough(scalar(0.5)), tol);
  EXPECT_EQ(half.kind, SystemKind::passive);
  EXPECT_FALSE(half.metric.isometry);

  const Colligation inv = invert_conservative(b, tol);
  EXPECT_EQ(inv.kappa(), 1);
  EXPECT_EQ(classify(inv, tol).kind, SystemKind::conservative);
  const SystemOperator iop = system_operator(inv);
  const Matrix j = iop.dom_metric.cast<cplx>().asDiagonal();
  EXPECT_LT((iop.T.adjoint() * j * iop.T - j).norm(), 1e-12);

  EXPECT_EQ(classify(Colligation::feedthrough(scalar(2.0)), tol).kind,
            SystemKind::none);
}

GTEST_TEST(Classify, PassiveImpliesBicontraction) {
  Rng rng(11);
  const Tolerances tol;
  for (int trial = 0; trial < 40; ++trial) {
    const SignatureSpace st(test::uniform_int(rng, 0, 4), test::uniform_int(rng, 0, 2));
    const Colligation s =
        test::random_passive(st, test::uniform_int(rng, 1, 3), test::uniform_int(rng, 1, 3), rng);
    const SystemClass c = classify(s, tol);
    EXPECT_TRUE(c.passive());
    EXPECT_TRUE(c.bicontraction_check);
  }
}

GTEST_TEST(AdjointSystem, Involution) {
  Rng rng(12);
  const Colligation s = test::random_passive(SignatureSpace(2, 1), 2, 3, rng);
  const Colligation ss = adjoint_system(adjoint_system(s));
  EXPECT_LT((ss.A() - s.A()).norm(), 1e-15);
  EXPECT_LT((ss.B() - s.B()).norm(), 1e-15);
  EXPECT_LT((ss.C() - s.C()).norm(), 1e-15);
  EXPECT_LT((ss.D() - s.D()).norm(), 1e-15);
  EXPECT_TRUE(classify(adjoint_system(s), Tolerances{}).passive());

  const Colligation b = adjoint_system(scalar_blaschke(0.5));
  EXPECT_NEAR(std::abs(transfer_eval(b, 0.0)(0, 0) - (-0.5)), 0.0, 1e-15);
}

GTEST_TEST(AdjointSystem, SharpRelation) {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Colligation s = test::random_passive(SignatureSpace(3, 1), 2, 2, rng);
    const Colligation a = adjoint_system(s);
    for (int k = 0; k < 5; ++k) {
      const cplx z = test::random_disc_point(rng, 0.0, 0.4);
      const Matrix lhs = transfer_eval(a, z);
      const Matrix rhs = transfer_eval(s, std::conj(z)).adjoint();
      EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
    }
  }
}

GTEST_TEST(TransferEval, Values) {
  const Tolerances tol;
  const Colligation b = scalar_blaschke(0.5);
  EXPECT_EQ(transfer_eval(b, 0.0), b.D());
  EXPECT_NEAR(std::abs(transfer_eval(b, 1.0)(0, 0) - 1.0), 0.0, 1e-14);
  const Colligation inv = invert_conservative(b, tol);
  EXPECT_NEAR(std::abs(transfer_eval(inv, 0.0)(0, 0) + 2.0), 0.0, 1e-14);
  try {
    transfer_eval(inv, 0.5);
    FAIL() << "expected PoleProximityError";
  } catch (const PoleProximityError& e) {
    EXPECT_NEAR(std::abs(e.nearest_pole() - 0.5), 0.0, 1e-12);
  }
}

GTEST_TEST(Markov, Values) {
  const Colligation b = scalar_blaschke(0.5);
  EXPECT_NEAR(std::abs(markov(b, 1)(0, 0) - 0.75), 0.0, 1e-15);
  const Colligation zero_a(SignatureSpace(2, 0), Matrix::Zero(2, 2), Matrix::Ones(2, 1),
                           Matrix::Ones(1, 2), Matrix::Zero(1, 1));
  EXPECT_EQ(markov(zero_a, 2).norm(), 0.0);

  Rng rng(14);
  const Colligation s = test::random_passive(SignatureSpace(3, 0), 2, 2, rng);
  for (int k = 0; k <= 6; ++k) {
    EXPECT_LT((markov(s, k) - taylor_oracle(s, k)).norm(), 1e-10) << "k=" << k;
  }
}

GTEST_TEST(KrylovReport, Examples) {
  const Tolerances tol;
  const Colligation dead(SignatureSpace(2, 0), 0.3 * identity(2), Matrix::Zero(2, 1),
                         Matrix::Ones(1, 2), Matrix::Zero(1, 1));
  EXPECT_EQ(krylov_report(dead, tol).Xc.dim(), 0);

  const KrylovReport b = krylov_report(scalar_blaschke(0.5), tol);
  EXPECT_TRUE(b.minimal());
  EXPECT_EQ(b.Xs_perp_class, SubspaceClass::zero);
}

GTEST_TEST(KrylovReport, ResolventSpan) {
  Rng rng(15);
  const Tolerances tol;
  for (int trial = 0; trial < 10; ++trial) {
    // Partially controllable: B confined to an invariant subspace.
    const int n = 5;
    Matrix a = 0.3 * test::random_matrix(n, n, rng);
    a.bottomLeftCorner(2, 3).setZero();
    Matrix b = Matrix::Zero(n, 1);
    b.topRows(3) = test::random_matrix(3, 1, rng);
    const Colligation s(SignatureSpace(3, 2), a, b, test::random_matrix(1, n, rng),
                        Matrix::Zero(1, 1));
    const KrylovReport kr = krylov_report(s, tol);
    // Oracle: columns (I - zA)^{-1} B at sample points.
    Matrix cols(n, 0);
    for (cplx z : circle_points(12, 0.2)) {
      const Matrix v = (identity(n) - 0.3 * z * a).lu().solve(b);
      cols = hstack(cols, v);
    }
    const Matrix span = column_space(cols, 1e-9);
    EXPECT_EQ(span.cols(), kr.Xc.dim());
    EXPECT_LT(max_principal_angle_sine(span, kr.Xc.orthonormal_basis()), 1e-8);
  }
}

GTEST_TEST(KrylovReport, PerpIntersectionIdentity) {
  Rng rng(16);
  const Tolerances tol;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = test::uniform_int(rng, 2, 8);
    const SignatureSpace sp(n - 1, 1);
    Matrix a = 0.4 * test::random_matrix(n, n, rng);
    Matrix b = test::random_matrix(n, 1, rng);
    Matrix c = test::random_matrix(1, n, rng);
    // Decouple the last coordinates to create non-trivial complements.
    const int dead = test::uniform_int(rng, 0, n - 1);
    for (int i = n - dead; i < n; ++i) {
      a.row(i).setZero();
      a.col(i).setZero();
      a(i, i) = 0.2;
      b.row(i).setZero();
      c.col(i).setZero();
    }
    const Colligation s(sp, a, b, c, Matrix::Zero(1, 1));
    const KrylovReport kr = krylov_report(s, tol);
    EXPECT_GE(kr.Xs.dim(), std::max(kr.Xc.dim(), kr.Xo.dim()));
    // (Xs)perp equals (Xc)perp intersected with (Xo)perp.
    const Matrix inter = null_space(
        vstack(kr.Xc.orthonormal_basis().adjoint() * sp.metric(),
               kr.Xo.orthonormal_basis().adjoint() * sp.metric()),
        1e-12);
    EXPECT_EQ(inter.cols(), kr.Xs_perp.dim());
    EXPECT_LT(max_principal_angle_sine(inter, kr.Xs_perp.orthonormal_basis()), 1e-9);
  }
}

GTEST_TEST(Restriction, WholeSpaceIsIdentity) {
  Rng rng(17);
  const Tolerances tol;
  const Colligation s = test::random_passive(SignatureSpace(2, 1), 1, 2, rng);
  const Colligation r =
      restriction(s, IndefiniteSubspace(s.state(), identity(3)), tol);
  EXPECT_EQ(r.state(), s.state());
  EXPECT_LT((r.A() - s.A()).norm(), 1e-12);
  EXPECT_LT((r.B() - s.B()).norm(), 1e-12);
  EXPECT_LT((r.C() - s.C()).norm(), 1e-12);
}

GTEST_TEST(Dilation, BlockTriangular) {
  Rng rng(18);
  const Tolerances tol;
  const int nd = 2, nx = 2, ns = 1, m = 2, p = 1;
  const int n = nd + nx + ns;
  Matrix a = 0.3 * test::random_matrix(n, n, rng);
  a.block(nd, 0, nx + ns, nd).setZero();
  a.block(nd + nx, nd, ns, nx).setZero();
  Matrix b = test::random_matrix(n, m, rng);
  b.bottomRows(ns).setZero();
  Matrix c = test::random_matrix(p, n, rng);
  c.leftCols(nd).setZero();
  const Matrix d = test::random_matrix(p, m, rng);
  const Colligation big(SignatureSpace(n, 0), a, b, c, d);
  const Colligation small(SignatureSpace(nx, 0), a.block(nd, nd, nx, nx),
                          b.middleRows(nd, nx), c.middleCols(nd, nx), d);
  const DilationReport ok = is_dilation_of(big, small, identity(n), nd, ns, tol);
  EXPECT_TRUE(ok.is_dilation) << ok.failure;
  EXPECT_LT(ok.transfer_residual, 1e-10);

  Matrix c_bad = c;
  c_bad(0, 0) = 1.0;
  const Colligation broken(SignatureSpace(n, 0), a, b, c_bad, d);
  const DilationReport bad = is_dilation_of(broken, small, identity(n), nd, ns, tol);
  EXPECT_FALSE(bad.is_dilation);
  EXPECT_EQ(bad.failure, "C D is not zero");
}

GTEST_TEST(UnitarySimilarity, RecoversJUnitaryStateChange) {
  Rng rng(19);
  const Tolerances tol;
  for (int trial = 0; trial < 10; ++trial) {
    const SignatureSpace st(2, 1);
    const Colligation s1 = test::random_passive(st, 2, 2, rng);
    const Matrix u = test::random_j_unitary(st, rng);
    const Matrix ui = st.metric() * u.adjoint() * st.metric();
    const Colligation s2(st, u * s1.A() * ui, u * s1.B(), s1.C() * ui, s1.D());
    const auto r = unitary_similarity(s1, s2, tol);
    ASSERT_TRUE(r.has_value());
    EXPECT_LT((r->Z - u).norm(), 1e-8);
    EXPECT_LT(r->residual_a, 1e-9);
    EXPECT_LT(r->residual_metric, 1e-9);
  }
  const Colligation b = scalar_blaschke(0.5);
  const auto same = unitary_similarity(b, b, tol);
  ASSERT_TRUE(same.has_value());
  EXPECT_LT((same->Z - identity(1)).norm(), 1e-12);

  const Colligation other = scalar_blaschke(0.4);
  SimilarityFailure why;
  EXPECT_FALSE(unitary_similarity(b, other, tol, &why).has_value());
  EXPECT_EQ(why.reason, "feedthrough operators differ");
}

GTEST_TEST(WeakSimilarity, RecoversStateChange) {
  Rng rng(20);
  const Tolerances tol;
  const Colligation b = scalar_blaschke(0.5);
  const SimilarityResult same = weak_similarity(b, b, tol);
  EXPECT_LT((same.Z - identity(1)).norm(), 1e-12);

  for (int trial = 0; trial < 10; ++trial) {
    const SignatureSpace st(3, 1);
    const Colligation s1 = test::random_passive(st, 2, 2, rng, 0.2);
    const Matrix t = identity(4) + 0.05 * test::random_matrix(4, 4, rng);
    const Matrix ti = t.inverse();
    const Colligation s2(st, t * s1.A() * ti, t * s1.B(), s1.C() * ti, s1.D());
    const SimilarityResult r = weak_similarity(s1, s2, tol);
    EXPECT_TRUE(r.invertible);
    EXPECT_LT((r.Z - t).norm(), 1e-8);
    EXPECT_LT(std::max({r.residual_a, r.residual_b, r.residual_c}), 1e-8);
  }
  EXPECT_THROW(weak_similarity(b, scalar_blaschke(0.4), tol), InputError);
}

GTEST_TEST(RealizeFromTaylor, Examples) {
  const Tolerances tol;
  std::vector<Matrix> h{scalar(-0.5)};
  for (int k = 1; k < 8; ++k) h.push_back(scalar(0.75 * std::pow(0.5, k - 1)));
  const BareRealization r = realize_from_taylor(h, 3, tol);
  ASSERT_EQ(r.state_dim(), 1);
  EXPECT_NEAR(std::abs(r.A(0, 0) - 0.5), 0.0, 1e-12);

  std::vector<Matrix> constant(6, Matrix::Zero(2, 2));
  constant[0] = identity(2);
  EXPECT_EQ(realize_from_taylor(constant, 2, tol).state_dim(), 0);

  const Colligation prod = blaschke_product(
      std::vector<Colligation>{scalar_blaschke(0.5), scalar_blaschke(cplx(0.0, 0.3))});
  std::vector<Matrix> hp;
  for (int k = 0; k < 10; ++k) hp.push_back(markov(prod, k));
  const BareRealization rp = realize_from_taylor(hp, 4, tol);
  ASSERT_EQ(rp.state_dim(), 2);
  Eigen::VectorXcd ev = eig_general(rp.A);
  std::vector<cplx> got{ev(0), ev(1)};
  std::sort(got.begin(), got.end(), [](cplx x, cplx y) { return std::abs(x) < std::abs(y); });
  EXPECT_NEAR(std::abs(got[0] - cplx(0.0, -0.3)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(got[1] - 0.5), 0.0, 1e-9);
  for (int k = 0; k < 10; ++k) {
    EXPECT_LT((markov(rp, k) - hp[k]).norm(), 1e-10);
  }
}

GTEST_TEST(RealizeFromTaylor, OrderBoundTooSmall) {
  const Colligation prod = blaschke_product(std::vector<Colligation>{
      scalar_blaschke(0.5), scalar_blaschke(0.3), scalar_blaschke(-0.6)});
  std::vector<Matrix> h;
  for (int k = 0; k < 6; ++k) h.push_back(markov(prod, k));
  EXPECT_THROW(realize_from_taylor(h, 2, Tolerances{}), ConsistencyError);
}

}  // namespace
}  // namespace pontryagin
