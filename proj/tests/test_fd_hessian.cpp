#include <cmath>

#include <gtest/gtest.h>

#include "aarc/fd_hessian.hpp"
#include "test_util.hpp"

using namespace aarc;
using testutil::Rng;

namespace {

GradientFn gradient_of(const Objective &f, int *calls = nullptr) {
  return [&f, calls](const Vector &x) {
    if (calls)
      ++*calls;
    Vector g;
    f.value_gradient(x, g);
    return g;
  };
}

double spectral_norm(const Matrix &M) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()));
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

CubicSubsolver dense_subsolver(double kappa_theta = 0.5) {
  return [kappa_theta](const CubicModel &m) { return solve_dense(m, 1e-13, kappa_theta); };
}

std::shared_ptr<const Objective> quadratic(const Matrix &A, const Vector &b) {
  return std::make_shared<QuadraticObjective>(A, b);
}

} // namespace

TEST(FdHessian, CubicHandComputation) {
  // f = x^3/6, f' = x^2/2: (f'(0.3) - f'(0))/0.3 = 0.15, plus the shift 0.3.
  int calls = 0;
  const GradientFn grad = [&calls](const Vector &x) {
    ++calls;
    return Vector::Constant(1, 0.5 * x[0] * x[0]);
  };
  const Matrix H = fd_hessian(grad, Vector::Zero(1), 0.3, 1.0);
  EXPECT_NEAR(H(0, 0), 0.45, 1e-15);
  EXPECT_EQ(calls, 2);
}

TEST(FdHessian, QuadraticIsExactUpToShift) {
  Rng rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.integer(1, 12);
    const Matrix A = rng.psd(d, d);
    auto f = quadratic(A, rng.vec(d));
    int calls = 0;
    for (double h : {1e-1, 3e-2, 1e-2}) {
      const double kc = rng.uniform(0.1, 3);
      calls = 0;
      const Matrix H = fd_hessian(gradient_of(*f, &calls), rng.vec(d), h, kc);
      EXPECT_EQ(calls, d + 1);
      EXPECT_NEAR(spectral_norm(H - A), kc * h, 1e-12);
      EXPECT_EQ(H, H.transpose());
    }
  }
}

TEST(FdHessian, LogisticErrorShrinksLinearlyInH) {
  Rng rng(42);
  auto f = make_logistic(testutil::random_dataset(rng, 60, 8), 1e-3);
  const Vector x = rng.vec(8);
  Vector g;
  Matrix H;
  f->value_gradient_hessian(x, g, H);
  std::vector<double> lh, le;
  for (double h : {1e-2, 1e-3, 1e-4, 1e-5}) {
    lh.push_back(std::log(h));
    le.push_back(std::log(spectral_norm(fd_hessian(gradient_of(*f), x, h, 0.0) - H)));
  }
  const double mx = (lh[0] + lh[1] + lh[2] + lh[3]) / 4, my = (le[0] + le[1] + le[2] + le[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lh[i] - mx) * (le[i] - my);
    sxx += (lh[i] - mx) * (lh[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, 1.0, 0.1);
}

TEST(FdHessian, LogisticErrorWithinMeasuredConstant) {
  // Largest |A_h - hessian| / h over this instance, 20 points and h in 1e-2..1e-5,
  // measured once with the shift switched off.
  const double kappa_e_hat = 0.0758;
  Rng rng(41);
  auto f = make_logistic(testutil::random_dataset(rng, 60, 8), 1e-3);
  for (int k = 0; k < 20; ++k) {
    const Vector x = rng.vec(8);
    Vector g;
    Matrix H;
    f->value_gradient_hessian(x, g, H);
    for (double h : {1e-2, 1e-3, 1e-4, 1e-5}) {
      const double kc = 1.0;
      const Matrix Hh = fd_hessian(gradient_of(*f), x, h, kc);
      EXPECT_LE(spectral_norm(Hh - H), (kappa_e_hat + kc) * h);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(Hh);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(FdHessian, RejectsBadInput) {
  const GradientFn grad = [](const Vector &x) { return x; };
  EXPECT_THROW(fd_hessian(grad, Vector::Zero(2), 0.0, 1.0), Error);
  const GradientFn blowup = [](const Vector &x) {
    return x[0] > 0 ? Vector::Constant(2, std::numeric_limits<double>::infinity()) : Vector(Vector::Zero(2));
  };
  EXPECT_THROW(fd_hessian(blowup, Vector::Zero(2), 0.1, 1.0), NonFiniteError);
}

TEST(FdHessianConfig, Validation) {
  FDHessianConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma4 = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.h_init = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.kappa_c = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(SearchStepPair, NoShrinkWhenAlreadyCoupled) {
  Rng rng(43);
  const Matrix A = rng.psd(5, 5);
  auto f = quadratic(A, rng.vec(5));
  const Vector x = rng.vec(5, 3.0);
  Vector g;
  const double f0 = f->value_gradient(x, g);
  FDHessianConfig cfg;
  const StepPair p = search_step_pair(gradient_of(*f), x, f0, g, 1.0, cfg, 1e-3, dense_subsolver());
  ASSERT_GT(p.solution.s.norm(), 1e-3);
  EXPECT_EQ(p.shrink_count, 0);
  EXPECT_EQ(p.h, 1e-3);
  EXPECT_NEAR(spectral_norm(p.H - A), cfg.kappa_c * 1e-3, 1e-12);
}

TEST(SearchStepPair, ShrinkCountMatchesClosedForm) {
  Rng rng(44);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int d = rng.integer(2, 6);
    const Matrix A = rng.psd(d, d) + Matrix::Identity(d, d);
    const Vector b = rng.vec(d);
    auto f = quadratic(A, b);
    // Scale the point so the step has length about c.
    const double c = std::pow(10.0, rng.uniform(-6, -2));
    const Vector xs = A.ldlt().solve(b);
    const Vector x = xs + c * rng.vec(d).normalized();
    Vector g;
    const double f0 = f->value_gradient(x, g);
    FDHessianConfig cfg;
    cfg.kappa_c = 1e-12;
    cfg.kappa_hs = rng.uniform(0.5, 2.0);
    cfg.gamma4 = rng.uniform(0.2, 0.8);
    const double sigma = 1.0;
    const double h0 = 0.5;
    // Step of the exact model; the shift kappa_c h moves it by a negligible amount.
    const double snorm = solve_dense(CubicModel::from_matrix(f0, g, A, sigma)).s.norm();
    const double ratio = std::log(h0 / (cfg.kappa_hs * snorm)) / std::log(1.0 / cfg.gamma4);
    if (std::abs(ratio - std::round(ratio)) < 1e-3)
      continue;
    const int expected = std::max(0, int(std::ceil(ratio)));
    const StepPair p = search_step_pair(gradient_of(*f), x, f0, g, sigma, cfg, h0, dense_subsolver());
    EXPECT_EQ(p.shrink_count, expected) << "c=" << c;
    EXPECT_LE(p.h, cfg.kappa_hs * p.solution.s.norm());
    EXPECT_NEAR(p.h, h0 * std::pow(cfg.gamma4, p.shrink_count), 1e-15 * h0);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(SearchStepPair, CouplingAndErrorBoundOnLogistic) {
  const double kappa_e_hat = 0.0758;
  Rng rng(41);
  auto f = make_logistic(testutil::random_dataset(rng, 60, 8), 1e-3);
  FDHessianConfig cfg;
  for (int k = 0; k < 20; ++k) {
    const Vector x = rng.vec(8);
    Vector g;
    Matrix H;
    const double f0 = f->value_gradient_hessian(x, g, H);
    for (double sigma : {1e-3, 1.0, 1e3}) {
      const StepPair p = search_step_pair(gradient_of(*f), x, f0, g, sigma, cfg, cfg.h_init, dense_subsolver());
      const double ns = p.solution.s.norm();
      EXPECT_LE(p.h, cfg.kappa_hs * ns);
      EXPECT_LE(spectral_norm(p.H - H), (kappa_e_hat + cfg.kappa_c) * cfg.kappa_hs * ns);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(p.H);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(SearchStepPair, NonConvexCurvatureShrinksUntilBudget) {
  // Gradient of -x^2/2 (concave): every difference Hessian is -1 + kappa_c h < 0.
  const GradientFn grad = [](const Vector &x) { return Vector(-x); };
  FDHessianConfig cfg;
  cfg.max_shrinks = 7;
  EXPECT_THROW(search_step_pair(grad, Vector::Ones(1), 0.0, -Vector::Ones(1), 1.0, cfg, 0.5, dense_subsolver()),
               ShrinkBudgetError);
}

TEST(SearchStepPair, IndefiniteDifferenceMatrixIsShrunkAway) {
  // f = x^2/2 - 10 x^3/3 + y^2/2 at the origin: the forward difference in x is 1 - 10 h,
  // so with the shift the matrix is indefinite for h > 1/9 and PSD below.
  const GradientFn grad = [](const Vector &v) {
    return Vector((Vector(2) << v[0] - 10.0 * v[0] * v[0], v[1]).finished());
  };
  FDHessianConfig cfg;
  const Vector x = Vector::Zero(2);
  const Vector g = (Vector(2) << 0.3, -0.2).finished();
  int calls = 0;
  const CubicSubsolver sub = [&calls](const CubicModel &m) {
    ++calls;
    return solve_dense(m);
  };
  const StepPair p = search_step_pair(grad, x, 0.0, g, 1.0, cfg, 0.5, sub);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.H);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -cfg.psd_tol);
  EXPECT_LE(p.h, cfg.kappa_hs * p.solution.s.norm());
  // h = 0.5, 0.25, 0.125 are rejected before any subproblem solve.
  EXPECT_GE(p.shrink_count, 3);
  EXPECT_EQ(calls, p.shrink_count + 1 - 3);
}
