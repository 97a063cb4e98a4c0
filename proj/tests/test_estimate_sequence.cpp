#include <cmath>

#include <gtest/gtest.h>

#include "aarc/estimate_sequence.hpp"
#include "test_util.hpp"

using namespace aarc;
using testutil::Rng;

namespace {

struct Term {
  double w;
  Vector p;
  double f;
  Vector g;
};

// A random estimate state together with the terms that built it.
std::pair<EstimateState, std::vector<Term>> random_state(Rng &rng, Degree degree, int d, int terms) {
  const Vector anchor = rng.vec(d);
  const double f0 = rng.normal();
  EstimateState s = init_estimate(degree, anchor, f0, std::pow(10.0, rng.uniform(-2, 2)));
  std::vector<Term> list;
  for (int l = 2; l < 2 + terms; ++l) {
    Term t{degree == Degree::cubic ? 0.5 * l * (l + 1) : double(l), rng.vec(d, 2.0), rng.normal(), rng.vec(d)};
    s = add_linear(std::move(s), t.w, t.p, t.f, t.g);
    list.push_back(std::move(t));
  }
  return {s, list};
}

double independent_eval(const EstimateState &s, const std::vector<Term> &terms, double f_anchor, const Vector &z) {
  double v = f_anchor;
  for (const auto &t : terms)
    v += t.w * (t.f + (z - t.p).dot(t.g));
  const double r = (z - s.anchor).norm();
  return v + (s.degree == Degree::cubic ? s.varsigma / 6.0 * r * r * r : s.varsigma / 4.0 * r * r);
}

} // namespace

TEST(InitEstimate, CubicAndQuadraticExamples) {
  const EstimateState c = init_estimate(Degree::cubic, Vector::Zero(3), 5.0, 1.0);
  EXPECT_EQ(c.a, 5.0);
  EXPECT_EQ(c.b, Vector::Zero(3));
  EXPECT_EQ(c.l, 1);
  const Vector z = (Vector(3) << 1, 2, 2).finished();
  EXPECT_DOUBLE_EQ(eval_estimate(c, z), 5.0 + 27.0 / 6.0);
  EXPECT_EQ(minimize_estimate(c).first, Vector::Zero(3));
  EXPECT_EQ(minimize_estimate(c).second, 5.0);

  const EstimateState q = init_estimate(Degree::quadratic, Vector::Ones(2), 0.0, 4.0);
  EXPECT_DOUBLE_EQ(eval_estimate(q, Vector::Zero(2)), 2.0);
  EXPECT_EQ(minimize_estimate(q).first, Vector::Ones(2));
  EXPECT_THROW(init_estimate(Degree::cubic, Vector::Zero(1), 0.0, 0.0), Error);
}

TEST(InitEstimate, AnchorValueForBothDegrees) {
  Rng rng(50);
  for (Degree deg : {Degree::cubic, Degree::quadratic}) {
    const Vector a = rng.vec(4);
    const EstimateState s = init_estimate(deg, a, -1.75, 3.0);
    EXPECT_EQ(eval_estimate(s, a), -1.75);
  }
}

TEST(AddLinear, DirectAccumulation) {
  EstimateState s = init_estimate(Degree::cubic, Vector::Zero(2), 1.0, 1.0);
  s = add_linear(s, 1.0, Vector::Zero(2), 2.0, (Vector(2) << 1, 0).finished());
  EXPECT_EQ(s.a, 3.0);
  EXPECT_EQ(s.b, (Vector(2) << 1, 0).finished());
  EXPECT_EQ(s.l, 2);
  EXPECT_EQ(s.weight_sum, 2.0);
  EXPECT_THROW(add_linear(s, 1.0, Vector::Zero(3), 0.0, Vector::Zero(3)), DimensionError);
  EXPECT_THROW(add_linear(s, 0.0, Vector::Zero(2), 0.0, Vector::Zero(2)), Error);
}

TEST(AddLinear, OrderOfAccumulationDoesNotMatter) {
  Rng rng(51);
  const Vector anchor = rng.vec(5);
  const Vector p1 = rng.vec(5), g1 = rng.vec(5), p2 = rng.vec(5), g2 = rng.vec(5);
  EstimateState a = init_estimate(Degree::cubic, anchor, 0.5, 2.0);
  EstimateState b = a;
  a = add_linear(add_linear(a, 3.0, p1, 1.0, g1), 6.0, p2, -2.0, g2);
  b = add_linear(add_linear(b, 6.0, p2, -2.0, g2), 3.0, p1, 1.0, g1);
  EXPECT_NEAR(a.a, b.a, 1e-13);
  EXPECT_LE((a.b - b.b).norm(), 1e-13);
  for (int k = 0; k < 20; ++k) {
    const Vector z = rng.vec(5);
    EXPECT_NEAR(eval_estimate(a, z), eval_estimate(b, z), 1e-12);
  }
}

TEST(AddLinear, MatchesIndependentSummation) {
  Rng rng(52);
  for (Degree deg : {Degree::cubic, Degree::quadratic}) {
    const Vector anchor = rng.vec(6);
    EstimateState s = init_estimate(deg, anchor, 0.3, 1.7);
    std::vector<Term> terms;
    for (int l = 2; l < 12; ++l) {
      Term t{deg == Degree::cubic ? 0.5 * l * (l + 1) : double(l), rng.vec(6), rng.normal(), rng.vec(6)};
      s = add_linear(std::move(s), t.w, t.p, t.f, t.g);
      terms.push_back(std::move(t));
    }
    for (int k = 0; k < 50; ++k) {
      const Vector z = rng.vec(6, 3.0);
      const double ref = independent_eval(s, terms, 0.3, z);
      EXPECT_NEAR(eval_estimate(s, z), ref, 1e-10 * (1 + std::abs(ref)));
      // The stored affine form a + b^T z is the same function.
      EXPECT_NEAR(s.a + s.b.dot(z) + estimate_regularizer(s, (z - anchor).norm()), ref, 1e-10 * (1 + std::abs(ref)));
    }
  }
}

TEST(RaiseVarsigma, ScalingIdempotenceAndDelta) {
  Rng rng(53);
  auto [s, terms] = random_state(rng, Degree::cubic, 4, 5);
  EXPECT_THROW(raise_varsigma(s, 0.5 * s.varsigma), Error);
  const EstimateState same = raise_varsigma(s, s.varsigma);
  const EstimateState dbl = raise_varsigma(s, 2.0 * s.varsigma);
  const double dv = s.varsigma;
  for (int k = 0; k < 50; ++k) {
    const Vector z = rng.vec(4, 2.0);
    const double r = (z - s.anchor).norm();
    EXPECT_EQ(eval_estimate(same, z), eval_estimate(s, z));
    EXPECT_NEAR(estimate_regularizer(dbl, r), 2.0 * estimate_regularizer(s, r), 1e-12 * (1 + r * r * r));
    EXPECT_NEAR(eval_estimate(dbl, z) - eval_estimate(s, z), dv / 6.0 * r * r * r, 1e-10 * (1 + r * r * r));
  }
  EXPECT_EQ(dbl.a, s.a);
  EXPECT_EQ(dbl.b, s.b);
}

TEST(MinimizeEstimate, ClosedFormExamples) {
  EstimateState c = init_estimate(Degree::cubic, Vector::Zero(2), 0.0, 2.0);
  c.b = (Vector(2) << 1, 0).finished();
  EXPECT_NEAR((minimize_estimate(c).first - (Vector(2) << -1, 0).finished()).norm(), 0.0, 1e-15);
  EstimateState q = init_estimate(Degree::quadratic, Vector::Zero(2), 0.0, 6.0);
  q.b = (Vector(2) << 3, 0).finished();
  EXPECT_NEAR((minimize_estimate(q).first - (Vector(2) << -1, 0).finished()).norm(), 0.0, 1e-15);
}

TEST(MinimizeEstimate, StationaryAndGlobal) {
  Rng rng(54);
  for (Degree deg : {Degree::cubic, Degree::quadratic}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto [s, terms] = random_state(rng, deg, rng.integer(1, 8), rng.integer(1, 6));
      const auto [z, psi] = minimize_estimate(s);
      const Vector w = z - s.anchor;
      const Vector grad =
          deg == Degree::cubic ? Vector(s.b + 0.5 * s.varsigma * w.norm() * w) : Vector(s.b + 0.5 * s.varsigma * w);
      EXPECT_LE(grad.norm(), 1e-10 * (1 + s.b.norm()));
      EXPECT_EQ(psi, eval_estimate(s, z));
      for (int k = 0; k < 1000; ++k) {
        const Vector zz = z + rng.vec(z.size(), std::pow(10.0, rng.uniform(-4, 1)));
        const double v = eval_estimate(s, zz);
        ASSERT_LE(psi, v + 1e-12 * (1 + std::abs(v)));
        if ((zz - z).norm() > 1e-9 * (1 + z.norm()) && (zz - z).norm() > 1e-3) {
          ASSERT_LT(psi, v);
        }
      }
    }
  }
}

TEST(EstimateBounds, UniformlyConvexGapCubic) {
  Rng rng(55);
  int violations = 0, trials = 0;
  for (int st = 0; st < 10; ++st) {
    auto [s, terms] = random_state(rng, Degree::cubic, rng.integer(1, 8), rng.integer(0, 6));
    const auto [zl, psi] = minimize_estimate(s);
    for (int k = 0; k < 100; ++k, ++trials) {
      const Vector z = zl + rng.vec(zl.size(), std::pow(10.0, rng.uniform(-3, 1)));
      const double gap = eval_estimate(s, z) - psi;
      const double bound = s.varsigma / 12.0 * std::pow((z - zl).norm(), 3);
      if (gap < bound - 1e-12 * (1 + std::abs(psi) + std::abs(gap)))
        ++violations;
    }
  }
  EXPECT_EQ(trials, 1000);
  EXPECT_EQ(violations, 0);
}

TEST(EstimateBounds, StronglyConvexGapQuadratic) {
  Rng rng(56);
  int violations = 0, trials = 0;
  for (int st = 0; st < 10; ++st) {
    auto [s, terms] = random_state(rng, Degree::quadratic, rng.integer(1, 8), rng.integer(0, 6));
    const auto [zl, psi] = minimize_estimate(s);
    for (int k = 0; k < 100; ++k, ++trials) {
      const Vector z = zl + rng.vec(zl.size(), std::pow(10.0, rng.uniform(-3, 1)));
      const double gap = eval_estimate(s, z) - psi;
      const double bound = s.varsigma / 8.0 * (z - zl).squaredNorm();
      if (gap < bound - 1e-12 * (1 + std::abs(psi) + std::abs(gap)))
        ++violations;
    }
  }
  EXPECT_EQ(trials, 1000);
  EXPECT_EQ(violations, 0);
}

TEST(EstimateBounds, FirstOrderLowerBound) {
  Rng rng(57);
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const int d = rng.integer(1, 10);
    const Vector s = rng.vec(d, std::pow(10.0, rng.uniform(-2, 2)));
    const Vector g = rng.vec(d, std::pow(10.0, rng.uniform(-2, 2)));
    const double sigma = std::pow(10.0, rng.uniform(-3, 3));
    const double lhs = s.dot(g) + 0.5 * sigma * s.squaredNorm();
    const double rhs = -g.squaredNorm() / (2.0 * sigma);
    if (lhs < rhs - 1e-12 * (1 + std::abs(rhs)))
      ++violations;
  }
  EXPECT_EQ(violations, 0);
}
