#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aarc/objective.hpp"

namespace aarc {

/// m(s) = f0 + s^T g + 1/2 s^T H s + sigma/3 |s|^3
struct CubicModel {
  double f0 = 0.0;
  Vector g;
  LinearOperator hvp;
  std::shared_ptr<const Matrix> H;  // explicit Hessian when available
  double sigma = 1.0;

  static CubicModel from_matrix(double f0, Vector g, Matrix H, double sigma) {
    CubicModel m;
    m.f0 = f0;
    m.g = std::move(g);
    m.H = std::make_shared<const Matrix>(std::move(H));
    m.hvp = [Hp = m.H](const Vector &v) -> Vector { return *Hp * v; };
    m.sigma = sigma;
    return m;
  }

  static CubicModel from_operator(double f0, Vector g, LinearOperator hvp, double sigma) {
    CubicModel m;
    m.f0 = f0;
    m.g = std::move(g);
    m.hvp = std::move(hvp);
    m.sigma = sigma;
    return m;
  }
};

struct SubproblemSolution {
  Vector s;
  double model_value = 0.0;
  double model_grad_norm = 0.0;
  double am1_residual = 0.0;  // s^T g + s^T H s + sigma |s|^3
  int krylov_dim = 0;
  int hvps = 0;
  bool satisfied_condition1 = false;
  bool satisfied_stationarity = false;
};

struct SubproblemFailure : Error {
  SubproblemFailure(const std::string &msg, SubproblemSolution best)
      : Error(msg), best(std::move(best)) {}
  SubproblemSolution best;
};

inline double model_value(const CubicModel &m, const Vector &s) {
  require_dim(s, m.g.size(), "model_value");
  const double ns = s.norm();
  return m.f0 + s.dot(m.g) + 0.5 * s.dot(m.hvp(s)) + m.sigma / 3.0 * cube(ns);
}

inline Vector model_gradient(const CubicModel &m, const Vector &s) {
  require_dim(s, m.g.size(), "model_gradient");
  return m.g + m.hvp(s) + m.sigma * s.norm() * s;
}

inline double condition1_rhs(double kappa_theta, double snorm, double gnorm) {
  return kappa_theta * std::min(1.0, snorm) * std::min(snorm, gnorm);
}

inline bool condition1_holds(const CubicModel &m, const Vector &s, double kappa_theta) {
  return model_gradient(m, s).norm() <= condition1_rhs(kappa_theta, s.norm(), m.g.norm());
}

inline double am1_residual(const CubicModel &m, const Vector &s) {
  return s.dot(m.g) + s.dot(m.hvp(s)) + m.sigma * cube(s.norm());
}

namespace detail {

inline bool am1_ok(double residual, double sg) {
  return std::abs(residual) <= 1e-8 * (1.0 + std::abs(sg));
}

// Fills every field of the solution from s and a precomputed H s.
inline void finish(SubproblemSolution &out, const CubicModel &m, const Vector &Hs, double kappa_theta) {
  const double ns = out.s.norm();
  const double sg = out.s.dot(m.g);
  const double sHs = out.s.dot(Hs);
  out.model_value = m.f0 + sg + 0.5 * sHs + m.sigma / 3.0 * cube(ns);
  out.model_grad_norm = (m.g + Hs + m.sigma * ns * out.s).norm();
  out.am1_residual = sg + sHs + m.sigma * cube(ns);
  out.satisfied_condition1 = out.model_grad_norm <= condition1_rhs(kappa_theta, ns, m.g.norm());
  out.satisfied_stationarity = am1_ok(out.am1_residual, sg);
}

// Safeguarded Newton for a strictly decreasing phi on (lo, hi) with phi(hi) <= 0.
// eval(theta, phi, dphi) returns false when theta lies left of the admissible region.
template <class Eval>
double secular_root(Eval &&eval, double lo, double hi, double tol, int max_iter = 200) {
  double theta = hi;
  double phi = 0.0, dphi = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const bool ok = eval(theta, phi, dphi);
    if (ok && std::abs(phi) <= tol * std::max(1.0, theta))
      return theta;
    if (!ok || phi > 0.0)
      lo = theta;
    else
      hi = theta;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi))
      return hi;
    double next = ok && dphi < 0.0 ? theta - phi / dphi : 0.5 * (lo + hi);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    theta = next;
  }
  throw Error("secular equation: root find did not converge in " + std::to_string(max_iter) +
              " iterations");
}

} // namespace detail

/// Global minimizer through an eigendecomposition of the explicit H.
inline SubproblemSolution solve_dense(const CubicModel &m, double tol = 1e-13, double kappa_theta = 0.5) {
  if (!m.H)
    throw CapabilityError("solve_dense: explicit Hessian required");
  const Matrix &H = *m.H;
  const Eigen::Index d = m.g.size();
  if (H.rows() != d || H.cols() != d)
    throw DimensionError("solve_dense: Hessian dimension mismatch");
  const double scale = 1.0 + H.cwiseAbs().maxCoeff();
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("solve_dense: Hessian is not symmetric");
  if (!(m.sigma > 0.0))
    throw Error("solve_dense: sigma must be positive");

  SubproblemSolution out;
  out.krylov_dim = int(d);
  const double gnorm = m.g.norm();
  if (gnorm == 0.0) {
    out.s = Vector::Zero(d);
    detail::finish(out, m, Vector::Zero(d), kappa_theta);
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  if (eig.info() != Eigen::Success)
    throw Error("solve_dense: eigendecomposition failed");
  const Vector &lam = eig.eigenvalues();
  const Vector c = eig.eigenvectors().transpose() * m.g;
  const double sigma = m.sigma;
  const double lo = std::max(0.0, -lam.minCoeff() / sigma);
  const double hi = lo + std::sqrt(gnorm / sigma);

  auto eval = [&](double theta, double &phi, double &dphi) {
    double n2 = 0.0, d3 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double den = lam[i] + sigma * theta;
      if (den <= 0.0) {
        if (c[i] != 0.0)
          return false;
        continue;
      }
      n2 += c[i] * c[i] / (den * den);
      d3 += c[i] * c[i] / (den * den * den);
    }
    const double un = std::sqrt(n2);
    phi = un - theta;
    dphi = un > 0.0 ? -sigma * d3 / un - 1.0 : -1.0;
    return true;
  };
  // The model gradient error is about sigma |s| times the error in theta.
  const double theta = detail::secular_root(eval, lo, hi, tol / (1.0 + sigma * hi));

  Vector coef(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double den = lam[i] + sigma * theta;
    coef[i] = den > 0.0 ? -c[i] / den : 0.0;
  }
  out.s = eig.eigenvectors() * coef;
  detail::finish(out, m, H * out.s, kappa_theta);
  return out;
}

namespace detail {

// Solves (T + shift I) x = rhs for symmetric tridiagonal T by LDL^T; false if not positive definite.
inline bool tridiag_solve(const std::vector<double> &a, const std::vector<double> &b, double shift,
                          const Vector &rhs, Vector &x) {
  const std::size_t k = a.size();
  std::vector<double> dd(k), l(k);
  dd[0] = a[0] + shift;
  if (!(dd[0] > 0.0))
    return false;
  for (std::size_t i = 1; i < k; ++i) {
    l[i] = b[i - 1] / dd[i - 1];
    dd[i] = a[i] + shift - b[i - 1] * l[i];
    if (!(dd[i] > 0.0))
      return false;
  }
  x = rhs;
  for (std::size_t i = 1; i < k; ++i)
    x[Eigen::Index(i)] -= l[i] * x[Eigen::Index(i - 1)];
  for (std::size_t i = 0; i < k; ++i)
    x[Eigen::Index(i)] /= dd[i];
  for (std::size_t i = k - 1; i-- > 0;)
    x[Eigen::Index(i)] -= l[i + 1] * x[Eigen::Index(i + 1)];
  return true;
}

// min_u beta0 e1^T u + 1/2 u^T T u + sigma/3 |u|^3 over the tridiagonal T = (a, b).
inline Vector reduced_cubic_solve(const std::vector<double> &a, const std::vector<double> &b,
                                  double beta0, double sigma) {
  const Eigen::Index k = Eigen::Index(a.size());
  Vector rhs = Vector::Zero(k);
  rhs[0] = -beta0;
  // Gershgorin lower bound on lambda_min(T) keeps the bracket valid under rounding.
  double gmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(b[std::size_t(i - 1)]);
    if (i + 1 < k) r += std::abs(b[std::size_t(i)]);
    gmin = std::min(gmin, a[std::size_t(i)] - r);
  }
  const double hi = std::max(0.0, -gmin / sigma) + std::sqrt(std::abs(beta0) / sigma);
  Vector u(k), w(k);
  auto eval = [&](double theta, double &phi, double &dphi) {
    if (!tridiag_solve(a, b, sigma * theta, rhs, u))
      return false;
    const double un = u.norm();
    if (!tridiag_solve(a, b, sigma * theta, u, w))
      return false;
    phi = un - theta;
    dphi = un > 0.0 ? -sigma * u.dot(w) / un - 1.0 : -1.0;
    return true;
  };
  const double theta = secular_root(eval, 0.0, hi, 1e-14);
  if (!tridiag_solve(a, b, sigma * theta, rhs, u))
    throw Error("reduced cubic solve: shifted tridiagonal is not positive definite");
  return u;
}

} // namespace detail

struct LanczosOptions {
  bool throw_on_exhaustion = true;
};

/// Krylov (Lanczos) approximate minimizer, stopped as soon as Condition 1 holds in the full space.
inline SubproblemSolution solve_lanczos(const LinearOperator &hvp, const Vector &g, double sigma,
                                        double kappa_theta, int max_dim,
                                        LanczosOptions opts = {}) {
  const Eigen::Index d = g.size();
  const double gnorm = g.norm();
  if (gnorm == 0.0)
    throw Error("solve_lanczos: gradient must be non-zero");
  if (!(sigma > 0.0))
    throw Error("solve_lanczos: sigma must be positive");
  const int K = int(std::min<Eigen::Index>(std::max(max_dim, 1), d));

  CubicModel m = CubicModel::from_operator(0.0, g, hvp, sigma);
  Matrix Q(d, K);
  std::vector<double> alpha, beta;
  Q.col(0) = g / gnorm;
  double hscale = 0.0;
  int hvps = 0;
  SubproblemSolution best;
  bool have_best = false;
  double best_ratio = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= K; ++k) {
    Vector w = hvp(Q.col(k - 1));
    ++hvps;
    const double a = Q.col(k - 1).dot(w);
    alpha.push_back(a);
    w -= a * Q.col(k - 1);
    if (k > 1)
      w -= beta.back() * Q.col(k - 2);
    for (int pass = 0; pass < 2; ++pass)
      w -= Q.leftCols(k) * (Q.leftCols(k).transpose() * w);
    const double bk = w.norm();
    hscale = std::max(hscale, std::abs(a) + bk + (k > 1 ? beta.back() : 0.0));

    const Vector u = detail::reduced_cubic_solve(alpha, beta, gnorm, sigma);
    SubproblemSolution sol;
    sol.s = Q.leftCols(k) * u;
    const Vector Hs = hvp(sol.s);
    ++hvps;
    sol.krylov_dim = k;
    detail::finish(sol, m, Hs, kappa_theta);
    sol.hvps = hvps;
    const double rhs = condition1_rhs(kappa_theta, sol.s.norm(), gnorm);
    const double ratio = rhs > 0.0 ? sol.model_grad_norm / rhs : std::numeric_limits<double>::infinity();
    if (!have_best || ratio < best_ratio) {
      best = sol;
      best_ratio = ratio;
      have_best = true;
    }
    if (sol.satisfied_condition1)
      return sol;

    const bool breakdown = bk <= 1e-12 * hscale;
    if (breakdown)
      return sol;
    if (k == K)
      break;
    beta.push_back(bk);
    Q.col(k) = w / bk;
  }
  best.hvps = hvps;
  if (opts.throw_on_exhaustion)
    throw SubproblemFailure("solve_lanczos: Krylov dimension " + std::to_string(K) +
                                " exhausted without Condition 1",
                            best);
  return best;
}

/// Gradient descent on the model with Armijo backtracking; each Condition-1 iterate is
/// rescaled along its ray to the one-dimensional minimizer before acceptance.
inline SubproblemSolution solve_gradient_descent(const LinearOperator &hvp, const Vector &g, double sigma,
                                                 double kappa_theta, int max_iter = 10000) {
  const Eigen::Index d = g.size();
  CubicModel m = CubicModel::from_operator(0.0, g, hvp, sigma);
  SubproblemSolution out;
  int hvps = 0;
  Vector s = Vector::Zero(d);
  Vector Hs = Vector::Zero(d);
  double step = 1.0;
  const double gnorm = g.norm();
  for (int it = 0; it < max_iter; ++it) {
    const double ns = s.norm();
    const Vector grad = g + Hs + sigma * ns * s;
    if (it > 0 && grad.norm() <= condition1_rhs(kappa_theta, ns, gnorm)) {
      const double a = sigma * cube(ns), b = s.dot(Hs), c = s.dot(g);
      double t = 1.0;
      if (c < 0.0 && a > 0.0)
        t = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
      const Vector st = t * s;
      const Vector Hst = t * Hs;
      out.s = st;
      detail::finish(out, m, Hst, kappa_theta);
      if (out.satisfied_condition1) {
        out.krylov_dim = it;
        out.hvps = hvps;
        return out;
      }
    }
    const double mval = s.dot(g) + 0.5 * s.dot(Hs) + sigma / 3.0 * cube(ns);
    for (int bt = 0; bt < 60; ++bt) {
      const Vector trial = s - step * grad;
      const Vector Ht = hvp(trial);
      ++hvps;
      const double mt = trial.dot(g) + 0.5 * trial.dot(Ht) + sigma / 3.0 * cube(trial.norm());
      if (mt <= mval - 0.5 * step * grad.squaredNorm()) {
        s = trial;
        Hs = Ht;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
  }
  out.s = s;
  detail::finish(out, m, Hs, kappa_theta);
  out.hvps = hvps;
  throw SubproblemFailure("solve_gradient_descent: iteration budget exhausted", out);
}

} // namespace aarc
