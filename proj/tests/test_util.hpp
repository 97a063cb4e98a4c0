#pragma once

#include <cstdint>
#include <random>

#include "aarc/core.hpp"
#include "aarc/objective.hpp"
#include "aarc/solvers.hpp"

namespace testutil {

using aarc::Matrix;
using aarc::Vector;

struct Rng {
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  std::mt19937_64 gen;
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
  Vector vec(Eigen::Index d, double scale = 1.0) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i)
      v[i] = scale * normal();
    return v;
  }
  Matrix mat(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i)
        m(i, j) = normal();
    return m;
  }
  // Random PSD matrix; rank-deficient when rank < d.
  Matrix psd(Eigen::Index d, Eigen::Index rank) {
    const Matrix B = mat(d, rank);
    return B * B.transpose() / double(rank);
  }
};

inline Vector central_gradient(const aarc::Objective &f, const Vector &x, double h = 1e-5) {
  Vector g(x.size());
  Vector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double fp = f.value(p);
    p[i] = x[i] - h;
    const double fm = f.value(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Matrix central_hessian(const aarc::Objective &f, const Vector &x, double h = 1e-5) {
  const Eigen::Index d = x.size();
  Matrix H(d, d);
  Vector p = x, gp, gm;
  for (Eigen::Index j = 0; j < d; ++j) {
    p[j] = x[j] + h;
    f.value_gradient(p, gp);
    p[j] = x[j] - h;
    f.value_gradient(p, gm);
    p[j] = x[j];
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return H;
}

inline double rel_err(const Vector &a, const Vector &ref) {
  return (a - ref).norm() / std::max(ref.norm(), 1e-8);
}

inline double rel_err(const Matrix &a, const Matrix &ref) {
  return (a - ref).norm() / std::max(ref.norm(), 1e-8);
}

// Random dense classification data with labels from a noisy hyperplane.
inline aarc::Dataset random_dataset(Rng &rng, int n, int d) {
  aarc::Dataset ds;
  ds.samples = rng.mat(n, d);
  const Vector w = rng.vec(d);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i)
    ds.labels[i] = ds.samples.row(i).dot(w) + 0.3 * rng.normal() >= 0.0 ? 1.0 : -1.0;
  return ds;
}

struct RestartMeasurement {
  int m = 0;
  std::vector<double> gaps;    // f - f* at x0 and after every round
  std::vector<double> ratios;  // per round, only rounds starting above the noise floor
  double worst = 0.0;
};

// Runs `rounds` restart rounds of length m and records the per-round contraction of f - f*.
// Rounds that start within `floor` of f* are not measured.
inline RestartMeasurement measure_restart(const aarc::InnerSolver &inner, const aarc::Objective &f,
                                          const Vector &x0, double fstar, const aarc::SolverConfig &cfg, int m,
                                          int rounds, double floor) {
  RestartMeasurement out;
  out.m = m;
  const aarc::SolverRun r = aarc::restart_wrapper(inner, f, x0, cfg, m, rounds);
  out.gaps.push_back(f.value(x0) - fstar);
  for (const auto &x : r.checkpoints)
    out.gaps.push_back(f.value(x) - fstar);
  for (std::size_t k = 1; k < out.gaps.size(); ++k) {
    if (out.gaps[k - 1] <= floor)
      break;
    out.ratios.push_back(out.gaps[k] / out.gaps[k - 1]);
    out.worst = std::max(out.worst, out.ratios.back());
  }
  return out;
}

// Doubles m from 1 until every measured round contracts by `target`.
inline RestartMeasurement choose_restart_length(const aarc::InnerSolver &inner, const aarc::Objective &f,
                                                const Vector &x0, double fstar, const aarc::SolverConfig &cfg,
                                                double target, int rounds, double floor, int max_m = 4096) {
  RestartMeasurement best;
  for (int m = 1; m <= max_m; m *= 2) {
    best = measure_restart(inner, f, x0, fstar, cfg, m, rounds, floor);
    if (!best.ratios.empty() && best.worst <= target)
      return best;
  }
  best.m = 0;
  return best;
}

} // namespace testutil
