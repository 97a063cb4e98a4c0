#pragma once

#include <algorithm>
#include <cmath>

#include "aarc/solvers.hpp"

// Worst-case counter bounds and rate constants, evaluated from known problem constants.
// Only meaningful for instances whose L_g, L_h (and kappa_e) are known.
namespace aarc::bounds {

struct Constants {
  double Lg = 0.0;
  double Lh = 0.0;
  double kappa_e = 0.0;  // finite-difference Hessian error constant
};

inline double sigma_bar1_cubic(const SolverConfig &c, const Constants &k) {
  return std::max(c.sigma0, c.gamma2 * k.Lh / 2.0);
}

inline double sigma_bar2_cubic(const SolverConfig &c, const Constants &k) {
  return std::max(sigma_bar1_cubic(c, k), c.gamma2 * k.Lh / 2.0 + c.gamma2 * c.kappa_theta + c.gamma2 * c.eta);
}

// The inexact-Hessian variant states sigma-bar-1 in two forms; the larger one is used.
inline double sigma_bar1_inexact(const SolverConfig &c, const Constants &k) {
  const double e = (k.kappa_e + c.fd.kappa_c) * c.fd.kappa_hs;
  return std::max({c.sigma0, (3.0 * c.gamma2 * k.Lh + c.gamma2 * e) / 2.0,
                   (c.gamma2 * k.Lh + 3.0 * c.gamma2 * e) / 2.0});
}

inline double sigma_bar2_inexact(const SolverConfig &c, const Constants &k) {
  const double e = (k.kappa_e + c.fd.kappa_c) * c.fd.kappa_hs;
  return std::max(sigma_bar1_inexact(c, k),
                  c.gamma2 * k.Lh / 2.0 + c.gamma2 * c.kappa_theta + c.gamma2 * e + c.gamma2 * c.eta);
}

inline double sigma_bar1_gradient(const SolverConfig &c, const Constants &k) {
  return std::max(c.sigma0, c.gamma2 * k.Lg);
}

inline double sigma_bar2_gradient(const SolverConfig &c, const Constants &k) {
  return std::max(sigma_bar1_gradient(c, k), c.gamma2 * k.Lg + c.gamma2 * c.eta);
}

inline double T1_bound(const SolverConfig &c, double sigma_bar1) {
  return 1.0 + 2.0 / std::log(c.gamma1) * std::log(sigma_bar1 / c.sigma_min);
}

inline double T2_bound(const SolverConfig &c, double sigma_bar2, long successes) {
  return (1.0 + 2.0 / std::log(c.gamma1) * std::log(sigma_bar2 / c.sigma_min)) * double(successes);
}

inline double varsigma_threshold_cubic(const SolverConfig &c, const Constants &k, double sigma_bar2) {
  const double r = (k.Lh + 2.0 * sigma_bar2 + 2.0 * c.kappa_theta * k.Lg) / (1.0 - c.kappa_theta);
  return r * r * r / (c.eta * c.eta);
}

inline double varsigma_threshold_gradient(const SolverConfig &c, const Constants &k, double sigma_bar2) {
  const double r = 2.0 * k.Lg + 2.0 * sigma_bar2;
  return r * r / c.eta;
}

inline long T3_bound(const SolverConfig &c, double threshold) {
  return std::max(0L, long(std::ceil(std::log(threshold / c.varsigma1) / std::log(c.gamma3))));
}

inline long T4_bound(const SolverConfig &c, const Constants &k, double sigma_bar2, double eps) {
  const double e = (k.kappa_e + c.fd.kappa_c) * c.fd.kappa_hs;
  const double arg = (k.Lg + e + sigma_bar2) * c.fd.h_init / ((1.0 - c.kappa_theta) * c.fd.kappa_hs * eps);
  return std::max(0L, long(std::ceil(-std::log(arg) / std::log(c.fd.gamma4))));
}

/// Rate constant for f(x-bar_l) - f* <= C1 / (l (l+1) (l+2)).
inline double C1(const SolverConfig &c, const Constants &k, double dist_x0, double dist_xbar1) {
  const double sb1 = sigma_bar1_cubic(c, k);
  const double sb2 = sigma_bar2_cubic(c, k);
  return (2.0 * k.Lh + 2.0 * sb1) * cube(dist_x0) + varsigma_threshold_cubic(c, k, sb2) * cube(dist_xbar1) +
         12.0 * c.kappa_theta * (1.0 + c.kappa_theta) * k.Lg * k.Lg / c.sigma_min * dist_x0 * dist_x0;
}

/// Rate constant for f(x-bar_l) - f* <= C3 / (l (l+1)).
inline double C3(const SolverConfig &c, const Constants &k, double dist_x0, double dist_x1) {
  const double sb1 = sigma_bar1_gradient(c, k);
  const double sb2 = sigma_bar2_gradient(c, k);
  return (k.Lg + sb1) * dist_x0 * dist_x0 + 2.0 * (k.Lg + sb2) * (k.Lg + sb2) * dist_x1 * dist_x1;
}

/// Round length of the cubic restart scheme for a mu-strongly convex instance whose level
/// set lies within distance D of the minimizer.
inline double restart_m_cubic(const SolverConfig &c, const Constants &k, double mu, double D) {
  const double sb1 = sigma_bar1_cubic(c, k);
  const double sb2 = sigma_bar2_cubic(c, k);
  const double tau1 = 2.0 * k.Lh + 2.0 * sb1 + varsigma_threshold_cubic(c, k, sb2);
  const double tau2 = 12.0 * c.kappa_theta * (1.0 + c.kappa_theta) * k.Lg * k.Lg / c.sigma_min;
  return T1_bound(c, sb1) + T2_bound(c, sb2, 1) * (2.0 * std::cbrt((tau1 * D + tau2) / mu) + 1.0) +
         double(T3_bound(c, varsigma_threshold_cubic(c, k, sb2)));
}

inline double restart_m_gradient(const SolverConfig &c, const Constants &k, double mu) {
  const double sb1 = sigma_bar1_gradient(c, k);
  const double sb2 = sigma_bar2_gradient(c, k);
  const double r = k.Lg + sb2;
  return T1_bound(c, sb1) +
         T2_bound(c, sb2, 1) * (2.0 * std::sqrt((k.Lg + sb1 + 2.0 * r * r) / mu) + 1.0) +
         std::ceil(std::log(r * r * 4.0 / (c.eta * c.varsigma1)) / std::log(c.gamma3));
}

} // namespace aarc::bounds
