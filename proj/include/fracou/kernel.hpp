#pragma once

// The fBm Volterra kernel K_beta(t,s) and its normalization. The scale
// constant is fixed so that int_0^t K_beta(t,u)^2 du = t^(2 beta), i.e. the
// induced Gaussian process has the classical fBm variance; the test suite
// checks this identity by quadrature rather than trusting the closed form.

#include <cmath>
#include <stdexcept>

#include "fracou/grid.hpp"
#include "fracou/special.hpp"

namespace fracou {

// Coefficient of the kernel in the form
//   K(t,s) = scale * [ (t/s)^(b-1/2) (t-s)^(b-1/2)
//                      - (b-1/2) s^(1/2-b) int_s^t u^(b-3/2) (u-s)^(b-1/2) du ].
inline double kernel_scale(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  if (beta == 0.5) return 1.0;
  if (beta < 0.5) {
    return std::sqrt(2.0 * beta / ((1.0 - 2.0 * beta) * beta_fn(1.0 - 2.0 * beta, beta + 0.5)));
  }
  return std::sqrt(2.0 * beta / ((beta - 0.5) * beta_fn(2.0 - 2.0 * beta, beta - 0.5)));
}

// Constant c~ of the kernel written with the explicit 1/Gamma(beta+1/2)
// prefactor; it also multiplies both transfer-operator factorizations.
inline double kernel_ctilde(double beta) { return kernel_scale(beta) * gamma_fn(beta + 0.5); }

// Coefficient of the leading (t-s)^(beta-1/2) term.
inline double kernel_lead_coeff(double beta) { return kernel_scale(beta); }

namespace detail {

// Inner integral int_s^t (u-s)^(beta-3/2) (1 - (s/u)^(1/2-beta)) du with the
// endpoint singularity removed by the substitution v = w^(1/(beta+1/2)); the
// transformed integrand is regular and integrated by composite
// Gauss-Legendre with panels graded toward w = 0.
inline double kernel_inner_integral(double beta, double t, double s) {
  const double p = 1.0 / (beta + 0.5);
  const double v_max = t - s;
  const double w_max = std::pow(v_max, 1.0 / p);
  const double limit0 = p * (0.5 - beta) / s;
  auto g = [&](double w) {
    if (w <= 0.0) return limit0;
    const double v = std::pow(w, p);
    const double frac = 1.0 - std::pow(s / (s + v), 0.5 - beta);
    return std::pow(v, beta - 1.5) * frac * p * std::pow(w, p - 1.0);
  };
  // The integrand transitions around v ~ s, i.e. w ~ s^(beta+1/2); grade the
  // panels geometrically until that scale is resolved.
  const double w_feature = std::pow(std::min(s, v_max), 1.0 / p);
  int panels = 5;
  double span = w_max;
  while (span * std::pow(0.25, panels - 1) > 0.05 * w_feature && panels < 40) ++panels;
  return gauss_legendre_graded(g, 0.0, w_max, panels);
}

}  // namespace detail

// K_beta(t,s) for 0 < s < t.
inline double kernel_K(double beta, double t, double s) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  if (!(s > 0.0 && s < t)) throw std::invalid_argument("kernel_K requires 0 < s < t");
  if (beta == 0.5) return 1.0;
  const double ct = kernel_ctilde(beta);
  const double lead = ct * std::pow(t - s, beta - 0.5) / gamma_fn(beta + 0.5);
  const double second =
      ct * (0.5 - beta) / gamma_fn(beta + 0.5) * detail::kernel_inner_integral(beta, t, s);
  return lead + second;
}

// K_beta(t,s) minus its leading power; continuous up to s = t, behaves like
// s^(-|beta-1/2|) as s -> 0.
inline double kernel_K_remainder(double beta, double t, double s) {
  if (beta == 0.5) return 0.0;
  const double ct = kernel_ctilde(beta);
  return ct * (0.5 - beta) / gamma_fn(beta + 0.5) * detail::kernel_inner_integral(beta, t, s);
}

// d/ds K_beta(s,t) for s > t (the kernel differentiated in its first slot).
inline double kernel_dK_dfirst(double beta, double s, double t) {
  if (!(t > 0.0 && t < s)) throw std::invalid_argument("kernel_dK_dfirst requires 0 < t < s");
  if (beta == 0.5) return 0.0;
  return kernel_scale(beta) * (beta - 0.5) * std::pow(s / t, beta - 0.5) *
         std::pow(s - t, beta - 1.5);
}

}  // namespace fracou
