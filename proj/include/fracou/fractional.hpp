#pragma once

// Discretized Riemann-Liouville fractional integrals and derivatives on
// uniform grids, plus power-weighted variants u_b(s) = s^b used by the
// fBm transfer operators.
//
// Integrals use product integration: the integrand is piecewise linear on
// cells and the singular kernel moments are integrated exactly, so the
// rule is exact on piecewise-linear inputs. Derivatives come in two
// flavours: Grunwald-Letnikov weights for the plain operators, and a
// Marchaud-form product integration for the weighted compositions (the
// weight can blow up at t=0, which the panel treatment absorbs).

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracou/grid.hpp"
#include "fracou/special.hpp"

namespace fracou {

enum class FracSide { left, right };           // 0+ and T-
enum class FracKind { integral, derivative };  // I^alpha and D^alpha

struct FracOpSpec {
  double alpha;
  FracSide side;
  FracKind kind;
};

namespace detail {

// pow((m dt), p) for m = 0..count-1; the uniform grid makes every kernel
// distance a multiple of dt, so the O(n^2) panel loops become table lookups.
inline std::vector<double> power_table(double p, double dt, int count) {
  std::vector<double> out(count);
  out[0] = 0.0;
  for (int m = 1; m < count; ++m) out[m] = std::pow(m * dt, p);
  return out;
}

inline void require_operator_grid(const Grid& g) {
  if (g.n_steps < 8) {
    throw std::invalid_argument("fractional operators need n_steps >= 8, got " +
                                std::to_string(g.n_steps));
  }
}

inline void require_finite(std::span<const double> f, const char* what) {
  for (double v : f) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

// J(b,alpha) = int_0^1 (1 - sigma^b) (1-sigma)^(-alpha-1) dsigma, the exact
// first-cell moment of the Marchaud difference against the power weight.
// Finite for b > -1, alpha in (0,1). Both endpoints are transformed to
// regular integrands before adaptive quadrature.
inline double marchaud_first_cell_moment(double b, double alpha) {
  if (b == 0.0) return 0.0;
  const double r = 1.0 / (1.0 - alpha);
  // right half via 1 - sigma = y^r
  const double y_max = std::pow(0.5, 1.0 / r);
  const double right = adaptive_simpson(
      [&](double y) {
        if (y <= 0.0) return r * b;
        const double one_minus_sigma = std::pow(y, r);
        const double sigma = 1.0 - one_minus_sigma;
        return (1.0 - std::pow(sigma, b)) * std::pow(y, -r * (alpha + 1.0)) * r *
               std::pow(y, r - 1.0);
      },
      0.0, y_max, 1e-12);
  double left = 0.0;
  if (b > 0.0) {
    left = adaptive_simpson(
        [&](double sigma) {
          if (sigma <= 0.0) return 1.0;
          return (1.0 - std::pow(sigma, b)) * std::pow(1.0 - sigma, -alpha - 1.0);
        },
        0.0, 0.5, 1e-12);
  } else {
    // sigma = z^q with q = 1/(1+b) regularizes the sigma^b blow-up at 0
    const double q = 1.0 / (1.0 + b);
    const double z_max = std::pow(0.5, 1.0 + b);
    left = adaptive_simpson(
        [&](double z) {
          if (z <= 0.0) return -q;
          const double sigma = std::pow(z, q);
          return (1.0 - std::pow(sigma, b)) * std::pow(1.0 - sigma, -alpha - 1.0) * q *
                 std::pow(z, q - 1.0);
        },
        0.0, z_max, 1e-12);
  }
  return left + right;
}

struct WeightedSamples {
  // psi_j = t_j^b * f_j; psi[0] is only meaningful for b >= 0.
  std::vector<double> psi;
  double b = 0.0;

  WeightedSamples(std::span<const double> f, const Grid& g, double b_in) : b(b_in) {
    psi.resize(f.size());
    if (b == 0.0) {
      for (size_t j = 0; j < f.size(); ++j) psi[j] = f[j];
    } else {
      psi[0] = (b > 0.0) ? 0.0 : 0.0;  // b<0: placeholder, never read
      for (size_t j = 1; j < f.size(); ++j) psi[j] = std::pow(g.node(static_cast<int>(j)), b) * f[j];
    }
  }
};

}  // namespace detail

// (1/Gamma(alpha)) * int_0^{t_k} (t_k - s)^(alpha-1) s^b f(s) ds for every node.
// First cell: s^b f(s) is modelled as s^b * f(t_1) and the power moment is
// integrated exactly (Beta function when the cell touches the evaluation
// node). Requires b > -1.
inline std::vector<double> rl_integral_weighted_left(double alpha, double b,
                                                     std::span<const double> f, const Grid& g) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("integral order must be in (0,1]");
  if (!(b > -1.0)) throw std::invalid_argument("weight exponent must exceed -1");
  const int n = g.n_steps;
  const double dt = g.dt();
  const double inv_gamma = 1.0 / gamma_fn(alpha);
  detail::WeightedSamples w(f, g, b);
  const double t1 = g.node(1);

  const auto pa = detail::power_table(alpha, dt, n + 1);
  const auto pa1 = detail::power_table(alpha + 1.0, dt, n + 1);
  std::vector<double> out(g.n_nodes(), 0.0);
  for (int k = 1; k <= n; ++k) {
    const double tk = g.node(k);
    double acc = 0.0;
    int j_begin = 0;
    if (b != 0.0) {
      // first cell: s^b f(s) modelled as s^b f(t_1), exact two-power moment
      acc += f[1] * two_power_moment(tk, t1, alpha, b);
      j_begin = 1;
      if (k == 1) {
        out[k] = acc * inv_gamma;
        continue;
      }
    }
    for (int j = j_begin; j < k; ++j) {
      const int d = k - j;
      const double big = d * dt;
      const double m0 = (pa[d] - pa[d - 1]) / alpha;
      const double m1 = big * m0 - (pa1[d] - pa1[d - 1]) / (alpha + 1.0);
      const double pj = w.psi[j];
      const double slope = (w.psi[j + 1] - pj) / dt;
      acc += pj * m0 + slope * m1;
    }
    out[k] = acc * inv_gamma;
  }
  return out;
}

// (1/Gamma(alpha)) * int_{t_k}^T (s - t_k)^(alpha-1) s^b f(s) ds.
// For b < 0 the node-0 output is skipped (set to 0); it is the only output
// whose panels touch the singular weight node.
inline std::vector<double> rl_integral_weighted_right(double alpha, double b,
                                                      std::span<const double> f, const Grid& g) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("integral order must be in (0,1]");
  if (!(b > -1.0)) throw std::invalid_argument("weight exponent must exceed -1");
  const int n = g.n_steps;
  const double dt = g.dt();
  const double inv_gamma = 1.0 / gamma_fn(alpha);
  detail::WeightedSamples w(f, g, b);

  const auto pa = detail::power_table(alpha, dt, n + 1);
  const auto pa1 = detail::power_table(alpha + 1.0, dt, n + 1);
  std::vector<double> out(g.n_nodes(), 0.0);
  const int k_begin = (b < 0.0) ? 1 : 0;
  for (int k = k_begin; k < n; ++k) {
    double acc = 0.0;
    for (int j = k; j < n; ++j) {
      const int d = j - k;
      const double small = d * dt;
      const double m0 = (pa[d + 1] - pa[d]) / alpha;
      const double m1 = (pa1[d + 1] - pa1[d]) / (alpha + 1.0) - small * m0;
      const double pj = w.psi[j];
      const double slope = (w.psi[j + 1] - pj) / dt;
      acc += pj * m0 + slope * m1;
    }
    out[k] = acc * inv_gamma;
  }
  return out;
}

// (1/Gamma(alpha)) * int_0^{t_k} (t_k - s)^(alpha-1) s^b f(s) ds where f is
// piecewise constant per cell with values m[j] on [t_j, t_{j+1}] (cell
// averages of a derivative, say). Away from the origin each cell pairs its
// datum with the midpoint weight value and the exact kernel moment, which is
// second-order for smooth f. On the first cell f may behave like A s^e with
// unknown e; the exponent is estimated from the ratio of the first two cell
// averages and the resulting two-power moment is integrated exactly. That
// keeps pure power-law inputs (the range of the Volterra operator) accurate
// down to the origin.
// Power model A s^e fitted to the first two cell averages of a function
// sampled as cell data; captures the local behavior at the origin.
struct OriginPowerFit {
  double amp = 0.0;
  double e = 0.0;
};

inline OriginPowerFit fit_origin_power(std::span<const double> m, double dt, double e_min) {
  OriginPowerFit fit;
  if (m.size() < 2 || m[0] == 0.0) return fit;
  const double r = m[1] / m[0];
  if (std::isfinite(r) && r > 0.05 && r < 20.0) {
    fit.e = std::log2(r + 1.0) - 1.0;
  }
  if (fit.e < e_min) fit.e = e_min;
  if (fit.e > 2.0) fit.e = 2.0;
  fit.amp = m[0] * (fit.e + 1.0) * std::pow(dt, -fit.e);
  return fit;
}

// Cell average over [t_j, t_{j+1}] of A s^e.
inline double origin_power_cell_average(const OriginPowerFit& fit, const Grid& g, int j) {
  const double a = g.node(j);
  const double b = g.node(j + 1);
  return fit.amp * (std::pow(b, fit.e + 1.0) - std::pow(a, fit.e + 1.0)) /
         ((fit.e + 1.0) * g.dt());
}

inline std::vector<double> rl_integral_weighted_left_celldata(double alpha, double b,
                                                              std::span<const double> m,
                                                              const Grid& g) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("integral order must be in (0,1]");
  if (!(b > -1.0)) throw std::invalid_argument("weight exponent must exceed -1");
  const int n = g.n_steps;
  if (static_cast<int>(m.size()) != n) throw std::invalid_argument("cell data size mismatch");
  const double dt = g.dt();
  const double inv_gamma = 1.0 / gamma_fn(alpha);
  const double t1 = g.node(1);

  // Split f = A s^e + residual: the power part integrates in closed form
  // (it is the shape of Volterra-range derivatives at the origin), and the
  // residual - which vanishes on the first two cells by construction of the
  // fit - is handled by midpoint product integration.
  const OriginPowerFit fit = fit_origin_power(m, dt, -0.95 - b);
  const double qe = b + fit.e;
  const double power_coeff = fit.amp * beta_fn(qe + 1.0, alpha) * inv_gamma;

  std::vector<double> res(n);
  for (int j = 0; j < n; ++j) res[j] = m[j] - origin_power_cell_average(fit, g, j);

  std::vector<double> wmid(n);  // midpoint weight values
  for (int j = 0; j < n; ++j) {
    wmid[j] = (b == 0.0) ? 1.0 : std::pow(g.node(j) + 0.5 * dt, b);
  }

  const auto pa = detail::power_table(alpha, dt, n + 1);
  std::vector<double> out(g.n_nodes(), 0.0);
  for (int k = 1; k <= n; ++k) {
    const double tk = g.node(k);
    double acc = (res[0] == 0.0) ? 0.0 : res[0] * two_power_moment(tk, t1, alpha, b);
    for (int j = 1; j < k; ++j) {
      const int d = k - j;
      const double m0 = (pa[d] - pa[d - 1]) / alpha;
      acc += res[j] * wmid[j] * m0;
    }
    out[k] = acc * inv_gamma + power_coeff * std::pow(tk, alpha + qe);
  }
  return out;
}

// Central differences; one-sided second-order at the ends.
inline std::vector<double> central_diff(std::span<const double> f, const Grid& g) {
  const int n = g.n_steps;
  const double inv_dt = 1.0 / g.dt();
  std::vector<double> out(g.n_nodes(), 0.0);
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * 0.5 * inv_dt;
  for (int k = 1; k < n; ++k) out[k] = (f[k + 1] - f[k - 1]) * 0.5 * inv_dt;
  out[n] = (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) * 0.5 * inv_dt;
  return out;
}

// Marchaud-form left derivative of the weighted function u_b f:
//   (D^alpha_{0+} [u_b f])(t) =
//     (1/Gamma(1-alpha)) [ psi(t) t^(-alpha)
//                          + alpha int_0^t (psi(t)-psi(s)) (t-s)^(-alpha-1) ds ].
// Output node 0 is left at 0 (callers extrapolate or treat it as the
// singular endpoint).
inline std::vector<double> marchaud_left(double alpha, double b, std::span<const double> f,
                                         const Grid& g) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("derivative order must be in (0,1)");
  if (!(b > -1.0)) throw std::invalid_argument("weight exponent must exceed -1");
  const int n = g.n_steps;
  const double dt = g.dt();
  const double pref = 1.0 / gamma_fn(1.0 - alpha);
  detail::WeightedSamples w(f, g, b);
  const double t1 = g.node(1);
  const double jmom = detail::marchaud_first_cell_moment(b, alpha);

  const auto pm = detail::power_table(-alpha, dt, n + 1);       // dist^-alpha
  const auto pp = detail::power_table(1.0 - alpha, dt, n + 1);  // dist^(1-alpha)
  std::vector<double> out(g.n_nodes(), 0.0);
  for (int k = 1; k <= n; ++k) {
    const double tk = g.node(k);
    double s_int = 0.0;
    if (k == 1) {
      if (b == 0.0) {
        const double slope = (w.psi[1] - w.psi[0]) / dt;
        s_int = slope * pp[1] / (1.0 - alpha);
      } else {
        s_int = w.psi[1] * pm[1] * jmom;
      }
    } else {
      // first panel [0, t_1]
      const double big = tk;
      const double small = tk - t1;
      const double m0_first = (pm[k - 1] - pm[k]) / alpha;
      if (b == 0.0) {
        const double tail = big * m0_first - (pp[k] - pp[k - 1]) / (1.0 - alpha);
        const double slope = (w.psi[1] - w.psi[0]) / dt;
        s_int += (w.psi[k] - w.psi[0]) * m0_first - slope * tail;
      } else {
        const double kavg =
            0.5 * (std::pow(big, -alpha - 1.0) + std::pow(small, -alpha - 1.0));
        s_int += w.psi[k] * m0_first - f[1] * kavg * std::pow(t1, b + 1.0) / (b + 1.0);
      }
      // interior panels
      for (int j = 1; j < k - 1; ++j) {
        const int d = k - j;
        const double dist = d * dt;
        const double m0 = (pm[d - 1] - pm[d]) / alpha;
        const double tail = dist * m0 - (pp[d] - pp[d - 1]) / (1.0 - alpha);
        const double slope = (w.psi[j + 1] - w.psi[j]) / dt;
        s_int += (w.psi[k] - w.psi[j]) * m0 - slope * tail;
      }
      // diagonal panel [t_{k-1}, t_k]
      const double slope = (w.psi[k] - w.psi[k - 1]) / dt;
      s_int += slope * pp[1] / (1.0 - alpha);
    }
    out[k] = pref * (w.psi[k] * pm[k] + alpha * s_int);
  }
  return out;
}

// Marchaud-form right derivative of u_b f. Output node N is left at 0 (the
// (T-t)^(-alpha) boundary factor is genuinely singular there); node 0 is
// skipped when b < 0.
inline std::vector<double> marchaud_right(double alpha, double b, std::span<const double> f,
                                          const Grid& g) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("derivative order must be in (0,1)");
  if (!(b > -1.0)) throw std::invalid_argument("weight exponent must exceed -1");
  const int n = g.n_steps;
  const double dt = g.dt();
  const double pref = 1.0 / gamma_fn(1.0 - alpha);
  detail::WeightedSamples w(f, g, b);

  const auto pm = detail::power_table(-alpha, dt, n + 1);
  const auto pp = detail::power_table(1.0 - alpha, dt, n + 1);
  std::vector<double> out(g.n_nodes(), 0.0);
  const int k_begin = (b < 0.0) ? 1 : 0;
  for (int k = k_begin; k < n; ++k) {
    // diagonal panel [t_k, t_{k+1}]
    const double slope0 = (w.psi[k + 1] - w.psi[k]) / dt;
    double s_int = -slope0 * pp[1] / (1.0 - alpha);
    for (int j = k + 1; j < n; ++j) {
      const int d = j - k;
      const double small = d * dt;
      const double m0 = (pm[d] - pm[d + 1]) / alpha;
      const double tail = (pp[d + 1] - pp[d]) / (1.0 - alpha) - small * m0;
      const double slope = (w.psi[j + 1] - w.psi[j]) / dt;
      s_int += (w.psi[k] - w.psi[j]) * m0 - slope * tail;
    }
    out[k] = pref * (w.psi[k] * pm[n - k] + alpha * s_int);
  }
  return out;
}

// Grunwald-Letnikov derivative weights g_j = (-1)^j C(alpha, j).
inline std::vector<double> gl_weights(double alpha, int count) {
  std::vector<double> w(count);
  if (count == 0) return w;
  w[0] = 1.0;
  for (int j = 1; j < count; ++j) w[j] = w[j - 1] * (static_cast<double>(j) - 1.0 - alpha) / j;
  return w;
}

inline std::vector<double> gl_derivative_left(double alpha, std::span<const double> f,
                                              const Grid& g) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("derivative order must be in (0,1)");
  const int n = g.n_steps;
  const auto w = gl_weights(alpha, n + 1);
  const double scale = std::pow(g.dt(), -alpha);
  std::vector<double> out(g.n_nodes(), 0.0);
  for (int k = 0; k <= n; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) acc += w[j] * f[k - j];
    out[k] = scale * acc;
  }
  return out;
}

inline std::vector<double> gl_derivative_right(double alpha, std::span<const double> f,
                                               const Grid& g) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("derivative order must be in (0,1)");
  const int n = g.n_steps;
  const auto w = gl_weights(alpha, n + 1);
  const double scale = std::pow(g.dt(), -alpha);
  std::vector<double> out(g.n_nodes(), 0.0);
  for (int k = 0; k <= n; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= n - k; ++j) acc += w[j] * f[k + j];
    out[k] = scale * acc;
  }
  return out;
}

// Forward-difference derivative; the last node repeats the final slope.
inline std::vector<double> forward_diff(std::span<const double> f, const Grid& g) {
  const int n = g.n_steps;
  const double inv_dt = 1.0 / g.dt();
  std::vector<double> out(g.n_nodes(), 0.0);
  for (int k = 0; k < n; ++k) out[k] = (f[k + 1] - f[k]) * inv_dt;
  out[n] = out[n - 1];
  return out;
}

// Mode-wise application of a plain fractional operator.
inline GridFunction frac_apply(const FracOpSpec& spec, const GridFunction& f) {
  detail::require_operator_grid(f.grid());
  if (spec.kind == FracKind::integral) {
    if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) {
      throw std::invalid_argument("integral order must be in (0,1]");
    }
  } else if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) {
    throw std::invalid_argument("derivative order must be in (0,1)");
  }
  if (!f.all_finite()) throw std::invalid_argument("frac_apply: non-finite input");

  GridFunction out(f.grid(), f.n_modes());
  for (int m = 0; m < f.n_modes(); ++m) {
    std::vector<double> res;
    if (spec.kind == FracKind::integral) {
      res = (spec.side == FracSide::left)
                ? rl_integral_weighted_left(spec.alpha, 0.0, f.mode(m), f.grid())
                : rl_integral_weighted_right(spec.alpha, 0.0, f.mode(m), f.grid());
    } else {
      res = (spec.side == FracSide::left) ? gl_derivative_left(spec.alpha, f.mode(m), f.grid())
                                          : gl_derivative_right(spec.alpha, f.mode(m), f.grid());
    }
    auto row = out.mode(m);
    for (int k = 0; k <= f.grid().n_steps; ++k) row[k] = res[k];
  }
  return out;
}

}  // namespace fracou
