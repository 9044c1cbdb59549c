#pragma once

// Semilinear simulation and the change-of-measure machinery: the drift
// transform v = K^-1 (int_0^. G(Z_s) ds), the density
//   rho_T = exp( sum_k <v(t_k), dW_k> - 1/2 int |v|^2 dt ),
// the transfer identity E~ phi(X_T) = E phi(Z_T) rho_T, and the coupled
// strong Feller probe. The Ito sum uses left-point (adapted) evaluation;
// with the left-rectangle cumulative integral this makes the discrete mean
// of rho exactly one and collapses to the classical Girsanov density at
// beta = 1/2 path by path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracou/fbm.hpp"
#include "fracou/grid.hpp"
#include "fracou/spectral.hpp"
#include "fracou/stats.hpp"
#include "fracou/threads.hpp"
#include "fracou/transfer.hpp"

namespace fracou {

// Nonlinearity G = B^-1 F mapping spectral coordinates to H-coordinates,
// with its hypothesis constants declared by the caller.
struct NonlinearityG {
  std::string name = "zero";
  std::function<void(std::span<const double>, std::span<double>)> eval;
  double growth_k = 0.0;      // |G(x)| <= k (1 + |x|)
  double holder_alpha = 1.0;  // |G(x)-G(y)| <= k |x-y|^alpha (needed for beta > 1/2)
  double holder_k = 0.0;

  void operator()(std::span<const double> x, std::span<double> out) const {
    if (eval) {
      eval(x, out);
    } else {
      std::fill(out.begin(), out.end(), 0.0);
    }
  }
  bool is_zero() const { return !eval; }

  static NonlinearityG zero() { return {}; }

  // G(x) = c x (componentwise); for F = B G this gives the linear drift cBx.
  static NonlinearityG componentwise_linear(double c) {
    NonlinearityG g;
    g.name = "linear";
    g.eval = [c](std::span<const double> x, std::span<double> out) {
      for (size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
    };
    g.growth_k = std::abs(c);
    g.holder_alpha = 1.0;
    g.holder_k = std::abs(c);
    return g;
  }

  // Nemytskii G(x)(xi) = f(x(xi)) in the Dirichlet sine basis on (0,1),
  // evaluated by collocation on n_coll interior points (discrete sine
  // transform pair). Assumes B = I in that basis.
  static NonlinearityG nemytskii(const std::string& fname, std::function<double(double)> f,
                                 int n_modes, double lipschitz, int n_coll = 128) {
    if (n_coll <= n_modes) throw std::invalid_argument("nemytskii needs n_coll > n_modes");
    NonlinearityG g;
    g.name = fname;
    // precompute the sine blades
    std::vector<double> blades(static_cast<size_t>(n_modes) * (n_coll - 1));
    for (int m = 0; m < n_modes; ++m) {
      for (int i = 1; i < n_coll; ++i) {
        blades[static_cast<size_t>(m) * (n_coll - 1) + (i - 1)] =
            std::numbers::sqrt2 * std::sin((m + 1) * std::numbers::pi * i / n_coll);
      }
    }
    g.eval = [f, n_modes, n_coll, blades](std::span<const double> x, std::span<double> out) {
      std::vector<double> phys(n_coll - 1, 0.0);
      for (int m = 0; m < n_modes; ++m) {
        const double* blade = blades.data() + static_cast<size_t>(m) * (n_coll - 1);
        const double xm = x[m];
        if (xm == 0.0) continue;
        for (int i = 0; i < n_coll - 1; ++i) phys[i] += xm * blade[i];
      }
      for (double& v : phys) v = f(v);
      for (int m = 0; m < n_modes; ++m) {
        const double* blade = blades.data() + static_cast<size_t>(m) * (n_coll - 1);
        double acc = 0.0;
        for (int i = 0; i < n_coll - 1; ++i) acc += phys[i] * blade[i];
        out[m] = acc / n_coll;
      }
    };
    g.growth_k = lipschitz;
    g.holder_alpha = 1.0;
    g.holder_k = lipschitz;
    return g;
  }
};

// Holder condition (needed when beta > 1/2): alpha > (beta - 1/2)/(beta - lambda).
inline bool holder_condition_ok(double alpha, double beta, double lambda_reg) {
  if (beta <= 0.5) return true;
  return alpha > (beta - 0.5) / (beta - lambda_reg);
}

struct DensitySample {
  double rho = 1.0;
  double log_rho = 0.0;
  double ito_term = 0.0;
  double quadratic_term = 0.0;
  long path_id = -1;
  bool overflowed = false;  // rho clamped; log_rho is authoritative
};

namespace detail {

// v = K^-1 (int_0^. g dt) with the left-rectangle cumulative integral; the
// composition reduces to the inverse transfer machinery applied directly to
// the sampled g. Node 0 is zeroed for beta != 1/2 (adapted choice at a
// genuinely singular node).
inline GridFunction drift_transform_from_samples(const HurstParameter& h,
                                                 const GridFunction& gvals) {
  const Grid& g = gvals.grid();
  GridFunction psi(g, gvals.n_modes());
  const double dt = g.dt();
  for (int m = 0; m < gvals.n_modes(); ++m) {
    auto src = gvals.mode(m);
    auto dst = psi.mode(m);
    double acc = 0.0;
    dst[0] = 0.0;
    for (int k = 1; k <= g.n_steps; ++k) {
      acc += src[k - 1] * dt;
      dst[k] = acc;
    }
  }
  return invert_Kbig_impl(h, psi, /*adapted_node0=*/!h.standard());
}

}  // namespace detail

// K^-1 of the running integral of G along one path (modes x nodes).
inline GridFunction drift_transform(const HurstParameter& h, const NonlinearityG& G,
                                    const GridFunction& zpath) {
  const Grid& g = zpath.grid();
  const int nm = zpath.n_modes();
  GridFunction gvals(g, nm);
  std::vector<double> state(nm), gout(nm);
  for (int k = 0; k <= g.n_steps; ++k) {
    for (int m = 0; m < nm; ++m) state[m] = zpath.at(m, k);
    G(state, gout);
    for (int m = 0; m < nm; ++m) gvals.at(m, k) = gout[m];
  }
  return detail::drift_transform_from_samples(h, gvals);
}

// Density along one path given the white increments that drove it.
inline DensitySample density_rho(const HurstParameter& h, const NonlinearityG& G,
                                 const GridFunction& zpath,
                                 std::span<const double> white_increments, long path_id) {
  const Grid& g = zpath.grid();
  const int nm = zpath.n_modes();
  if (white_increments.size() != static_cast<size_t>(nm) * g.n_steps) {
    throw std::invalid_argument("density_rho: white increment size mismatch (wrong provenance?)");
  }
  const GridFunction v = drift_transform(h, G, zpath);

  DensitySample out;
  out.path_id = path_id;
  double ito = 0.0;
  for (int m = 0; m < nm; ++m) {
    auto row = v.mode(m);
    const double* dw = white_increments.data() + static_cast<size_t>(m) * g.n_steps;
    for (int k = 0; k < g.n_steps; ++k) ito += row[k] * dw[k];
  }
  double quad = 0.0;
  {
    const double dt = g.dt();
    for (int m = 0; m < nm; ++m) {
      auto row = v.mode(m);
      double acc = 0.5 * (row[0] * row[0] + row[g.n_steps] * row[g.n_steps]);
      for (int k = 1; k < g.n_steps; ++k) acc += row[k] * row[k];
      quad += acc * dt;
    }
  }
  out.ito_term = ito;
  out.quadratic_term = 0.5 * quad;
  out.log_rho = out.ito_term - out.quadratic_term;
  if (out.log_rho > 700.0 || out.log_rho < -700.0) {
    out.overflowed = true;
    out.rho = std::exp(std::clamp(out.log_rho, -700.0, 700.0));
  } else {
    out.rho = std::exp(out.log_rho);
  }
  return out;
}

// Density for path p of an ensemble; the ensemble retains the generating
// white increments, so provenance is structural.
inline DensitySample density_rho(const NonlinearityG& G, const OUEnsemble& ens, int path_id) {
  if (ens.noise.generator != FbmGenerator::kernel) {
    throw std::invalid_argument("density_rho needs kernel-generated noise (white increments)");
  }
  if (path_id < 0 || path_id >= ens.n_paths) throw std::invalid_argument("bad path id");
  const Grid& g = ens.grid;
  const int nm = ens.model.n_modes();
  GridFunction z(g, nm);
  for (int m = 0; m < nm; ++m) {
    auto src = ens.path(path_id, m);
    auto dst = z.mode(m);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  std::span<const double> white{
      ens.noise.white.data() + (static_cast<size_t>(path_id) * nm) * g.n_steps,
      static_cast<size_t>(nm) * g.n_steps};
  return density_rho(ens.model.hurst(), G, z, white, path_id);
}

// Exponential-Euler step shared by the linear and semilinear simulators:
//   X_{k+1} = e^{-a dt} X_k + a^-1 (1 - e^{-a dt}) F_n(X_k) + noise increment,
// with the noise increment reused from the linear (OU) recursion. F = B G.
inline void semilinear_mode_sweep(const SpectralModel& model, const NonlinearityG& G,
                                  std::span<const double> x, const Grid& g,
                                  const FbmPathSet& noise, int path, std::span<double> out_flat,
                                  long* blowup_step) {
  const int nm = model.n_modes();
  const int n = g.n_steps;
  const double dt = g.dt();
  std::vector<double> decay(nm), fweight(nm), wnoise(nm);
  for (int m = 0; m < nm; ++m) {
    decay[m] = std::exp(-model.alphas[m] * dt);
    fweight[m] = dt * psi1(model.alphas[m] * dt);
    wnoise[m] = (model.lambdas[m] < kLambdaZero)
                    ? 0.0
                    : std::sqrt(model.lambdas[m]) * psi1(model.alphas[m] * dt);
  }
  std::vector<double> state(x.begin(), x.end()), gout(nm, 0.0);
  auto node_value = [&](int m, int k) -> double& {
    return out_flat[static_cast<size_t>(m) * (n + 1) + k];
  };
  for (int m = 0; m < nm; ++m) node_value(m, 0) = state[m];
  for (int k = 0; k < n; ++k) {
    if (!G.is_zero()) G(state, gout);
    double norm_sq = 0.0;
    for (int m = 0; m < nm; ++m) {
      auto fbm = noise.path(path, m);
      const double db = fbm[k + 1] - fbm[k];
      const double fterm =
          G.is_zero() ? 0.0 : std::sqrt(std::max(model.lambdas[m], 0.0)) * gout[m];
      state[m] = decay[m] * state[m] + fweight[m] * fterm + wnoise[m] * db;
      node_value(m, k + 1) = state[m];
      norm_sq += state[m] * state[m];
    }
    if (norm_sq > 1e24) {  // |X| > 1e12
      *blowup_step = k + 1;
      return;
    }
  }
  *blowup_step = -1;
}

// Semilinear simulation dX = (AX + F(X)) dt + B dW^beta with F = B G.
// Reduces bit-exactly to simulate_ou when G is zero.
inline OUEnsemble simulate_semilinear(const SpectralModel& model, const NonlinearityG& G,
                                      std::span<const double> x, const Grid& grid,
                                      const NoiseSeed& seed, int n_paths,
                                      size_t cap_elems = kDefaultPathCapElems) {
  if (grid.horizon != model.horizon) {
    throw std::invalid_argument("grid horizon must match the model horizon");
  }
  if (static_cast<int>(x.size()) != model.n_modes()) {
    throw std::invalid_argument("initial state dimension mismatch");
  }
  OUEnsemble out;
  out.model = model;
  out.grid = grid;
  out.n_paths = n_paths;
  out.initial.assign(x.begin(), x.end());
  out.noise = sample_fbm_kernel(model.hurst(), grid, model.n_modes(), n_paths, seed, cap_elems);
  out.paths.assign(static_cast<size_t>(n_paths) * model.n_modes() * grid.n_nodes(), 0.0);
  std::vector<long> blowup(n_paths, -1);
  parallel_for(static_cast<size_t>(n_paths), [&](size_t p) {
    std::span<double> flat{
        out.paths.data() + static_cast<size_t>(p) * model.n_modes() * grid.n_nodes(),
        static_cast<size_t>(model.n_modes()) * grid.n_nodes()};
    semilinear_mode_sweep(model, G, x, grid, out.noise, static_cast<int>(p), flat, &blowup[p]);
  });
  for (int p = 0; p < n_paths; ++p) {
    if (blowup[p] >= 0) {
      throw std::runtime_error("semilinear state norm exceeded 1e12 on path " +
                               std::to_string(p) + " at step " + std::to_string(blowup[p]) +
                               " (blow-up)");
    }
  }
  return out;
}

// Bounded test functionals of the terminal state.
struct BoundedFunctional {
  std::string name;
  double bound = 1.0;
  std::function<double(std::span<const double>)> fn;
};

inline std::vector<BoundedFunctional> phi_battery() {
  std::vector<BoundedFunctional> out;
  out.push_back({"tanh_z1", 1.0, [](std::span<const double> z) { return std::tanh(z[0]); }});
  out.push_back({"exp_neg_norm2", 1.0, [](std::span<const double> z) {
                   double s = 0.0;
                   for (double v : z) s += v * v;
                   return std::exp(-s);
                 }});
  // smoothed half-space indicator 1{z_1 > 0.2}
  out.push_back({"smooth_ind_z1", 1.0, [](std::span<const double> z) {
                   return 1.0 / (1.0 + std::exp(-(z[0] - 0.2) / 0.1));
                 }});
  return out;
}

struct MCParams {
  int n_paths = 1000;
  int n_steps = 128;
  std::uint64_t seed = 1;
};

struct TransferRecord {
  std::string phi;
  double lhs = 0.0, lhs_se = 0.0;  // E phi(X_T) under the semilinear law
  double rhs = 0.0, rhs_se = 0.0;  // E phi(Z_T) rho under the linear law
  double combined_se = 0.0;
  double diff = 0.0;
};

struct TransferReport {
  std::vector<TransferRecord> records;
  MeanSE mean_rho;  // density normalization on the rhs family
};

namespace detail {

// Streaming driver: per path, generate the white increments, build the fBm
// path, run linear and/or semilinear recursions, hand terminal states and
// densities to the sink. One hashed stream per (path, mode): thread count
// cannot change any draw.
template <typename Sink>
void stream_paths(const SpectralModel& model, const NonlinearityG& G,
                  std::span<const double> x, const Grid& grid, const NoiseSeed& seed,
                  int n_paths, bool want_semilinear, Sink&& sink) {
  const int nm = model.n_modes();
  const int n = grid.n_steps;
  const FbmWeights weights(model.beta, grid);
  std::atomic<long> blowup_path{-1};

  std::vector<double> decay(nm), fweight(nm), wnoise(nm);
  const double dt = grid.dt();
  for (int m = 0; m < nm; ++m) {
    decay[m] = std::exp(-model.alphas[m] * dt);
    fweight[m] = dt * psi1(model.alphas[m] * dt);
    wnoise[m] = (model.lambdas[m] < kLambdaZero)
                    ? 0.0
                    : std::sqrt(model.lambdas[m]) * psi1(model.alphas[m] * dt);
  }

  parallel_for(static_cast<size_t>(n_paths), [&](size_t p) {
    std::vector<double> white(static_cast<size_t>(nm) * n);
    std::vector<double> fbm(static_cast<size_t>(nm) * (n + 1));
    GridFunction z(grid, nm);
    for (int m = 0; m < nm; ++m) {
      std::span<double> dw{white.data() + static_cast<size_t>(m) * n, static_cast<size_t>(n)};
      fill_white_increments(seed, m, static_cast<int>(p), grid, dw);
      std::span<double> path{fbm.data() + static_cast<size_t>(m) * (n + 1),
                             static_cast<size_t>(n + 1)};
      weights.accumulate_path(dw, path);
      // linear OU path
      auto row = z.mode(m);
      double zv = x[m];
      row[0] = zv;
      for (int k = 0; k < n; ++k) {
        zv = decay[m] * zv + wnoise[m] * (path[k + 1] - path[k]);
        row[k + 1] = zv;
      }
    }
    std::vector<double> x_terminal;
    if (want_semilinear) {
      std::vector<double> state(x.begin(), x.end()), gout(nm, 0.0);
      for (int k = 0; k < n; ++k) {
        if (!G.is_zero()) G(state, gout);
        double norm_sq = 0.0;
        for (int m = 0; m < nm; ++m) {
          const double* path = fbm.data() + static_cast<size_t>(m) * (n + 1);
          const double db = path[k + 1] - path[k];
          const double fterm =
              G.is_zero() ? 0.0 : std::sqrt(std::max(model.lambdas[m], 0.0)) * gout[m];
          state[m] = decay[m] * state[m] + fweight[m] * fterm + wnoise[m] * db;
          norm_sq += state[m] * state[m];
        }
        if (norm_sq > 1e24) {  // |X| > 1e12: record and bail out of this path
          blowup_path.store(static_cast<long>(p));
          return;
        }
      }
      x_terminal = std::move(state);
    }
    sink(static_cast<long>(p), z, std::span<const double>(white), x_terminal);
  });
  if (blowup_path.load() >= 0) {
    throw std::runtime_error("semilinear state norm exceeded 1e12 on path " +
                             std::to_string(blowup_path.load()) + " (blow-up)");
  }
}

}  // namespace detail

// Streaming density study: simulate the linear ensemble path by path and
// collect one density sample per path (used for the normalization check and
// the density CSV output).
inline std::vector<DensitySample> density_study(const SpectralModel& model,
                                                const NonlinearityG& G,
                                                std::span<const double> x, const Grid& grid,
                                                const NoiseSeed& seed, int n_paths) {
  std::vector<DensitySample> out(n_paths);
  const HurstParameter h = model.hurst();
  detail::stream_paths(model, G, x, grid, seed, n_paths, /*want_semilinear=*/false,
                       [&](long p, const GridFunction& z, std::span<const double> white,
                           const std::vector<double>&) {
                         out[p] = density_rho(h, G, z, white, p);
                       });
  return out;
}

// Both sides of the transfer identity with independent path families.
// Declared functional bounds are spot-checked by sampling, and for
// beta > 1/2 the declared Holder exponent must satisfy the necessary part
// of the continuity hypothesis.
inline TransferReport transfer_check(const SpectralModel& model, const NonlinearityG& G,
                                     std::span<const double> x,
                                     const std::vector<BoundedFunctional>& phis,
                                     const MCParams& mc) {
  const Grid grid(model.horizon, mc.n_steps);
  const HurstParameter h = model.hurst();
  const int nm = model.n_modes();
  const size_t nphi = phis.size();

  if (h.smooth() && !G.is_zero() && !holder_condition_ok(G.holder_alpha, model.beta, 0.0)) {
    throw std::invalid_argument("transfer_check: declared Holder exponent " +
                                std::to_string(G.holder_alpha) +
                                " violates the continuity hypothesis at this beta");
  }
  {
    RngStream rng(mc.seed ^ 0x5bd1e995u, -1);
    std::vector<double> z(nm);
    for (int trial = 0; trial < 256; ++trial) {
      for (int m = 0; m < nm; ++m) z[m] = 4.0 * rng.next_normal();
      for (const auto& p : phis) {
        if (std::abs(p.fn(z)) > p.bound * (1.0 + 1e-12)) {
          throw std::invalid_argument("transfer_check: functional '" + p.name +
                                      "' exceeds its declared bound");
        }
      }
    }
  }

  // lhs family
  std::vector<std::vector<double>> lhs_vals(nphi, std::vector<double>(mc.n_paths));
  detail::stream_paths(model, G, x, grid, NoiseSeed{mc.seed, 0}, mc.n_paths,
                       /*want_semilinear=*/true,
                       [&](long p, const GridFunction&, std::span<const double>,
                           const std::vector<double>& xt) {
                         for (size_t i = 0; i < nphi; ++i) lhs_vals[i][p] = phis[i].fn(xt);
                       });
  // rhs family (independent streams via the stream_id offset)
  std::vector<std::vector<double>> rhs_vals(nphi, std::vector<double>(mc.n_paths));
  std::vector<double> rho_vals(mc.n_paths);
  detail::stream_paths(model, G, x, grid, NoiseSeed{mc.seed, nm + 1}, mc.n_paths,
                       /*want_semilinear=*/false,
                       [&](long p, const GridFunction& z, std::span<const double> white,
                           const std::vector<double>&) {
                         const DensitySample d = density_rho(h, G, z, white, p);
                         rho_vals[p] = d.rho;
                         std::vector<double> zt(nm);
                         for (int m = 0; m < nm; ++m) zt[m] = z.at(m, grid.n_steps);
                         for (size_t i = 0; i < nphi; ++i) {
                           rhs_vals[i][p] = phis[i].fn(zt) * d.rho;
                         }
                       });

  TransferReport rep;
  rep.mean_rho = mean_se(rho_vals);
  for (size_t i = 0; i < nphi; ++i) {
    TransferRecord rec;
    rec.phi = phis[i].name;
    const MeanSE l = mean_se(lhs_vals[i]);
    const MeanSE r = mean_se(rhs_vals[i]);
    rec.lhs = l.mean;
    rec.lhs_se = l.se;
    rec.rhs = r.mean;
    rec.rhs_se = r.se;
    rec.combined_se = std::sqrt(l.se * l.se + r.se * r.se);
    rec.diff = std::abs(l.mean - r.mean);
    rep.records.push_back(rec);
  }
  return rep;
}

struct ProbeRecord {
  int level = 0;
  double offset_scale = 0.0;  // 2^-j
  MeanSE rho_absdiff;         // E |rho(x_j) - rho(x)| (coupled)
  std::vector<double> phi_diff;  // |E phi(X^{x_j}) - E phi(X^x)| via the density rep.
  std::vector<double> phi_diff_se;
};

struct ProbeReport {
  Verdict model_verdict = Verdict::inconclusive;
  std::vector<ProbeRecord> levels;
};

// Coupled strong Feller probe: on one linear ensemble, shift the initial
// datum along a direction by dyadic offsets and compare densities and
// density-weighted functionals path by path.
inline ProbeReport strong_feller_probe(const SpectralModel& model, const NonlinearityG& G,
                                       std::span<const double> x,
                                       std::span<const double> direction, int dyadic_levels,
                                       const std::vector<BoundedFunctional>& phis,
                                       const MCParams& mc) {
  if (static_cast<int>(direction.size()) != model.n_modes()) {
    throw std::invalid_argument("probe direction dimension mismatch");
  }
  const Grid grid(model.horizon, mc.n_steps);
  const HurstParameter h = model.hurst();
  const int nm = model.n_modes();
  const size_t nphi = phis.size();

  ProbeReport rep;
  rep.model_verdict = equivalence_report(model, 256).verdict;

  // per path: rho at x and at each offset, and phi(Z_T) rho for both
  std::vector<std::vector<double>> absdiff(dyadic_levels,
                                           std::vector<double>(mc.n_paths, 0.0));
  std::vector<std::vector<std::vector<double>>> phidiff(
      dyadic_levels, std::vector<std::vector<double>>(nphi, std::vector<double>(mc.n_paths)));

  detail::stream_paths(
      model, G, x, grid, NoiseSeed{mc.seed, 0}, mc.n_paths, /*want_semilinear=*/false,
      [&](long p, const GridFunction& z, std::span<const double> white,
          const std::vector<double>&) {
        const DensitySample base = density_rho(h, G, z, white, p);
        std::vector<double> zt(nm);
        for (int m = 0; m < nm; ++m) zt[m] = z.at(m, grid.n_steps);
        GridFunction zj(grid, nm);
        std::vector<double> zjt(nm);
        for (int j = 0; j < dyadic_levels; ++j) {
          const double scale = std::ldexp(1.0, -j);
          // Z^{x_j}(t) = Z^x(t) + S(t) (x_j - x)
          for (int m = 0; m < nm; ++m) {
            auto src = z.mode(m);
            auto dst = zj.mode(m);
            const double dxm = scale * direction[m];
            for (int k = 0; k <= grid.n_steps; ++k) {
              dst[k] = src[k] + dxm * std::exp(-model.alphas[m] * grid.node(k));
            }
            zjt[m] = dst[grid.n_steps];
          }
          const DensitySample shifted = density_rho(h, G, zj, white, p);
          absdiff[j][p] = std::abs(shifted.rho - base.rho);
          for (size_t i = 0; i < nphi; ++i) {
            phidiff[j][i][p] = phis[i].fn(zjt) * shifted.rho - phis[i].fn(zt) * base.rho;
          }
        }
      });

  for (int j = 0; j < dyadic_levels; ++j) {
    ProbeRecord rec;
    rec.level = j;
    rec.offset_scale = std::ldexp(1.0, -j);
    rec.rho_absdiff = mean_se(absdiff[j]);
    for (size_t i = 0; i < nphi; ++i) {
      const MeanSE d = mean_se(phidiff[j][i]);
      rec.phi_diff.push_back(std::abs(d.mean));
      rec.phi_diff_se.push_back(d.se);
    }
    rep.levels.push_back(std::move(rec));
  }
  return rep;
}

}  // namespace fracou
