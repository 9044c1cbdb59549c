#pragma once

// Scalar and cylindrical fBm path generation. Two generators:
//  - sample_fbm_kernel: Volterra quadrature B(t_k) = sum_j w_kj dW_j with
//    per-cell integrals of K_beta (the representation reused later by the
//    Girsanov machinery, which needs the underlying white increments);
//  - sample_fbm_cholesky: exact-in-distribution Gaussian vectors from the
//    classical covariance, used as a distributional oracle.
// Paths are a pure function of (seed, stream_id, grid, beta): each
// (path, mode) pair owns a hashed RNG stream, so generation order and
// threading cannot change the output.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracou/errors.hpp"
#include "fracou/fractional.hpp"
#include "fracou/grid.hpp"
#include "fracou/kernel.hpp"
#include "fracou/rng.hpp"
#include "fracou/special.hpp"
#include "fracou/stats.hpp"
#include "fracou/threads.hpp"

namespace fracou {

// Classical fBm covariance (the calibrated convention the kernel
// normalization is validated against).
inline double fbm_covariance(double beta, double s, double t) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  if (s < 0.0 || t < 0.0) throw std::invalid_argument("fbm_covariance needs s,t >= 0");
  const double tb = 2.0 * beta;
  return 0.5 * (std::pow(t, tb) + std::pow(s, tb) - std::pow(std::abs(t - s), tb));
}

// Cumulative unit-kernel integral F(y) = int_0^y K(1,x) dx, tabulated once;
// by homogeneity every cell integral of K is a difference of F values,
//   int_a^b K(t,s) ds = t^(beta+1/2) [F(b/t) - F(a/t)].
class UnitKernelTable {
 public:
  explicit UnitKernelTable(double beta) : beta_(beta) {
    if (beta == 0.5) return;
    q_ = -std::abs(beta - 0.5);
    lead_coeff_ = kernel_lead_coeff(beta);
    const int nf = 2048;
    rem_cum_.assign(nf + 1, 0.0);
    // same split as apply_Kbig: kappa-linear cells on the left half, plain
    // remainder trapezoid on the right half
    const double w = 1.0 / nf;
    const int half = nf / 2;
    std::vector<double> kap(half + 1);
    for (int i = 1; i <= half; ++i) kap[i] = kernel_K(beta, 1.0, i * w) * std::pow(i * w, -q_);
    kap[0] = 2.0 * kap[1] - kap[2];
    const double ae = beta + 0.5;
    for (int i = 0; i < half; ++i) {
      const double lo = i * w;
      const double hi = lo + w;
      const double m0 = (std::pow(hi, q_ + 1.0) - std::pow(lo, q_ + 1.0)) / (q_ + 1.0);
      const double m1 = (std::pow(hi, q_ + 2.0) - std::pow(lo, q_ + 2.0)) / (q_ + 2.0) - lo * m0;
      const double k_int = kap[i] * m0 + (kap[i + 1] - kap[i]) / w * m1;
      const double lead_int =
          lead_coeff_ * (std::pow(1.0 - lo, ae) - std::pow(1.0 - hi, ae)) / ae;
      rem_cum_[i + 1] = rem_cum_[i] + (k_int - lead_int);
    }
    double prev = kernel_K_remainder(beta, 1.0, 0.5);
    for (int i = half; i < nf; ++i) {
      const double hi = (i + 1.0) * w;
      const double next = (i + 1 == nf) ? 0.0 : kernel_K_remainder(beta, 1.0, hi);
      rem_cum_[i + 1] = rem_cum_[i] + 0.5 * (prev + next) * w;
      prev = next;
    }
    // power model K ~ amp x^q below the first tabulated node
    amp0_ = kap[1];
  }

  // F(y) for y in [0,1].
  double cumulative(double y) const {
    if (beta_ == 0.5) return y;
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) y = 1.0;
    const double ae = beta_ + 0.5;
    const double lead = lead_coeff_ * (1.0 - std::pow(1.0 - y, ae)) / ae;
    const int nf = static_cast<int>(rem_cum_.size()) - 1;
    const double u = y * nf;
    if (u < 1.0) {
      // remainder ~ amp x^q - lead-ish; integrate the kernel power model and
      // subtract the exact lead part already added above
      const double k_int = amp0_ * std::pow(y, q_ + 1.0) / (q_ + 1.0);
      return k_int;
    }
    const int i = std::min(static_cast<int>(u), nf - 1);
    const double frac = u - i;
    const double rem = rem_cum_[i] * (1.0 - frac) + rem_cum_[i + 1] * frac;
    return lead + rem;
  }

 private:
  double beta_;
  double q_ = 0.0;
  double lead_coeff_ = 1.0;
  double amp0_ = 0.0;
  std::vector<double> rem_cum_;
};

// Per-cell quadrature weights w[k][j] = (1/dt) int_{t_j}^{t_{j+1}} K(t_k,s) ds
// stored as a packed lower triangle.
class FbmWeights {
 public:
  FbmWeights(double beta, const Grid& g) : beta_(beta), grid_(g) {
    detail::require_operator_grid(g);
    if (beta == 0.5) return;  // w == 1
    const UnitKernelTable table(beta);
    const int n = g.n_steps;
    w_.resize(static_cast<size_t>(n) * (n + 1) / 2);
    const double dt = g.dt();
    for (int k = 1; k <= n; ++k) {
      const double scale = std::pow(g.node(k), beta + 0.5) / dt;
      double prev = 0.0;  // F(0)
      for (int j = 0; j < k; ++j) {
        const double next = table.cumulative(static_cast<double>(j + 1) / k);
        at(k, j) = scale * (next - prev);
        prev = next;
      }
    }
  }

  double weight(int k, int j) const { return beta_ == 0.5 ? 1.0 : w_[idx(k, j)]; }

  // B(t_k) = sum_{j<k} w_kj dW_j for one mode; out has n_nodes entries.
  void accumulate_path(std::span<const double> dw, std::span<double> out) const {
    const int n = grid_.n_steps;
    out[0] = 0.0;
    if (beta_ == 0.5) {
      double acc = 0.0;
      for (int k = 1; k <= n; ++k) {
        acc += dw[k - 1];
        out[k] = acc;
      }
      return;
    }
    for (int k = 1; k <= n; ++k) {
      const double* row = w_.data() + idx(k, 0);
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += row[j] * dw[j];
      out[k] = acc;
    }
  }

  const Grid& grid() const { return grid_; }
  double beta() const { return beta_; }

 private:
  size_t idx(int k, int j) const {
    return static_cast<size_t>(k - 1) * k / 2 + j;
  }
  double& at(int k, int j) { return w_[idx(k, j)]; }

  double beta_;
  Grid grid_;
  std::vector<double> w_;
};

enum class FbmGenerator { kernel, cholesky };

struct FbmPathSet {
  Grid grid;
  double beta = 0.5;
  int n_modes = 0;
  int n_paths = 0;
  FbmGenerator generator = FbmGenerator::kernel;
  NoiseSeed seed;
  double jitter_used = 0.0;  // cholesky only
  // paths: [path][mode][node], white: [path][mode][step] (kernel) or
  // [path][mode][node-1] normals (cholesky)
  std::vector<double> paths;
  std::vector<double> white;

  std::span<double> path(int p, int m) {
    const size_t nn = grid.n_nodes();
    return {paths.data() + (static_cast<size_t>(p) * n_modes + m) * nn, nn};
  }
  std::span<const double> path(int p, int m) const {
    const size_t nn = grid.n_nodes();
    return {paths.data() + (static_cast<size_t>(p) * n_modes + m) * nn, nn};
  }
  std::span<double> increments(int p, int m) {
    const size_t ns = grid.n_steps;
    return {white.data() + (static_cast<size_t>(p) * n_modes + m) * ns, ns};
  }
  std::span<const double> increments(int p, int m) const {
    const size_t ns = grid.n_steps;
    return {white.data() + (static_cast<size_t>(p) * n_modes + m) * ns, ns};
  }
};

namespace detail {

inline void check_path_budget(const Grid& g, int n_modes, int n_paths, size_t cap_elems) {
  if (n_modes < 1 || n_paths < 1) throw std::invalid_argument("need n_modes, n_paths >= 1");
  const size_t total =
      2ull * static_cast<size_t>(n_paths) * n_modes * (g.n_steps + 1);
  if (total > cap_elems) {
    throw ResourceError("fbm sampling exceeds the configured resource cap (" +
                        std::to_string(total) + " > " + std::to_string(cap_elems) +
                        " elements)");
  }
}

}  // namespace detail

inline constexpr size_t kDefaultPathCapElems = 60'000'000;

// White increments for one (path, mode) stream; dw[j] ~ N(0, dt).
inline void fill_white_increments(const NoiseSeed& seed, int mode, int path, const Grid& g,
                                  std::span<double> dw) {
  RngStream rng(seed.seed, seed.stream_id + mode, path);
  const double sd = std::sqrt(g.dt());
  for (int j = 0; j < g.n_steps; ++j) dw[j] = sd * rng.next_normal();
}

inline FbmPathSet sample_fbm_kernel(const HurstParameter& h, const Grid& g, int n_modes,
                                    int n_paths, const NoiseSeed& seed,
                                    size_t cap_elems = kDefaultPathCapElems) {
  detail::require_operator_grid(g);
  detail::check_path_budget(g, n_modes, n_paths, cap_elems);
  FbmWeights weights(h.beta, g);

  FbmPathSet out;
  out.grid = g;
  out.beta = h.beta;
  out.n_modes = n_modes;
  out.n_paths = n_paths;
  out.generator = FbmGenerator::kernel;
  out.seed = seed;
  out.paths.assign(static_cast<size_t>(n_paths) * n_modes * g.n_nodes(), 0.0);
  out.white.assign(static_cast<size_t>(n_paths) * n_modes * g.n_steps, 0.0);

  parallel_for(static_cast<size_t>(n_paths), [&](size_t p) {
    for (int m = 0; m < n_modes; ++m) {
      auto dw = out.increments(static_cast<int>(p), m);
      fill_white_increments(seed, m, static_cast<int>(p), g, dw);
      weights.accumulate_path(dw, out.path(static_cast<int>(p), m));
    }
  });
  return out;
}

inline FbmPathSet sample_fbm_cholesky(const HurstParameter& h, const Grid& g, int n_modes,
                                      int n_paths, const NoiseSeed& seed,
                                      size_t cap_elems = kDefaultPathCapElems) {
  detail::require_operator_grid(g);
  detail::check_path_budget(g, n_modes, n_paths, cap_elems);
  const int n = g.n_steps;

  // covariance Gram on nodes t_1..t_n
  std::vector<double> gram(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = fbm_covariance(h.beta, g.node(i + 1), g.node(j + 1));
      gram[static_cast<size_t>(i) * n + j] = v;
      gram[static_cast<size_t>(j) * n + i] = v;
    }
  }
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, gram[static_cast<size_t>(i) * n + i]);

  std::vector<double> factor;
  double jitter = 0.0;
  for (double scale : {0.0, 1e-14, 1e-12, 1e-10, 1e-8}) {
    factor = gram;
    jitter = scale * max_diag;
    for (int i = 0; i < n; ++i) factor[static_cast<size_t>(i) * n + i] += jitter;
    if (cholesky_factor(factor, static_cast<size_t>(n))) break;
    factor.clear();
  }
  if (factor.empty()) {
    throw std::runtime_error("fbm covariance Cholesky failed even with jitter 1e-8 * diag");
  }

  FbmPathSet out;
  out.grid = g;
  out.beta = h.beta;
  out.n_modes = n_modes;
  out.n_paths = n_paths;
  out.generator = FbmGenerator::cholesky;
  out.seed = seed;
  out.jitter_used = jitter;
  out.paths.assign(static_cast<size_t>(n_paths) * n_modes * g.n_nodes(), 0.0);
  out.white.assign(static_cast<size_t>(n_paths) * n_modes * g.n_steps, 0.0);

  parallel_for(static_cast<size_t>(n_paths), [&](size_t p) {
    std::vector<double> z(n);
    for (int m = 0; m < n_modes; ++m) {
      RngStream rng(seed.seed, seed.stream_id + m, static_cast<int>(p));
      for (int i = 0; i < n; ++i) z[i] = rng.next_normal();
      auto normals = out.increments(static_cast<int>(p), m);
      for (int i = 0; i < n; ++i) normals[i] = z[i];
      auto path = out.path(static_cast<int>(p), m);
      path[0] = 0.0;
      for (int i = 0; i < n; ++i) {
        const double* row = factor.data() + static_cast<size_t>(i) * n;
        double acc = 0.0;
        for (int j = 0; j <= i; ++j) acc += row[j] * z[j];
        path[i + 1] = acc;
      }
    }
  });
  return out;
}

// Shape header + little-endian float64 payload.
inline void dump_paths_binary(const FbmPathSet& set, const std::string& file) {
  const std::string tmp = file + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
  const char magic[8] = {'F', 'O', 'U', 'P', 'A', 'T', 'H', 'S'};
  std::uint64_t dims[4] = {1ull, static_cast<std::uint64_t>(set.n_paths),
                           static_cast<std::uint64_t>(set.n_modes),
                           static_cast<std::uint64_t>(set.grid.n_nodes())};
  bool ok = std::fwrite(magic, 1, 8, f) == 8 && std::fwrite(dims, 8, 4, f) == 4;
  ok = ok && std::fwrite(set.paths.data(), sizeof(double), set.paths.size(), f) ==
                 set.paths.size();
  ok = std::fclose(f) == 0 && ok;
  if (!ok) throw std::runtime_error("failed writing " + tmp);
  std::filesystem::rename(tmp, file);
}

struct PathDump {
  std::uint64_t n_paths = 0, n_modes = 0, n_nodes = 0;
  std::vector<double> values;
};

inline PathDump read_paths_binary(const std::string& file) {
  std::FILE* f = std::fopen(file.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + file);
  char magic[8];
  std::uint64_t dims[4];
  if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, "FOUPATHS", 8) != 0 ||
      std::fread(dims, 8, 4, f) != 4) {
    std::fclose(f);
    throw std::runtime_error("bad path dump header in " + file);
  }
  PathDump out;
  out.n_paths = dims[1];
  out.n_modes = dims[2];
  out.n_nodes = dims[3];
  out.values.resize(out.n_paths * out.n_modes * out.n_nodes);
  const bool ok = std::fread(out.values.data(), sizeof(double), out.values.size(), f) ==
                  out.values.size();
  std::fclose(f);
  if (!ok) throw std::runtime_error("truncated path dump " + file);
  return out;
}

}  // namespace fracou
