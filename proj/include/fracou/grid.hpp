#pragma once

// Uniform time grids on [0,T] and H-valued functions sampled on them.
// A GridFunction stores one row of n_steps+1 samples per H-coordinate
// ("mode"); all operators in this library act mode-wise.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracou {

struct HurstParameter {
  double beta;

  explicit HurstParameter(double b) : beta(b) {
    if (!(b > 0.0 && b < 1.0)) {
      throw std::invalid_argument("Hurst parameter must lie in (0,1), got " + std::to_string(b));
    }
  }

  bool rough() const { return beta < 0.5; }
  bool standard() const { return beta == 0.5; }
  bool smooth() const { return beta > 0.5; }
};

struct Grid {
  double horizon = 1.0;  // T
  int n_steps = 0;       // number of cells; n_steps+1 nodes

  Grid() = default;
  Grid(double T, int n) : horizon(T), n_steps(n) {
    if (!(T > 0.0)) throw std::invalid_argument("grid horizon must be positive");
    if (n < 2) throw std::invalid_argument("grid needs at least 2 steps");
  }

  double dt() const { return horizon / n_steps; }
  double node(int k) const { return horizon * static_cast<double>(k) / n_steps; }
  int n_nodes() const { return n_steps + 1; }

  Grid refined(int factor) const { return Grid(horizon, n_steps * factor); }

  bool operator==(const Grid& o) const {
    return horizon == o.horizon && n_steps == o.n_steps;
  }
};

class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(const Grid& g, int n_modes)
      : grid_(g), n_modes_(n_modes), values_(static_cast<size_t>(n_modes) * g.n_nodes(), 0.0) {
    if (n_modes < 1) throw std::invalid_argument("GridFunction needs n_modes >= 1");
  }

  static GridFunction sample(const Grid& g, int n_modes,
                             const std::function<double(int, double)>& f) {
    GridFunction out(g, n_modes);
    for (int m = 0; m < n_modes; ++m) {
      for (int k = 0; k <= g.n_steps; ++k) out.at(m, k) = f(m, g.node(k));
    }
    return out;
  }

  static GridFunction sample(const Grid& g, const std::function<double(double)>& f) {
    return sample(g, 1, [&](int, double t) { return f(t); });
  }

  const Grid& grid() const { return grid_; }
  int n_modes() const { return n_modes_; }

  double& at(int mode, int k) { return values_[static_cast<size_t>(mode) * grid_.n_nodes() + k]; }
  double at(int mode, int k) const {
    return values_[static_cast<size_t>(mode) * grid_.n_nodes() + k];
  }

  std::span<double> mode(int m) {
    return {values_.data() + static_cast<size_t>(m) * grid_.n_nodes(),
            static_cast<size_t>(grid_.n_nodes())};
  }
  std::span<const double> mode(int m) const {
    return {values_.data() + static_cast<size_t>(m) * grid_.n_nodes(),
            static_cast<size_t>(grid_.n_nodes())};
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // Trapezoidal L^2(0,T;H)^2 over all modes.
  double l2_sq() const {
    const double dt = grid_.dt();
    double total = 0.0;
    for (int m = 0; m < n_modes_; ++m) {
      auto row = mode(m);
      double acc = 0.5 * (row.front() * row.front() + row.back() * row.back());
      for (int k = 1; k < grid_.n_steps; ++k) acc += row[k] * row[k];
      total += acc * dt;
    }
    return total;
  }

  double l2_norm() const { return std::sqrt(l2_sq()); }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  GridFunction& operator+=(const GridFunction& o) {
    require_same_shape(o);
    for (size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    require_same_shape(o);
    for (size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridFunction& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double c, GridFunction a) { return a *= c; }

  void require_same_shape(const GridFunction& o) const {
    if (!(grid_ == o.grid_) || n_modes_ != o.n_modes_) {
      throw std::invalid_argument("GridFunction shape mismatch");
    }
  }

 private:
  Grid grid_;
  int n_modes_ = 0;
  std::vector<double> values_;
};

// Relative L^2 distance between two functions on the same grid.
inline double rel_l2_error(const GridFunction& approx, const GridFunction& exact) {
  approx.require_same_shape(exact);
  GridFunction diff = approx;
  diff -= exact;
  const double denom = exact.l2_norm();
  if (denom == 0.0) return diff.l2_norm();
  return diff.l2_norm() / denom;
}

}  // namespace fracou
