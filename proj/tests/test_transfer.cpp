#include <doctest.h>

#include <cmath>

#include "fracou/grid.hpp"
#include "fracou/kernel.hpp"
#include "fracou/special.hpp"
#include "fracou/transfer.hpp"

using namespace fracou;

namespace {

// Independent kernel evaluation: the equivalent bracket form
//   K = scale [ (t/s)^(b-1/2)(t-s)^(b-1/2)
//               - (b-1/2) s^(1/2-b) int_s^t u^(b-3/2)(u-s)^(b-1/2) du ]
// with the inner integral by adaptive Simpson after u = s + v^2 substitution
// (which regularizes the (u-s)^(b-1/2) endpoint for b < 1/2).
double kernel_oracle(double beta, double t, double s) {
  const double scale = kernel_scale(beta);
  const double first = std::pow(t / s, beta - 0.5) * std::pow(t - s, beta - 0.5);
  const double inner = adaptive_simpson(
      [&](double v) {
        const double u = s + v * v;
        return std::pow(u, beta - 1.5) * 2.0 * std::pow(v, 2.0 * beta);
      },
      0.0, std::sqrt(t - s), 1e-12);
  return scale * (first - (beta - 0.5) * std::pow(s, 0.5 - beta) * inner);
}

}  // namespace

TEST_SUITE_BEGIN("transfer");

TEST_CASE("kernel is exactly one at beta = 1/2") {
  CHECK(kernel_K(0.5, 1.0, 0.3) == 1.0);
  CHECK(kernel_K(0.5, 2.0, 1.9999) == 1.0);
}

TEST_CASE("kernel matches an independent quadrature to 6 digits") {
  for (double beta : {0.75, 0.25}) {
    for (auto [t, s] : {std::pair{1.0, 0.5}, std::pair{2.0, 0.3}, std::pair{1.0, 0.9}}) {
      const double got = kernel_K(beta, t, s);
      const double want = kernel_oracle(beta, t, s);
      CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
  }
}

TEST_CASE("rough kernel diverges like (t-s)^(beta-1/2) near the diagonal") {
  const double beta = 0.25;
  const double t = 1.0;
  const double lead = kernel_ctilde(beta) / gamma_fn(beta + 0.5);
  double prev = 0.0;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const double v = kernel_K(beta, t, t - eps);
    CHECK(v > prev);  // diverging
    CHECK(v == doctest::Approx(lead * std::pow(eps, beta - 0.5)).epsilon(2e-2));
    prev = v;
  }
}

TEST_CASE("kernel rejects bad arguments") {
  CHECK_THROWS_AS(kernel_K(0.25, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(kernel_K(0.25, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kernel_K(0.25, 0.5, 0.7), std::invalid_argument);
}

TEST_CASE("variance identity: int K(t,.)^2 = t^(2 beta)") {
  for (double beta : {0.25, 0.5, 0.75}) {
    for (double t : {1.0, 2.0}) {
      Grid g(t, 2048);
      std::vector<double> w(g.n_nodes(), 0.0);
      for (int k = 1; k < g.n_steps; ++k) {
        w[k] = (beta == 0.5) ? 1.0 : kernel_K(beta, t, g.node(k));
      }
      const double got =
          l2sq_endpoint_aware(w, g, -std::abs(2.0 * beta - 1.0), 2.0 * beta - 1.0);
      CHECK(got == doctest::Approx(std::pow(t, 2.0 * beta)).epsilon(5e-3));
    }
  }
}

TEST_CASE("K* at beta = 1/2 is the identity") {
  Grid g(1.0, 64);
  HurstParameter h(0.5);
  auto phi = GridFunction::sample(g, [](double t) { return std::sin(3.0 * t) + t; });
  auto out = apply_Kstar(h, phi);
  for (int k = 0; k <= g.n_steps; ++k) {
    CHECK(std::abs(out.at(0, k) - phi.at(0, k)) < 1e-15);
  }
  CHECK(hnorm(h, phi) == doctest::Approx(phi.l2_norm()).epsilon(1e-14));
}

TEST_CASE("K* of the indicator is the kernel column") {
  for (double beta : {0.25, 0.75}) {
    HurstParameter h(beta);
    Grid g(1.0, 256);
    auto one = GridFunction::sample(g, [](double) { return 1.0; });
    auto out = apply_Kstar(h, one);
    for (int k = 16; k < g.n_steps - 8; k += 23) {
      const double want = kernel_K(beta, g.horizon, g.node(k));
      CHECK(out.at(0, k) == doctest::Approx(want).epsilon(2e-3));
    }
  }
}

TEST_CASE("K* weighted-operator route matches the defining form") {
  for (double beta : {0.25, 0.75}) {
    HurstParameter h(beta);
    Grid g(1.0, 512);
    auto phi = GridFunction::sample(g, [](double t) { return t; });
    auto a = apply_Kstar(h, phi);
    auto b = kstar_direct(h, phi);
    double num = 0.0, den = 0.0;
    for (int k = 1; k < g.n_steps; ++k) {
      num += std::pow(a.at(0, k) - b.at(0, k), 2);
      den += std::pow(b.at(0, k), 2);
    }
    CHECK(std::sqrt(num / den) < 1e-4);
  }
}

TEST_CASE("hnorm variance identity under refinement") {
  for (double beta : {0.25, 0.5, 0.75}) {
    HurstParameter h(beta);
    double prev_err = 1.0;
    for (int n : {128, 512}) {
      Grid g(1.0, n);
      auto one = GridFunction::sample(g, [](double) { return 1.0; });
      const double got = hnorm(h, one);
      const double err = std::abs(got * got - 1.0);
      CHECK(err <= prev_err + 1e-12);
      prev_err = err;
    }
    CHECK(prev_err < 5e-3);
  }
}

TEST_CASE("hnorm of zero vanishes") {
  Grid g(1.0, 64);
  GridFunction zero(g, 2);
  CHECK(hnorm(HurstParameter(0.75), zero) == 0.0);
  CHECK(hnorm(HurstParameter(0.25), zero) == 0.0);
}

TEST_CASE("smooth oracle closed form: |1|^2 = T^(2 beta)") {
  for (double T : {1.0, 2.0}) {
    const double beta = 0.75;
    Grid g(T, 512);
    auto one = GridFunction::sample(g, [](double) { return 1.0; });
    const double got = hnorm_oracle(HurstParameter(beta), one);
    CHECK(got == doctest::Approx(std::pow(T, 2.0 * beta)).epsilon(1e-4));
  }
}

TEST_CASE("smooth oracle is symmetric under time reversal") {
  const double beta = 0.75;
  Grid g(1.0, 256);
  auto f = GridFunction::sample(g, [](double t) { return 1.0 + std::sin(3.0 * t); });
  auto fr = GridFunction::sample(g, [&](double t) { return 1.0 + std::sin(3.0 * (1.0 - t)); });
  CHECK(hnorm_oracle(HurstParameter(beta), f) ==
        doctest::Approx(hnorm_oracle(HurstParameter(beta), fr)).epsilon(1e-9));
}

TEST_CASE("rough oracle is refinement-stable on e^-t") {
  const double beta = 0.25;
  double v512 = 0.0, v1024 = 0.0;
  {
    Grid g(1.0, 512);
    v512 = hnorm_oracle(HurstParameter(beta), GridFunction::sample(g, [](double t) {
                          return std::exp(-t);
                        }));
  }
  {
    Grid g(1.0, 1024);
    v1024 = hnorm_oracle(HurstParameter(beta), GridFunction::sample(g, [](double t) {
                           return std::exp(-t);
                         }));
  }
  CHECK(std::isfinite(v512));
  CHECK(v512 == doctest::Approx(v1024).epsilon(1e-4));
}

TEST_CASE("oracle rejects beta = 1/2") {
  Grid g(1.0, 64);
  auto one = GridFunction::sample(g, [](double) { return 1.0; });
  CHECK_THROWS_AS(hnorm_oracle(HurstParameter(0.5), one), std::invalid_argument);
}

TEST_CASE("smooth-case norm consistency: hnorm^2 vs oracle within 5%") {
  const double beta = 0.75;
  HurstParameter h(beta);
  Grid g(1.0, 512);
  auto tests = GridFunction::sample(g, 3, [](int m, double t) {
    switch (m) {
      case 0: return 1.0;
      case 1: return t;
      default: return std::exp(-t);
    }
  });
  for (int m = 0; m < 3; ++m) {
    GridFunction one_mode(g, 1);
    for (int k = 0; k <= g.n_steps; ++k) one_mode.at(0, k) = tests.at(m, k);
    const double hn = hnorm(h, one_mode);
    const double oracle = hnorm_oracle(h, one_mode);
    CHECK(std::abs(hn * hn - oracle) / oracle < 0.05);
  }
}

TEST_CASE("rough-case equivalence band is stable under refinement") {
  // The double-integral oracle is a seminorm (it vanishes on constants), so
  // the comparison set is non-constant.
  const double beta = 0.25;
  HurstParameter h(beta);
  auto ratio_for = [&](int n) {
    Grid g(1.0, n);
    auto tests = GridFunction::sample(g, 3, [](int m, double t) {
      switch (m) {
        case 0: return std::sin(2.0 * t) + 1.0;
        case 1: return t + 0.2;
        default: return std::exp(-t);
      }
    });
    std::vector<double> ratios;
    for (int m = 0; m < 3; ++m) {
      GridFunction one_mode(g, 1);
      for (int k = 0; k <= g.n_steps; ++k) one_mode.at(0, k) = tests.at(m, k);
      const double hn = hnorm(h, one_mode);
      ratios.push_back(hn * hn / hnorm_oracle(h, one_mode));
    }
    return ratios;
  };
  const auto r512 = ratio_for(512);
  const auto r1024 = ratio_for(1024);
  double rmin = 1e300, rmax = 0.0;
  for (double r : r512) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  CHECK(rmax / rmin < 10.0);  // equivalent norms, not equal
  for (size_t i = 0; i < r512.size(); ++i) {
    CHECK(r512[i] == doctest::Approx(r1024[i]).epsilon(0.05));
  }
}

TEST_CASE("Kbig at beta = 1/2 is the running integral") {
  Grid g(1.0, 64);
  auto phi = GridFunction::sample(g, [](double t) { return std::cos(t); });
  auto out = apply_Kbig(HurstParameter(0.5), phi);
  // trapezoid running integral of cos is sin with O(dt^2) error
  for (int k = 0; k <= g.n_steps; ++k) {
    CHECK(out.at(0, k) == doctest::Approx(std::sin(g.node(k))).epsilon(1e-4));
  }
}

TEST_CASE("Kbig of zero is zero") {
  Grid g(1.0, 64);
  GridFunction zero(g, 3);
  auto out = apply_Kbig(HurstParameter(0.25), zero);
  CHECK(out.max_abs() == 0.0);
}

TEST_CASE("Kbig of the constant matches adaptive kernel quadrature") {
  for (double beta : {0.25, 0.75}) {
    HurstParameter h(beta);
    Grid g(1.0, 128);
    auto one = GridFunction::sample(g, [](double) { return 1.0; });
    auto out = apply_Kbig(h, one);
    for (int k : {32, 128}) {
      const double t = g.node(k);
      const double lead =
          kernel_lead_coeff(beta) * std::pow(t, beta + 0.5) / (beta + 0.5);
      const double rem = adaptive_simpson(
          [&](double s) { return kernel_K_remainder(beta, t, s); }, 1e-9 * t, t * (1 - 1e-12),
          1e-10);
      CHECK(out.at(0, k) == doctest::Approx(lead + rem).epsilon(1e-4));
    }
  }
}

TEST_CASE("invert at beta = 1/2 recovers the integrand of a running integral") {
  Grid g(1.0, 64);
  const double c = 0.7;
  auto psi = GridFunction::sample(g, [&](double t) { return c * t; });
  auto out = invert_Kbig(HurstParameter(0.5), psi);
  for (int k = 0; k <= g.n_steps; ++k) {
    CHECK(out.at(0, k) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("invert rejects psi(0) != 0") {
  Grid g(1.0, 64);
  auto psi = GridFunction::sample(g, [](double t) { return 1.0 + t; });
  CHECK_THROWS_AS(invert_Kbig(HurstParameter(0.25), psi), std::invalid_argument);
}

TEST_CASE("roundtrip invert(apply) converges at first order") {
  for (double beta : {0.25, 0.5, 0.75}) {
    HurstParameter h(beta);
    double prev = 0.0;
    for (int n : {128, 256, 512}) {
      Grid g(1.0, n);
      auto phi = GridFunction::sample(g, 4, [](int m, double t) {
        switch (m) {
          case 0: return 1.0;
          case 1: return t;
          case 2: return std::exp(-t);
          default: return std::sin(t);
        }
      });
      auto back = invert_Kbig(h, apply_Kbig(h, phi));
      const double err = rel_l2_error(back, phi);
      if (prev > 0.0) {
        const double ratio = prev / err;
        CHECK(ratio > 1.4);  // halving up to quadrature floor
      }
      CHECK(err < 1e-2);
      prev = err;
    }
  }
}

TEST_CASE("rough inverse: alternate composition route agrees with W12 route") {
  const double beta = 0.25;
  HurstParameter h(beta);
  Grid g(1.0, 512);
  auto phi = GridFunction::sample(g, [](double t) { return 1.0 + 0.5 * std::sin(2.0 * t); });
  auto psi = apply_Kbig(h, phi);
  auto a = invert_Kbig(h, psi);
  auto b = invert_Kbig_alt(h, psi);
  double num = 0.0, den = 0.0;
  for (int k = 8; k <= g.n_steps; ++k) {  // GL warm-up region excluded
    num += std::pow(a.at(0, k) - b.at(0, k), 2);
    den += std::pow(a.at(0, k), 2);
  }
  CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("invert against a 10x finer reference: psi(t) = t at beta = 0.25") {
  const double beta = 0.25;
  HurstParameter h(beta);
  Grid fine(1.0, 1280);
  auto ref = invert_Kbig(h, GridFunction::sample(fine, [](double t) { return t; }));
  Grid g(1.0, 128);
  auto coarse = invert_Kbig(h, GridFunction::sample(g, [](double t) { return t; }));
  double num = 0.0, den = 0.0;
  for (int k = 1; k <= g.n_steps; ++k) {
    const double r = ref.at(0, 10 * k);
    num += std::pow(coarse.at(0, k) - r, 2);
    den += r * r;
  }
  CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_SUITE_END();
