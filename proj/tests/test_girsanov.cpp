#include <doctest.h>

#include <cmath>

#include "fracou/girsanov.hpp"
#include "fracou/spectral.hpp"
#include "fracou/stats.hpp"

using namespace fracou;

namespace {

SpectralModel small_model(double beta) {
  return build_model({1.0, 2.0, 3.0, 4.0}, {1.0, 1.0, 1.0, 1.0}, beta, 1.0);
}

// Classical discrete Girsanov density with no fractional machinery:
// left-point Ito sum of v_k = G(Z_k) against the white increments, trapezoid
// quadratic variation with the final node held at the last adapted value
// (the information available to the pipeline).
DensitySample classical_rho(const NonlinearityG& G, const OUEnsemble& ens, int p) {
  const Grid& g = ens.grid;
  const int nm = ens.model.n_modes();
  std::vector<double> state(nm), gout(nm);
  std::vector<std::vector<double>> v(nm, std::vector<double>(g.n_nodes()));
  for (int k = 0; k <= g.n_steps; ++k) {
    for (int m = 0; m < nm; ++m) state[m] = ens.path(p, m)[k];
    G(state, gout);
    for (int m = 0; m < nm; ++m) v[m][k] = gout[m];
  }
  for (int m = 0; m < nm; ++m) v[m][g.n_steps] = v[m][g.n_steps - 1];
  DensitySample out;
  out.path_id = p;
  double ito = 0.0, quad = 0.0;
  for (int m = 0; m < nm; ++m) {
    auto inc = ens.noise.increments(p, m);
    for (int k = 0; k < g.n_steps; ++k) ito += v[m][k] * inc[k];
    double acc = 0.5 * (v[m][0] * v[m][0] + v[m][g.n_steps] * v[m][g.n_steps]);
    for (int k = 1; k < g.n_steps; ++k) acc += v[m][k] * v[m][k];
    quad += acc * g.dt();
  }
  out.ito_term = ito;
  out.quadratic_term = 0.5 * quad;
  out.log_rho = ito - out.quadratic_term;
  out.rho = std::exp(out.log_rho);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("girsanov");

TEST_CASE("drift transform of G = 0 vanishes") {
  Grid g(1.0, 64);
  GridFunction z = GridFunction::sample(g, 2, [](int m, double t) { return m + t; });
  auto v = drift_transform(HurstParameter(0.25), NonlinearityG::zero(), z);
  CHECK(v.max_abs() == 0.0);
}

TEST_CASE("drift transform of a constant G at beta = 1/2 is that constant") {
  Grid g(1.0, 64);
  GridFunction z(g, 1);
  NonlinearityG G;
  G.name = "const";
  G.eval = [](std::span<const double>, std::span<double> out) { out[0] = 0.8; };
  auto v = drift_transform(HurstParameter(0.5), G, z);
  for (int k = 0; k < g.n_steps; ++k) {
    CHECK(v.at(0, k) == doctest::Approx(0.8).epsilon(1e-13));
  }
}

TEST_CASE("drift transform of G = 1 at beta = 0.25 matches a 10x finer reference") {
  NonlinearityG G;
  G.name = "one";
  G.eval = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  HurstParameter h(0.25);
  Grid fine(1.0, 1280);
  auto ref = drift_transform(h, G, GridFunction(fine, 1));
  Grid g(1.0, 128);
  auto v = drift_transform(h, G, GridFunction(g, 1));
  double num = 0.0, den = 0.0;
  for (int k = 1; k <= g.n_steps; ++k) {
    const double r = ref.at(0, 10 * k);
    num += std::pow(v.at(0, k) - r, 2);
    den += r * r;
  }
  CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("rho = 1 exactly when G = 0") {
  auto model = small_model(0.75);
  Grid g(1.0, 64);
  std::vector<double> x(4, 0.1);
  auto ens = simulate_ou(model, g, x, 10, NoiseSeed{3, 0});
  for (int p = 0; p < ens.n_paths; ++p) {
    const auto d = density_rho(NonlinearityG::zero(), ens, p);
    CHECK(d.rho == 1.0);
    CHECK(d.ito_term == 0.0);
    CHECK(d.quadratic_term == 0.0);
  }
}

TEST_CASE("density requires kernel-generated noise and a valid path id") {
  auto model = small_model(0.5);
  Grid g(1.0, 32);
  std::vector<double> x(4, 0.0);
  auto ens = simulate_ou(model, g, x, 4, NoiseSeed{3, 0});
  CHECK_THROWS_AS(density_rho(NonlinearityG::zero(), ens, 99), std::invalid_argument);
  ens.noise.generator = FbmGenerator::cholesky;
  CHECK_THROWS_AS(density_rho(NonlinearityG::zero(), ens, 0), std::invalid_argument);
}

TEST_CASE("classical reduction at beta = 1/2: per-path agreement to 1e-10") {
  auto model = small_model(0.5);
  Grid g(1.0, 100);
  std::vector<double> x = {0.3, 0.0, -0.2, 0.0};
  auto G = NonlinearityG::componentwise_linear(0.5);
  auto ens = simulate_ou(model, g, x, 100, NoiseSeed{11, 0});
  for (int p = 0; p < ens.n_paths; ++p) {
    const auto pipeline = density_rho(G, ens, p);
    const auto classical = classical_rho(G, ens, p);
    CHECK(std::abs(pipeline.log_rho - classical.log_rho) < 1e-10);
    CHECK(pipeline.rho == doctest::Approx(classical.rho).epsilon(1e-10));
  }
}

TEST_CASE("density normalization: mean rho within 3 SE of one") {
  std::vector<double> x(4, 0.0);
  auto G = NonlinearityG::nemytskii("sin", [](double v) { return std::sin(v); }, 4, 1.0);
  for (double beta : {0.25, 0.75}) {
    auto model = heat_dirichlet(4, beta, 1.0);
    auto samples = density_study(model, G, x, Grid(1.0, 128), NoiseSeed{5, 0}, 8000);
    std::vector<double> rhos(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
      rhos[i] = samples[i].rho;
      CHECK(samples[i].rho > 0.0);
      CHECK(!samples[i].overflowed);
      CHECK(samples[i].rho ==
            doctest::Approx(std::exp(samples[i].ito_term - samples[i].quadratic_term))
                .epsilon(1e-12));
      CHECK(samples[i].quadratic_term >= 0.0);
    }
    const auto stat = mean_se(rhos);
    CHECK(std::abs(stat.mean - 1.0) <= 3.0 * stat.se);
  }
}

TEST_CASE("semilinear with F = 0 is bit-identical to the linear simulator") {
  auto model = small_model(0.75);
  Grid g(1.0, 64);
  std::vector<double> x = {0.5, -0.25, 0.1, 0.0};
  auto lin = simulate_ou(model, g, x, 8, NoiseSeed{17, 0});
  auto semi = simulate_semilinear(model, NonlinearityG::zero(), x, g, NoiseSeed{17, 0}, 8);
  CHECK(lin.paths == semi.paths);
}

TEST_CASE("linear F: ensemble mean decays at the shifted rate") {
  // single mode, F(x) = -c x means G = -c x / sqrt(lambda); with lambda = 1
  // the mean at T is e^{-(alpha+c) T} x
  const double alpha = 1.0, c = 0.8;
  auto model = build_model({alpha}, {1.0}, 0.5, 1.0);
  auto G = NonlinearityG::componentwise_linear(-c);
  std::vector<double> x = {1.0};
  Grid g(1.0, 256);
  auto ens = simulate_semilinear(model, G, x, g, NoiseSeed{19, 0}, 6000);
  std::vector<double> terminal(ens.n_paths);
  for (int p = 0; p < ens.n_paths; ++p) terminal[p] = ens.path(p, 0).back();
  const auto stat = mean_se(terminal);
  const double want = std::exp(-(alpha + c));
  CHECK(std::abs(stat.mean - want) <= 3.0 * stat.se + 2e-3);  // MC + O(dt) bias
}

TEST_CASE("bounded f produces no blow-ups") {
  auto model = heat_dirichlet(4, 0.75, 1.0);
  auto G = NonlinearityG::nemytskii("sin", [](double v) { return std::sin(v); }, 4, 1.0);
  std::vector<double> x(4, 0.2);
  CHECK_NOTHROW(simulate_semilinear(model, G, x, Grid(1.0, 128), NoiseSeed{23, 0}, 500));
}

TEST_CASE("blow-up detection aborts with diagnostics") {
  auto model = build_model({0.1}, {1.0}, 0.5, 1.0);
  NonlinearityG G;
  G.name = "quadratic";  // super-linear: guaranteed escape from x0 > 1
  G.eval = [](std::span<const double> z, std::span<double> out) {
    out[0] = 50.0 * z[0] * z[0];
  };
  std::vector<double> x = {2.0};
  CHECK_THROWS_WITH_AS(
      simulate_semilinear(model, G, x, Grid(1.0, 64), NoiseSeed{29, 0}, 4),
      doctest::Contains("blow-up"), std::runtime_error);
}

TEST_CASE("transfer identity is trivial for F = 0 and phi = 1") {
  auto model = small_model(0.75);
  std::vector<double> x(4, 0.2);
  std::vector<BoundedFunctional> phis = {
      {"one", 1.0, [](std::span<const double>) { return 1.0; }}};
  auto rep = transfer_check(model, NonlinearityG::zero(), x, phis, MCParams{500, 64, 31});
  CHECK(rep.records[0].lhs == 1.0);
  CHECK(rep.records[0].rhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.mean_rho.mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transfer identity holds within 3 combined SE") {
  std::vector<double> x(4, 0.0);
  x[0] = 0.3;
  for (double beta : {0.25, 0.75}) {
    auto model = heat_dirichlet(4, beta, 1.0);
    for (const char* fname : {"sin", "neg_arctan"}) {
      NonlinearityG G =
          (std::string(fname) == "sin")
              ? NonlinearityG::nemytskii("sin", [](double v) { return std::sin(v); }, 4, 1.0)
              : NonlinearityG::nemytskii("neg_arctan",
                                         [](double v) { return -std::atan(v); }, 4, 1.0);
      auto rep = transfer_check(model, G, x, phi_battery(), MCParams{6000, 128, 37});
      for (const auto& r : rep.records) {
        CHECK(r.diff <= 3.0 * r.combined_se + 5e-3);  // MC + O(dt) discretization
      }
      CHECK(std::abs(rep.mean_rho.mean - 1.0) <= 3.0 * rep.mean_rho.se);
    }
  }
}

TEST_CASE("probe with zero offset direction is exactly degenerate") {
  auto model = small_model(0.75);
  std::vector<double> x(4, 0.1);
  std::vector<double> zero(4, 0.0);
  auto G = NonlinearityG::componentwise_linear(0.3);
  auto rep = strong_feller_probe(model, G, x, zero, 3, phi_battery(), MCParams{200, 64, 41});
  for (const auto& level : rep.levels) {
    CHECK(level.rho_absdiff.mean == 0.0);
    for (double d : level.phi_diff) CHECK(d == 0.0);
  }
}

TEST_CASE("coupled density differences decrease along dyadic offsets") {
  auto model = heat_dirichlet(4, 0.75, 1.0);
  auto G = NonlinearityG::nemytskii("sin", [](double v) { return std::sin(v); }, 4, 1.0);
  std::vector<double> x(4, 0.0);
  std::vector<double> dir = {1.0, 0.5, 0.0, 0.0};
  auto rep = strong_feller_probe(model, G, x, dir, 5, phi_battery(), MCParams{3000, 100, 43});
  CHECK(rep.model_verdict == Verdict::equivalent);
  for (size_t j = 1; j < rep.levels.size(); ++j) {
    const auto& prev = rep.levels[j - 1].rho_absdiff;
    const auto& cur = rep.levels[j].rho_absdiff;
    const double slack = 2.0 * std::sqrt(prev.se * prev.se + cur.se * cur.se);
    CHECK(cur.mean <= prev.mean + slack);
  }
  CHECK(rep.levels.back().rho_absdiff.mean <= 0.2 * rep.levels.front().rho_absdiff.mean);
}

TEST_CASE("singular model: densities degenerate instead of converging") {
  // documented diagnostic: with lambda_n = e^{-4 alpha_n T} and a bounded
  // physical drift F, the transformed drift G = B^-1 F carries exploding
  // 1/sqrt(lambda_n) weights, so the quadratic term grows with the mode
  // truncation instead of settling
  std::vector<double> a(4), l(4);
  for (int n = 1; n <= 4; ++n) {
    a[n - 1] = 2.0 + 2.0 * n;
    l[n - 1] = std::exp(-4.0 * a[n - 1]);
  }
  auto binv_const = [](std::vector<double> lambdas) {
    NonlinearityG g;
    g.name = "binv_const";
    g.eval = [lambdas](std::span<const double>, std::span<double> out) {
      for (size_t m = 0; m < out.size(); ++m) out[m] = 0.02 / std::sqrt(lambdas[m]);
    };
    g.growth_k = 0.02 / std::sqrt(lambdas.back());
    return g;
  };
  auto model4 = build_model(a, l, 0.25, 1.0);
  std::vector<double> x(4, 0.0);
  auto s4 = density_study(model4, binv_const(l), x, Grid(1.0, 64), NoiseSeed{47, 0}, 100);
  double q4 = 0.0;
  for (const auto& s : s4) q4 += s.quadratic_term / s4.size();
  auto model2 = build_model({a[0], a[1]}, {l[0], l[1]}, 0.25, 1.0);
  std::vector<double> x2(2, 0.0);
  auto s2 = density_study(model2, binv_const({l[0], l[1]}), x2, Grid(1.0, 64),
                          NoiseSeed{47, 0}, 100);
  double q2 = 0.0;
  for (const auto& s : s2) q2 += s.quadratic_term / s2.size();
  CHECK(q4 > 10.0 * q2);
  CHECK(equivalence_report(model4, 512).verdict == Verdict::singular);
}

TEST_CASE("hypothesis (G) helpers") {
  CHECK(holder_condition_ok(1.0, 0.75, 0.25));   // alpha = 1 > 0.5
  CHECK_FALSE(holder_condition_ok(0.4, 0.75, 0.25));
  CHECK(holder_condition_ok(0.1, 0.25, 0.0));    // no condition below 1/2
  // growth constant of the sin Nemytskii map checked by sampling
  auto G = NonlinearityG::nemytskii("sin", [](double v) { return std::sin(v); }, 3, 1.0);
  RngStream rng(53, 0);
  std::vector<double> z(3), out(3);
  for (int trial = 0; trial < 200; ++trial) {
    double nz = 0.0, ng = 0.0;
    for (int m = 0; m < 3; ++m) {
      z[m] = 3.0 * rng.next_normal();
      nz += z[m] * z[m];
    }
    G(z, out);
    for (int m = 0; m < 3; ++m) ng += out[m] * out[m];
    CHECK(std::sqrt(ng) <= G.growth_k * (1.0 + std::sqrt(nz)) + 1e-9);
  }
}

TEST_SUITE_END();
