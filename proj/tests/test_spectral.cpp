#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fracou/spectral.hpp"
#include "fracou/stats.hpp"

using namespace fracou;

TEST_SUITE_BEGIN("spectral");

TEST_CASE("heat preset spectrum") {
  auto m = heat_dirichlet(3, 0.5, 1.0);
  CHECK(m.alphas[0] == doctest::Approx(9.869604401089358).epsilon(1e-15));
  CHECK(m.alphas[2] == doctest::Approx(9.0 * 9.869604401089358).epsilon(1e-14));
  CHECK(m.lambdas[1] == 1.0);
}

TEST_CASE("model validation itemizes violations") {
  CHECK_THROWS_WITH_AS(build_model({2.0, 1.0}, {1.0, 1.0}, 0.5, 1.0),
                       doctest::Contains("nondecreasing"), std::invalid_argument);
  CHECK_THROWS_AS(build_model({1.0}, {1.0}, 1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_model({}, {}, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_model({1.0, 2.0}, {1.0}, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("order-2m dimension condition flag") {
  // m = 1, d = 1: condition d/(4m) = 1/4 < beta
  CHECK(parabolic_2m_condition(0.3, 1, 1));
  CHECK_FALSE(parabolic_2m_condition(0.2, 1, 1));
  CHECK(parabolic_2m_condition(0.2, 2, 1));  // d/(4m) = 1/8
  auto m = parabolic_2m(2, 2, 0.2, 1.0);
  CHECK(m.alphas[0] == doctest::Approx(std::pow(std::numbers::pi, 4.0)).epsilon(1e-14));
}

TEST_CASE("OU ensemble mean decays like the semigroup") {
  auto model = build_model({1.0, 3.0}, {1.0, 1.0}, 0.75, 1.0);
  Grid g(1.0, 128);
  std::vector<double> x = {2.0, -1.0};
  auto ens = simulate_ou(model, g, x, 4000, NoiseSeed{17, 0});
  for (int m = 0; m < 2; ++m) {
    std::vector<double> terminal(ens.n_paths);
    for (int p = 0; p < ens.n_paths; ++p) terminal[p] = ens.path(p, m).back();
    const auto stat = mean_se(terminal);
    const double want = std::exp(-model.alphas[m]) * x[m];
    CHECK(std::abs(stat.mean - want) <= 3.0 * stat.se);
  }
}

TEST_CASE("lambda ~ 0 means deterministic decay") {
  auto model = build_model({2.0}, {1e-300}, 0.25, 1.0);
  Grid g(1.0, 64);
  std::vector<double> x = {1.5};
  auto ens = simulate_ou(model, g, x, 100, NoiseSeed{1, 0});
  for (int p = 0; p < ens.n_paths; ++p) {
    for (int k = 0; k <= g.n_steps; ++k) {
      CHECK(ens.path(p, 0)[k] ==
            doctest::Approx(1.5 * std::exp(-2.0 * g.node(k))).epsilon(1e-12));
    }
  }
}

TEST_CASE("OU variance at beta = 1/2 matches the Ito closed form") {
  auto model = build_model({1.0, 4.0}, {1.0, 0.5}, 0.5, 1.0);
  Grid g(1.0, 256);
  std::vector<double> x = {0.0, 0.0};
  auto ens = simulate_ou(model, g, x, 10000, NoiseSeed{23, 0});
  const auto emp = empirical_covariance(ens);
  for (int m = 0; m < 2; ++m) {
    const double want = model.lambdas[m] * (1.0 - std::exp(-2.0 * model.alphas[m])) /
                        (2.0 * model.alphas[m]);
    CHECK(std::abs(emp[m].var - want) <= 3.0 * emp[m].se);
  }
}

TEST_CASE("mode decoupling: multi-mode run equals single-mode runs bit for bit") {
  auto model = build_model({1.0, 2.5}, {1.0, 0.7}, 0.75, 1.0);
  Grid g(1.0, 32);
  std::vector<double> x = {0.4, -0.3};
  auto both = simulate_ou(model, g, x, 5, NoiseSeed{31, 0});
  for (int m = 0; m < 2; ++m) {
    auto single_model = build_model({model.alphas[m]}, {model.lambdas[m]}, 0.75, 1.0);
    std::vector<double> xm = {x[m]};
    auto single = simulate_ou(single_model, g, xm, 5, NoiseSeed{31, m});
    for (int p = 0; p < 5; ++p) {
      auto a = both.path(p, m);
      auto b = single.path(p, 0);
      for (int k = 0; k <= g.n_steps; ++k) CHECK(a[k] == b[k]);
    }
  }
}

TEST_CASE("covariance_qn closed form at beta = 1/2") {
  auto model = build_model({2.0, 7.0}, {1.5, 0.25}, 0.5, 1.0);
  for (int n = 1; n <= 2; ++n) {
    const double want = model.lambdas[n - 1] *
                        (1.0 - std::exp(-2.0 * model.alphas[n - 1])) /
                        (2.0 * model.alphas[n - 1]);
    CHECK(covariance_qn(model, n, 1024) == doctest::Approx(want).epsilon(1e-4));
  }
}

TEST_CASE("covariance_qn of a dead mode is zero") {
  auto model = build_model({1.0}, {1e-300}, 0.75, 1.0);
  CHECK(covariance_qn(model, 1, 256) == 0.0);
}

TEST_CASE("empirical covariance agrees with quadrature across betas") {
  for (double beta : {0.25, 0.5, 0.75}) {
    auto model = build_model({1.0, 2.0, 4.0}, {1.0, 1.0, 0.5}, beta, 1.0);
    Grid g(1.0, 256);
    std::vector<double> x(3, 0.0);
    auto ens = simulate_ou(model, g, x, 8000, NoiseSeed{41, 0});
    const auto emp = empirical_covariance(ens);
    for (int m = 0; m < 3; ++m) {
      const double qn = covariance_qn(model, m + 1, 2048);
      CHECK(std::abs(emp[m].var - qn) <= 3.0 * emp[m].se);
    }
  }
}

TEST_CASE("doubling the path count shrinks the SE by about sqrt(2)") {
  auto model = build_model({1.0}, {1.0}, 0.5, 1.0);
  Grid g(1.0, 64);
  std::vector<double> x = {0.0};
  auto a = simulate_ou(model, g, x, 2000, NoiseSeed{5, 0});
  auto b = simulate_ou(model, g, x, 4000, NoiseSeed{5, 0});
  const double ra = empirical_covariance(a)[0].se;
  const double rb = empirical_covariance(b)[0].se;
  CHECK(ra / rb == doctest::Approx(std::sqrt(2.0)).epsilon(0.15));
}

TEST_CASE("exchangeable modes give statistically indistinguishable variance") {
  auto model = build_model({2.0, 2.0}, {0.8, 0.8}, 0.75, 1.0);
  Grid g(1.0, 128);
  std::vector<double> x(2, 0.0);
  auto ens = simulate_ou(model, g, x, 6000, NoiseSeed{6, 0});
  const auto emp = empirical_covariance(ens);
  const double combined = std::sqrt(emp[0].se * emp[0].se + emp[1].se * emp[1].se);
  CHECK(std::abs(emp[0].var - emp[1].var) <= 3.0 * combined);
}

TEST_CASE("empirical covariance input validation") {
  auto model = build_model({1.0}, {1.0}, 0.5, 1.0);
  Grid g(1.0, 64);
  std::vector<double> x = {0.2};
  auto ens = simulate_ou(model, g, x, 120, NoiseSeed{1, 0});
  CHECK_THROWS_AS(empirical_covariance(ens), std::invalid_argument);
  std::vector<double> zero = {0.0};
  auto small = simulate_ou(model, g, zero, 50, NoiseSeed{1, 0});
  CHECK_THROWS_AS(empirical_covariance(small), std::invalid_argument);
}

TEST_CASE("verdict: exponential spectrum beats any polynomial lambda") {
  // alpha_n = n^2, lambda_n = 1: necsuf -> 0
  std::vector<double> a(8), l(8, 1.0);
  for (int n = 1; n <= 8; ++n) a[n - 1] = static_cast<double>(n) * n;
  auto rep = equivalence_report(build_model(a, l, 0.75, 1.0), 512);
  CHECK(rep.verdict == Verdict::equivalent);
  CHECK(std::isfinite(rep.sup_necsuf));
}

TEST_CASE("verdict: lambda = e^{-4 alpha T} forces singularity") {
  std::vector<double> a(8), l(8);
  for (int n = 1; n <= 8; ++n) {
    a[n - 1] = 2.0 + 2.0 * n;
    l[n - 1] = std::exp(-4.0 * a[n - 1]);
  }
  auto rep = equivalence_report(build_model(a, l, 0.25, 1.0), 512);
  CHECK(rep.verdict == Verdict::singular);
}

TEST_CASE("verdict: heat preset at beta = 0.3 is equivalent (d/4 < beta)") {
  auto rep = equivalence_report(heat_dirichlet(8, 0.3, 1.0), 512);
  CHECK(rep.verdict == Verdict::equivalent);
  CHECK(parabolic_2m_condition(0.3, 1, 1));
}

TEST_CASE("verdict is invariant under rescaling all lambdas") {
  std::vector<double> a(6), l(6);
  for (int n = 1; n <= 6; ++n) {
    a[n - 1] = 1.5 * n;
    l[n - 1] = 1.0 / n;
  }
  for (double beta : {0.25, 0.75}) {
    auto rep1 = equivalence_report(build_model(a, l, beta, 1.0), 512);
    std::vector<double> l2 = l;
    for (double& v : l2) v *= 37.0;
    auto rep2 = equivalence_report(build_model(a, l2, beta, 1.0), 512);
    CHECK(rep1.verdict == rep2.verdict);
    for (int i = 0; i < 6; ++i) {
      CHECK(rep2.per_mode[i].qn == doctest::Approx(37.0 * rep1.per_mode[i].qn).epsilon(1e-12));
      CHECK(rep2.per_mode[i].necsuf ==
            doctest::Approx(rep1.per_mode[i].necsuf / 37.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("criterion consistency: equivalent verdicts have bounded ratios") {
  auto rep = equivalence_report(heat_dirichlet(8, 0.75, 1.0), 512);
  REQUIRE(rep.verdict == Verdict::equivalent);
  double max_ratio = 0.0;
  for (const auto& r : rep.per_mode) max_ratio = std::max(max_ratio, r.ratio);
  // ratios e^{-2 alpha T}/q_n attain their max at the first mode and decay
  CHECK(max_ratio == rep.per_mode[0].ratio);
  // and the band endpoints pin the existential constants
  CHECK(rep.c2_hat / rep.c1_hat < 10.0);
}

TEST_CASE("few modes are reported inconclusive") {
  auto rep = equivalence_report(build_model({1.0, 2.0}, {1.0, 1.0}, 0.5, 1.0), 256);
  CHECK(rep.verdict == Verdict::inconclusive);
}

TEST_CASE("mild decomposition: Z^x(t) = S(t) x + Z^0(t) mode-wise") {
  auto model = build_model({1.0, 3.5}, {1.0, 0.6}, 0.75, 1.0);
  Grid g(1.0, 64);
  std::vector<double> x = {1.2, -0.8};
  std::vector<double> zero(2, 0.0);
  auto with_x = simulate_ou(model, g, x, 6, NoiseSeed{61, 0});
  auto at_zero = simulate_ou(model, g, zero, 6, NoiseSeed{61, 0});
  for (int p = 0; p < 6; ++p) {
    for (int m = 0; m < 2; ++m) {
      for (int k = 0; k <= g.n_steps; ++k) {
        const double want =
            std::exp(-model.alphas[m] * g.node(k)) * x[m] + at_zero.path(p, m)[k];
        CHECK(with_x.path(p, m)[k] == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("criterion CSV has one row per mode") {
  auto rep = equivalence_report(heat_dirichlet(4, 0.5, 1.0), 256);
  const std::string csv = criterion_csv(rep);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 modes
  CHECK(csv.find("n,alpha,lambda,qn") == 0);
}

TEST_SUITE_END();
