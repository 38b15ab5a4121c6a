#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fphmc/error.hpp"
#include "fphmc/sim.hpp"

using namespace fphmc;

TEST_CASE("grid polynomials are orthonormal over the grid points") {
  const Grid g = make_grid(101);
  const Eigen::MatrixXd phi = grid_orthonormal_polynomials(g, 10);
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-12);
  // column k is a degree-k polynomial: its (k+1)-th finite difference vanishes
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd d = phi.col(k);
    for (int r = 0; r <= k; ++r) d = (d.tail(d.size() - 1) - d.head(d.size() - 1)).eval();
    CHECK(d.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(phi(100, k) > 0.0);
  }
}

TEST_CASE("functional covariate scores and mean") {
  const int n = 10000;
  const Grid g = make_grid(101);
  const FunctionalCovariate x = gen_functional_covariate(n, 101, 4);
  const Eigen::MatrixXd phi = grid_orthonormal_polynomials(g, 10);
  const Eigen::MatrixXd scores = x.values * phi;  // recovers ψ exactly
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd c = scores.col(k).array() - scores.col(k).mean();
    const double var = c.squaredNorm() / (n - 1);
    const double target = 4.0 * (10 - k);
    CHECK(std::abs(var - target) < 0.05 * target);
  }
  CHECK(x.mean_curve().cwiseAbs().maxCoeff() < 0.2);
}

TEST_CASE("scenario cure fractions at large n") {
  const double target[] = {0.37, 0.16, 0.69};
  const Scenario scen[] = {Scenario::A, Scenario::B, Scenario::C};
  for (int s = 0; s < 3; ++s) {
    const SimulatedData d = gen_scenario(ScenarioConfig::preset(scen[s], 10000, 100 + s));
    const double cured = 1.0 - d.susceptible.cast<double>().mean();
    CHECK(std::abs(cured - target[s]) < 0.02);
    // cured subjects are always censored; events only among susceptibles
    for (Eigen::Index i = 0; i < d.data.size(); ++i) {
      if (d.data.event[i]) CHECK(d.susceptible[i] == 1);
    }
  }
}

TEST_CASE("intercept-only cure model") {
  ScenarioConfig cfg = ScenarioConfig::preset(Scenario::A, 10000, 9);
  const double p = 0.3;
  cfg.scenario = Scenario::Custom;
  cfg.b = Eigen::Vector3d(std::log(p / (1 - p)), 0.0, 0.0);
  cfg.b_fn = [](double) { return 0.0; };
  const SimulatedData d = gen_scenario(cfg);
  CHECK(std::abs(1.0 - d.susceptible.cast<double>().mean() - (1 - p)) < 0.02);
  CHECK((d.pi.array() - p).abs().maxCoeff() < 1e-12);
}

TEST_CASE("generation is reproducible under seed") {
  const auto cfg = ScenarioConfig::preset(Scenario::B, 300, 42);
  const SimulatedData a = gen_scenario(cfg);
  const SimulatedData b = gen_scenario(cfg);
  CHECK(a.data.time == b.data.time);
  CHECK(a.data.event == b.data.event);
  CHECK(a.data.cure_curve->values == b.data.cure_curve->values);
  const SimulatedData c = gen_scenario(ScenarioConfig::preset(Scenario::B, 300, 43));
  CHECK(a.data.time != c.data.time);
}

TEST_CASE("scenario parsing and validation") {
  CHECK(parse_scenario("A") == Scenario::A);
  CHECK(parse_scenario("c") == Scenario::C);
  CHECK_THROWS_AS(parse_scenario("D"), InvalidArgument);
  CHECK(scenario_name(Scenario::B) == "B");
  auto cfg = ScenarioConfig::preset(Scenario::A, 9, 1);
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = ScenarioConfig::preset(Scenario::A, 50, 1);
  cfg.mu_c = 0.0;
  CHECK_THROWS_AS(gen_scenario(cfg), InvalidArgument);
}

TEST_CASE("integrated error metrics") {
  const Grid g = make_grid(11);
  const Eigen::VectorXd w = quadrature_weights(g);
  Eigen::VectorXd truth(11);
  for (int j = 0; j < 11; ++j) truth[j] = std::sin(g[j]);

  Eigen::MatrixXd exact = truth.transpose().replicate(5, 1);
  IntegratedError e = integrated_metrics(exact, truth, w);
  CHECK(e.bias2 == 0.0);
  CHECK(e.var == 0.0);
  CHECK(e.mse == 0.0);

  const double c = 0.3;
  e = integrated_metrics((exact.array() + c).matrix(), truth, w);
  CHECK(e.bias2 == doctest::Approx(c * c).epsilon(1e-12));
  CHECK(e.var == doctest::Approx(0.0).epsilon(1e-15));

  Eigen::MatrixXd pm(2, 11);
  pm.row(0) = (truth.array() + c).transpose();
  pm.row(1) = (truth.array() - c).transpose();
  e = integrated_metrics(pm, truth, w);
  CHECK(e.bias2 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(e.var == doctest::Approx(c * c).epsilon(1e-12));
  CHECK(e.mse == doctest::Approx(c * c).epsilon(1e-12));

  Eigen::MatrixXd noisy(7, 11);
  for (int r = 0; r < 7; ++r) {
    for (int j = 0; j < 11; ++j) noisy(r, j) = truth[j] + std::cos(3.0 * r + j) * 0.4 + 0.05 * r;
  }
  e = integrated_metrics(noisy, truth, w);
  CHECK(std::abs(e.mse - (e.bias2 + e.var)) < 1e-10);
}

TEST_CASE("small Monte-Carlo run") {
  const auto base = ScenarioConfig::preset(Scenario::A, 150, 3);
  McOptions opt;
  opt.threads = 2;
  const McReport r = run_mc(base, 4, FphmcConfig{}, opt);
  CHECK(r.reps + r.failures == 4);
  CHECK(r.scenario == "A");
  CHECK(std::abs(r.cure_function.mse - (r.cure_function.bias2 + r.cure_function.var)) < 1e-10);
  CHECK(r.mean_cure_function.size() == 101);
  CHECK(r.time_grid.size() == 31);
  REQUIRE(r.scalars.size() == 5);
  CHECK(r.scalars[3].truth == 0.5);

  opt.threads = 1;
  const McReport again = run_mc(base, 4, FphmcConfig{}, opt);
  CHECK(again.cure_function.mse == r.cure_function.mse);
  CHECK(again.latency_functions == r.latency_functions);
}
