#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fphmc/basis.hpp"
#include "fphmc/dataset.hpp"
#include "fphmc/error.hpp"
#include "support/oracles.hpp"

using namespace fphmc;

TEST_CASE("make_grid spacing and minimum size") {
  CHECK_THROWS_AS(make_grid(2), InvalidArgument);
  CHECK_THROWS_AS(make_grid(3), InvalidArgument);

  const Grid g5 = make_grid(5);
  const std::vector<double> expect{0, 0.25, 0.5, 0.75, 1};
  REQUIRE(g5.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(g5[j] == doctest::Approx(expect[j]).epsilon(1e-15));

  const Grid g = make_grid(101);
  CHECK(g[0] == 0.0);
  CHECK(g[100] == 1.0);
  for (std::size_t j = 1; j < g.size(); ++j) CHECK(g[j] - g[j - 1] == doctest::Approx(0.01));
}

TEST_CASE("Grid rejects unordered or out-of-range points") {
  CHECK_THROWS_AS(Grid({0.0, 0.5, 0.4, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(Grid({0.0, 0.2, 0.2, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(Grid({-0.1, 0.2, 0.4, 1.0}), InvalidArgument);
  CHECK_NOTHROW(Grid({0.0, 0.1, 0.7, 0.9}));
}

TEST_CASE("cubic basis is a partition of unity") {
  const BasisMatrix b = bspline_basis(make_grid(50), 10, 3);
  REQUIRE(b.values.rows() == 50);
  REQUIRE(b.values.cols() == 10);
  for (Eigen::Index j = 0; j < 50; ++j) CHECK(std::abs(b.values.row(j).sum() - 1.0) < 1e-10);
  CHECK(b.values.minCoeff() >= 0.0);
}

TEST_CASE("linear basis with two functions gives hat functions") {
  const BasisMatrix b = bspline_basis(make_grid(4), 2, 1);
  const Eigen::MatrixXd h = bspline_values(b.knots, 1, 2, {0.0, 0.5, 1.0});
  CHECK(h(0, 0) == doctest::Approx(1.0));
  CHECK(h(1, 0) == doctest::Approx(0.5));
  CHECK(h(2, 0) == doctest::Approx(0.0));
  CHECK(h(0, 1) == doctest::Approx(0.0));
  CHECK(h(1, 1) == doctest::Approx(0.5));
  CHECK(h(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("cubic basis matches the recursive definition") {
  const Grid grid = make_grid(101);
  const BasisMatrix b = bspline_basis(grid, 10, 3);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, 100);
  for (int r = 0; r < 20; ++r) {
    const int j = pick(rng);
    for (int k = 0; k < 10; ++k) {
      const double oracle = fphmc::testing::cox_de_boor(b.knots, k, 3, grid[j]);
      CHECK(std::abs(b.values(j, k) - oracle) < 1e-10);
    }
  }
}

TEST_CASE("basis argument checks") {
  CHECK_THROWS_AS(bspline_basis(make_grid(10), 3, 3), InvalidArgument);
  CHECK_THROWS_AS(bspline_basis(make_grid(10), 5, 0), InvalidArgument);
}

TEST_CASE("second-order difference penalty") {
  const PenaltyMatrix p = difference_penalty(3, 2);
  Eigen::Matrix3d expect;
  expect << 1, -2, 1, -2, 4, -2, 1, -2, 1;
  CHECK((p.D - expect).cwiseAbs().maxCoeff() == 0.0);

  for (int K : {4, 7, 10, 15}) {
    const PenaltyMatrix q = difference_penalty(K, 2);
    const Eigen::VectorXd lin = Eigen::VectorXd::LinSpaced(K, -1.5, 3.0).array() + 0.7;
    CHECK(std::abs(lin.dot(q.D * lin)) < 1e-10);
    Eigen::VectorXd bump = Eigen::VectorXd::Zero(K);
    bump[K / 2] = 1.0;
    CHECK(bump.dot(q.D * bump) > 0.0);
  }

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  const PenaltyMatrix p10 = difference_penalty(10, 2);
  for (int r = 0; r < 10; ++r) {
    Eigen::VectorXd th(10);
    for (auto& v : th) v = z(rng);
    double direct = 0.0;
    for (int k = 0; k < 8; ++k) direct += std::pow(th[k + 2] - 2 * th[k + 1] + th[k], 2);
    CHECK(std::abs(th.dot(p10.D * th) - direct) < 1e-12);
  }
  CHECK_THROWS_AS(difference_penalty(2, 2), InvalidArgument);
}

TEST_CASE("trapezoid weights") {
  const Eigen::VectorXd w5 = quadrature_weights(make_grid(5));
  const std::vector<double> expect{0.125, 0.25, 0.25, 0.25, 0.125};
  for (int j = 0; j < 5; ++j) CHECK(w5[j] == doctest::Approx(expect[j]).epsilon(1e-15));
  CHECK(w5.sum() == 1.0);

  const Grid g = make_grid(101);
  const Eigen::VectorXd w = quadrature_weights(g);
  double sin_int = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) sin_int += w[j] * std::sin(std::numbers::pi * g[j]);
  CHECK(std::abs(sin_int - 2.0 / std::numbers::pi) < 1e-3);

  // affine functions are integrated exactly, on irregular grids too
  const Grid irregular({0.0, 0.05, 0.3, 0.31, 0.8, 1.0});
  const Eigen::VectorXd wi = quadrature_weights(irregular);
  double aff = 0.0;
  for (std::size_t j = 0; j < irregular.size(); ++j) aff += wi[j] * (2.0 - 3.0 * irregular[j]);
  CHECK(std::abs(aff - 0.5) < 1e-12);
  CHECK(std::abs(w.sum() - 1.0) < 1e-12);
}

TEST_CASE("functional design") {
  const Grid g = make_grid(101);
  const BasisMatrix b = bspline_basis(g, 10, 3);
  const Eigen::VectorXd w = quadrature_weights(g);

  Eigen::MatrixXd vals(3, 101);
  vals.row(0).setZero();
  vals.row(1).setOnes();
  for (int j = 0; j < 101; ++j) vals(2, j) = g[j];
  const FunctionalDesign d = functional_design(FunctionalCovariate(g, vals), b, w);
  CHECK(d.V.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(d.V.row(1).sum() - 1.0) < 1e-10);

  // x(s) = s against a 10,001-point Riemann sum of s·B_k(s)
  const int fine = 10001;
  std::vector<double> pts(fine);
  for (int j = 0; j < fine; ++j) pts[j] = static_cast<double>(j) / (fine - 1);
  const Eigen::MatrixXd bf = bspline_values(b.knots, 3, 10, pts);
  for (int k = 0; k < 10; ++k) {
    double riemann = 0.0;
    for (int j = 0; j < fine - 1; ++j) riemann += pts[j] * bf(j, k) / (fine - 1);
    CHECK(std::abs(d.V(2, k) - riemann) < 1e-4);
  }
}

TEST_CASE("functional design is linear in the curve") {
  const Grid g = make_grid(41);
  const BasisMatrix b = bspline_basis(g, 8, 3);
  const Eigen::VectorXd w = quadrature_weights(g);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(4, 41), y(4, 41);
  for (auto& v : x.reshaped()) v = z(rng);
  for (auto& v : y.reshaped()) v = z(rng);
  const double a = 1.7, c = -0.4;
  const auto vx = functional_design(FunctionalCovariate(g, x), b, w).V;
  const auto vy = functional_design(FunctionalCovariate(g, y), b, w).V;
  const auto vxy = functional_design(FunctionalCovariate(g, a * x + c * y), b, w).V;
  CHECK((vxy - (a * vx + c * vy)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("functional design rejects a basis built on another grid") {
  const Grid g = make_grid(21);
  const BasisMatrix b = bspline_basis(make_grid(31), 6, 3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 21);
  CHECK_THROWS_AS(functional_design(FunctionalCovariate(g, x), b, quadrature_weights(g)),
                  InvalidArgument);
}
