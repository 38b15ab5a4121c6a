#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fphmc/dataset.hpp"
#include "fphmc/em.hpp"

namespace fphmc {

enum class Scenario { A, B, C, Custom };

Scenario parse_scenario(std::string_view name);
std::string scenario_name(Scenario s);

// Data-generating configuration. Presets A/B/C share the latency truth and
// differ in the cure intercept/slopes (moderate, low and high cure share).
struct ScenarioConfig {
  Scenario scenario = Scenario::A;
  Eigen::VectorXd b;     // (b0, b1, b2) for z = (1, x1, x2)
  Eigen::VectorXd beta;  // (β1, β2)
  double beta0 = 0.5;    // log baseline hazard
  std::function<double(double)> b_fn;
  std::function<double(double)> beta_fn;
  double mu_c = 10.0;    // mean censoring time
  double cured_time = 10000.0;
  int n = 300;
  int m = 101;
  std::uint64_t seed = 1;

  static ScenarioConfig preset(Scenario s, int n, std::uint64_t seed, int m = 101);
  void validate() const;
};

// First `count` polynomials (degrees 0..count-1) orthonormalized over the
// grid points: Σ_j φ_a(s_j) φ_b(s_j) = δ_ab. Columns are signed so that
// φ_k(1) > 0.
Eigen::MatrixXd grid_orthonormal_polynomials(const Grid& grid, int count);

// x_i(s) = Σ_k ψ_ik φ_k(s), ψ_ik ~ N(0, 4(10 − k + 1)), k = 1..10.
FunctionalCovariate gen_functional_covariate(int n, int m, std::uint64_t seed);

struct SimulatedData {
  SurvivalDataset data;
  Eigen::VectorXi susceptible;  // latent B_i
  Eigen::VectorXd event_time;   // T_i (cured_time for cured subjects)
  Eigen::VectorXd pi;           // true susceptibility
};

SimulatedData gen_scenario(const ScenarioConfig& config);

struct IntegratedError {
  double bias2 = 0.0;
  double var = 0.0;
  double mse = 0.0;
};

// estimates: one replicate per row, evaluated on the grid carrying `weights`.
IntegratedError integrated_metrics(const Eigen::MatrixXd& estimates,
                                   const Eigen::VectorXd& truth,
                                   const Eigen::VectorXd& weights);

struct ScalarSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

struct McReport {
  std::string scenario;
  int n = 0;
  int reps = 0;       // successful replicates aggregated
  int failures = 0;   // excluded replicates
  IntegratedError cure_function;
  IntegratedError latency_function;
  std::vector<ScalarSummary> scalars;
  double cure_fraction = 0.0;  // mean share of B_i = 0 across generated datasets
  std::vector<double> grid;
  Eigen::VectorXd mean_cure_function;
  Eigen::VectorXd mean_latency_function;
  std::vector<double> time_grid;
  Eigen::VectorXd mean_baseline;
  Eigen::VectorXd true_baseline;
  // per-replicate curves, kept for external plotting
  Eigen::MatrixXd cure_functions;
  Eigen::MatrixXd latency_functions;
};

struct McOptions {
  int threads = 0;
  std::vector<double> time_grid;  // empty: 31 points on [0, 3]
};

McReport run_mc(const ScenarioConfig& base, int reps, const FphmcConfig& fit_config,
                const McOptions& options = {});

}  // namespace fphmc
