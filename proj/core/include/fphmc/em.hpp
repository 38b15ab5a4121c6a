#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fphmc/basis.hpp"
#include "fphmc/dataset.hpp"
#include "fphmc/incidence.hpp"
#include "fphmc/latency.hpp"

namespace fphmc {

struct FphmcConfig {
  int cure_basis = 10;
  int latency_basis = 10;
  int degree = 3;
  int penalty_order = 2;
  // fixed smoothing parameters; unset means grid selection
  std::optional<double> lambda_cure;
  std::optional<double> lambda_latency;
  std::vector<double> lambda_grid = default_lambda_grid();
  // re-select λ at every M-step; when false λ is chosen on the first M-step
  // and frozen, which keeps the EM ascent property
  bool reselect_lambda = true;
  int max_iter = 200;
  double tol = 1e-4;
  double loglik_tol = 1e-6;
  // subtract the sample mean curve before building functional designs
  bool center_curves = false;
  // π ≡ 1: every subject susceptible, reduces to a (functional) Cox fit
  bool force_susceptible = false;
};

// Everything the EM iterations need, derived once from a dataset.
struct FphmcDesign {
  Eigen::VectorXd time;
  Eigen::VectorXi event;
  Eigen::MatrixXd Z;   // cure scalars with intercept
  Eigen::MatrixXd Vz;  // n x 0 when there is no cure curve
  Eigen::MatrixXd X;
  Eigen::MatrixXd Vx;
  std::optional<BasisMatrix> cure_basis;
  std::optional<BasisMatrix> latency_basis;
  PenaltyMatrix cure_penalty;
  PenaltyMatrix latency_penalty;
  Eigen::VectorXd cure_center;     // empty unless centered
  Eigen::VectorXd latency_center;
  bool force_susceptible = false;

  Eigen::Index size() const { return time.size(); }
  Eigen::MatrixXd U() const { return combine_design(X, Vx); }
};

FphmcDesign build_design(const SurvivalDataset& data, const FphmcConfig& config);

struct TraceEntry {
  int iteration = 0;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  double max_change = 0.0;
  double lambda_cure = 0.0;
  double lambda_latency = 0.0;
};

struct FphmcFit {
  IncidenceFit incidence;
  LatencyFit latency;
  StepSurvival baseline;
  Eigen::VectorXd weights;
  std::vector<TraceEntry> trace;
  int iterations = 0;
  bool converged = false;
  bool force_susceptible = false;

  std::optional<BasisMatrix> cure_basis;
  std::optional<BasisMatrix> latency_basis;
  Eigen::VectorXd cure_center;
  Eigen::VectorXd latency_center;

  // b̂(s) and β̂(s) on their grids; empty without a functional term
  Eigen::VectorXd cure_function() const;
  Eigen::VectorXd latency_function() const;
};

// Posterior susceptibility; w_i = 1 for events, 0/0 resolves to 0.
Eigen::VectorXd e_step(const FphmcDesign& design, const IncidenceFit& incidence,
                       const LatencyFit& latency, const StepSurvival& baseline);

// Mixture log-likelihood with discrete Breslow hazard jumps as event densities.
double observed_loglik(const FphmcDesign& design, const IncidenceFit& incidence,
                       const LatencyFit& latency, const StepSurvival& baseline);

// observed_loglik minus both roughness penalties
double penalized_observed_loglik(const FphmcDesign& design, const IncidenceFit& incidence,
                                 const LatencyFit& latency, const StepSurvival& baseline);

FphmcFit fit_fphmc(const FphmcDesign& design, const FphmcConfig& config);
FphmcFit fit_fphmc(const SurvivalDataset& data, const FphmcConfig& config);

}  // namespace fphmc
