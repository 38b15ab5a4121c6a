#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fphmc/basis.hpp"
#include "fphmc/incidence.hpp"
#include "fphmc/newton.hpp"

namespace fphmc {

// Penalized proportional hazards fit for the susceptible subpopulation.
// γ = (β, θ_β) multiplies the combined design U = [X V].
struct LatencyFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd theta_beta;
  double lambda_beta = 0.0;
  Eigen::VectorXd gamma;
  bool converged = false;
  int iterations = 0;
  double edf = 0.0;
  double partial_loglik = 0.0;  // unpenalized
};

// Baseline survival of susceptibles as a right-continuous step function.
// Forced to zero beyond the largest event time.
struct StepSurvival {
  std::vector<double> times;       // distinct event times, ascending
  std::vector<double> increments;  // Breslow hazard jumps at each time
  std::vector<double> cumhaz;
  std::vector<double> values;      // exp(-cumhaz)
  double tail_time = 0.0;

  double at(double t) const;
  // hazard jump at exactly t, zero if t is not an event time
  double jump_at(double t) const;
  double cumulative_hazard(double t) const;
};

Eigen::MatrixXd combine_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V);

// Weighted Breslow partial log-likelihood minus λ/2 θᵀDθ, where the penalty
// acts on the trailing D.rows() entries of γ. Risk-set members enter with
// multiplicative weight w_j, so w_j = 0 removes subject j exactly.
Objective cox_penalized_loglik(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& U,
                               const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                               const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                               double lambda, bool derivatives = true);

struct LatencyOptions {
  NewtonOptions newton{.max_iter = 100, .max_halvings = 30, .grad_tol = 1e-8};
  std::optional<Eigen::VectorXd> start;
};

LatencyFit fit_latency(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V,
                       const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                       const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                       double lambda, const LatencyOptions& opt = {});

// Grid search on AIC = −2·pll(γ̂) + 2·edf, edf = tr((H + λS)⁻¹H).
// Ties go to the larger λ.
LambdaChoice select_lambda_latency(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V,
                                   const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                                   const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                                   std::vector<double> grid, const LatencyOptions& opt = {});

StepSurvival breslow_baseline(const LatencyFit& fit, const Eigen::MatrixXd& U,
                              const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                              const Eigen::VectorXd& w);

// S0(t)^exp(xᵀβ + vᵀθ)
double predict_survival(const LatencyFit& fit, const StepSurvival& baseline,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t);

}  // namespace fphmc
