#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fphmc/basis.hpp"
#include "fphmc/newton.hpp"

namespace fphmc {

// Penalized scalar-on-function logistic regression for the probability of
// being susceptible. The linear predictor is Z b + V θ_b; the difference
// penalty acts on θ_b only.
struct IncidenceFit {
  Eigen::VectorXd b;        // scalar coefficients, intercept first
  Eigen::VectorXd theta_b;  // spline coefficients of b(s)
  double lambda_b = 0.0;
  bool converged = false;
  bool separated = false;   // a coefficient hit the separation cap
  int iterations = 0;
  double edf = 0.0;
  double deviance = 0.0;
  double penalized_loglik = 0.0;

  Eigen::VectorXd coefficients() const;
};

// Prepend a column of ones.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& scalars);

// Expected cure log-likelihood with fractional responses w minus
// λ/2 θᵀDθ, with exact gradient and Hessian in (b, θ) order.
Objective incidence_loglik(const Eigen::VectorXd& b, const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                           const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                           double lambda, bool derivatives = true);

struct IncidenceOptions {
  NewtonOptions newton{.max_iter = 100, .max_halvings = 30, .grad_tol = 1e-8,
                       .coef_cap = 30.0};
  std::optional<Eigen::VectorXd> start;
};

// Throws ConvergenceFailure when the damped Newton iteration does not reach
// a stationary point. Separation is reported through IncidenceFit::separated.
IncidenceFit fit_incidence(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                           const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                           double lambda, const IncidenceOptions& opt = {});

struct LambdaChoice {
  double lambda = 0.0;
  std::vector<double> candidates;  // sorted ascending
  std::vector<double> scores;      // +inf where the fit failed
  std::vector<double> edf;
};

// Default candidate set 10^-4 ... 10^4.
std::vector<double> default_lambda_grid();

// GCV = n·Dev / (n − edf)²; ties go to the larger λ.
LambdaChoice select_lambda_incidence(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                                     const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                                     std::vector<double> grid,
                                     const IncidenceOptions& opt = {});

Eigen::VectorXd predict_pi(const IncidenceFit& fit, const Eigen::MatrixXd& Z,
                           const Eigen::MatrixXd& V);

// Binomial deviance with fractional responses (0·log 0 = 0).
double binomial_deviance(const Eigen::VectorXd& w, const Eigen::VectorXd& pi);

}  // namespace fphmc
