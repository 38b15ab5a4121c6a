#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace fphmc {

// Value, gradient and Hessian of an objective to be maximized.
struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

struct NewtonOptions {
  int max_iter = 100;
  int max_halvings = 30;
  // stop when ||gradient|| < grad_tol * (1 + |value|)
  double grad_tol = 1e-8;
  // |x_k| is clamped to this bound; hitting it marks the result as capped
  double coef_cap = std::numeric_limits<double>::infinity();
};

struct NewtonResult {
  Eigen::VectorXd x;
  Objective at;
  int iterations = 0;
  bool converged = false;
  bool capped = false;
  // objective value after every accepted step, starting with the initial point
  std::vector<double> path;
};

// Evaluates the objective; derivatives are only required when the flag is set.
using ObjectiveFn = std::function<Objective(const Eigen::VectorXd&, bool)>;

// Damped Newton ascent with step halving. Never throws on non-convergence;
// callers decide how to report it.
NewtonResult maximize_newton(const ObjectiveFn& f, Eigen::VectorXd start,
                             const NewtonOptions& opt = {});

// tr((H + λS)⁻¹ H) for a positive semidefinite information matrix H.
double effective_df(const Eigen::MatrixXd& info, const Eigen::MatrixXd& penalty,
                    double lambda);

}  // namespace fphmc
