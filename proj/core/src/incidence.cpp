#include "fphmc/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fphmc/error.hpp"

namespace fphmc {

namespace {

// log(1 + e^x) without overflow
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_shapes(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                  const Eigen::VectorXd& w, const PenaltyMatrix& penalty) {
  if (V.rows() != Z.rows() || w.size() != Z.rows()) {
    throw InvalidArgument("incidence: design and weight rows disagree");
  }
  if (penalty.size() != V.cols()) {
    throw InvalidArgument("incidence: penalty size " + std::to_string(penalty.size()) +
                          " does not match functional design columns " +
                          std::to_string(V.cols()));
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0 && w[i] <= 1.0)) {
      throw InvalidArgument("incidence: weight outside [0,1] at subject " +
                            std::to_string(i));
    }
  }
}

}  // namespace

Eigen::VectorXd IncidenceFit::coefficients() const {
  Eigen::VectorXd c(b.size() + theta_b.size());
  c << b, theta_b;
  return c;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& scalars) {
  Eigen::MatrixXd z(scalars.rows(), scalars.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(scalars.cols()) = scalars;
  return z;
}

Objective incidence_loglik(const Eigen::VectorXd& b, const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                           const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                           double lambda, bool derivatives) {
  check_shapes(Z, V, w, penalty);
  if (b.size() != Z.cols() || theta.size() != V.cols()) {
    throw InvalidArgument("incidence: coefficient length mismatch");
  }
  const Eigen::Index n = Z.rows();
  const Eigen::Index p = Z.cols();
  const Eigen::Index k = V.cols();

  Eigen::VectorXd eta = Z * b;
  if (k > 0) eta += V * theta;

  Objective o;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // log π = −softplus(−η), log(1−π) = −softplus(η)
    if (w[i] > 0.0) ll -= w[i] * softplus(-eta[i]);
    if (w[i] < 1.0) ll -= (1.0 - w[i]) * softplus(eta[i]);
  }
  Eigen::VectorXd pen_grad;
  if (k > 0) {
    pen_grad = penalty.D * theta;
    ll -= 0.5 * lambda * theta.dot(pen_grad);
  }
  o.value = ll;
  if (!derivatives) return o;

  Eigen::VectorXd resid(n), curv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = sigmoid(eta[i]);
    resid[i] = w[i] - pi;
    curv[i] = pi * (1.0 - pi);
  }
  o.gradient.resize(p + k);
  o.gradient.head(p) = Z.transpose() * resid;
  o.hessian.resize(p + k, p + k);
  o.hessian.topLeftCorner(p, p) = -(Z.transpose() * curv.asDiagonal() * Z);
  if (k > 0) {
    o.gradient.tail(k) = V.transpose() * resid - lambda * pen_grad;
    const Eigen::MatrixXd zv = -(Z.transpose() * curv.asDiagonal() * V);
    o.hessian.topRightCorner(p, k) = zv;
    o.hessian.bottomLeftCorner(k, p) = zv.transpose();
    o.hessian.bottomRightCorner(k, k) =
        -(V.transpose() * curv.asDiagonal() * V) - lambda * penalty.D;
  }
  return o;
}

double binomial_deviance(const Eigen::VectorXd& w, const Eigen::VectorXd& pi) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) dev += w[i] * std::log(w[i] / pi[i]);
    if (w[i] < 1.0) dev += (1.0 - w[i]) * std::log((1.0 - w[i]) / (1.0 - pi[i]));
  }
  return 2.0 * dev;
}

IncidenceFit fit_incidence(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                           const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                           double lambda, const IncidenceOptions& opt) {
  check_shapes(Z, V, w, penalty);
  if (!(lambda >= 0.0)) throw InvalidArgument("incidence: lambda must be >= 0");
  const Eigen::Index p = Z.cols();
  const Eigen::Index k = V.cols();
  if (Z.rows() < p) {
    throw InvalidArgument("incidence: fewer subjects than scalar coefficients");
  }

  auto objective = [&](const Eigen::VectorXd& x, bool deriv) {
    return incidence_loglik(x.head(p), x.tail(k), Z, V, w, penalty, lambda, deriv);
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(p + k);
  if (opt.start && opt.start->size() == p + k) start = *opt.start;

  NewtonResult r = maximize_newton(objective, start, opt.newton);
  if (!r.converged && !r.capped) {
    throw ConvergenceFailure("incidence: damped Newton did not converge in " +
                                 std::to_string(r.iterations) + " iterations",
                             r.x, r.iterations);
  }

  IncidenceFit fit;
  fit.b = r.x.head(p);
  fit.theta_b = r.x.tail(k);
  fit.lambda_b = lambda;
  fit.converged = r.converged;
  fit.separated = r.capped;
  fit.iterations = r.iterations;
  fit.penalized_loglik = r.at.value;

  const Eigen::VectorXd pi = predict_pi(fit, Z, V);
  fit.deviance = binomial_deviance(w, pi);
  // unpenalized information X'WX; the penalized Hessian adds λS
  Eigen::MatrixXd info = -r.at.hessian;
  Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(p + k, p + k);
  if (k > 0) {
    pen.bottomRightCorner(k, k) = penalty.D;
    info.bottomRightCorner(k, k) -= lambda * penalty.D;
  }
  fit.edf = effective_df(info, pen, lambda);
  return fit;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int e = -4; e <= 4; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

LambdaChoice select_lambda_incidence(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& V,
                                     const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                                     std::vector<double> grid,
                                     const IncidenceOptions& opt) {
  if (grid.empty()) throw InvalidArgument("select_lambda_incidence: empty grid");
  std::sort(grid.begin(), grid.end());
  LambdaChoice choice;
  choice.candidates = grid;
  const double n = static_cast<double>(Z.rows());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int best = -1;
  Eigen::VectorXd last_iterate;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double score = inf;
    double edf = std::numeric_limits<double>::quiet_NaN();
    try {
      IncidenceFit f = fit_incidence(Z, V, w, penalty, grid[c], opt);
      edf = f.edf;
      if (n - edf > 0) score = n * f.deviance / ((n - edf) * (n - edf));
    } catch (const ConvergenceFailure& e) {
      last_iterate = e.last_iterate();
    }
    choice.scores.push_back(score);
    choice.edf.push_back(edf);
    if (score < inf) {
      // candidates ascend, so <= within rounding hands ties to the larger λ;
      // the absolute slack covers fits whose deviance is zero up to rounding
      if (best < 0 || score <= choice.scores[best] * (1.0 + 1e-10) + 1e-12) {
        best = static_cast<int>(c);
      }
    }
  }
  if (best < 0) {
    throw ConvergenceFailure("select_lambda_incidence: no candidate converged",
                             last_iterate, 0);
  }
  choice.lambda = grid[best];
  return choice;
}

Eigen::VectorXd predict_pi(const IncidenceFit& fit, const Eigen::MatrixXd& Z,
                           const Eigen::MatrixXd& V) {
  if (Z.cols() != fit.b.size() || V.cols() != fit.theta_b.size() ||
      (V.cols() > 0 && V.rows() != Z.rows())) {
    throw InvalidArgument("predict_pi: design dimensions do not match fit");
  }
  Eigen::VectorXd eta = Z * fit.b;
  if (V.cols() > 0) eta += V * fit.theta_b;
  return eta.unaryExpr([](double e) { return sigmoid(e); });
}

}  // namespace fphmc
