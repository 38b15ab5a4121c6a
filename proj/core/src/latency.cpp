#include "fphmc/latency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fphmc/error.hpp"

namespace fphmc {

namespace {

void check_weights(const Eigen::VectorXd& w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0 && w[i] <= 1.0)) {
      throw InvalidArgument("latency: weight outside [0,1] at subject " +
                            std::to_string(i));
    }
  }
}

// max η over subjects that carry weight; zero-weight rows never influence it
double score_shift(const Eigen::VectorXd& eta, const Eigen::VectorXd& w) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] > 0.0) m = std::max(m, eta[i]);
  }
  return std::isfinite(m) ? m : 0.0;
}

// Subjects sorted by descending time; ties keep input order.
std::vector<int> descending_order(const Eigen::VectorXd& times) {
  std::vector<int> order(static_cast<std::size_t>(times.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return times[a] > times[b]; });
  return order;
}

}  // namespace

Eigen::MatrixXd combine_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V) {
  if (X.rows() != V.rows()) throw InvalidArgument("latency: X and V rows disagree");
  Eigen::MatrixXd u(X.rows(), X.cols() + V.cols());
  u << X, V;
  return u;
}

Objective cox_penalized_loglik(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& U,
                               const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                               const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                               double lambda, bool derivatives) {
  const Eigen::Index n = U.rows();
  const Eigen::Index p = U.cols();
  if (times.size() != n || events.size() != n || w.size() != n) {
    throw InvalidArgument("latency: design, times, events and weights disagree in length");
  }
  if (gamma.size() != p) throw InvalidArgument("latency: coefficient length mismatch");
  const Eigen::Index k = penalty.size();
  if (k > p) throw InvalidArgument("latency: penalty larger than coefficient vector");
  check_weights(w);
  if (events.sum() == 0) throw InvalidArgument("latency: no events");

  const Eigen::VectorXd eta = U * gamma;
  // scores are shifted by max η for overflow safety; gradients are unaffected
  const double shift = score_shift(eta, w);
  const std::vector<int> order = descending_order(times);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  Objective o;
  double ll = 0.0;
  if (derivatives) {
    o.gradient = Eigen::VectorXd::Zero(p);
    o.hessian = Eigen::MatrixXd::Zero(p, p);
  }

  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = times[order[pos]];
    std::size_t end = pos;
    while (end < order.size() && times[order[end]] == t) ++end;

    int d = 0;
    for (std::size_t q = pos; q < end; ++q) {
      const int i = order[q];
      const double r = w[i] * std::exp(eta[i] - shift);
      s0 += r;
      if (derivatives) {
        s1.noalias() += r * U.row(i).transpose();
        s2.selfadjointView<Eigen::Lower>().rankUpdate(U.row(i).transpose(), r);
      }
      if (events[i] == 1) {
        ++d;
        ll += eta[i];
        if (derivatives) o.gradient.noalias() += U.row(i).transpose();
      }
    }
    if (d > 0) {
      if (!(s0 > 0.0)) {
        throw DegenerateRiskSet("latency: risk set at time " + std::to_string(t) +
                                " has zero total weight");
      }
      ll -= d * (std::log(s0) + shift);
      if (derivatives) {
        const Eigen::VectorXd mean = s1 / s0;
        o.gradient.noalias() -= d * mean;
        Eigen::MatrixXd cov = s2.selfadjointView<Eigen::Lower>();
        cov /= s0;
        cov.noalias() -= mean * mean.transpose();
        o.hessian.noalias() -= d * cov;
      }
    }
    pos = end;
  }

  if (k > 0) {
    const Eigen::VectorXd theta = gamma.tail(k);
    const Eigen::VectorXd dtheta = penalty.D * theta;
    ll -= 0.5 * lambda * theta.dot(dtheta);
    if (derivatives) {
      o.gradient.tail(k) -= lambda * dtheta;
      o.hessian.bottomRightCorner(k, k) -= lambda * penalty.D;
    }
  }
  o.value = ll;
  return o;
}

LatencyFit fit_latency(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V,
                       const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                       const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                       double lambda, const LatencyOptions& opt) {
  if (!(lambda >= 0.0)) throw InvalidArgument("latency: lambda must be >= 0");
  if (penalty.size() != V.cols()) {
    throw InvalidArgument("latency: penalty size does not match functional design");
  }
  const Eigen::MatrixXd U = combine_design(X, V);
  const Eigen::Index p = U.cols();
  const Eigen::Index k = V.cols();

  auto objective = [&](const Eigen::VectorXd& g, bool deriv) {
    return cox_penalized_loglik(g, U, times, events, w, penalty, lambda, deriv);
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(p);
  if (opt.start && opt.start->size() == p) start = *opt.start;

  NewtonResult r = maximize_newton(objective, start, opt.newton);
  if (!r.converged) {
    throw ConvergenceFailure("latency: damped Newton did not converge in " +
                                 std::to_string(r.iterations) + " iterations",
                             r.x, r.iterations);
  }

  LatencyFit fit;
  fit.gamma = r.x;
  fit.beta = r.x.head(X.cols());
  fit.theta_beta = r.x.tail(k);
  fit.lambda_beta = lambda;
  fit.converged = true;
  fit.iterations = r.iterations;

  Eigen::MatrixXd info = -r.at.hessian;
  Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(p, p);
  fit.partial_loglik = r.at.value;
  if (k > 0) {
    pen.bottomRightCorner(k, k) = penalty.D;
    info.bottomRightCorner(k, k) -= lambda * penalty.D;
    const Eigen::VectorXd theta = fit.theta_beta;
    fit.partial_loglik += 0.5 * lambda * theta.dot(penalty.D * theta);
  }
  fit.edf = effective_df(info, pen, lambda);
  return fit;
}

LambdaChoice select_lambda_latency(const Eigen::MatrixXd& X, const Eigen::MatrixXd& V,
                                   const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                                   const Eigen::VectorXd& w, const PenaltyMatrix& penalty,
                                   std::vector<double> grid, const LatencyOptions& opt) {
  if (grid.empty()) throw InvalidArgument("select_lambda_latency: empty grid");
  std::sort(grid.begin(), grid.end());
  LambdaChoice choice;
  choice.candidates = grid;
  constexpr double inf = std::numeric_limits<double>::infinity();
  int best = -1;
  Eigen::VectorXd last_iterate;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double score = inf;
    double edf = std::numeric_limits<double>::quiet_NaN();
    try {
      LatencyFit f = fit_latency(X, V, times, events, w, penalty, grid[c], opt);
      edf = f.edf;
      score = -2.0 * f.partial_loglik + 2.0 * f.edf;
    } catch (const ConvergenceFailure& e) {
      last_iterate = e.last_iterate();
    }
    choice.scores.push_back(score);
    choice.edf.push_back(edf);
    if (score < inf) {
      const double slack = 1e-10 * (1.0 + std::abs(best < 0 ? score : choice.scores[best]));
      if (best < 0 || score <= choice.scores[best] + slack) best = static_cast<int>(c);
    }
  }
  if (best < 0) {
    throw ConvergenceFailure("select_lambda_latency: no candidate converged",
                             last_iterate, 0);
  }
  choice.lambda = grid[best];
  return choice;
}

StepSurvival breslow_baseline(const LatencyFit& fit, const Eigen::MatrixXd& U,
                              const Eigen::VectorXd& times, const Eigen::VectorXi& events,
                              const Eigen::VectorXd& w) {
  const Eigen::Index n = U.rows();
  if (times.size() != n || events.size() != n || w.size() != n ||
      fit.gamma.size() != U.cols()) {
    throw InvalidArgument("breslow_baseline: dimension mismatch");
  }
  check_weights(w);
  if (events.sum() == 0) throw InvalidArgument("breslow_baseline: no events");

  const Eigen::VectorXd eta = U * fit.gamma;
  const double shift = score_shift(eta, w);
  const std::vector<int> order = descending_order(times);

  // walk from the largest time down, collecting risk-set sums per event time
  std::vector<double> t_desc, inc_desc;
  double s0 = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = times[order[pos]];
    std::size_t end = pos;
    int d = 0;
    while (end < order.size() && times[order[end]] == t) {
      const int i = order[end];
      s0 += w[i] * std::exp(eta[i] - shift);
      d += events[i];
      ++end;
    }
    if (d > 0) {
      if (!(s0 > 0.0)) {
        throw DegenerateRiskSet("breslow_baseline: zero-weight risk set at time " +
                                std::to_string(t));
      }
      t_desc.push_back(t);
      inc_desc.push_back(d * std::exp(-(std::log(s0) + shift)));
    }
    pos = end;
  }

  StepSurvival s;
  s.times.assign(t_desc.rbegin(), t_desc.rend());
  s.increments.assign(inc_desc.rbegin(), inc_desc.rend());
  s.cumhaz.resize(s.times.size());
  s.values.resize(s.times.size());
  double h = 0.0;
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    h += s.increments[j];
    s.cumhaz[j] = h;
    s.values[j] = std::exp(-h);
  }
  s.tail_time = s.times.back();
  return s;
}

double StepSurvival::cumulative_hazard(double t) const {
  if (times.empty() || t < times.front()) return 0.0;
  if (t > tail_time) return std::numeric_limits<double>::infinity();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return cumhaz[static_cast<std::size_t>(it - times.begin()) - 1];
}

double StepSurvival::at(double t) const {
  if (times.empty() || t < times.front()) return 1.0;
  if (t > tail_time) return 0.0;
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

double StepSurvival::jump_at(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return 0.0;
  return increments[static_cast<std::size_t>(it - times.begin())];
}

double predict_survival(const LatencyFit& fit, const StepSurvival& baseline,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& v, double t) {
  if (x.size() != fit.beta.size() || v.size() != fit.theta_beta.size()) {
    throw InvalidArgument("predict_survival: covariate length mismatch");
  }
  if (t <= 0.0) return 1.0;
  const double s0 = baseline.at(t);
  if (s0 <= 0.0) return 0.0;
  double eta = x.dot(fit.beta);
  if (v.size() > 0) eta += v.dot(fit.theta_beta);
  return std::exp(std::log(s0) * std::exp(eta));
}

}  // namespace fphmc
