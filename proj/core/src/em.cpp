#include "fphmc/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fphmc/error.hpp"

namespace fphmc {

namespace {

struct CurveTerm {
  Eigen::MatrixXd V;
  std::optional<BasisMatrix> basis;
  PenaltyMatrix penalty;
  Eigen::VectorXd center;
};

CurveTerm curve_term(const std::optional<FunctionalCovariate>& curve, Eigen::Index n,
                     int num_basis, const FphmcConfig& cfg) {
  CurveTerm t;
  if (!curve) {
    t.V = Eigen::MatrixXd(n, 0);
    return t;
  }
  t.basis = bspline_basis(curve->grid, num_basis, cfg.degree);
  t.penalty = difference_penalty(num_basis, cfg.penalty_order);
  const Eigen::VectorXd qw = quadrature_weights(curve->grid);
  if (cfg.center_curves) {
    t.center = curve->mean_curve();
    t.V = functional_design(curve->centered(t.center), *t.basis, qw).V;
  } else {
    t.V = functional_design(*curve, *t.basis, qw).V;
  }
  return t;
}

double penalty_value(const PenaltyMatrix& p, const Eigen::VectorXd& theta, double lambda) {
  if (p.size() == 0) return 0.0;
  return 0.5 * lambda * theta.dot(p.D * theta);
}

double max_relative_change(const Eigen::VectorXd& prev, const Eigen::VectorXd& next) {
  if (prev.size() != next.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (Eigen::Index i = 0; i < prev.size(); ++i) {
    m = std::max(m, std::abs(next[i] - prev[i]) / std::max(1.0, std::abs(prev[i])));
  }
  return m;
}

IncidenceFit susceptible_everywhere(Eigen::Index num_scalars) {
  IncidenceFit f;
  f.b = Eigen::VectorXd::Zero(num_scalars);
  f.converged = true;
  return f;
}

Eigen::VectorXd susceptibility(const FphmcDesign& d, const IncidenceFit& inc) {
  if (d.force_susceptible) return Eigen::VectorXd::Ones(d.size());
  return predict_pi(inc, d.Z, d.Vz);
}

}  // namespace

FphmcDesign build_design(const SurvivalDataset& data, const FphmcConfig& cfg) {
  data.validate();
  const Eigen::Index n = data.size();
  FphmcDesign d;
  d.time = data.time;
  d.event = data.event;
  d.Z = with_intercept(data.cure_scalars);
  d.X = data.latency_scalars;
  d.force_susceptible = cfg.force_susceptible;

  CurveTerm cure = curve_term(data.cure_curve, n, cfg.cure_basis, cfg);
  d.Vz = std::move(cure.V);
  d.cure_basis = std::move(cure.basis);
  d.cure_penalty = std::move(cure.penalty);
  d.cure_center = std::move(cure.center);

  CurveTerm lat = curve_term(data.latency_curve, n, cfg.latency_basis, cfg);
  d.Vx = std::move(lat.V);
  d.latency_basis = std::move(lat.basis);
  d.latency_penalty = std::move(lat.penalty);
  d.latency_center = std::move(lat.center);
  return d;
}

Eigen::VectorXd FphmcFit::cure_function() const {
  if (!cure_basis) return {};
  return cure_basis->values * incidence.theta_b;
}

Eigen::VectorXd FphmcFit::latency_function() const {
  if (!latency_basis) return {};
  return latency_basis->values * latency.theta_beta;
}

Eigen::VectorXd e_step(const FphmcDesign& d, const IncidenceFit& inc,
                       const LatencyFit& lat, const StepSurvival& base) {
  const Eigen::Index n = d.size();
  if (d.force_susceptible) return Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd pi = susceptibility(d, inc);
  const Eigen::MatrixXd U = d.U();
  const Eigen::VectorXd eta = U * lat.gamma;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.event[i] == 1) {
      w[i] = 1.0;
      continue;
    }
    const double s0 = base.at(d.time[i]);
    const double su = s0 > 0.0 ? std::exp(std::log(s0) * std::exp(eta[i])) : 0.0;
    const double num = pi[i] * su;
    const double den = 1.0 - pi[i] + num;
    w[i] = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
  }
  return w;
}

double observed_loglik(const FphmcDesign& d, const IncidenceFit& inc,
                       const LatencyFit& lat, const StepSurvival& base) {
  const Eigen::Index n = d.size();
  const Eigen::VectorXd pi = susceptibility(d, inc);
  const Eigen::VectorXd eta = d.U() * lat.gamma;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = d.time[i];
    const double risk = std::exp(eta[i]);
    if (d.event[i] == 1) {
      // log π + log(ΔH0 e^η) − H0(t) e^η
      ll += std::log(pi[i]) + std::log(base.jump_at(t)) + eta[i] -
            base.cumulative_hazard(t) * risk;
    } else if (d.force_susceptible) {
      // plain Cox/Breslow likelihood: no cure mass, no tail truncation
      ll -= base.cumulative_hazard(std::min(t, base.tail_time)) * risk;
    } else {
      const double h = base.cumulative_hazard(t);
      const double su = std::isfinite(h) ? std::exp(-h * risk) : 0.0;
      ll += std::log(1.0 - pi[i] + pi[i] * su);
    }
  }
  return ll;
}

double penalized_observed_loglik(const FphmcDesign& d, const IncidenceFit& inc,
                                 const LatencyFit& lat, const StepSurvival& base) {
  double v = observed_loglik(d, inc, lat, base);
  if (!d.force_susceptible) v -= penalty_value(d.cure_penalty, inc.theta_b, inc.lambda_b);
  v -= penalty_value(d.latency_penalty, lat.theta_beta, lat.lambda_beta);
  return v;
}

FphmcFit fit_fphmc(const FphmcDesign& d, const FphmcConfig& cfg) {
  if (cfg.max_iter < 1) throw InvalidArgument("fit_fphmc: max_iter must be >= 1");
  if (!(cfg.tol > 0.0)) throw InvalidArgument("fit_fphmc: tol must be > 0");
  const Eigen::Index n = d.size();
  const bool has_cure_curve = d.Vz.cols() > 0;
  const bool has_lat_curve = d.Vx.cols() > 0;

  FphmcFit fit;
  fit.force_susceptible = d.force_susceptible;
  fit.cure_basis = d.cure_basis;
  fit.latency_basis = d.latency_basis;
  fit.cure_center = d.cure_center;
  fit.latency_center = d.latency_center;

  Eigen::VectorXd w = d.force_susceptible ? Eigen::VectorXd::Ones(n)
                                          : d.event.cast<double>().eval();
  double lambda_cure = has_cure_curve ? cfg.lambda_cure.value_or(0.0) : 0.0;
  double lambda_lat = has_lat_curve ? cfg.lambda_latency.value_or(0.0) : 0.0;
  const bool select_cure = has_cure_curve && !cfg.lambda_cure && !d.force_susceptible;
  const bool select_lat = has_lat_curve && !cfg.lambda_latency;

  IncidenceOptions inc_opt;
  LatencyOptions lat_opt;
  std::optional<Eigen::VectorXd> prev_inc, prev_lat;
  double prev_ll = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<double, double>> history;
  bool lambda_frozen = false;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    inc_opt.start = prev_inc;
    lat_opt.start = prev_lat;
    try {
      if ((iter == 1 || cfg.reselect_lambda) && !lambda_frozen) {
        if (select_cure) {
          lambda_cure = select_lambda_incidence(d.Z, d.Vz, w, d.cure_penalty,
                                                cfg.lambda_grid, inc_opt).lambda;
        }
        if (select_lat) {
          lambda_lat = select_lambda_latency(d.X, d.Vx, d.time, d.event, w,
                                             d.latency_penalty, cfg.lambda_grid,
                                             lat_opt).lambda;
        }
        // a choice that returns after having changed is a cycle: freeze at the
        // smoothest values seen inside it
        const std::pair<double, double> pick{lambda_cure, lambda_lat};
        const auto seen = std::find(history.begin(), history.end(), pick);
        if (seen != history.end() && history.back() != pick) {
          for (auto it = seen; it != history.end(); ++it) {
            lambda_cure = std::max(lambda_cure, it->first);
            lambda_lat = std::max(lambda_lat, it->second);
          }
          lambda_frozen = true;
        }
        history.push_back({lambda_cure, lambda_lat});
      }
      fit.incidence = d.force_susceptible
                          ? susceptible_everywhere(d.Z.cols())
                          : fit_incidence(d.Z, d.Vz, w, d.cure_penalty, lambda_cure, inc_opt);
      fit.latency = fit_latency(d.X, d.Vx, d.time, d.event, w, d.latency_penalty,
                                lambda_lat, lat_opt);
    } catch (const ConvergenceFailure& e) {
      throw ConvergenceFailure("EM iteration " + std::to_string(iter) + ": " + e.what(),
                               e.last_iterate(), iter);
    }
    const Eigen::MatrixXd U = d.U();
    fit.baseline = breslow_baseline(fit.latency, U, d.time, d.event, w);
    w = e_step(d, fit.incidence, fit.latency, fit.baseline);

    TraceEntry entry;
    entry.iteration = iter;
    entry.loglik = observed_loglik(d, fit.incidence, fit.latency, fit.baseline);
    entry.penalized_loglik =
        penalized_observed_loglik(d, fit.incidence, fit.latency, fit.baseline);
    entry.lambda_cure = lambda_cure;
    entry.lambda_latency = lambda_lat;

    const Eigen::VectorXd inc_coef = fit.incidence.coefficients();
    const Eigen::VectorXd lat_coef = fit.latency.gamma;
    entry.max_change =
        prev_inc ? std::max(max_relative_change(*prev_inc, inc_coef),
                            max_relative_change(*prev_lat, lat_coef))
                 : std::numeric_limits<double>::infinity();
    const double ll_change = std::abs(entry.penalized_loglik - prev_ll);
    fit.trace.push_back(entry);
    fit.iterations = iter;
    prev_inc = inc_coef;
    prev_lat = lat_coef;
    prev_ll = entry.penalized_loglik;

    if (entry.max_change < cfg.tol && ll_change < cfg.loglik_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.weights = w;
  return fit;
}

FphmcFit fit_fphmc(const SurvivalDataset& data, const FphmcConfig& config) {
  return fit_fphmc(build_design(data, config), config);
}

}  // namespace fphmc
