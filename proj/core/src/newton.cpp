#include "fphmc/newton.hpp"

#include <cmath>
#include <vector>

namespace fphmc {

namespace {

// Solve (-H) d = g, regularizing when -H is not positive definite.
Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& gradient) {
  const Eigen::Index p = gradient.size();
  Eigen::MatrixXd neg = -hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd d = llt.solve(gradient);
    if (d.allFinite()) return d;
  }
  const double scale = std::max(1.0, neg.diagonal().cwiseAbs().maxCoeff());
  for (double tau = 1e-10 * scale; tau < 1e12 * scale; tau *= 10.0) {
    Eigen::MatrixXd reg = neg + tau * Eigen::MatrixXd::Identity(p, p);
    Eigen::LLT<Eigen::MatrixXd> l2(reg);
    if (l2.info() == Eigen::Success) {
      Eigen::VectorXd d = l2.solve(gradient);
      if (d.allFinite()) return d;
    }
  }
  return gradient / scale;
}

bool pinned(const NewtonResult& r, Eigen::Index k, double cap) {
  return std::isfinite(cap) && std::abs(r.x[k]) >= cap && r.at.gradient[k] * r.x[k] > 0;
}

// Gradient with the components of pinned coordinates removed.
Eigen::VectorXd projected_gradient(const NewtonResult& r, double cap) {
  Eigen::VectorXd g = r.at.gradient;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (pinned(r, k, cap)) g[k] = 0.0;
  }
  return g;
}

// Newton direction with coordinates pinned at the cap held fixed while the
// gradient still pushes them outward.
Eigen::VectorXd bounded_direction(const NewtonResult& r, double cap) {
  const Eigen::VectorXd& g = r.at.gradient;
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (!pinned(r, k, cap)) free.push_back(k);
  }
  if (free.size() == static_cast<std::size_t>(g.size())) return ascent_direction(r.at.hessian, g);
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(g.size());
  if (!free.empty()) dir(free) = ascent_direction(r.at.hessian(free, free), g(free));
  return dir;
}

bool small_gradient(const NewtonResult& r, double cap, double tol) {
  const Eigen::VectorXd g = projected_gradient(r, cap);
  return g.size() == 0 || g.norm() < tol * (1.0 + std::abs(r.at.value));
}

}  // namespace

NewtonResult maximize_newton(const ObjectiveFn& f, Eigen::VectorXd start,
                             const NewtonOptions& opt) {
  NewtonResult res;
  res.x = std::move(start);
  if (std::isfinite(opt.coef_cap)) {
    res.x = res.x.cwiseMax(-opt.coef_cap).cwiseMin(opt.coef_cap);
  }
  res.at = f(res.x, true);
  res.path.push_back(res.at.value);

  int stalled = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (small_gradient(res, opt.coef_cap, opt.grad_tol)) {
      res.converged = true;
      res.iterations = it;
      res.capped = res.capped || res.x.cwiseAbs().maxCoeff() >= opt.coef_cap;
      return res;
    }
    const Eigen::VectorXd dir = bounded_direction(res, opt.coef_cap);
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    Objective trial_obj;
    bool trial_capped = false;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      trial = res.x + step * dir;
      trial_capped = false;
      if (std::isfinite(opt.coef_cap) && trial.cwiseAbs().maxCoeff() > opt.coef_cap) {
        trial = trial.cwiseMax(-opt.coef_cap).cwiseMin(opt.coef_cap);
        trial_capped = true;
      }
      trial_obj = f(trial, false);
      if (std::isfinite(trial_obj.value) && trial_obj.value >= res.at.value) {
        accepted = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) {
      // no ascent left at machine precision: accept the point if the gradient
      // is small relative to what rounding allows
      res.converged = small_gradient(res, opt.coef_cap, std::max(opt.grad_tol, 1e-6));
      return res;
    }
    const double moved = (trial - res.x).cwiseAbs().maxCoeff();
    const double gain = trial_obj.value - res.at.value;
    res.x = trial;
    res.at = f(res.x, true);
    res.path.push_back(res.at.value);
    if (gain <= 1e-14 * (1.0 + std::abs(res.at.value))) {
      // steps no longer change the objective: same rounding rule as above
      res.converged = small_gradient(res, opt.coef_cap, std::max(opt.grad_tol, 1e-6));
      if (res.converged || ++stalled >= 3) {
        res.capped = res.capped || trial_capped;
        return res;
      }
    } else {
      stalled = 0;
    }
    if (trial_capped) {
      res.capped = true;
      if (moved < 1e-10) return res;
    }
  }
  res.converged = small_gradient(res, opt.coef_cap, opt.grad_tol);
  return res;
}

double effective_df(const Eigen::MatrixXd& info, const Eigen::MatrixXd& penalty,
                    double lambda) {
  if (info.rows() == 0) return 0.0;
  Eigen::MatrixXd a = info + lambda * penalty;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Eigen::MatrixXd h = ldlt.solve(info);
    if (h.allFinite()) return h.trace();
  }
  // singular system: pseudo-inverse
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.solve(info).trace();
}

}  // namespace fphmc
