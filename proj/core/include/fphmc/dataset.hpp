#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fphmc/basis.hpp"

namespace fphmc {

// Per-subject curve values on a shared grid: row i holds x_i(s_1..s_m).
struct FunctionalCovariate {
  Grid grid;
  Eigen::MatrixXd values;

  FunctionalCovariate(Grid g, Eigen::MatrixXd v);

  Eigen::Index subjects() const { return values.rows(); }
  Eigen::VectorXd mean_curve() const;
  FunctionalCovariate centered() const;
  FunctionalCovariate centered(const Eigen::VectorXd& mean) const;
  FunctionalCovariate rows(const std::vector<int>& index) const;
};

// V[i,k] = Σ_j weights_j x_i(s_j) B_k(s_j).
struct FunctionalDesign {
  Eigen::MatrixXd V;
};

FunctionalDesign functional_design(const FunctionalCovariate& curves,
                                   const BasisMatrix& basis,
                                   const Eigen::VectorXd& weights);

// Observed right-censored sample. Scalar design matrices exclude the
// incidence intercept; the incidence fitter prepends it.
struct SurvivalDataset {
  Eigen::VectorXd time;
  Eigen::VectorXi event;
  Eigen::MatrixXd cure_scalars;
  Eigen::MatrixXd latency_scalars;
  std::vector<std::string> cure_names;
  std::vector<std::string> latency_names;
  std::optional<FunctionalCovariate> cure_curve;
  std::optional<FunctionalCovariate> latency_curve;

  Eigen::Index size() const { return time.size(); }
  int events() const { return event.sum(); }

  // Throws InvalidArgument on shape mismatch, non-positive times,
  // non-binary events, non-finite values or an event-free sample.
  void validate() const;

  // Subset (with repetition) of whole subject rows.
  SurvivalDataset rows(const std::vector<int>& index) const;
};

}  // namespace fphmc
