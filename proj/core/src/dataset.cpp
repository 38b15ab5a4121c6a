#include "fphmc/dataset.hpp"

#include <cmath>
#include <string>

#include "fphmc/error.hpp"

namespace fphmc {

FunctionalCovariate::FunctionalCovariate(Grid g, Eigen::MatrixXd v)
    : grid(std::move(g)), values(std::move(v)) {
  if (values.cols() != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidArgument("functional covariate has " +
                          std::to_string(values.cols()) +
                          " columns but grid has " + std::to_string(grid.size()) +
                          " points");
  }
  if (!values.allFinite()) {
    throw InvalidArgument("functional covariate contains non-finite values");
  }
}

Eigen::VectorXd FunctionalCovariate::mean_curve() const {
  if (values.rows() == 0) return Eigen::VectorXd::Zero(values.cols());
  return values.colwise().mean().transpose();
}

FunctionalCovariate FunctionalCovariate::centered() const {
  return centered(mean_curve());
}

FunctionalCovariate FunctionalCovariate::centered(const Eigen::VectorXd& mean) const {
  if (mean.size() != values.cols()) {
    throw InvalidArgument("centering curve length does not match grid");
  }
  Eigen::MatrixXd c = values.rowwise() - mean.transpose();
  return FunctionalCovariate(grid, std::move(c));
}

FunctionalCovariate FunctionalCovariate::rows(const std::vector<int>& index) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(index.size()), values.cols());
  for (std::size_t r = 0; r < index.size(); ++r) out.row(r) = values.row(index[r]);
  return FunctionalCovariate(grid, std::move(out));
}

FunctionalDesign functional_design(const FunctionalCovariate& curves,
                                   const BasisMatrix& basis,
                                   const Eigen::VectorXd& weights) {
  if (curves.grid.points() != basis.points) {
    throw InvalidArgument("functional_design: curve grid does not match basis grid");
  }
  if (weights.size() != basis.values.rows()) {
    throw InvalidArgument("functional_design: weight vector length mismatch");
  }
  FunctionalDesign d;
  d.V = curves.values * weights.asDiagonal() * basis.values;
  return d;
}

void SurvivalDataset::validate() const {
  const Eigen::Index n = time.size();
  if (event.size() != n) throw InvalidArgument("event vector length mismatch");
  if (cure_scalars.rows() != n) throw InvalidArgument("cure scalar rows mismatch");
  if (latency_scalars.rows() != n) throw InvalidArgument("latency scalar rows mismatch");
  if (static_cast<Eigen::Index>(cure_names.size()) != cure_scalars.cols() ||
      static_cast<Eigen::Index>(latency_names.size()) != latency_scalars.cols()) {
    throw InvalidArgument("covariate name count does not match columns");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(std::isfinite(time[i]) && time[i] > 0.0)) {
      throw InvalidArgument("time must be finite and > 0 (subject " +
                            std::to_string(i) + ")");
    }
    if (event[i] != 0 && event[i] != 1) {
      throw InvalidArgument("event must be 0 or 1 (subject " + std::to_string(i) + ")");
    }
  }
  if (!cure_scalars.allFinite() || !latency_scalars.allFinite()) {
    throw InvalidArgument("scalar covariates contain non-finite values");
  }
  if (cure_curve && cure_curve->subjects() != n) {
    throw InvalidArgument("cure functional covariate rows mismatch");
  }
  if (latency_curve && latency_curve->subjects() != n) {
    throw InvalidArgument("latency functional covariate rows mismatch");
  }
  if (n == 0 || event.sum() == 0) throw InvalidArgument("dataset has no events");
}

SurvivalDataset SurvivalDataset::rows(const std::vector<int>& index) const {
  SurvivalDataset out;
  const auto m = static_cast<Eigen::Index>(index.size());
  out.time.resize(m);
  out.event.resize(m);
  out.cure_scalars.resize(m, cure_scalars.cols());
  out.latency_scalars.resize(m, latency_scalars.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const int i = index[r];
    out.time[r] = time[i];
    out.event[r] = event[i];
    out.cure_scalars.row(r) = cure_scalars.row(i);
    out.latency_scalars.row(r) = latency_scalars.row(i);
  }
  out.cure_names = cure_names;
  out.latency_names = latency_names;
  if (cure_curve) out.cure_curve = cure_curve->rows(index);
  if (latency_curve) out.latency_curve = latency_curve->rows(index);
  return out;
}

}  // namespace fphmc
