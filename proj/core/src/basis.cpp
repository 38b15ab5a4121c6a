#include "fphmc/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fphmc/error.hpp"

namespace fphmc {

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 4) {
    throw InvalidArgument("grid needs at least 4 points, got " +
                          std::to_string(points_.size()));
  }
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const double s = points_[j];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw InvalidArgument("grid point outside [0,1] at index " +
                            std::to_string(j));
    }
    if (j > 0 && !(s > points_[j - 1])) {
      throw InvalidArgument("grid is not strictly increasing at index " +
                            std::to_string(j));
    }
  }
}

Grid make_grid(int m) {
  if (m < 4) {
    throw InvalidArgument("make_grid: m must be >= 4, got " + std::to_string(m));
  }
  std::vector<double> pts(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) pts[j] = static_cast<double>(j) / (m - 1);
  pts.back() = 1.0;
  return Grid(std::move(pts));
}

namespace {

std::vector<double> uniform_knots(int num_basis, int degree) {
  const int intervals = num_basis - degree;
  const double h = 1.0 / intervals;
  std::vector<double> knots(static_cast<std::size_t>(num_basis + degree + 1));
  for (int i = 0; i < static_cast<int>(knots.size()); ++i) {
    knots[i] = (i - degree) * h;
  }
  knots[degree] = 0.0;
  knots[num_basis] = 1.0;
  return knots;
}

// Nonzero basis values N_{span-degree..span} at s (de Boor / Cox triangle).
void basis_funs(const std::vector<double>& t, int span, int degree, double s,
                std::vector<double>& out, std::vector<double>& left,
                std::vector<double>& right) {
  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = s - t[span + 1 - j];
    right[j] = t[span + j] - s;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

}  // namespace

Eigen::MatrixXd bspline_values(const std::vector<double>& knots, int degree,
                               int num_basis, const std::vector<double>& at) {
  if (static_cast<int>(knots.size()) != num_basis + degree + 1) {
    throw InvalidArgument("bspline_values: knot vector length mismatch");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(at.size()),
                                              num_basis);
  std::vector<double> n(degree + 1), left(degree + 1), right(degree + 1);
  for (std::size_t j = 0; j < at.size(); ++j) {
    const double s = at[j];
    if (!(s >= knots[degree] && s <= knots[num_basis])) {
      throw InvalidArgument("bspline_values: point outside basis domain");
    }
    // span: t[span] <= s < t[span+1], clamped so s == 1 uses the last interval
    auto it = std::upper_bound(knots.begin() + degree, knots.begin() + num_basis, s);
    int span = static_cast<int>(it - knots.begin()) - 1;
    span = std::clamp(span, degree, num_basis - 1);
    basis_funs(knots, span, degree, s, n, left, right);
    for (int r = 0; r <= degree; ++r) {
      out(static_cast<Eigen::Index>(j), span - degree + r) = n[r];
    }
  }
  return out;
}

BasisMatrix bspline_basis(const Grid& grid, int num_basis, int degree) {
  if (degree < 1) throw InvalidArgument("bspline_basis: degree must be >= 1");
  if (num_basis < degree + 1) {
    throw InvalidArgument("bspline_basis: need K >= degree+1 (K=" +
                          std::to_string(num_basis) + ", degree=" +
                          std::to_string(degree) + ")");
  }
  BasisMatrix b;
  b.degree = degree;
  b.points = grid.points();
  b.knots = uniform_knots(num_basis, degree);
  b.values = bspline_values(b.knots, degree, num_basis, grid.points());
  return b;
}

PenaltyMatrix difference_penalty(int num_basis, int order) {
  if (order < 1) throw InvalidArgument("difference_penalty: order must be >= 1");
  if (num_basis <= order) {
    throw InvalidArgument("difference_penalty: need K > order (K=" +
                          std::to_string(num_basis) + ", order=" +
                          std::to_string(order) + ")");
  }
  Eigen::MatrixXd delta = Eigen::MatrixXd::Identity(num_basis, num_basis);
  for (int d = 0; d < order; ++d) {
    const Eigen::Index r = delta.rows() - 1;
    delta = (delta.bottomRows(r) - delta.topRows(r)).eval();
  }
  PenaltyMatrix p;
  p.order = order;
  p.D = delta.transpose() * delta;
  return p;
}

Eigen::VectorXd quadrature_weights(const Grid& grid) {
  const auto& s = grid.points();
  const Eigen::Index m = static_cast<Eigen::Index>(s.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j + 1 < m; ++j) {
    const double h = 0.5 * (s[j + 1] - s[j]);
    w[j] += h;
    w[j + 1] += h;
  }
  return w;
}

}  // namespace fphmc
