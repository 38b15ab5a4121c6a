#pragma once

#include <vector>

#include <Eigen/Dense>

namespace fphmc {

// Ordered evaluation points s_1 < ... < s_m inside [0, 1].
class Grid {
 public:
  explicit Grid(std::vector<double> points);

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t j) const { return points_[j]; }

  bool operator==(const Grid&) const = default;

 private:
  std::vector<double> points_;
};

// Equally spaced grid s_j = (j-1)/(m-1). Requires m >= 4.
Grid make_grid(int m);

// m x K matrix of B-spline values B_k(s_j).
struct BasisMatrix {
  Eigen::MatrixXd values;
  std::vector<double> points;  // grid the rows were evaluated on
  std::vector<double> knots;   // uniform knot vector, length K+degree+1
  int degree = 3;

  int size() const { return static_cast<int>(values.cols()); }
};

// K B-splines of the given degree on equally spaced knots covering [0, 1].
// Knots extend past both ends so that every basis function has full support
// and the rows form a partition of unity on [0, 1].
BasisMatrix bspline_basis(const Grid& grid, int num_basis, int degree = 3);

// Evaluate the same basis at arbitrary points in [0, 1].
Eigen::MatrixXd bspline_values(const std::vector<double>& knots, int degree,
                               int num_basis, const std::vector<double>& at);

struct PenaltyMatrix {
  Eigen::MatrixXd D;
  int order = 2;

  int size() const { return static_cast<int>(D.rows()); }
};

// D = Δᵀ Δ with Δ the order-th difference operator on K coefficients.
PenaltyMatrix difference_penalty(int num_basis, int order = 2);

// Trapezoid weights; they sum to s_m - s_1.
Eigen::VectorXd quadrature_weights(const Grid& grid);

}  // namespace fphmc
