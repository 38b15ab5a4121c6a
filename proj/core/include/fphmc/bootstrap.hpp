#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fphmc/dataset.hpp"
#include "fphmc/em.hpp"
#include "fphmc/error.hpp"

namespace fphmc {

// Coefficients of one bootstrap refit.
struct BootstrapSnapshot {
  int replicate = 0;
  Eigen::VectorXd cure_coef;     // (b, θ_b)
  Eigen::VectorXd latency_coef;  // (β, θ_β)
  Eigen::VectorXd cure_function;
  Eigen::VectorXd latency_function;
  Eigen::VectorXd baseline;      // Ŝ0 on BootstrapResult::time_grid
};

// Exact (bitwise) equality, sizes included.
bool operator==(const BootstrapSnapshot& a, const BootstrapSnapshot& b);

struct BootstrapResult {
  std::vector<BootstrapSnapshot> replicates;  // successful, in replicate order
  std::vector<int> failed;                    // indices of failed replicates
  int requested = 0;
  std::uint64_t seed = 0;
  std::vector<double> time_grid;

  int failures() const { return static_cast<int>(failed.size()); }
};

bool operator==(const BootstrapResult& a, const BootstrapResult& b);

// More than the tolerated share of replicates failed. The partial result is
// attached.
class BootstrapUnstable : public Error {
 public:
  BootstrapUnstable(const std::string& what, BootstrapResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const BootstrapResult& partial() const noexcept { return partial_; }

 private:
  BootstrapResult partial_;
};

struct BootstrapOptions {
  int threads = 0;                 // 0 = hardware concurrency
  std::vector<double> time_grid;   // empty: 50 points on [0, max time]
  double max_failure_share = 0.2;
};

// Rows drawn with replacement for one replicate; depends only on
// (n, seed, replicate).
std::vector<int> resample_indices(int n, std::uint64_t seed, int replicate);

// Refit on the given rows. Returns nothing when the refit fails or the
// resample has no events.
std::optional<BootstrapSnapshot> bootstrap_replicate(const SurvivalDataset& data,
                                                     const FphmcConfig& config,
                                                     const std::vector<int>& rows,
                                                     const std::vector<double>& time_grid);

BootstrapSnapshot snapshot_of(const FphmcFit& fit, const std::vector<double>& time_grid);

std::vector<double> default_time_grid(const SurvivalDataset& data, int points = 50);

BootstrapResult bootstrap_fit(const SurvivalDataset& data, const FphmcConfig& config,
                              int replicates, std::uint64_t seed,
                              const BootstrapOptions& options = {});

struct Band {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct BootstrapBands {
  double level = 0.95;
  Band cure_coef;
  Band latency_coef;
  Band cure_function;
  Band latency_function;
  Band baseline;
};

// Linear-interpolation sample quantile (type 7).
double quantile(std::vector<double> values, double p);

// Percentile intervals at (1 ± level)/2. Needs at least 20 replicates.
BootstrapBands pointwise_ci(const BootstrapResult& result, double level = 0.95);

}  // namespace fphmc
