#include "fphmc/bootstrap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "fphmc/parallel.hpp"

namespace fphmc {

namespace {

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

bool operator==(const BootstrapSnapshot& a, const BootstrapSnapshot& b) {
  return a.replicate == b.replicate && same(a.cure_coef, b.cure_coef) &&
         same(a.latency_coef, b.latency_coef) && same(a.cure_function, b.cure_function) &&
         same(a.latency_function, b.latency_function) && same(a.baseline, b.baseline);
}

bool operator==(const BootstrapResult& a, const BootstrapResult& b) {
  return a.replicates == b.replicates && a.failed == b.failed &&
         a.requested == b.requested && a.seed == b.seed && a.time_grid == b.time_grid;
}

std::vector<int> resample_indices(int n, std::uint64_t seed, int replicate) {
  if (n < 1) throw InvalidArgument("resample_indices: n must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(replicate)));
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

std::vector<double> default_time_grid(const SurvivalDataset& data, int points) {
  const double tmax = data.time.size() > 0 ? data.time.maxCoeff() : 1.0;
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) g[j] = tmax * j / (points - 1);
  return g;
}

BootstrapSnapshot snapshot_of(const FphmcFit& fit, const std::vector<double>& time_grid) {
  BootstrapSnapshot s;
  s.cure_coef = fit.incidence.coefficients();
  s.latency_coef = fit.latency.gamma;
  s.cure_function = fit.cure_function();
  s.latency_function = fit.latency_function();
  s.baseline.resize(static_cast<Eigen::Index>(time_grid.size()));
  for (std::size_t j = 0; j < time_grid.size(); ++j) {
    s.baseline[static_cast<Eigen::Index>(j)] = fit.baseline.at(time_grid[j]);
  }
  return s;
}

std::optional<BootstrapSnapshot> bootstrap_replicate(const SurvivalDataset& data,
                                                     const FphmcConfig& config,
                                                     const std::vector<int>& rows,
                                                     const std::vector<double>& time_grid) {
  SurvivalDataset sample = data.rows(rows);
  if (sample.events() == 0) return std::nullopt;
  try {
    FphmcFit fit = fit_fphmc(sample, config);
    if (!fit.converged) return std::nullopt;
    BootstrapSnapshot s = snapshot_of(fit, time_grid);
    const bool finite = s.cure_coef.allFinite() && s.latency_coef.allFinite() &&
                        s.cure_function.allFinite() && s.latency_function.allFinite() &&
                        s.baseline.allFinite();
    if (!finite) return std::nullopt;
    return s;
  } catch (const Error&) {
    return std::nullopt;
  }
}

BootstrapResult bootstrap_fit(const SurvivalDataset& data, const FphmcConfig& config,
                              int replicates, std::uint64_t seed,
                              const BootstrapOptions& options) {
  if (replicates < 1) throw InvalidArgument("bootstrap_fit: B must be >= 1");
  data.validate();
  const int n = static_cast<int>(data.size());

  BootstrapResult result;
  result.requested = replicates;
  result.seed = seed;
  result.time_grid = options.time_grid.empty() ? default_time_grid(data) : options.time_grid;

  std::vector<std::optional<BootstrapSnapshot>> slots(static_cast<std::size_t>(replicates));
  parallel_for(replicates, options.threads, [&](int b) {
    auto snap = bootstrap_replicate(data, config, resample_indices(n, seed, b),
                                    result.time_grid);
    if (snap) snap->replicate = b;
    slots[static_cast<std::size_t>(b)] = std::move(snap);
  });

  for (int b = 0; b < replicates; ++b) {
    auto& s = slots[static_cast<std::size_t>(b)];
    if (s) {
      result.replicates.push_back(std::move(*s));
    } else {
      result.failed.push_back(b);
    }
  }
  if (result.failures() > options.max_failure_share * replicates) {
    const std::string msg = "bootstrap unstable: " + std::to_string(result.failures()) +
                            " of " + std::to_string(replicates) + " replicates failed";
    throw BootstrapUnstable(msg, std::move(result));
  }
  return result;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

template <class Get>
Band band_of(const std::vector<BootstrapSnapshot>& reps, Get get, double level) {
  const Eigen::Index len = get(reps.front()).size();
  Band b;
  b.lower.resize(len);
  b.upper.resize(len);
  std::vector<double> column(reps.size());
  for (Eigen::Index k = 0; k < len; ++k) {
    for (std::size_t r = 0; r < reps.size(); ++r) column[r] = get(reps[r])[k];
    b.lower[k] = quantile(column, (1.0 - level) / 2.0);
    b.upper[k] = quantile(column, (1.0 + level) / 2.0);
  }
  return b;
}

}  // namespace

BootstrapBands pointwise_ci(const BootstrapResult& result, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("pointwise_ci: level must be in (0,1)");
  }
  constexpr std::size_t min_replicates = 20;
  if (result.replicates.size() < min_replicates) {
    throw InsufficientReplicates("pointwise_ci: need at least 20 successful replicates, have " +
                                 std::to_string(result.replicates.size()));
  }
  const auto& reps = result.replicates;
  BootstrapBands out;
  out.level = level;
  out.cure_coef = band_of(reps, [](const BootstrapSnapshot& s) -> const Eigen::VectorXd& { return s.cure_coef; }, level);
  out.latency_coef = band_of(reps, [](const BootstrapSnapshot& s) -> const Eigen::VectorXd& { return s.latency_coef; }, level);
  out.cure_function = band_of(reps, [](const BootstrapSnapshot& s) -> const Eigen::VectorXd& { return s.cure_function; }, level);
  out.latency_function = band_of(reps, [](const BootstrapSnapshot& s) -> const Eigen::VectorXd& { return s.latency_function; }, level);
  out.baseline = band_of(reps, [](const BootstrapSnapshot& s) -> const Eigen::VectorXd& { return s.baseline; }, level);
  return out;
}

}  // namespace fphmc
