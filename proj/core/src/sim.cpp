#include "fphmc/sim.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "fphmc/error.hpp"
#include "fphmc/parallel.hpp"

namespace fphmc {

namespace {

constexpr int kNumComponents = 10;

double score_variance(int k) {  // k is 1-based
  return 4.0 * (kNumComponents - k + 1);
}

// Legendre P_k(x) by the three-term recurrence.
double legendre(int k, double x) {
  if (k == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= k; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

FunctionalCovariate draw_curves(int n, const Grid& grid, std::mt19937_64& rng) {
  const Eigen::MatrixXd phi = grid_orthonormal_polynomials(grid, kNumComponents);
  Eigen::MatrixXd scores(n, kNumComponents);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kNumComponents; ++k) {
      scores(i, k) = std::sqrt(score_variance(k + 1)) * normal(rng);
    }
  }
  return FunctionalCovariate(grid, scores * phi.transpose());
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

Scenario parse_scenario(std::string_view name) {
  if (name == "A" || name == "a") return Scenario::A;
  if (name == "B" || name == "b") return Scenario::B;
  if (name == "C" || name == "c") return Scenario::C;
  throw InvalidArgument("unknown scenario '" + std::string(name) + "' (expected A, B or C)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::A: return "A";
    case Scenario::B: return "B";
    case Scenario::C: return "C";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

ScenarioConfig ScenarioConfig::preset(Scenario s, int n, std::uint64_t seed, int m) {
  ScenarioConfig c;
  c.scenario = s;
  c.n = n;
  c.m = m;
  c.seed = seed;
  c.b.resize(3);
  switch (s) {
    case Scenario::A: c.b << 1.0, 2.0, 0.5; break;
    case Scenario::B: c.b << 3.0, 2.0, 0.5; break;
    case Scenario::C: c.b << -1.5, -2.0, -0.5; break;
    case Scenario::Custom: throw InvalidArgument("preset: custom scenario has no preset");
  }
  c.beta.resize(2);
  c.beta << 0.5, 1.0;
  c.beta0 = 0.5;
  c.b_fn = [](double t) { return 5.0 * std::sin(std::numbers::pi * t); };
  c.beta_fn = [](double t) { return 5.0 * std::cos(std::numbers::pi * t); };
  return c;
}

void ScenarioConfig::validate() const {
  if (n < 10) throw InvalidArgument("scenario: n must be >= 10");
  if (!(mu_c > 0.0)) throw InvalidArgument("scenario: mu_c must be > 0");
  if (b.size() != 3 || beta.size() != 2) {
    throw InvalidArgument("scenario: expected 3 cure and 2 latency scalar coefficients");
  }
  if (!b_fn || !beta_fn) throw InvalidArgument("scenario: coefficient functions missing");
}

Eigen::MatrixXd grid_orthonormal_polynomials(const Grid& grid, int count) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (count < 1 || count > m) {
    throw InvalidArgument("grid_orthonormal_polynomials: need 1 <= count <= m");
  }
  Eigen::MatrixXd q(m, count);
  for (int k = 0; k < count; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) q(j, k) = legendre(k, 2.0 * grid[j] - 1.0);
    // modified Gram-Schmidt, two passes
    for (int pass = 0; pass < 2; ++pass) {
      for (int l = 0; l < k; ++l) q.col(k) -= q.col(l).dot(q.col(k)) * q.col(l);
    }
    q.col(k).normalize();
    if (q(m - 1, k) < 0) q.col(k) = -q.col(k);
  }
  return q;
}

FunctionalCovariate gen_functional_covariate(int n, int m, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("gen_functional_covariate: n must be >= 1");
  std::mt19937_64 rng(seed);
  return draw_curves(n, make_grid(m), rng);
}

SimulatedData gen_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const Grid grid = make_grid(cfg.m);
  const Eigen::VectorXd qw = quadrature_weights(grid);
  Eigen::VectorXd b_s(cfg.m), beta_s(cfg.m);
  for (int j = 0; j < cfg.m; ++j) {
    b_s[j] = cfg.b_fn(grid[j]);
    beta_s[j] = cfg.beta_fn(grid[j]);
  }

  std::mt19937_64 rng(cfg.seed);
  FunctionalCovariate curves = draw_curves(cfg.n, grid, rng);
  const Eigen::VectorXd cure_int = curves.values * qw.cwiseProduct(b_s);
  const Eigen::VectorXd lat_int = curves.values * qw.cwiseProduct(beta_s);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> cov(-1.0, 1.0);
  std::exponential_distribution<double> censor(1.0 / cfg.mu_c);

  const int n = cfg.n;
  SimulatedData out;
  Eigen::MatrixXd scalars(n, 2);
  out.susceptible.resize(n);
  out.event_time.resize(n);
  out.pi.resize(n);
  Eigen::VectorXd y(n);
  Eigen::VectorXi delta(n);
  const double base_rate = std::exp(cfg.beta0);
  for (int i = 0; i < n; ++i) {
    const double x1 = cov(rng);
    const double x2 = cov(rng);
    scalars(i, 0) = x1;
    scalars(i, 1) = x2;
    const double pi = sigmoid(cfg.b[0] + cfg.b[1] * x1 + cfg.b[2] * x2 + cure_int[i]);
    out.pi[i] = pi;
    const bool susceptible = unif(rng) < pi;
    const double u = 1.0 - unif(rng);  // (0, 1]
    const double eta = cfg.beta[0] * x1 + cfg.beta[1] * x2 + lat_int[i];
    const double t = susceptible ? -std::log(u) / (base_rate * std::exp(eta)) : cfg.cured_time;
    const double c = censor(rng);
    out.susceptible[i] = susceptible ? 1 : 0;
    out.event_time[i] = t;
    y[i] = std::min(t, c);
    delta[i] = t <= c ? 1 : 0;
  }

  SurvivalDataset& d = out.data;
  d.time = y;
  d.event = delta;
  d.cure_scalars = scalars;
  d.latency_scalars = scalars;
  d.cure_names = {"x1", "x2"};
  d.latency_names = {"x1", "x2"};
  d.cure_curve = curves;
  d.latency_curve = std::move(curves);
  return out;
}

IntegratedError integrated_metrics(const Eigen::MatrixXd& est, const Eigen::VectorXd& truth,
                                   const Eigen::VectorXd& weights) {
  if (est.rows() < 2) throw InvalidArgument("integrated_metrics: need M >= 2 replicates");
  if (est.cols() != truth.size() || weights.size() != truth.size()) {
    throw InvalidArgument("integrated_metrics: grid length mismatch");
  }
  const double M = static_cast<double>(est.rows());
  const Eigen::RowVectorXd mean = est.colwise().mean();
  IntegratedError e;
  const Eigen::VectorXd bias = mean.transpose() - truth;
  e.bias2 = bias.cwiseAbs2().dot(weights);
  double var = 0.0, mse = 0.0;
  for (Eigen::Index r = 0; r < est.rows(); ++r) {
    var += (est.row(r) - mean).cwiseAbs2().dot(weights.transpose());
    mse += (est.row(r) - truth.transpose()).cwiseAbs2().dot(weights.transpose());
  }
  e.var = var / M;
  e.mse = mse / M;
  return e;
}

McReport run_mc(const ScenarioConfig& base, int reps, const FphmcConfig& fit_config,
                const McOptions& options) {
  if (reps < 2) throw InvalidArgument("run_mc: reps must be >= 2");
  base.validate();
  const Grid grid = make_grid(base.m);
  std::vector<double> time_grid = options.time_grid;
  if (time_grid.empty()) {
    for (int j = 0; j <= 30; ++j) time_grid.push_back(0.1 * j);
  }

  struct Outcome {
    double cure_fraction = 0.0;
    std::optional<FphmcFit> fit;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(reps));
  parallel_for(reps, options.threads, [&](int r) {
    ScenarioConfig cfg = base;
    cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(r));
    SimulatedData sim = gen_scenario(cfg);
    Outcome& o = outcomes[static_cast<std::size_t>(r)];
    o.cure_fraction = 1.0 - sim.susceptible.cast<double>().mean();
    try {
      FphmcFit f = fit_fphmc(sim.data, fit_config);
      if (f.converged) o.fit = std::move(f);
    } catch (const Error&) {
    }
  });

  McReport rep;
  rep.scenario = scenario_name(base.scenario);
  rep.n = base.n;
  rep.grid = grid.points();
  rep.time_grid = time_grid;

  std::vector<const FphmcFit*> ok;
  double cf = 0.0;
  for (const auto& o : outcomes) {  // replicate order: fixed summation order
    cf += o.cure_fraction;
    if (o.fit) ok.push_back(&*o.fit);
  }
  rep.cure_fraction = cf / reps;
  rep.reps = static_cast<int>(ok.size());
  rep.failures = reps - rep.reps;
  if (ok.size() < 2) {
    throw Error("run_mc: fewer than 2 replicates converged (" + std::to_string(ok.size()) +
                " of " + std::to_string(reps) + ")");
  }

  const Eigen::Index M = static_cast<Eigen::Index>(ok.size());
  const Eigen::VectorXd qw = quadrature_weights(grid);
  Eigen::VectorXd b_true(base.m), beta_true(base.m);
  for (int j = 0; j < base.m; ++j) {
    b_true[j] = base.b_fn(grid[j]);
    beta_true[j] = base.beta_fn(grid[j]);
  }
  rep.cure_functions.resize(M, base.m);
  rep.latency_functions.resize(M, base.m);
  rep.mean_baseline = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(time_grid.size()));
  const char* names[] = {"b0", "b1", "b2", "beta1", "beta2"};
  const double truths[] = {base.b[0], base.b[1], base.b[2], base.beta[0], base.beta[1]};
  Eigen::MatrixXd scalars(M, 5);
  for (Eigen::Index r = 0; r < M; ++r) {
    const FphmcFit& f = *ok[static_cast<std::size_t>(r)];
    rep.cure_functions.row(r) = f.cure_function().transpose();
    rep.latency_functions.row(r) = f.latency_function().transpose();
    scalars.row(r) << f.incidence.b[0], f.incidence.b[1], f.incidence.b[2],
        f.latency.beta[0], f.latency.beta[1];
    for (std::size_t j = 0; j < time_grid.size(); ++j) {
      rep.mean_baseline[static_cast<Eigen::Index>(j)] += f.baseline.at(time_grid[j]);
    }
  }
  rep.mean_baseline /= static_cast<double>(M);
  rep.true_baseline.resize(static_cast<Eigen::Index>(time_grid.size()));
  for (std::size_t j = 0; j < time_grid.size(); ++j) {
    rep.true_baseline[static_cast<Eigen::Index>(j)] = std::exp(-std::exp(base.beta0) * time_grid[j]);
  }
  rep.cure_function = integrated_metrics(rep.cure_functions, b_true, qw);
  rep.latency_function = integrated_metrics(rep.latency_functions, beta_true, qw);
  rep.mean_cure_function = rep.cure_functions.colwise().mean().transpose();
  rep.mean_latency_function = rep.latency_functions.colwise().mean().transpose();
  for (int k = 0; k < 5; ++k) {
    ScalarSummary s;
    s.name = names[k];
    s.truth = truths[k];
    s.mean = scalars.col(k).mean();
    const double ss = (scalars.col(k).array() - s.mean).square().sum();
    s.sd = std::sqrt(ss / std::max<Eigen::Index>(1, M - 1));
    rep.scalars.push_back(s);
  }
  return rep;
}

}  // namespace fphmc
