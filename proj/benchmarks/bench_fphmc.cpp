#include <benchmark/benchmark.h>

#include "fphmc/em.hpp"
#include "fphmc/sim.hpp"

namespace {

using namespace fphmc;

const SurvivalDataset& sample(int n) {
  static const SurvivalDataset data = gen_scenario(ScenarioConfig::preset(Scenario::A, n, 42)).data;
  return data;
}

void BM_CoxLoglik(benchmark::State& state) {
  const FphmcDesign d = build_design(sample(300), FphmcConfig{});
  const Eigen::MatrixXd U = d.U();
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(d.size());
  const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(U.cols(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cox_penalized_loglik(gamma, U, d.time, d.event, w, d.latency_penalty, 1.0));
  }
}
BENCHMARK(BM_CoxLoglik);

void BM_FitIncidence(benchmark::State& state) {
  const FphmcDesign d = build_design(sample(300), FphmcConfig{});
  Eigen::VectorXd w(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) w[i] = d.event[i] ? 1.0 : 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_incidence(d.Z, d.Vz, w, d.cure_penalty, 1.0));
  }
}
BENCHMARK(BM_FitIncidence);

void BM_FitFphmc(benchmark::State& state) {
  const SurvivalDataset& data = sample(300);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_fphmc(data, FphmcConfig{}));
  }
}
BENCHMARK(BM_FitFphmc)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
