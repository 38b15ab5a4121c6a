#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fphmc/bootstrap.hpp"
#include "fphmc/cli/dataset_file.hpp"
#include "fphmc/em.hpp"

namespace fphmc::cli {

struct CoefficientTable {
  std::vector<std::string> names;
  std::vector<double> coef;
  // bootstrap percentile interval on the coefficient scale; empty without bootstrap
  std::vector<double> lower;
  std::vector<double> upper;
};

// A fitted coefficient function together with what is needed to rebuild its
// design on new data.
struct CurveTable {
  std::string prefix;
  int grid_size = 0;
  int num_basis = 0;
  int degree = 3;
  double lambda = 0.0;
  std::vector<double> theta;
  std::vector<double> center;  // empty when curves were not centered
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct BootstrapInfo {
  int requested = 0;
  int failures = 0;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::vector<double> time_grid;
  std::vector<double> baseline_lower;
  std::vector<double> baseline_upper;
};

struct FitReport {
  nlohmann::json config;
  bool converged = false;
  int iterations = 0;
  bool force_susceptible = false;
  double mean_susceptibility = 0.0;
  CoefficientTable cure;     // intercept first
  CoefficientTable latency;
  std::optional<CurveTable> cure_function;
  std::optional<CurveTable> latency_function;
  StepSurvival baseline;
  std::vector<TraceEntry> trace;
  std::optional<BootstrapInfo> bootstrap;
};

FitReport make_report(const FphmcFit& fit, const SurvivalDataset& data,
                      const DatasetSpec& spec, nlohmann::json config_echo);

void attach_bands(FitReport& report, const BootstrapResult& result,
                  const BootstrapBands& bands);

nlohmann::json to_json(const FitReport& report);
FitReport report_from_json(const nlohmann::json& doc);

void write_report(const std::filesystem::path& path, const FitReport& report);
FitReport read_report(const std::filesystem::path& path);

// <stem>_curves.csv and <stem>_baseline.csv next to the report.
std::vector<std::filesystem::path> write_curve_tables(const std::filesystem::path& report_path,
                                                      const FitReport& report);

struct Prediction {
  std::string id;
  double time = 0.0;
  double pi = 0.0;
  double susceptible_survival = 0.0;
  double survival = 0.0;
};

// Dataset spec (columns) a report expects from prediction inputs.
DatasetSpec prediction_spec(const FitReport& report);

std::vector<Prediction> predict(const FitReport& report, const LoadedDataset& data,
                                const std::vector<double>& times);

}  // namespace fphmc::cli
