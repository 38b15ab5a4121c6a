#include "fphmc/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fphmc/bootstrap.hpp"
#include "fphmc/cli/dataset_file.hpp"
#include "fphmc/cli/report.hpp"
#include "fphmc/em.hpp"
#include "fphmc/parallel.hpp"
#include "fphmc/sim.hpp"

namespace fphmc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FitArgs {
  std::string data;
  std::string id = "id";
  std::string time = "time";
  std::string event = "event";
  std::string cure_scalars;
  std::string latency_scalars;
  std::string cure_func = "none";
  std::string latency_func = "none";
  int k = 10;
  std::string lambda = "auto";
  int max_iter = 200;
  double tol = 1e-4;
  std::string out = "fphmc_fit.json";
  std::uint64_t seed = 1;
  int threads = 0;
  bool freeze_lambda = false;
};

struct SimulateArgs {
  std::string scenarios;
  std::string sizes;
  int reps = -1;
  std::uint64_t seed = 1;
  std::string emit = "report";
  std::string out = "fphmc_sim";
  int m = 101;
  int threads = 0;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string times;
  std::string out = "fphmc_predictions.csv";
};

// Model printed back when EM stops short.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, std::vector<TraceEntry> trace)
      : Error(what), trace(std::move(trace)) {}
  std::vector<TraceEntry> trace;
};

void add_fit_flags(CLI::App& cmd, FitArgs& a) {
  cmd.add_option("--data", a.data, "Wide CSV dataset")->required();
  cmd.add_option("--id", a.id, "Subject id column");
  cmd.add_option("--time", a.time, "Follow-up time column");
  cmd.add_option("--event", a.event, "Event indicator column (0/1)");
  cmd.add_option("--cure-scalars", a.cure_scalars, "Comma list of incidence covariates");
  cmd.add_option("--latency-scalars", a.latency_scalars, "Comma list of latency covariates");
  cmd.add_option("--cure-func", a.cure_func, "Functional column prefix for incidence, or none");
  cmd.add_option("--latency-func", a.latency_func, "Functional column prefix for latency, or none");
  cmd.add_option("--k", a.k, "B-spline basis size")->check(CLI::Range(4, 200));
  cmd.add_option("--lambda", a.lambda, "Smoothing parameter: auto or a value");
  cmd.add_option("--max-iter", a.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  cmd.add_option("--tol", a.tol, "EM coefficient tolerance")->check(CLI::PositiveNumber);
  cmd.add_option("--out", a.out, "Report path (JSON)");
  cmd.add_option("--seed", a.seed, "Random seed");
  cmd.add_option("--threads", a.threads, "Worker threads (0: all cores)");
  cmd.add_flag("--freeze-lambda", a.freeze_lambda, "Select smoothing once, then hold it");
}

std::optional<std::string> prefix_or_none(const std::string& s) {
  if (s.empty() || s == "none") return std::nullopt;
  return s;
}

DatasetSpec spec_of(const FitArgs& a) {
  DatasetSpec spec;
  spec.id_col = a.id;
  spec.time_col = a.time;
  spec.event_col = a.event;
  spec.cure_scalars = split_list(a.cure_scalars);
  spec.latency_scalars = split_list(a.latency_scalars);
  spec.cure_func = prefix_or_none(a.cure_func);
  spec.latency_func = prefix_or_none(a.latency_func);
  return spec;
}

FphmcConfig config_of(const FitArgs& a) {
  FphmcConfig cfg;
  cfg.cure_basis = a.k;
  cfg.latency_basis = a.k;
  cfg.max_iter = a.max_iter;
  cfg.tol = a.tol;
  cfg.center_curves = true;
  cfg.reselect_lambda = !a.freeze_lambda;
  if (a.lambda != "auto") {
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(a.lambda, &used);
      if (used != a.lambda.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("--lambda must be 'auto' or a number, got '" + a.lambda + "'");
    }
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("--lambda must be >= 0");
    cfg.lambda_cure = v;
    cfg.lambda_latency = v;
  }
  return cfg;
}

json echo(const FitArgs& a) {
  return {{"data", a.data}, {"id", a.id}, {"time", a.time}, {"event", a.event},
          {"cure_scalars", split_list(a.cure_scalars)},
          {"latency_scalars", split_list(a.latency_scalars)},
          {"cure_func", a.cure_func}, {"latency_func", a.latency_func},
          {"k", a.k}, {"lambda", a.lambda}, {"max_iter", a.max_iter}, {"tol", a.tol},
          {"seed", a.seed}, {"center_curves", true}, {"reselect_lambda", !a.freeze_lambda}};
}

void print_trace(std::ostream& os, const std::vector<TraceEntry>& trace) {
  os << "iteration,loglik,penalized_loglik,max_change,lambda_cure,lambda_latency\n";
  os << std::setprecision(10);
  for (const auto& t : trace) {
    os << t.iteration << ',' << t.loglik << ',' << t.penalized_loglik << ',' << t.max_change
       << ',' << t.lambda_cure << ',' << t.lambda_latency << '\n';
  }
}

struct Fitted {
  LoadedDataset loaded;
  DatasetSpec spec;
  FphmcConfig cfg;
  FphmcFit fit;
};

Fitted fit_from_args(const FitArgs& a) {
  Fitted f;
  f.spec = spec_of(a);
  f.cfg = config_of(a);
  f.loaded = read_dataset(a.data, f.spec);
  f.fit = fit_fphmc(f.loaded.data, f.cfg);
  if (!f.fit.converged) {
    throw NotConverged("EM did not converge within " + std::to_string(a.max_iter) +
                           " iterations",
                       f.fit.trace);
  }
  return f;
}

void finish_report(const FitReport& report, const std::string& out_path, std::ostream& out) {
  write_report(out_path, report);
  out << "report: " << out_path << '\n';
  for (const auto& p : write_curve_tables(out_path, report)) out << "table: " << p.string() << '\n';
}

void summarize(std::ostream& out, const FitReport& r) {
  out << std::setprecision(6);
  out << "converged after " << r.iterations << " EM iterations; mean susceptibility "
      << r.mean_susceptibility << '\n';
  for (std::size_t j = 0; j < r.cure.names.size(); ++j) {
    out << "  cure    " << r.cure.names[j] << "  OR " << std::exp(r.cure.coef[j]) << '\n';
  }
  for (std::size_t j = 0; j < r.latency.names.size(); ++j) {
    out << "  latency " << r.latency.names[j] << "  HR " << std::exp(r.latency.coef[j]) << '\n';
  }
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  Fitted f = fit_from_args(a);
  FitReport report = make_report(f.fit, f.loaded.data, f.spec, echo(a));
  summarize(out, report);
  finish_report(report, a.out, out);
  return kOk;
}

int cmd_bootstrap(const FitArgs& a, int b, double level, std::ostream& out) {
  if (b < 1) throw InvalidArgument("--b must be >= 1");
  Fitted f = fit_from_args(a);
  json cfg = echo(a);
  cfg["bootstrap_replicates"] = b;
  cfg["level"] = level;
  FitReport report = make_report(f.fit, f.loaded.data, f.spec, cfg);
  BootstrapOptions opt;
  opt.threads = a.threads;
  const BootstrapResult result = bootstrap_fit(f.loaded.data, f.cfg, b, a.seed, opt);
  attach_bands(report, result, pointwise_ci(result, level));
  summarize(out, report);
  out << "bootstrap: " << result.replicates.size() << " replicates, " << result.failures()
      << " failed\n";
  finish_report(report, a.out, out);
  return kOk;
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> sizes;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size() || n < 10) throw std::invalid_argument("n");
      sizes.push_back(n);
    } catch (const std::exception&) {
      throw InvalidArgument("--n entries must be integers >= 10, got '" + item + "'");
    }
  }
  if (sizes.empty()) throw InvalidArgument("--n needs at least one sample size");
  return sizes;
}

json error_json(const IntegratedError& e) {
  return {{"bias2", e.bias2}, {"var", e.var}, {"mse", e.mse}};
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  std::vector<Scenario> scenarios;
  for (const auto& s : split_list(a.scenarios)) scenarios.push_back(parse_scenario(s));
  if (scenarios.empty()) throw InvalidArgument("--scenario needs at least one of A, B, C");
  const std::vector<int> sizes = parse_sizes(a.sizes);
  if (a.emit != "data" && a.emit != "report" && a.emit != "both") {
    throw InvalidArgument("--emit must be data, report or both");
  }
  const bool emit_data = a.emit != "report";
  const bool emit_report = a.emit != "data";
  const int reps = a.reps >= 0 ? a.reps : (emit_report ? 100 : 1);
  if (reps < 1) throw InvalidArgument("--reps must be >= 1");

  json cells = json::array();
  std::ostringstream table;
  table << std::setprecision(10);
  table << "scenario,n,target,bias2,var,mse\n";
  int total_failures = 0;

  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    for (int n : sizes) {
      const std::uint64_t cell_seed =
          derive_seed(a.seed, static_cast<std::uint64_t>(static_cast<int>(scenarios[si])) * 1000u +
                                  static_cast<std::uint64_t>(n));
      const ScenarioConfig base = ScenarioConfig::preset(scenarios[si], n, cell_seed, a.m);
      const std::string name = scenario_name(scenarios[si]);

      if (emit_data) {
        for (int r = 0; r < reps; ++r) {
          ScenarioConfig cfg = base;
          cfg.seed = derive_seed(cell_seed, static_cast<std::uint64_t>(r));
          const SimulatedData sim = gen_scenario(cfg);
          const std::string path =
              a.out + "_" + name + "_n" + std::to_string(n) + "_rep" + std::to_string(r) + ".csv";
          write_dataset(path, sim.data, "xs", "xs");
          out << "data: " << path << " (events " << sim.data.events() << "/" << n << ")\n";
        }
      }
      if (emit_report) {
        FphmcConfig fit_cfg;
        fit_cfg.center_curves = false;
        McOptions opt;
        opt.threads = a.threads;
        const McReport rep = run_mc(base, reps, fit_cfg, opt);
        total_failures += rep.failures;
        table << name << ',' << n << ",b(s)," << rep.cure_function.bias2 << ','
              << rep.cure_function.var << ',' << rep.cure_function.mse << '\n';
        table << name << ',' << n << ",beta(s)," << rep.latency_function.bias2 << ','
              << rep.latency_function.var << ',' << rep.latency_function.mse << '\n';
        json scalars = json::array();
        for (const auto& s : rep.scalars) {
          scalars.push_back({{"name", s.name}, {"truth", s.truth}, {"mean", s.mean}, {"sd", s.sd}});
        }
        cells.push_back({{"scenario", name},
                         {"n", n},
                         {"seed", cell_seed},
                         {"replicates", rep.reps},
                         {"failures", rep.failures},
                         {"cure_fraction", rep.cure_fraction},
                         {"b", error_json(rep.cure_function)},
                         {"beta", error_json(rep.latency_function)},
                         {"scalars", scalars},
                         {"grid", rep.grid},
                         {"mean_b", std::vector<double>(rep.mean_cure_function.begin(),
                                                        rep.mean_cure_function.end())},
                         {"mean_beta", std::vector<double>(rep.mean_latency_function.begin(),
                                                           rep.mean_latency_function.end())},
                         {"time_grid", rep.time_grid},
                         {"mean_baseline", std::vector<double>(rep.mean_baseline.begin(),
                                                               rep.mean_baseline.end())},
                         {"true_baseline", std::vector<double>(rep.true_baseline.begin(),
                                                               rep.true_baseline.end())}});
        out << "scenario " << name << " n=" << n << ": b(s) MSE " << rep.cure_function.mse
            << ", beta(s) MSE " << rep.latency_function.mse << " (" << rep.reps << " fits, "
            << rep.failures << " failed)\n";
      }
    }
  }

  if (emit_report) {
    const std::string csv_path = a.out + "_report.csv";
    const std::string json_path = a.out + "_report.json";
    std::ofstream csv(csv_path);
    if (!csv) throw InvalidArgument("cannot write '" + csv_path + "'");
    csv << table.str();
    std::ofstream js(json_path);
    js << json{{"format", "fphmc-mc-report"}, {"seed", a.seed}, {"reps", reps},
               {"m", a.m}, {"cells", cells}}.dump(2)
       << '\n';
    out << "report: " << csv_path << "\nreport: " << json_path << '\n';
    if (total_failures > 0) out << "excluded replicates: " << total_failures << '\n';
  }
  return kOk;
}

std::vector<double> parse_times(const std::string& text) {
  std::vector<double> times;
  for (const auto& item : split_list(text)) {
    double t = 0.0;
    try {
      std::size_t used = 0;
      t = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument("t");
    } catch (const std::exception&) {
      throw InvalidArgument("--times entries must be numbers, got '" + item + "'");
    }
    if (!(t >= 0.0)) throw InvalidArgument("--times entries must be >= 0");
    times.push_back(t);
  }
  if (times.empty()) throw InvalidArgument("--times needs at least one time");
  return times;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const FitReport report = read_report(a.model);
  const std::vector<double> times = parse_times(a.times);
  const LoadedDataset data = read_dataset(a.data, prediction_spec(report));
  const auto preds = predict(report, data, times);
  std::ofstream file(a.out);
  if (!file) throw InvalidArgument("cannot write '" + a.out + "'");
  file << std::setprecision(17);
  file << "id,time,pi,su,s\n";
  for (const auto& p : preds) {
    file << p.id << ',' << p.time << ',' << p.pi << ',' << p.susceptible_survival << ','
         << p.survival << '\n';
  }
  out << "predictions: " << a.out << " (" << data.ids.size() << " subjects x " << times.size()
      << " times)\n";
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional proportional hazards mixture cure model", "fphmc"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit the model to a wide CSV dataset");
  add_fit_flags(*fit, fit_args);

  FitArgs boot_args;
  int b = 1000;
  double level = 0.95;
  auto* boot = app.add_subcommand("bootstrap", "Fit plus subject-level bootstrap bands");
  add_fit_flags(*boot, boot_args);
  boot->add_option("--b", b, "Bootstrap replicates");
  boot->add_option("--level", level, "Band level")->check(CLI::Range(0.5, 0.999));

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Generate scenario data and Monte-Carlo reports");
  sim->add_option("--scenario", sim_args.scenarios, "A, B, C or a comma list")->required();
  sim->add_option("--n", sim_args.sizes, "Sample size or comma list")->required();
  sim->add_option("--reps", sim_args.reps, "Replicates per cell");
  sim->add_option("--seed", sim_args.seed, "Random seed");
  sim->add_option("--emit", sim_args.emit, "data, report or both");
  sim->add_option("--out", sim_args.out, "Output path prefix");
  sim->add_option("--m", sim_args.m, "Curve grid size")->check(CLI::Range(4, 10000));
  sim->add_option("--threads", sim_args.threads, "Worker threads (0: all cores)");

  PredictArgs pred_args;
  auto* pred = app.add_subcommand("predict", "Per-subject survival predictions from a report");
  pred->add_option("--model", pred_args.model, "Fit report (JSON)")->required();
  pred->add_option("--data", pred_args.data, "Covariate CSV")->required();
  pred->add_option("--times", pred_args.times, "Comma list of times")->required();
  pred->add_option("--out", pred_args.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*fit) return cmd_fit(fit_args, out);
    if (*boot) return cmd_bootstrap(boot_args, b, level, out);
    if (*sim) return cmd_simulate(sim_args, out);
    if (*pred) return cmd_predict(pred_args, out);
  } catch (const NotConverged& e) {
    err << "error: " << e.what() << '\n';
    print_trace(err, e.trace);
    return kNotConverged;
  } catch (const ConvergenceFailure& e) {
    err << "error: " << e.what() << " (after " << e.iterations() << " iterations)\n";
    return kNotConverged;
  } catch (const BootstrapUnstable& e) {
    err << "error: " << e.what() << '\n';
    return kBootstrapUnstable;
  } catch (const InsufficientReplicates& e) {
    err << "error: " << e.what() << '\n';
    return kBootstrapUnstable;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DegenerateRiskSet& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace fphmc::cli
