#include "fphmc/cli/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace fphmc::cli {

using nlohmann::json;

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> exp_all(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::exp(x));
  return out;
}

// JSON has no infinities; they travel as null
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

CurveTable curve_table(const BasisMatrix& basis, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& center, double lambda, const std::string& prefix) {
  CurveTable c;
  c.prefix = prefix;
  c.grid_size = static_cast<int>(basis.points.size());
  c.num_basis = basis.size();
  c.degree = basis.degree;
  c.lambda = lambda;
  c.theta = to_vec(theta);
  c.center = to_vec(center);
  c.grid = basis.points;
  c.values = to_vec(basis.values * theta);
  return c;
}

json coef_json(const CoefficientTable& t, const char* ratio_name) {
  json j{{"names", t.names}, {"coef", t.coef}, {ratio_name, exp_all(t.coef)}};
  if (!t.lower.empty()) {
    j["lower"] = t.lower;
    j["upper"] = t.upper;
    j[std::string(ratio_name) + "_lower"] = exp_all(t.lower);
    j[std::string(ratio_name) + "_upper"] = exp_all(t.upper);
  }
  return j;
}

CoefficientTable coef_from(const json& j) {
  CoefficientTable t;
  t.names = j.at("names").get<std::vector<std::string>>();
  t.coef = j.at("coef").get<std::vector<double>>();
  if (j.contains("lower")) {
    t.lower = j.at("lower").get<std::vector<double>>();
    t.upper = j.at("upper").get<std::vector<double>>();
  }
  return t;
}

json curve_json(const CurveTable& c) {
  json j{{"prefix", c.prefix}, {"grid_size", c.grid_size}, {"num_basis", c.num_basis},
         {"degree", c.degree}, {"lambda", c.lambda}, {"theta", c.theta},
         {"center", c.center}, {"grid", c.grid}, {"values", c.values}};
  if (!c.lower.empty()) {
    j["lower"] = c.lower;
    j["upper"] = c.upper;
  }
  return j;
}

CurveTable curve_from(const json& j) {
  CurveTable c;
  c.prefix = j.at("prefix").get<std::string>();
  c.grid_size = j.at("grid_size").get<int>();
  c.num_basis = j.at("num_basis").get<int>();
  c.degree = j.at("degree").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.theta = j.at("theta").get<std::vector<double>>();
  c.center = j.at("center").get<std::vector<double>>();
  c.grid = j.at("grid").get<std::vector<double>>();
  c.values = j.at("values").get<std::vector<double>>();
  if (j.contains("lower")) {
    c.lower = j.at("lower").get<std::vector<double>>();
    c.upper = j.at("upper").get<std::vector<double>>();
  }
  return c;
}

// Design row block for a curve term on new data.
Eigen::MatrixXd curve_design(const CurveTable& c, const std::optional<FunctionalCovariate>& curve) {
  if (!curve) throw DatasetFileError("data lacks functional columns '" + c.prefix + "_*'");
  if (static_cast<int>(curve->grid.size()) != c.grid_size) {
    throw DatasetFileError("functional covariate '" + c.prefix + "' has " +
                           std::to_string(curve->grid.size()) + " grid columns, model expects " +
                           std::to_string(c.grid_size));
  }
  const BasisMatrix basis = bspline_basis(curve->grid, c.num_basis, c.degree);
  const Eigen::VectorXd qw = quadrature_weights(curve->grid);
  if (c.center.empty()) return functional_design(*curve, basis, qw).V;
  return functional_design(curve->centered(to_eigen(c.center)), basis, qw).V;
}

}  // namespace

FitReport make_report(const FphmcFit& fit, const SurvivalDataset& data,
                      const DatasetSpec& spec, json config_echo) {
  FitReport r;
  r.config = std::move(config_echo);
  r.converged = fit.converged;
  r.iterations = fit.iterations;
  r.force_susceptible = fit.force_susceptible;

  r.cure.names.push_back("(Intercept)");
  for (const auto& n : data.cure_names) r.cure.names.push_back(n);
  r.cure.coef = to_vec(fit.incidence.b);
  r.latency.names = data.latency_names;
  r.latency.coef = to_vec(fit.latency.beta);
  if (fit.cure_basis) {
    r.cure_function = curve_table(*fit.cure_basis, fit.incidence.theta_b, fit.cure_center,
                                  fit.incidence.lambda_b, spec.cure_func.value_or("cure"));
  }
  if (fit.latency_basis) {
    r.latency_function = curve_table(*fit.latency_basis, fit.latency.theta_beta,
                                     fit.latency_center, fit.latency.lambda_beta,
                                     spec.latency_func.value_or("latency"));
  }
  r.baseline = fit.baseline;
  r.trace = fit.trace;

  if (fit.force_susceptible) {
    r.mean_susceptibility = 1.0;
  } else {
    // π̂ on the fitted data, using the stored (already centered) designs
    Eigen::MatrixXd z = with_intercept(data.cure_scalars);
    Eigen::MatrixXd v(data.size(), 0);
    if (r.cure_function) v = curve_design(*r.cure_function, data.cure_curve);
    r.mean_susceptibility = predict_pi(fit.incidence, z, v).mean();
  }
  return r;
}

void attach_bands(FitReport& r, const BootstrapResult& result, const BootstrapBands& bands) {
  const std::size_t pz = r.cure.coef.size();
  const std::size_t px = r.latency.coef.size();
  r.cure.lower = to_vec(bands.cure_coef.lower.head(static_cast<Eigen::Index>(pz)));
  r.cure.upper = to_vec(bands.cure_coef.upper.head(static_cast<Eigen::Index>(pz)));
  r.latency.lower = to_vec(bands.latency_coef.lower.head(static_cast<Eigen::Index>(px)));
  r.latency.upper = to_vec(bands.latency_coef.upper.head(static_cast<Eigen::Index>(px)));
  if (r.cure_function) {
    r.cure_function->lower = to_vec(bands.cure_function.lower);
    r.cure_function->upper = to_vec(bands.cure_function.upper);
  }
  if (r.latency_function) {
    r.latency_function->lower = to_vec(bands.latency_function.lower);
    r.latency_function->upper = to_vec(bands.latency_function.upper);
  }
  BootstrapInfo info;
  info.requested = result.requested;
  info.failures = result.failures();
  info.seed = result.seed;
  info.level = bands.level;
  info.time_grid = result.time_grid;
  info.baseline_lower = to_vec(bands.baseline.lower);
  info.baseline_upper = to_vec(bands.baseline.upper);
  r.bootstrap = std::move(info);
}

json to_json(const FitReport& r) {
  json j;
  j["format"] = "fphmc-fit-report";
  j["version"] = 1;
  j["config"] = r.config;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["force_susceptible"] = r.force_susceptible;
  j["mean_susceptibility"] = r.mean_susceptibility;
  j["cure"] = coef_json(r.cure, "odds_ratio");
  j["latency"] = coef_json(r.latency, "hazard_ratio");
  if (r.cure_function) j["cure"]["function"] = curve_json(*r.cure_function);
  if (r.latency_function) j["latency"]["function"] = curve_json(*r.latency_function);
  j["baseline"] = {{"times", r.baseline.times},
                   {"increments", r.baseline.increments},
                   {"cumhaz", r.baseline.cumhaz},
                   {"survival", r.baseline.values},
                   {"tail_time", r.baseline.tail_time}};
  json trace = json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"loglik", number(t.loglik)},
                     {"penalized_loglik", number(t.penalized_loglik)},
                     {"max_change", number(t.max_change)},
                     {"lambda_cure", t.lambda_cure},
                     {"lambda_latency", t.lambda_latency}});
  }
  j["trace"] = std::move(trace);
  if (r.bootstrap) {
    const auto& b = *r.bootstrap;
    j["bootstrap"] = {{"replicates", b.requested}, {"failures", b.failures},
                      {"seed", b.seed}, {"level", b.level}, {"time_grid", b.time_grid},
                      {"baseline_lower", b.baseline_lower},
                      {"baseline_upper", b.baseline_upper}};
  }
  return j;
}

FitReport report_from_json(const json& j) {
  if (j.value("format", "") != "fphmc-fit-report") {
    throw DatasetFileError("not an fphmc fit report");
  }
  FitReport r;
  r.config = j.at("config");
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
  r.force_susceptible = j.at("force_susceptible").get<bool>();
  r.mean_susceptibility = j.at("mean_susceptibility").get<double>();
  r.cure = coef_from(j.at("cure"));
  r.latency = coef_from(j.at("latency"));
  if (j.at("cure").contains("function")) r.cure_function = curve_from(j["cure"]["function"]);
  if (j.at("latency").contains("function")) {
    r.latency_function = curve_from(j["latency"]["function"]);
  }
  const json& b = j.at("baseline");
  r.baseline.times = b.at("times").get<std::vector<double>>();
  r.baseline.increments = b.at("increments").get<std::vector<double>>();
  r.baseline.cumhaz = b.at("cumhaz").get<std::vector<double>>();
  r.baseline.values = b.at("survival").get<std::vector<double>>();
  r.baseline.tail_time = b.at("tail_time").get<double>();
  for (const auto& t : j.at("trace")) {
    TraceEntry e;
    e.iteration = t.at("iteration").get<int>();
    e.loglik = number(t.at("loglik"));
    e.penalized_loglik = number(t.at("penalized_loglik"));
    e.max_change = number(t.at("max_change"));
    e.lambda_cure = t.at("lambda_cure").get<double>();
    e.lambda_latency = t.at("lambda_latency").get<double>();
    r.trace.push_back(e);
  }
  if (j.contains("bootstrap")) {
    const json& bj = j["bootstrap"];
    BootstrapInfo info;
    info.requested = bj.at("replicates").get<int>();
    info.failures = bj.at("failures").get<int>();
    info.seed = bj.at("seed").get<std::uint64_t>();
    info.level = bj.at("level").get<double>();
    info.time_grid = bj.at("time_grid").get<std::vector<double>>();
    info.baseline_lower = bj.at("baseline_lower").get<std::vector<double>>();
    info.baseline_upper = bj.at("baseline_upper").get<std::vector<double>>();
    r.bootstrap = std::move(info);
  }
  return r;
}

void write_report(const std::filesystem::path& path, const FitReport& report) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write report '" + path.string() + "'");
  out << to_json(report).dump(2) << '\n';
}

FitReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetFileError("cannot open model report '" + path.string() + "'");
  try {
    return report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DatasetFileError("malformed model report '" + path.string() + "': " + e.what());
  }
}

std::vector<std::filesystem::path> write_curve_tables(const std::filesystem::path& report_path,
                                                      const FitReport& r) {
  std::vector<std::filesystem::path> written;
  auto stem = report_path;
  stem.replace_extension();
  const auto curves_path = std::filesystem::path(stem.string() + "_curves.csv");
  const auto baseline_path = std::filesystem::path(stem.string() + "_baseline.csv");

  {
    std::ofstream out(curves_path);
    out << std::setprecision(17);
    out << "function,s,estimate,lower,upper\n";
    auto emit = [&](const char* name, const CurveTable& c) {
      for (std::size_t j = 0; j < c.grid.size(); ++j) {
        out << name << ',' << c.grid[j] << ',' << c.values[j] << ',';
        if (!c.lower.empty()) out << c.lower[j] << ',' << c.upper[j];
        else out << ',';
        out << '\n';
      }
    };
    if (r.cure_function) emit("cure", *r.cure_function);
    if (r.latency_function) emit("latency", *r.latency_function);
    written.push_back(curves_path);
  }
  {
    std::ofstream out(baseline_path);
    out << std::setprecision(17);
    out << "time,survival,cumulative_hazard\n";
    for (std::size_t j = 0; j < r.baseline.times.size(); ++j) {
      out << r.baseline.times[j] << ',' << r.baseline.values[j] << ',' << r.baseline.cumhaz[j]
          << '\n';
    }
    written.push_back(baseline_path);
  }
  return written;
}

DatasetSpec prediction_spec(const FitReport& r) {
  DatasetSpec spec;
  spec.require_outcome = false;
  spec.cure_scalars.assign(r.cure.names.begin() + 1, r.cure.names.end());
  spec.latency_scalars = r.latency.names;
  if (r.cure_function) spec.cure_func = r.cure_function->prefix;
  if (r.latency_function) spec.latency_func = r.latency_function->prefix;
  if (r.config.contains("id")) spec.id_col = r.config["id"].get<std::string>();
  return spec;
}

std::vector<Prediction> predict(const FitReport& r, const LoadedDataset& loaded,
                                const std::vector<double>& times) {
  const SurvivalDataset& d = loaded.data;
  const Eigen::Index n = d.size();
  if (d.cure_scalars.cols() + 1 != static_cast<Eigen::Index>(r.cure.coef.size()) ||
      d.latency_scalars.cols() != static_cast<Eigen::Index>(r.latency.coef.size())) {
    throw DatasetFileError("data columns do not match the model's scalar covariates");
  }

  IncidenceFit inc;
  inc.b = to_eigen(r.cure.coef);
  Eigen::MatrixXd vz(n, 0);
  if (r.cure_function) {
    vz = curve_design(*r.cure_function, d.cure_curve);
    inc.theta_b = to_eigen(r.cure_function->theta);
  }
  LatencyFit lat;
  lat.beta = to_eigen(r.latency.coef);
  Eigen::MatrixXd vx(n, 0);
  if (r.latency_function) {
    vx = curve_design(*r.latency_function, d.latency_curve);
    lat.theta_beta = to_eigen(r.latency_function->theta);
  }
  lat.gamma.resize(lat.beta.size() + lat.theta_beta.size());
  lat.gamma << lat.beta, lat.theta_beta;

  const Eigen::VectorXd pi = r.force_susceptible
                                 ? Eigen::VectorXd::Ones(n)
                                 : predict_pi(inc, with_intercept(d.cure_scalars), vz);
  std::vector<Prediction> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = d.latency_scalars.row(i).transpose();
    const Eigen::VectorXd v = vx.row(i).transpose();
    for (double t : times) {
      Prediction p;
      p.id = loaded.ids[static_cast<std::size_t>(i)];
      p.time = t;
      p.pi = pi[i];
      p.susceptible_survival = predict_survival(lat, r.baseline, x, v, t);
      p.survival = 1.0 - p.pi + p.pi * p.susceptible_survival;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace fphmc::cli
