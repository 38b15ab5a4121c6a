#include "fphmc/cli/dataset_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "fphmc/basis.hpp"

namespace fphmc::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const CsvTable& t, std::size_t r, const std::string& col) {
  return "line " + std::to_string(t.line[r]) + ", column '" + col + "'";
}

double parse_number(const CsvTable& t, std::size_t r, int c) {
  const std::string& text = t.rows[r][static_cast<std::size_t>(c)];
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DatasetFileError(where(t, r, t.header[static_cast<std::size_t>(c)]) +
                           ": expected a finite number, got '" + text + "'");
  }
  return v;
}

int require_column(const CsvTable& t, const std::string& name, const std::string& role) {
  const int c = t.column(name);
  if (c < 0) throw DatasetFileError("missing " + role + " column '" + name + "'");
  return c;
}

Eigen::MatrixXd read_matrix(const CsvTable& t, const std::vector<int>& cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_number(t, r, cols[c]);
    }
  }
  return m;
}

FunctionalCovariate read_curve(const CsvTable& t, const std::string& prefix) {
  const std::vector<int> cols = functional_columns(t, prefix);
  Grid grid = make_grid(static_cast<int>(cols.size()));
  return FunctionalCovariate(std::move(grid), read_matrix(t, cols));
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty() || text == "none") return out;
  for (auto& f : split_fields(text)) {
    if (!f.empty()) out.push_back(f);
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetFileError("cannot open data file '" + path.string() + "'");
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c].empty()) {
          throw DatasetFileError("header column " + std::to_string(c + 1) + " is empty");
        }
        if (std::find(t.header.begin(), t.header.begin() + static_cast<long>(c),
                      t.header[c]) != t.header.begin() + static_cast<long>(c)) {
          throw DatasetFileError("duplicate header column '" + t.header[c] + "'");
        }
      }
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DatasetFileError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " fields, found " +
                             std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line.push_back(lineno);
  }
  if (t.header.empty()) throw DatasetFileError("data file '" + path.string() + "' is empty");
  return t;
}

std::vector<int> functional_columns(const CsvTable& t, const std::string& prefix) {
  std::map<int, int> by_index;
  const std::string stem = prefix + "_";
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h.rfind(stem, 0) != 0) continue;
    const std::string tail = h.substr(stem.size());
    int k = 0;
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
    if (tail.empty() || ec != std::errc() || ptr != tail.data() + tail.size()) continue;
    by_index[k] = static_cast<int>(c);
  }
  if (by_index.empty()) {
    throw DatasetFileError("no functional columns with prefix '" + prefix + "_'");
  }
  std::vector<int> cols;
  int expected = 1;
  for (const auto& [k, c] : by_index) {
    if (k != expected) {
      throw DatasetFileError("functional columns for '" + prefix + "' are not contiguous: missing '" +
                             stem + std::to_string(expected) + "'");
    }
    cols.push_back(c);
    ++expected;
  }
  if (cols.size() < 4) {
    throw DatasetFileError("functional covariate '" + prefix + "' needs at least 4 grid columns");
  }
  return cols;
}

LoadedDataset extract_dataset(const CsvTable& t, const DatasetSpec& spec) {
  LoadedDataset out;
  SurvivalDataset& d = out.data;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw DatasetFileError("data file has a header but no rows");

  const int id_c = t.column(spec.id_col);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.ids.push_back(id_c >= 0 ? t.rows[r][static_cast<std::size_t>(id_c)]
                                : std::to_string(r + 1));
  }

  d.time = Eigen::VectorXd::Ones(n);
  d.event = Eigen::VectorXi::Zero(n);
  if (spec.require_outcome) {
    const int tc = require_column(t, spec.time_col, "time");
    const int ec = require_column(t, spec.event_col, "event");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double time = parse_number(t, r, tc);
      if (!(time > 0.0)) {
        throw DatasetFileError(where(t, r, spec.time_col) + ": time must be > 0, got " +
                               t.rows[r][static_cast<std::size_t>(tc)]);
      }
      const double ev = parse_number(t, r, ec);
      if (ev != 0.0 && ev != 1.0) {
        throw DatasetFileError(where(t, r, spec.event_col) + ": event must be 0 or 1, got " +
                               t.rows[r][static_cast<std::size_t>(ec)]);
      }
      d.time[static_cast<Eigen::Index>(r)] = time;
      d.event[static_cast<Eigen::Index>(r)] = static_cast<int>(ev);
    }
  }

  std::vector<int> zc, xc;
  for (const auto& name : spec.cure_scalars) zc.push_back(require_column(t, name, "cure scalar"));
  for (const auto& name : spec.latency_scalars) xc.push_back(require_column(t, name, "latency scalar"));
  d.cure_scalars = read_matrix(t, zc);
  d.latency_scalars = read_matrix(t, xc);
  d.cure_names = spec.cure_scalars;
  d.latency_names = spec.latency_scalars;
  if (spec.cure_func) d.cure_curve = read_curve(t, *spec.cure_func);
  if (spec.latency_func) {
    if (spec.cure_func && *spec.cure_func == *spec.latency_func) {
      d.latency_curve = d.cure_curve;
    } else {
      d.latency_curve = read_curve(t, *spec.latency_func);
    }
  }
  if (spec.require_outcome && d.events() == 0) {
    throw DatasetFileError("column '" + spec.event_col + "' has no events (all zero)");
  }
  return out;
}

LoadedDataset read_dataset(const std::filesystem::path& path, const DatasetSpec& spec) {
  return extract_dataset(read_csv(path), spec);
}

void write_dataset(const std::filesystem::path& path, const SurvivalDataset& d,
                   const std::string& cure_prefix, const std::string& latency_prefix,
                   const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << std::setprecision(17);

  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> scalar_cols;
  std::vector<Eigen::Index> scalar_idx;
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < d.cure_scalars.cols(); ++c) {
    names.push_back(d.cure_names[static_cast<std::size_t>(c)]);
    scalar_cols.push_back({names.back(), &d.cure_scalars});
    scalar_idx.push_back(c);
  }
  for (Eigen::Index c = 0; c < d.latency_scalars.cols(); ++c) {
    const std::string& name = d.latency_names[static_cast<std::size_t>(c)];
    if (std::find(names.begin(), names.end(), name) != names.end()) continue;
    names.push_back(name);
    scalar_cols.push_back({name, &d.latency_scalars});
    scalar_idx.push_back(c);
  }
  std::vector<std::pair<std::string, const FunctionalCovariate*>> curves;
  if (d.cure_curve) curves.push_back({cure_prefix, &*d.cure_curve});
  if (d.latency_curve && !(d.cure_curve && cure_prefix == latency_prefix)) {
    curves.push_back({latency_prefix, &*d.latency_curve});
  }

  out << "id,time,event";
  for (const auto& [name, m] : scalar_cols) out << ',' << name;
  for (const auto& [prefix, c] : curves) {
    for (Eigen::Index j = 0; j < c->values.cols(); ++j) out << ',' << prefix << '_' << j + 1;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    out << (ids.empty() ? std::to_string(i + 1) : ids[static_cast<std::size_t>(i)]) << ','
        << d.time[i] << ',' << d.event[i];
    for (std::size_t c = 0; c < scalar_cols.size(); ++c) {
      out << ',' << (*scalar_cols[c].second)(i, scalar_idx[c]);
    }
    for (const auto& [prefix, c] : curves) {
      for (Eigen::Index j = 0; j < c->values.cols(); ++j) out << ',' << c->values(i, j);
    }
    out << '\n';
  }
}

}  // namespace fphmc::cli
