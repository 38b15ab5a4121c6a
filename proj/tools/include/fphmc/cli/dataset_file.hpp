#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fphmc/dataset.hpp"
#include "fphmc/error.hpp"

namespace fphmc::cli {

// Malformed input file; the message names the row and/or column.
class DatasetFileError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line;  // 1-based file line of each row

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::filesystem::path& path);

struct DatasetSpec {
  std::string id_col = "id";
  std::string time_col = "time";
  std::string event_col = "event";
  std::vector<std::string> cure_scalars;
  std::vector<std::string> latency_scalars;
  std::optional<std::string> cure_func;     // column prefix
  std::optional<std::string> latency_func;
  bool require_outcome = true;  // prediction inputs carry covariates only
};

struct LoadedDataset {
  SurvivalDataset data;
  std::vector<std::string> ids;
};

// Columns <prefix>_1 ... <prefix>_m holding a curve on the equally spaced grid.
std::vector<int> functional_columns(const CsvTable& table, const std::string& prefix);

LoadedDataset extract_dataset(const CsvTable& table, const DatasetSpec& spec);
LoadedDataset read_dataset(const std::filesystem::path& path, const DatasetSpec& spec);

// Wide CSV: id,time,event,<cure scalars>,<latency scalars not already written>,
// <prefix>_1..m for each distinct curve.
void write_dataset(const std::filesystem::path& path, const SurvivalDataset& data,
                   const std::string& cure_prefix, const std::string& latency_prefix,
                   const std::vector<std::string>& ids = {});

std::vector<std::string> split_list(const std::string& text);

}  // namespace fphmc::cli
