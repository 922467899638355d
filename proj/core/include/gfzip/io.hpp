#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gfzip/dataset.hpp"
#include "gfzip/gibbs.hpp"
#include "gfzip/model.hpp"
#include "gfzip/simulation.hpp"

namespace gfzip {

/// 17 significant digits: lossless double round-trips through text.
std::string format_double(double value);

std::uint64_t fnv1a(const std::string& text);

/// "# gfzip <version> seed=<seed> config=<hex hash of config_text>"
std::string csv_manifest_line(std::uint64_t seed, const std::string& config_text);

/// Canonical text form of a ModelConfig, hashed into manifest lines.
std::string config_text(const ModelConfig& config);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& manifest_line);

  void header(const std::vector<std::string>& names);
  CsvWriter& field(const std::string& value);
  CsvWriter& field(const char* value);
  CsvWriter& field(double value);
  CsvWriter& field(int value);
  CsvWriter& field(std::int64_t value);
  CsvWriter& field(std::uint64_t value);
  CsvWriter& field(const std::optional<double>& value);
  void end_row();

 private:
  void separator();
  std::ofstream out_;
  bool row_open_ = false;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// Reads a CSV with a header row, skipping leading '#' manifest lines.
/// Malformed rows are reported with their line number.
CsvTable read_csv(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix,
                      const std::vector<std::string>& columns, const std::string& manifest_line);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                std::vector<std::string>* columns = nullptr);

/// Dataset CSV: one column per dimension (group indices) followed by the
/// covariate columns; n_dims declares the split.
GroupedDataset read_dataset_csv(const std::filesystem::path& path, const GroupingScheme& scheme,
                                int n_dims);
void write_dataset_csv(const std::filesystem::path& path, const GroupedDataset& data,
                       const std::string& manifest_line);

/// Long-format truth file: field,row,col,value over beta/lambda/z/y_star.
void write_truth_csv(const std::filesystem::path& path, const SimTruth& truth,
                     const std::string& manifest_line);
SimTruth read_truth_csv(const std::filesystem::path& path);

void write_key_values(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& entries);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// One chain's raw (working-parameter) draws: one numeric matrix file per
/// parameter group, rows = retained iterations, plus a manifest.
void save_chain_draws(const std::filesystem::path& dir, const PosteriorDraws& draws,
                      const ModelConfig& config, const GroupedDataset& data,
                      const ChainDiagnostics* diagnostics = nullptr);

struct ChainFiles {
  PosteriorDraws draws;
  std::map<std::string, std::string> manifest;
};

ChainFiles load_chain_draws(const std::filesystem::path& dir);

}  // namespace gfzip
