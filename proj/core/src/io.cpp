#include "gfzip/io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "gfzip/version.hpp"

namespace gfzip {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string csv_manifest_line(std::uint64_t seed, const std::string& config_text) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(config_text)));
  std::ostringstream out;
  out << "# gfzip " << kVersion << " seed=" << seed << " config=" << hash;
  return out.str();
}

std::string config_text(const ModelConfig& config) {
  std::ostringstream out;
  out << "k=" << config.n_factors << ";r=" << format_double(config.nb_r)
      << ";iters=" << config.n_iter << ";burnin=" << config.n_burnin
      << ";thin=" << config.thin << ";seed=" << config.seed;
  const auto append = [&out](const char* name, const auto& m) {
    out << ';' << name << '=';
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (i) out << ',';
      out << format_double(m(i));
    }
  };
  append("b0", config.prior_b0);
  append("B0", config.prior_B0.reshaped());
  append("a", config.prior_a);
  append("b", config.prior_b);
  return out.str();
}

CsvWriter::CsvWriter(const fs::path& path, const std::string& manifest_line)
    : out_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (!manifest_line.empty()) out_ << manifest_line << '\n';
}

void CsvWriter::header(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out_ << ',';
    out_ << names[i];
  }
  out_ << '\n';
}

void CsvWriter::separator() {
  if (row_open_) out_ << ',';
  row_open_ = true;
}

CsvWriter& CsvWriter::field(const std::string& value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(const char* value) { return field(std::string(value)); }

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(int value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(const std::optional<double>& value) {
  if (value) return field(*value);
  separator();
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_open_ = false;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    fields.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                 : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

double parse_double(const std::string& text, const fs::path& path, int line_number) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                             ": not a number: '" + text + "'");
  }
  return value;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  int line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.columns = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.columns.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                               ": expected " + std::to_string(table.columns.size()) +
                               " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw std::runtime_error(path.string() + ": missing header row");
  return table;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& matrix,
                      const std::vector<std::string>& columns,
                      const std::string& manifest_line) {
  if (!columns.empty() && static_cast<Eigen::Index>(columns.size()) != matrix.cols()) {
    throw std::invalid_argument("column name count mismatch for " + path.string());
  }
  CsvWriter csv(path, manifest_line);
  if (!columns.empty()) {
    csv.header(columns);
  } else {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(matrix.cols()));
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) names.push_back("c" + std::to_string(c + 1));
    csv.header(names);
  }
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) csv.field(matrix(r, c));
    csv.end_row();
  }
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path, std::vector<std::string>* columns) {
  const CsvTable table = read_csv(path);
  if (columns) *columns = table.columns;
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(table.rows.size()),
                         static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double(table.rows[r][c], path, static_cast<int>(r) + 3);
    }
  }
  return matrix;
}

GroupedDataset read_dataset_csv(const fs::path& path, const GroupingScheme& scheme,
                                int n_dims) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  int line_number = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_csv_line(line);
    if (columns.empty()) {
      columns = std::move(fields);
      if (n_dims < 1 || n_dims >= static_cast<int>(columns.size())) {
        throw std::runtime_error(path.string() +
                                 ": dimension count must leave at least one covariate column");
      }
      continue;
    }
    if (fields.size() != columns.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_number) +
                               ": expected " + std::to_string(columns.size()) +
                               " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
    rows.back().push_back(std::to_string(line_number));  // carried for error reporting
  }
  if (columns.empty()) throw std::runtime_error(path.string() + ": missing header row");
  if (rows.empty()) throw std::runtime_error(path.string() + ": no data rows");

  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(columns.size()) - n_dims;
  Eigen::MatrixXi groups(n, n_dims);
  Eigen::MatrixXd covariates(n, p);
  for (int i = 0; i < n; ++i) {
    const int source_line = std::stoi(rows[static_cast<std::size_t>(i)].back());
    for (int j = 0; j < n_dims; ++j) {
      const std::string& cell = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      int value = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(source_line) +
                                 ": group index must be an integer, found '" + cell + "'");
      }
      if (value < 0 || value >= scheme.group_count()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(source_line) +
                                 ": group index " + std::to_string(value) +
                                 " outside [0, " + std::to_string(scheme.group_count()) + ")");
      }
      groups(i, j) = value;
    }
    for (int c = 0; c < p; ++c) {
      covariates(i, c) =
          parse_double(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(n_dims + c)],
                       path, source_line);
    }
  }
  std::vector<std::string> dim_names(columns.begin(), columns.begin() + n_dims);
  std::vector<std::string> covariate_names(columns.begin() + n_dims, columns.end());
  return GroupedDataset(std::move(groups), std::move(covariates), scheme,
                        std::move(dim_names), std::move(covariate_names));
}

void write_dataset_csv(const fs::path& path, const GroupedDataset& data,
                       const std::string& manifest_line) {
  CsvWriter csv(path, manifest_line);
  std::vector<std::string> names = data.dim_names();
  names.insert(names.end(), data.covariate_names().begin(), data.covariate_names().end());
  csv.header(names);
  for (int i = 0; i < data.n_individuals(); ++i) {
    for (int j = 0; j < data.n_dims(); ++j) csv.field(data.groups()(i, j));
    for (int c = 0; c < data.n_covariates(); ++c) csv.field(data.covariates()(i, c));
    csv.end_row();
  }
}

void write_truth_csv(const fs::path& path, const SimTruth& truth,
                     const std::string& manifest_line) {
  CsvWriter csv(path, manifest_line);
  csv.header({"field", "row", "col", "value"});
  const auto dump = [&csv](const char* field, const auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        csv.field(field)
            .field(static_cast<int>(r))
            .field(static_cast<int>(c))
            .field(static_cast<double>(m(r, c)))
            .end_row();
      }
    }
  };
  csv.field("setting").field(0).field(0).field(static_cast<double>(truth.setting)).end_row();
  dump("beta", truth.beta);
  dump("lambda", truth.lambda);
  dump("z", truth.z);
  dump("y_star", truth.y_star);
}

SimTruth read_truth_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const int field_col = table.column("field");
  const int row_col = table.column("row");
  const int col_col = table.column("col");
  const int value_col = table.column("value");
  if (field_col < 0 || row_col < 0 || col_col < 0 || value_col < 0) {
    throw std::runtime_error(path.string() + ": not a truth file");
  }
  const auto to_index = [](const std::string& s) { return std::stoi(s); };
  Eigen::Index beta_rows = 0, beta_cols = 0, lambda_rows = 0, lambda_cols = 0, n = 0,
               n_dims = 0;
  for (const auto& row : table.rows) {
    const std::string& field = row[static_cast<std::size_t>(field_col)];
    const Eigen::Index r = to_index(row[static_cast<std::size_t>(row_col)]) + 1;
    const Eigen::Index c = to_index(row[static_cast<std::size_t>(col_col)]) + 1;
    if (field == "beta") {
      beta_rows = std::max(beta_rows, r);
      beta_cols = std::max(beta_cols, c);
    } else if (field == "lambda") {
      lambda_rows = std::max(lambda_rows, r);
      lambda_cols = std::max(lambda_cols, c);
    } else if (field == "z" || field == "y_star") {
      n = std::max(n, r);
      n_dims = std::max(n_dims, c);
    }
  }
  SimTruth truth;
  truth.beta.setZero(beta_rows, beta_cols);
  truth.lambda.setZero(lambda_rows, lambda_cols);
  truth.z.setZero(n, n_dims);
  truth.y_star.setZero(n, n_dims);
  for (std::size_t idx = 0; idx < table.rows.size(); ++idx) {
    const auto& row = table.rows[idx];
    const std::string& field = row[static_cast<std::size_t>(field_col)];
    const Eigen::Index r = to_index(row[static_cast<std::size_t>(row_col)]);
    const Eigen::Index c = to_index(row[static_cast<std::size_t>(col_col)]);
    const double value =
        parse_double(row[static_cast<std::size_t>(value_col)], path, static_cast<int>(idx) + 3);
    if (field == "setting") {
      truth.setting = static_cast<int>(value);
    } else if (field == "beta") {
      truth.beta(r, c) = value;
    } else if (field == "lambda") {
      truth.lambda(r, c) = value;
    } else if (field == "z") {
      truth.z(r, c) = static_cast<std::uint8_t>(value);
    } else if (field == "y_star") {
      truth.y_star(r, c) = static_cast<std::int64_t>(value);
    } else {
      throw std::runtime_error(path.string() + ": unknown truth field '" + field + "'");
    }
  }
  return truth;
}

void write_key_values(const fs::path& path,
                      const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
      while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    };
    trim(key);
    trim(value);
    entries[key] = value;
  }
  return entries;
}

namespace {

std::vector<std::string> stacked_names(const char* prefix, int n_dims, int inner,
                                       const char* inner_prefix) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(2 * n_dims * inner));
  for (int h = 1; h <= 2; ++h) {
    for (int j = 0; j < n_dims; ++j) {
      for (int c = 0; c < inner; ++c) {
        names.push_back(std::string(prefix) + "_" + std::to_string(h) + "_" +
                        std::to_string(j + 1) + "_" + inner_prefix + std::to_string(c + 1));
      }
    }
  }
  return names;
}

Eigen::MatrixXd flatten_draws(const std::vector<Eigen::MatrixXd>& draws) {
  if (draws.empty()) return {};
  const Eigen::Index cells = draws.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(draws.size()), cells);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const auto& m = draws[d];
    Eigen::Index col = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out(static_cast<Eigen::Index>(d), col++) = m(r, c);
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> unflatten_draws(const Eigen::MatrixXd& flat, Eigen::Index rows,
                                             Eigen::Index cols) {
  std::vector<Eigen::MatrixXd> draws;
  draws.reserve(static_cast<std::size_t>(flat.rows()));
  for (Eigen::Index d = 0; d < flat.rows(); ++d) {
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index col = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat(d, col++);
    }
    draws.push_back(std::move(m));
  }
  return draws;
}

}  // namespace

void save_chain_draws(const fs::path& dir, const PosteriorDraws& draws,
                      const ModelConfig& config, const GroupedDataset& data,
                      const ChainDiagnostics* diagnostics) {
  fs::create_directories(dir);
  const std::string manifest = csv_manifest_line(config.seed, config_text(config));
  const int n_dims = data.n_dims();
  const int p = data.n_covariates();
  const int k = config.n_factors;

  write_matrix_csv(dir / "beta.csv", flatten_draws(draws.beta),
                   stacked_names("beta", n_dims, p, "p"), manifest);
  if (k > 0) {
    write_matrix_csv(dir / "lambda_star.csv", flatten_draws(draws.lambda_star),
                     stacked_names("lambda_star", n_dims, k, "k"), manifest);
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(draws.phi.size()), k);
    for (std::size_t d = 0; d < draws.phi.size(); ++d) phi.row(static_cast<Eigen::Index>(d)) = draws.phi[d];
    std::vector<std::string> phi_names;
    for (int c = 0; c < k; ++c) phi_names.push_back("phi_k" + std::to_string(c + 1));
    write_matrix_csv(dir / "phi.csv", phi, phi_names, manifest);
    if (!draws.u_star.empty()) {
      write_matrix_csv(dir / "u_star.csv", flatten_draws(draws.u_star), {}, manifest);
    }
  }
  if (!draws.z.empty()) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(draws.z.size()),
                      static_cast<Eigen::Index>(data.n_individuals()) * n_dims);
    for (std::size_t d = 0; d < draws.z.size(); ++d) {
      Eigen::Index col = 0;
      for (int i = 0; i < data.n_individuals(); ++i) {
        for (int j = 0; j < n_dims; ++j) z(static_cast<Eigen::Index>(d), col++) = draws.z[d](i, j);
      }
    }
    write_matrix_csv(dir / "z.csv", z, {}, manifest);
  }
  write_matrix_csv(dir / "pi_hat.csv", draws.pi_hat, data.dim_names(), manifest);

  std::vector<std::pair<std::string, std::string>> meta{
      {"version", kVersion},
      {"seed", std::to_string(config.seed)},
      {"config_hash", manifest.substr(manifest.rfind('=') + 1)},
      {"n", std::to_string(data.n_individuals())},
      {"n_dims", std::to_string(n_dims)},
      {"n_covariates", std::to_string(p)},
      {"n_factors", std::to_string(k)},
      {"n_retained", std::to_string(draws.n_retained)},
      {"nb_r", format_double(config.nb_r)},
      {"n_iter", std::to_string(config.n_iter)},
      {"n_burnin", std::to_string(config.n_burnin)},
      {"thin", std::to_string(config.thin)},
      {"scheme", data.scheme().str()},
      {"retained_u", draws.u_star.empty() ? "0" : "1"},
      {"retained_z", draws.z.empty() ? "0" : "1"},
  };
  if (diagnostics) {
    meta.emplace_back("total_seconds", format_double(diagnostics->total_seconds));
    meta.emplace_back("seconds_per_sweep", format_double(diagnostics->seconds_per_sweep));
    meta.emplace_back("jitter_events", std::to_string(diagnostics->jitter_events));
  }
  write_key_values(dir / "manifest.txt", meta);
}

ChainFiles load_chain_draws(const fs::path& dir) {
  ChainFiles out;
  out.manifest = read_key_values(dir / "manifest.txt");
  const auto get = [&](const std::string& key) {
    const auto it = out.manifest.find(key);
    if (it == out.manifest.end()) {
      throw std::runtime_error(dir.string() + "/manifest.txt: missing key " + key);
    }
    return it->second;
  };
  const int n = std::stoi(get("n"));
  const int n_dims = std::stoi(get("n_dims"));
  const int p = std::stoi(get("n_covariates"));
  const int k = std::stoi(get("n_factors"));

  const Eigen::MatrixXd beta_flat = read_matrix_csv(dir / "beta.csv");
  out.draws.beta = unflatten_draws(beta_flat, 2 * n_dims, p);
  out.draws.n_retained = static_cast<int>(out.draws.beta.size());
  if (k > 0) {
    out.draws.lambda_star =
        unflatten_draws(read_matrix_csv(dir / "lambda_star.csv"), 2 * n_dims, k);
    const Eigen::MatrixXd phi = read_matrix_csv(dir / "phi.csv");
    out.draws.phi.reserve(static_cast<std::size_t>(phi.rows()));
    for (Eigen::Index d = 0; d < phi.rows(); ++d) out.draws.phi.push_back(phi.row(d));
    if (get("retained_u") == "1") {
      out.draws.u_star = unflatten_draws(read_matrix_csv(dir / "u_star.csv"), n, k);
    }
  } else {
    out.draws.lambda_star.assign(out.draws.beta.size(), Eigen::MatrixXd(2 * n_dims, 0));
    out.draws.phi.assign(out.draws.beta.size(), Eigen::VectorXd(0));
  }
  if (get("retained_z") == "1") {
    const Eigen::MatrixXd z = read_matrix_csv(dir / "z.csv");
    out.draws.z.reserve(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index d = 0; d < z.rows(); ++d) {
      MatrixXu8 m(n, n_dims);
      Eigen::Index col = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n_dims; ++j) m(i, j) = static_cast<std::uint8_t>(z(d, col++));
      }
      out.draws.z.push_back(std::move(m));
    }
  }
  out.draws.pi_hat = read_matrix_csv(dir / "pi_hat.csv");
  return out;
}

}  // namespace gfzip
