#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gfzip/gibbs.hpp"
#include "gfzip/io.hpp"
#include "gfzip/rng.hpp"
#include "gfzip/simulation.hpp"

using namespace gfzip;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles survive the 17-digit round trip") {
  RngStream rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double x = (rng.normal() + 1e-12) * std::pow(10.0, static_cast<int>(rng.bits() % 40) - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("matrix csv round trip with manifest line") {
  const auto dir = temp_dir("gfzip_io_matrix");
  Eigen::MatrixXd m(3, 2);
  m << 1.5, -2.25, 1e-17, 3.0, 0.1, -0.7;
  const std::string manifest = csv_manifest_line(7, "test");
  write_matrix_csv(dir / "m.csv", m, {"a", "b"}, manifest);

  std::ifstream in(dir / "m.csv");
  std::string first;
  std::getline(in, first);
  CHECK(first.substr(0, 8) == "# gfzip ");
  CHECK(first.find("seed=7") != std::string::npos);
  CHECK(first.find("config=") != std::string::npos);

  std::vector<std::string> columns;
  const Eigen::MatrixXd back = read_matrix_csv(dir / "m.csv", &columns);
  CHECK(columns == std::vector<std::string>{"a", "b"});
  CHECK(back == m);
}

TEST_CASE("dataset csv round trip and validation errors") {
  const auto dir = temp_dir("gfzip_io_dataset");
  const RngStream rng(3);
  const auto [data, truth] = generate_dataset(1, 25, rng);
  write_dataset_csv(dir / "data.csv", data, csv_manifest_line(3, "x"));
  const auto back = read_dataset_csv(dir / "data.csv", data.scheme(), data.n_dims());
  CHECK(back.groups() == data.groups());
  CHECK(back.covariates() == data.covariates());
  CHECK(back.dim_names() == data.dim_names());

  {
    std::ofstream out(dir / "ragged.csv");
    out << "y1,x1\n0,1.0\n1\n";
  }
  CHECK_THROWS_WITH_AS((void)read_dataset_csv(dir / "ragged.csv", data.scheme(), 1),
                       doctest::Contains(":3:"), std::runtime_error);
  {
    std::ofstream out(dir / "notint.csv");
    out << "y1,x1\n0.5,1.0\n";
  }
  CHECK_THROWS_WITH_AS((void)read_dataset_csv(dir / "notint.csv", data.scheme(), 1),
                       doctest::Contains("integer"), std::runtime_error);
  {
    std::ofstream out(dir / "range.csv");
    out << "y1,x1\n9,1.0\n";
  }
  CHECK_THROWS_WITH_AS((void)read_dataset_csv(dir / "range.csv", data.scheme(), 1),
                       doctest::Contains("outside"), std::runtime_error);
}

TEST_CASE("truth csv round trip") {
  const auto dir = temp_dir("gfzip_io_truth");
  const RngStream rng(5);
  const auto [data, truth] = generate_dataset(2, 12, rng);
  write_truth_csv(dir / "truth.csv", truth, csv_manifest_line(5, "t"));
  const SimTruth back = read_truth_csv(dir / "truth.csv");
  CHECK(back.setting == 2);
  CHECK(back.beta == truth.beta);
  CHECK(back.lambda == truth.lambda);
  CHECK(back.z == truth.z);
  CHECK(back.y_star == truth.y_star);
}

TEST_CASE("key-value files round trip") {
  const auto dir = temp_dir("gfzip_io_kv");
  write_key_values(dir / "manifest.txt", {{"alpha", "1"}, {"beta", "two words"}});
  const auto back = read_key_values(dir / "manifest.txt");
  CHECK(back.at("alpha") == "1");
  CHECK(back.at("beta") == "two words");
}

TEST_CASE("chain draws round trip through a run directory") {
  const auto dir = temp_dir("gfzip_io_draws");
  const RngStream rng(9);
  const auto [data, truth] = generate_dataset(1, 30, rng);
  ModelConfig config;
  config.n_factors = 1;
  config.n_iter = 40;
  config.n_burnin = 20;
  config.seed = 9;
  ChainDiagnostics diag;
  const PosteriorDraws draws = run_chain(data, config, {}, &diag);
  save_chain_draws(dir, draws, config, data, &diag);

  const ChainFiles back = load_chain_draws(dir);
  REQUIRE(back.draws.n_retained == draws.n_retained);
  for (int t = 0; t < draws.n_retained; ++t) {
    CHECK(back.draws.beta[static_cast<std::size_t>(t)] ==
          draws.beta[static_cast<std::size_t>(t)]);
    CHECK(back.draws.lambda_star[static_cast<std::size_t>(t)] ==
          draws.lambda_star[static_cast<std::size_t>(t)]);
    CHECK(back.draws.phi[static_cast<std::size_t>(t)] ==
          draws.phi[static_cast<std::size_t>(t)]);
    CHECK(back.draws.u_star[static_cast<std::size_t>(t)] ==
          draws.u_star[static_cast<std::size_t>(t)]);
    CHECK(back.draws.z[static_cast<std::size_t>(t)] == draws.z[static_cast<std::size_t>(t)]);
  }
  CHECK(back.draws.pi_hat == draws.pi_hat);
  CHECK(back.manifest.at("scheme") == data.scheme().str());
  CHECK(back.manifest.at("n_retained") == std::to_string(draws.n_retained));
}

}  // TEST_SUITE
