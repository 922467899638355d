#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gfzip/io.hpp"

#ifndef GFZIP_CLI_PATH
#define GFZIP_CLI_PATH "gfzip"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string command = std::string(GFZIP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate is byte-identical per seed and writes the scheme line") {
  const auto dir = temp_dir("gfzip_cli_sim");
  const std::string base = "simulate --setting 1 --n 100 --seed 7 --out ";
  REQUIRE(run_cli(base + (dir / "a").string()) == 0);
  REQUIRE(run_cli(base + (dir / "b").string()) == 0);
  for (const char* name : {"data.csv", "truth.csv", "scheme.txt", "manifest.txt"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK(slurp(dir / "a" / "scheme.txt") == "0,1,2,3,6,11,51\n");

  REQUIRE(run_cli("simulate --setting 2 --n 10 --seed 1 --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "c" / "scheme.txt") == "0,1,2,3,4,5,6,7,8,9,10,11,16,21,26,31,41,51\n");
}

TEST_CASE("argument validation exits with code 1") {
  const auto dir = temp_dir("gfzip_cli_bad");
  CHECK(run_cli("simulate --n 0 --out " + (dir / "x").string()) == 1);
  CHECK(run_cli("simulate --out " + (dir / "x").string()) == 1);
  CHECK(run_cli("nonsense") == 1);
  CHECK(run_cli("") == 1);
}

TEST_CASE("fit, rerun determinism, and evaluate") {
  const auto dir = temp_dir("gfzip_cli_fit");
  REQUIRE(run_cli("simulate --setting 1 --n 80 --seed 11 --out " + (dir / "sim").string()) == 0);

  const std::string fit_args =
      " --data " + (dir / "sim" / "data.csv").string() +
      " --dims 10 --scheme 0,1,2,3,6,11,51 --k 1 --iters 200 --burnin 100 --seed 5 --out ";
  REQUIRE(run_cli("fit" + fit_args + (dir / "fit_a").string()) == 0);
  REQUIRE(run_cli("fit" + fit_args + (dir / "fit_b").string()) == 0);
  CHECK(slurp(dir / "fit_a" / "summaries.csv") == slurp(dir / "fit_b" / "summaries.csv"));
  CHECK(slurp(dir / "fit_a" / "lambda.csv") == slurp(dir / "fit_b" / "lambda.csv"));
  CHECK(fs::exists(dir / "fit_a" / "chain_0" / "beta.csv"));
  CHECK(fs::exists(dir / "fit_a" / "alignment_report.txt"));
  CHECK(fs::exists(dir / "fit_a" / "pi_hat.csv"));
  CHECK(fs::exists(dir / "fit_a" / "r_hat.csv"));

  // one summary row per (h, j) loading (K = 1) plus beta rows
  const auto summaries = gfzip::read_csv(dir / "fit_a" / "summaries.csv");
  int lambda_rows = 0, beta_rows = 0;
  const int kind = summaries.column("kind");
  for (const auto& row : summaries.rows) {
    if (row[static_cast<std::size_t>(kind)] == "lambda") ++lambda_rows;
    if (row[static_cast<std::size_t>(kind)] == "beta") ++beta_rows;
  }
  CHECK(lambda_rows == 20);
  CHECK(beta_rows == 40);

  // evaluate with truth emits every output family
  REQUIRE(run_cli("evaluate --draws " + (dir / "fit_a").string() + " --data " +
                  (dir / "sim" / "data.csv").string() + " --truth " +
                  (dir / "sim" / "truth.csv").string() + " --out " +
                  (dir / "eval").string()) == 0);
  for (const char* name :
       {"ppl.csv", "r_hat.csv", "classification_rates.csv", "bias_rmse.csv",
        "loading_product_bias_rmse.csv", "fig_ll_boxplot.csv", "fig_rates.csv",
        "fig_rj.csv", "fig_ll_matrix_h1.csv", "fig_ll_matrix_h2.csv",
        "fig_ll_matrix_cross.csv", "fig_beta.csv"}) {
    CHECK(fs::exists(dir / "eval" / name));
  }

  // within-part loading-product matrices are symmetric
  const Eigen::MatrixXd h1 = gfzip::read_matrix_csv(dir / "eval" / "fig_ll_matrix_h1.csv");
  CHECK(h1.isApprox(h1.transpose(), 1e-12));

  // without truth, truth-dependent outputs are omitted but the rest appear
  REQUIRE(run_cli("evaluate --draws " + (dir / "fit_a").string() + " --data " +
                  (dir / "sim" / "data.csv").string() + " --out " +
                  (dir / "eval_nt").string()) == 0);
  CHECK(fs::exists(dir / "eval_nt" / "ppl.csv"));
  CHECK(fs::exists(dir / "eval_nt" / "r_hat.csv"));
  CHECK_FALSE(fs::exists(dir / "eval_nt" / "bias_rmse.csv"));
  CHECK_FALSE(fs::exists(dir / "eval_nt" / "classification_rates.csv"));
}

TEST_CASE("fit with k = 0 runs the no-factor baseline path") {
  const auto dir = temp_dir("gfzip_cli_k0");
  REQUIRE(run_cli("simulate --setting 1 --n 50 --seed 3 --out " + (dir / "sim").string()) == 0);
  REQUIRE(run_cli("fit --data " + (dir / "sim" / "data.csv").string() +
                  " --dims 10 --scheme 0,1,2,3,6,11,51 --k 0 --iters 100 --burnin 50 " +
                  "--seed 2 --out " + (dir / "fit").string()) == 0);
  CHECK(fs::exists(dir / "fit" / "summaries.csv"));
  CHECK_FALSE(fs::exists(dir / "fit" / "lambda.csv"));
  const auto summaries = gfzip::read_csv(dir / "fit" / "summaries.csv");
  for (const auto& row : summaries.rows) {
    CHECK(row[0] == "beta");
  }
}

TEST_CASE("multi-chain fit pools draws") {
  const auto dir = temp_dir("gfzip_cli_chains");
  REQUIRE(run_cli("simulate --setting 1 --n 40 --seed 9 --out " + (dir / "sim").string()) == 0);
  REQUIRE(run_cli("fit --data " + (dir / "sim" / "data.csv").string() +
                  " --dims 10 --scheme 0,1,2,3,6,11,51 --k 1 --iters 60 --burnin 20 " +
                  "--chains 2 --seed 4 --out " + (dir / "fit").string()) == 0);
  CHECK(fs::exists(dir / "fit" / "chain_0" / "beta.csv"));
  CHECK(fs::exists(dir / "fit" / "chain_1" / "beta.csv"));
  const auto lambda = gfzip::read_matrix_csv(dir / "fit" / "lambda.csv");
  CHECK(lambda.rows() == 80);  // 2 chains x 40 retained draws
}

TEST_CASE("replicate emits the study tables") {
  const auto dir = temp_dir("gfzip_cli_rep");
  REQUIRE(run_cli("replicate --setting 1 --r-reps 1 --n 60 --k 1 --iters 80 --burnin 40 "
                  "--seed 13 --models GFZIP --out " +
                  (dir / "rep").string()) == 0);
  for (const char* name : {"beta_metrics.csv", "loading_product_metrics.csv",
                           "classification_rates.csv", "at_risk_proportion.csv",
                           "manifest.txt"}) {
    CHECK(fs::exists(dir / "rep" / name));
  }
}

}  // TEST_SUITE
