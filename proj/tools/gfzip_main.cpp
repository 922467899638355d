#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gfzip/gibbs.hpp"
#include "gfzip/io.hpp"
#include "gfzip/parallel.hpp"
#include "gfzip/postprocess.hpp"
#include "gfzip/predictive.hpp"
#include "gfzip/simulation.hpp"
#include "gfzip/version.hpp"

namespace fs = std::filesystem;
using namespace gfzip;

namespace {

struct SimulateArgs {
  int setting = 1;
  int n = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

struct FitArgs {
  std::string data;
  std::string scheme;
  int dims = 0;
  std::string out;
  int k = 1;
  double r = 1000.0;
  int iters = 6000;
  int burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 0;
  int chains = 1;
  double prior_var = 100.0;
  double prior_a = 2.0;
  double prior_b = 2.0;
  bool retain_z = false;
  int thin_u = 1;
  int threads = 0;
};

struct EvaluateArgs {
  std::string draws;
  std::string data;
  std::string truth;
  std::string out;
  std::string scheme;  // defaults to the run manifest
  int dims = 0;        // defaults to the run manifest
};

struct ReplicateArgs {
  int setting = 1;
  int replications = 10;
  int n = 1000;
  int k = 1;
  double r = 1000.0;
  int iters = 6000;
  int burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 0;
  std::string models = "GFZIP,GZIP,FZIP";
  int threads = 0;
  std::string out;
};

ModelConfig make_config(int k, double r, int iters, int burnin, int thin,
                        std::uint64_t seed, double prior_var = 100.0, double prior_a = 2.0,
                        double prior_b = 2.0, int n_covariates = 0) {
  ModelConfig config;
  config.n_factors = k;
  config.nb_r = r;
  config.n_iter = iters;
  config.n_burnin = burnin;
  config.thin = thin;
  config.seed = seed;
  if (n_covariates > 0) {
    config.prior_B0 = prior_var * Eigen::MatrixXd::Identity(n_covariates, n_covariates);
  }
  if (k > 0) {
    config.prior_a = Eigen::VectorXd::Constant(k, prior_a);
    config.prior_b = Eigen::VectorXd::Constant(k, prior_b);
  }
  return config;
}

void append_scalar_summary(CsvWriter& csv, const char* kind, int h, int j, int index,
                           const std::vector<double>& series) {
  const Summary s = summarize(series);
  const bool excludes_zero = s.lower > 0.0 || s.upper < 0.0;
  csv.field(kind).field(h).field(j + 1).field(index + 1);
  csv.field(s.mean).field(s.lower).field(s.upper).field(excludes_zero ? 1 : 0);
  csv.end_row();
}

std::vector<double> scalar_series(const std::vector<Eigen::MatrixXd>& draws, int row,
                                  int col) {
  std::vector<double> series;
  series.reserve(draws.size());
  for (const auto& d : draws) series.push_back(d(row, col));
  return series;
}

int cmd_simulate(const SimulateArgs& args) {
  fs::create_directories(args.out);
  const auto rng = RngStream(args.seed);
  const auto [data, truth] = generate_dataset(args.setting, args.n, rng);
  const std::string config_id = "simulate;setting=" + std::to_string(args.setting) +
                                ";n=" + std::to_string(args.n) +
                                ";seed=" + std::to_string(args.seed);
  const std::string manifest = csv_manifest_line(args.seed, config_id);

  write_dataset_csv(fs::path(args.out) / "data.csv", data, manifest);
  write_truth_csv(fs::path(args.out) / "truth.csv", truth, manifest);
  {
    std::ofstream scheme_file(fs::path(args.out) / "scheme.txt");
    scheme_file << data.scheme().str() << '\n';
  }
  write_key_values(fs::path(args.out) / "manifest.txt",
                   {{"version", kVersion},
                    {"command", "simulate"},
                    {"setting", std::to_string(args.setting)},
                    {"n", std::to_string(args.n)},
                    {"seed", std::to_string(args.seed)},
                    {"scheme", data.scheme().str()}});
  std::cout << "wrote dataset (" << data.n_individuals() << " x " << data.n_dims()
            << ") to " << args.out << "\n";
  return 0;
}

int cmd_fit(const FitArgs& args) {
  const GroupingScheme scheme = GroupingScheme::parse(args.scheme);
  const GroupedDataset data = read_dataset_csv(args.data, scheme, args.dims);
  ModelConfig config = make_config(args.k, args.r, args.iters, args.burnin, args.thin,
                                   args.seed, args.prior_var, args.prior_a, args.prior_b,
                                   data.n_covariates());
  config.validate(data.n_covariates());
  if (args.thin_u > 1 && config.n_retained() % args.thin_u != 0) {
    throw std::invalid_argument("--thin-u must divide the retained draw count");
  }
  fs::create_directories(args.out);

  std::vector<PosteriorDraws> chain_draws(static_cast<std::size_t>(args.chains));
  std::vector<ChainDiagnostics> chain_diag(static_cast<std::size_t>(args.chains));
  std::vector<std::string> chain_errors(static_cast<std::size_t>(args.chains));
  parallel_jobs(args.chains, args.threads, [&](int c) {
    try {
      RunOptions options;
      options.retain_u = args.k > 0;
      options.retain_z = args.retain_z;
      RngStream root =
          RngStream(config.seed).substream("chain", static_cast<std::uint64_t>(c));
      GibbsSampler sampler(data, config, std::move(root), options);
      chain_draws[static_cast<std::size_t>(c)] = sampler.run();
      chain_diag[static_cast<std::size_t>(c)] = sampler.diagnostics();
    } catch (const std::exception& e) {
      chain_errors[static_cast<std::size_t>(c)] = e.what();
    }
  });
  for (const auto& err : chain_errors) {
    if (!err.empty()) throw std::runtime_error("chain failed: " + err);
  }

  // thin the factor-score draws before anything is written or pooled
  if (args.k > 0 && args.thin_u > 1) {
    for (auto& draws : chain_draws) {
      std::vector<Eigen::MatrixXd> kept;
      for (std::size_t t = 0; t < draws.u_star.size(); t += static_cast<std::size_t>(args.thin_u)) {
        kept.push_back(std::move(draws.u_star[t]));
      }
      draws.u_star = std::move(kept);
    }
  }

  PosteriorDraws pooled;
  for (int c = 0; c < args.chains; ++c) {
    auto& draws = chain_draws[static_cast<std::size_t>(c)];
    save_chain_draws(fs::path(args.out) / ("chain_" + std::to_string(c)), draws, config,
                     data, &chain_diag[static_cast<std::size_t>(c)]);
    pooled.n_retained += draws.n_retained;
    const auto take = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()),
                 std::make_move_iterator(src.end()));
    };
    take(pooled.beta, draws.beta);
    take(pooled.lambda_star, draws.lambda_star);
    take(pooled.phi, draws.phi);
    if (args.thin_u == 1) take(pooled.u_star, draws.u_star);
    if (pooled.pi_hat.size() == 0) {
      pooled.pi_hat = draws.pi_hat;
    } else {
      pooled.pi_hat += draws.pi_hat;
    }
  }
  pooled.pi_hat /= static_cast<double>(args.chains);

  const AlignmentReport report = postprocess_draws(pooled);
  const std::string manifest = csv_manifest_line(config.seed, config_text(config));
  const int n_dims = data.n_dims();

  if (args.k > 0) {
    Eigen::MatrixXd lambda_flat(static_cast<Eigen::Index>(pooled.lambda.size()),
                                static_cast<Eigen::Index>(2 * n_dims * args.k));
    std::vector<std::string> names;
    for (int h = 1; h <= 2; ++h) {
      for (int j = 0; j < n_dims; ++j) {
        for (int k = 0; k < args.k; ++k) {
          names.push_back("lambda_" + std::to_string(h) + "_" + std::to_string(j + 1) +
                          "_k" + std::to_string(k + 1));
        }
      }
    }
    for (std::size_t d = 0; d < pooled.lambda.size(); ++d) {
      Eigen::Index col = 0;
      for (Eigen::Index rr = 0; rr < pooled.lambda[d].rows(); ++rr) {
        for (Eigen::Index cc = 0; cc < pooled.lambda[d].cols(); ++cc) {
          lambda_flat(static_cast<Eigen::Index>(d), col++) = pooled.lambda[d](rr, cc);
        }
      }
    }
    write_matrix_csv(fs::path(args.out) / "lambda.csv", lambda_flat, names, manifest);

    std::ofstream log(fs::path(args.out) / "alignment_report.txt");
    log << "converged = " << (report.converged ? 1 : 0) << "\n";
    log << "iterations = " << report.iterations << "\n";
    log << "reference =";
    for (Eigen::Index rr = 0; rr < report.reference.rows(); ++rr) {
      for (Eigen::Index cc = 0; cc < report.reference.cols(); ++cc) {
        log << ' ' << format_double(report.reference(rr, cc));
      }
    }
    log << "\n";
    for (std::size_t d = 0; d < report.transforms.size(); ++d) {
      log << "draw " << d << ": perm =";
      for (int p : report.transforms[d].perm) log << ' ' << p;
      log << " signs =";
      for (double s : report.transforms[d].signs) log << ' ' << (s < 0 ? '-' : '+');
      log << "\n";
    }
  }

  {
    CsvWriter csv(fs::path(args.out) / "summaries.csv", manifest);
    csv.header({"kind", "h", "j", "index", "mean", "lower", "upper", "ci_excludes_zero"});
    for (int h = 1; h <= 2; ++h) {
      for (int j = 0; j < n_dims; ++j) {
        for (int p = 0; p < data.n_covariates(); ++p) {
          append_scalar_summary(csv, "beta", h, j, p,
                                scalar_series(pooled.beta, part_row(h, j, n_dims), p));
        }
      }
    }
    for (int h = 1; h <= 2; ++h) {
      for (int j = 0; j < n_dims; ++j) {
        for (int k = 0; k < args.k; ++k) {
          append_scalar_summary(csv, "lambda", h, j, k,
                                scalar_series(pooled.lambda, part_row(h, j, n_dims), k));
        }
      }
    }
  }

  write_matrix_csv(fs::path(args.out) / "pi_hat.csv", pooled.pi_hat, data.dim_names(),
                   manifest);
  {
    CsvWriter csv(fs::path(args.out) / "r_hat.csv", manifest);
    csv.header({"dimension", "r_hat"});
    const auto r_hat = at_risk_proportion(pooled.pi_hat, data.groups());
    for (int j = 0; j < n_dims; ++j) {
      csv.field(data.dim_names()[static_cast<std::size_t>(j)]);
      csv.field(r_hat[static_cast<std::size_t>(j)]);
      csv.end_row();
    }
  }

  double total_seconds = 0;
  for (const auto& diag : chain_diag) total_seconds += diag.total_seconds;
  write_key_values(
      fs::path(args.out) / "manifest.txt",
      {{"version", kVersion},
       {"command", "fit"},
       {"seed", std::to_string(config.seed)},
       {"config_hash", manifest.substr(manifest.rfind('=') + 1)},
       {"n", std::to_string(data.n_individuals())},
       {"n_dims", std::to_string(n_dims)},
       {"n_covariates", std::to_string(data.n_covariates())},
       {"n_factors", std::to_string(args.k)},
       {"nb_r", format_double(args.r)},
       {"n_iter", std::to_string(args.iters)},
       {"n_burnin", std::to_string(args.burnin)},
       {"thin", std::to_string(args.thin)},
       {"chains", std::to_string(args.chains)},
       {"scheme", data.scheme().str()},
       {"alignment_converged", report.converged ? "1" : "0"},
       {"total_seconds", format_double(total_seconds)}});
  std::cout << "fit complete: " << pooled.n_retained << " retained draws across "
            << args.chains << " chain(s) in " << args.out << "\n";
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const auto run_manifest = read_key_values(fs::path(args.draws) / "manifest.txt");
  const auto lookup = [&](const std::string& key) -> std::string {
    const auto it = run_manifest.find(key);
    if (it == run_manifest.end()) {
      throw std::runtime_error("draws manifest missing key: " + key);
    }
    return it->second;
  };
  const std::string scheme_text = args.scheme.empty() ? lookup("scheme") : args.scheme;
  const int dims = args.dims > 0 ? args.dims : std::stoi(lookup("n_dims"));
  const int k = std::stoi(lookup("n_factors"));
  const int chains = std::stoi(lookup("chains"));
  const std::uint64_t seed = std::stoull(lookup("seed"));

  const GroupingScheme scheme = GroupingScheme::parse(scheme_text);
  const GroupedDataset data = read_dataset_csv(args.data, scheme, dims);

  PosteriorDraws pooled;
  for (int c = 0; c < chains; ++c) {
    ChainFiles chain = load_chain_draws(fs::path(args.draws) / ("chain_" + std::to_string(c)));
    pooled.n_retained += chain.draws.n_retained;
    const auto take = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()),
                 std::make_move_iterator(src.end()));
    };
    take(pooled.beta, chain.draws.beta);
    take(pooled.lambda_star, chain.draws.lambda_star);
    take(pooled.phi, chain.draws.phi);
    take(pooled.u_star, chain.draws.u_star);
    if (pooled.pi_hat.size() == 0) {
      pooled.pi_hat = chain.draws.pi_hat;
    } else {
      pooled.pi_hat += chain.draws.pi_hat;
    }
  }
  pooled.pi_hat /= static_cast<double>(chains);

  fs::create_directories(args.out);
  ModelConfig config = make_config(k, std::stod(lookup("nb_r")), 4, 2, 1, seed);
  const std::string manifest = csv_manifest_line(seed, "evaluate;" + scheme_text);
  const int n_dims = data.n_dims();

  // posterior predictive loss
  {
    const RngStream rng = RngStream(seed).substream("predictive");
    const auto pred = predictive_group_counts(pooled, data, config, rng);
    const auto parts = ppl_parts(pred, data);
    CsvWriter csv(fs::path(args.out) / "ppl.csv", manifest);
    csv.header({"model", "ppl", "variance_part", "fit_part"});
    csv.field(fs::path(args.draws).filename().string());
    csv.field(parts.total).field(parts.variance_part).field(parts.fit_part);
    csv.end_row();
  }

  // at-risk proportions
  const auto r_hat = at_risk_proportion(pooled.pi_hat, data.groups());
  {
    CsvWriter csv(fs::path(args.out) / "r_hat.csv", manifest);
    csv.header({"dimension", "r_hat"});
    for (int j = 0; j < n_dims; ++j) {
      csv.field(data.dim_names()[static_cast<std::size_t>(j)]);
      csv.field(r_hat[static_cast<std::size_t>(j)]);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(fs::path(args.out) / "fig_rj.csv", manifest);
    csv.header({"dimension", "r_hat"});
    for (int j = 0; j < n_dims; ++j) {
      csv.field(data.dim_names()[static_cast<std::size_t>(j)]);
      csv.field(r_hat[static_cast<std::size_t>(j)]);
      csv.end_row();
    }
  }

  // posterior-mean loading products (identified quantities)
  Eigen::MatrixXd ll_hat = Eigen::MatrixXd::Zero(2 * n_dims, 2 * n_dims);
  if (k > 0) {
    for (std::size_t d = 0; d < pooled.lambda_star.size(); ++d) {
      const auto rec =
          recover_scale(pooled.lambda_star[d], Eigen::MatrixXd(0, 0), pooled.phi[d]);
      ll_hat.noalias() += rec.lambda * rec.lambda.transpose();
    }
    ll_hat /= static_cast<double>(pooled.n_retained);
  }
  const auto block_names = [&](const char* prefix) {
    std::vector<std::string> names;
    for (int j = 0; j < n_dims; ++j) {
      names.push_back(std::string(prefix) + "_" + data.dim_names()[static_cast<std::size_t>(j)]);
    }
    return names;
  };
  write_matrix_csv(fs::path(args.out) / "fig_ll_matrix_h1.csv",
                   ll_hat.topLeftCorner(n_dims, n_dims), block_names("h1"), manifest);
  write_matrix_csv(fs::path(args.out) / "fig_ll_matrix_h2.csv",
                   ll_hat.bottomRightCorner(n_dims, n_dims), block_names("h2"), manifest);
  write_matrix_csv(fs::path(args.out) / "fig_ll_matrix_cross.csv",
                   ll_hat.topRightCorner(n_dims, n_dims), block_names("h2"), manifest);

  // coefficient table with credibility flags
  {
    CsvWriter csv(fs::path(args.out) / "fig_beta.csv", manifest);
    csv.header({"h", "dimension", "covariate", "mean", "lower", "upper",
                "ci_excludes_zero"});
    for (int h = 1; h <= 2; ++h) {
      for (int j = 0; j < n_dims; ++j) {
        for (int p = 0; p < data.n_covariates(); ++p) {
          const auto series = scalar_series(pooled.beta, part_row(h, j, n_dims), p);
          const Summary s = summarize(series);
          csv.field(h).field(data.dim_names()[static_cast<std::size_t>(j)]);
          csv.field(data.covariate_names()[static_cast<std::size_t>(p)]);
          csv.field(s.mean).field(s.lower).field(s.upper);
          csv.field((s.lower > 0.0 || s.upper < 0.0) ? 1 : 0);
          csv.end_row();
        }
      }
    }
  }

  // truth-dependent outputs
  if (!args.truth.empty()) {
    const SimTruth truth = read_truth_csv(args.truth);
    {
      CsvWriter csv(fs::path(args.out) / "bias_rmse.csv", manifest);
      csv.header({"kind", "h", "j", "index", "bias", "rmse"});
      for (int h = 1; h <= 2; ++h) {
        for (int j = 0; j < n_dims; ++j) {
          for (int p = 0; p < data.n_covariates(); ++p) {
            const auto series = scalar_series(pooled.beta, part_row(h, j, n_dims), p);
            const double est =
                std::accumulate(series.begin(), series.end(), 0.0) / series.size();
            const std::vector<double> one{est};
            const auto br = bias_rmse(one, truth.beta(part_row(h, j, n_dims), p));
            csv.field("beta").field(h).field(j + 1).field(p + 1);
            csv.field(br.bias).field(br.rmse).end_row();
          }
        }
      }
    }
    const Eigen::MatrixXd ll_true = truth.lambda * truth.lambda.transpose();
    {
      CsvWriter csv(fs::path(args.out) / "loading_product_bias_rmse.csv", manifest);
      csv.header({"row_a", "row_b", "bias", "rmse"});
      std::vector<double> biases, rmses;
      for (int a = 0; a < 2 * n_dims; ++a) {
        for (int b = 0; b < 2 * n_dims; ++b) {
          const std::vector<double> one{ll_hat(a, b)};
          const auto br = bias_rmse(one, ll_true(a, b));
          csv.field(a + 1).field(b + 1).field(br.bias).field(br.rmse).end_row();
          biases.push_back(br.bias);
          rmses.push_back(br.rmse);
        }
      }
      CsvWriter box(fs::path(args.out) / "fig_ll_boxplot.csv", manifest);
      box.header({"metric", "min", "q25", "median", "q75", "max"});
      const auto write_box = [&box](const char* name, std::vector<double> values) {
        box.field(name);
        box.field(quantile(values, 0.0)).field(quantile(values, 0.25));
        box.field(quantile(values, 0.5)).field(quantile(values, 0.75));
        box.field(quantile(values, 1.0));
        box.end_row();
      };
      write_box("bias", biases);
      write_box("rmse", rmses);
    }
    {
      const auto rates = classification_rates(pooled.pi_hat, data.groups(), truth.z);
      CsvWriter csv(fs::path(args.out) / "classification_rates.csv", manifest);
      csv.header({"dimension", "tpr", "tnr", "fpr", "fnr"});
      CsvWriter fig(fs::path(args.out) / "fig_rates.csv", manifest);
      fig.header({"dimension", "tpr", "tnr", "fpr", "fnr"});
      for (int j = 0; j < n_dims; ++j) {
        for (CsvWriter* w : {&csv, &fig}) {
          w->field(data.dim_names()[static_cast<std::size_t>(j)]);
          w->field(rates[static_cast<std::size_t>(j)].tpr);
          w->field(rates[static_cast<std::size_t>(j)].tnr);
          w->field(rates[static_cast<std::size_t>(j)].fpr);
          w->field(rates[static_cast<std::size_t>(j)].fnr);
          w->end_row();
        }
      }
    }
  }

  write_key_values(fs::path(args.out) / "manifest.txt",
                   {{"version", kVersion},
                    {"command", "evaluate"},
                    {"draws", args.draws},
                    {"seed", std::to_string(seed)},
                    {"truth_given", args.truth.empty() ? "0" : "1"}});
  std::cout << "evaluation written to " << args.out << "\n";
  return 0;
}

int cmd_replicate(const ReplicateArgs& args) {
  ReplicationPlan plan;
  plan.n_replications = args.replications;
  plan.setting = args.setting;
  plan.n_individuals = args.n;
  plan.threads = args.threads;
  plan.models.clear();
  std::size_t pos = 0;
  while (pos <= args.models.size()) {
    const std::size_t comma = args.models.find(',', pos);
    const std::string token =
        args.models.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!token.empty()) plan.models.push_back(model_kind_from_string(token));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  plan.mcmc = make_config(args.k, args.r, args.iters, args.burnin, args.thin, args.seed);

  const auto start = std::chrono::steady_clock::now();
  const ReplicationResults results = run_replications(plan);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(args.out);
  write_replication_csv(results, args.out);
  write_key_values(fs::path(args.out) / "manifest.txt",
                   {{"version", kVersion},
                    {"command", "replicate"},
                    {"setting", std::to_string(args.setting)},
                    {"replications", std::to_string(args.replications)},
                    {"n", std::to_string(args.n)},
                    {"n_factors", std::to_string(args.k)},
                    {"n_iter", std::to_string(args.iters)},
                    {"n_burnin", std::to_string(args.burnin)},
                    {"seed", std::to_string(args.seed)},
                    {"failures", std::to_string(results.failures)},
                    {"total_seconds", format_double(seconds)}});
  std::cout << "replication study written to " << args.out << " (" << results.failures
            << " failures)\n";
  return results.failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian factor zero-inflated Poisson models for grouped count data"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Key-value config file mirroring the flags");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic grouped dataset");
  simulate->add_option("--setting", sim.setting, "Grouping setting")->check(CLI::Range(1, 2));
  simulate->add_option("--n", sim.n, "Individuals")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset CSV");
  fit_cmd->add_option("--data", fit.data, "Dataset CSV")->required();
  fit_cmd->add_option("--dims", fit.dims, "Leading group-index column count")
      ->required()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--scheme", fit.scheme, "Comma-separated thresholds")->required();
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();
  fit_cmd->add_option("--k", fit.k, "Factor count (0 = no factors)")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--r", fit.r, "Negative-binomial approximation parameter");
  fit_cmd->add_option("--iters", fit.iters, "MCMC iterations")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--burnin", fit.burnin, "Burn-in iterations")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--thin", fit.thin, "Thinning stride")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_cmd->add_option("--chains", fit.chains, "Chain count")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--prior-var", fit.prior_var, "Coefficient prior variance");
  fit_cmd->add_option("--prior-a", fit.prior_a, "Inverse-gamma shape");
  fit_cmd->add_option("--prior-b", fit.prior_b, "Inverse-gamma rate");
  fit_cmd->add_flag("--retain-z", fit.retain_z, "Persist at-risk indicator draws");
  fit_cmd->add_option("--thin-u", fit.thin_u, "Stride for persisted factor scores")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0 = hardware)");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a fitted run against a dataset");
  eval_cmd->add_option("--draws", eval.draws, "Fit output directory")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset CSV")->required();
  eval_cmd->add_option("--truth", eval.truth, "Simulation truth CSV (optional)");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--scheme", eval.scheme, "Override the stored scheme");
  eval_cmd->add_option("--dims", eval.dims, "Override the stored dimension count");

  ReplicateArgs rep;
  auto* rep_cmd = app.add_subcommand("replicate", "Run the replication study");
  rep_cmd->add_option("--setting", rep.setting, "Grouping setting")->check(CLI::Range(1, 2));
  rep_cmd->add_option("--r-reps", rep.replications, "Replication count")
      ->check(CLI::PositiveNumber);
  rep_cmd->add_option("--n", rep.n, "Individuals per replication")
      ->check(CLI::PositiveNumber);
  rep_cmd->add_option("--k", rep.k, "Factor count for GFZIP/FZIP")
      ->check(CLI::NonNegativeNumber);
  rep_cmd->add_option("--nb-r", rep.r, "Negative-binomial approximation parameter");
  rep_cmd->add_option("--iters", rep.iters, "MCMC iterations")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--burnin", rep.burnin, "Burn-in iterations")
      ->check(CLI::NonNegativeNumber);
  rep_cmd->add_option("--thin", rep.thin, "Thinning stride")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--seed", rep.seed, "Study seed");
  rep_cmd->add_option("--models", rep.models, "Comma list from GFZIP,GZIP,FZIP");
  rep_cmd->add_option("--threads", rep.threads, "Worker threads (0 = hardware)");
  rep_cmd->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (eval_cmd->parsed()) return cmd_evaluate(eval);
    if (rep_cmd->parsed()) return cmd_replicate(rep);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
