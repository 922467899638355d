#include "gfzip/simulation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "gfzip/gibbs.hpp"
#include "gfzip/io.hpp"
#include "gfzip/parallel.hpp"
#include "gfzip/postprocess.hpp"

namespace gfzip {

namespace {

constexpr int kStudyDims = 10;

Eigen::VectorXd lambda1_truth() {
  Eigen::VectorXd v(kStudyDims);
  v << 0.89, 0, 0.25, 0, 0.8, 0, 0.5, 0, 0, 0;
  return v;
}

Eigen::VectorXd lambda2_truth() {
  Eigen::VectorXd v(kStudyDims);
  v << 0, 0, 0.85, 0.8, 0, 0.75, 0.75, 0, 0.8, 0.8;
  return v;
}

}  // namespace

GroupingScheme setting_scheme(int setting) {
  if (setting == 1) return GroupingScheme({0, 1, 2, 3, 6, 11, 51});
  if (setting == 2) {
    return GroupingScheme({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 16, 21, 26, 31, 41, 51});
  }
  throw std::invalid_argument("setting must be 1 or 2");
}

std::pair<GroupedDataset, SimTruth> generate_dataset(int setting, int n, const RngStream& rng) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const GroupingScheme scheme = setting_scheme(setting);
  const Eigen::VectorXd l1 = lambda1_truth();
  const Eigen::VectorXd l2 = lambda2_truth();

  SimTruth truth;
  truth.setting = setting;
  truth.beta.resize(2 * kStudyDims, 2);
  truth.beta.topRows(kStudyDims).rowwise() = Eigen::RowVector2d(0.5, 0.5);
  truth.beta.bottomRows(kStudyDims).rowwise() = Eigen::RowVector2d(-0.5, -1.0);
  truth.lambda.resize(2 * kStudyDims, 1);
  truth.lambda.topRows(kStudyDims) = l1;
  truth.lambda.bottomRows(kStudyDims) = l2;
  truth.z.resize(n, kStudyDims);
  truth.y_star.resize(n, kStudyDims);

  // the latent sample is keyed independently of the setting
  RngStream x_rng = rng.substream("x");
  RngStream u_rng = rng.substream("u");
  RngStream z_rng = rng.substream("z");
  RngStream y_rng = rng.substream("ystar");

  Eigen::MatrixXd covariates(n, 2);
  Eigen::MatrixXi groups(n, kStudyDims);
  for (int i = 0; i < n; ++i) {
    const double x = x_rng.normal();
    const double u = u_rng.normal();
    covariates(i, 0) = 1.0;
    covariates(i, 1) = x;
    for (int j = 0; j < kStudyDims; ++j) {
      const double eta1 = 0.5 + 0.5 * x + u * l1(j);
      const bool at_risk = z_rng.uniform() < at_risk_prob(eta1);
      truth.z(i, j) = at_risk ? 1 : 0;
      std::int64_t count = 0;
      if (at_risk) {
        const double mu = poisson_mean(-0.5 - 1.0 * x + u * l2(j));
        count = y_rng.poisson(mu);
      }
      truth.y_star(i, j) = count;
      groups(i, j) = scheme.group_of(count);
    }
  }
  GroupedDataset data(std::move(groups), std::move(covariates), scheme, {},
                      {"const", "x"});
  return {std::move(data), std::move(truth)};
}

GroupingScheme exact_count_scheme(const MatrixXi64& y_star) {
  const std::int64_t cap = y_star.maxCoeff() + 1;
  return GroupingScheme::singletons(std::max<std::int64_t>(cap, 1));
}

Eigen::MatrixXi regroup_counts(const MatrixXi64& y_star, const GroupingScheme& scheme) {
  Eigen::MatrixXi groups(y_star.rows(), y_star.cols());
  for (Eigen::Index i = 0; i < y_star.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_star.cols(); ++j) {
      groups(i, j) = scheme.group_of(y_star(i, j));
    }
  }
  return groups;
}

BiasRmse bias_rmse(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw std::invalid_argument("bias_rmse needs estimates");
  BiasRmse out;
  double sq = 0;
  for (double est : estimates) {
    out.bias += est - truth;
    sq += (est - truth) * (est - truth);
  }
  const double r = static_cast<double>(estimates.size());
  out.bias /= r;
  out.rmse = std::sqrt(sq / r);
  return out;
}

std::vector<ClassificationRates> classification_rates(const Eigen::MatrixXd& pi_hat,
                                                      const Eigen::MatrixXi& groups,
                                                      const MatrixXu8& z_true) {
  const Eigen::Index n = groups.rows();
  const Eigen::Index n_dims = groups.cols();
  if (pi_hat.rows() != n || pi_hat.cols() != n_dims || z_true.rows() != n ||
      z_true.cols() != n_dims) {
    throw std::invalid_argument("classification_rates dimension mismatch");
  }
  std::vector<ClassificationRates> rates(static_cast<std::size_t>(n_dims));
  for (Eigen::Index j = 0; j < n_dims; ++j) {
    int tp = 0, fn = 0, tn = 0, fp = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (groups(i, j) != 0) continue;
      const bool flagged = pi_hat(i, j) > 0.5;
      if (z_true(i, j)) {
        (flagged ? tp : fn) += 1;
      } else {
        (flagged ? fp : tn) += 1;
      }
    }
    auto& r = rates[static_cast<std::size_t>(j)];
    if (tp + fn > 0) {
      r.tpr = static_cast<double>(tp) / (tp + fn);
      r.fnr = static_cast<double>(fn) / (tp + fn);
    }
    if (tn + fp > 0) {
      r.tnr = static_cast<double>(tn) / (tn + fp);
      r.fpr = static_cast<double>(fp) / (tn + fp);
    }
  }
  return rates;
}

std::vector<std::optional<double>> at_risk_proportion(const Eigen::MatrixXd& pi_hat,
                                                      const Eigen::MatrixXi& groups) {
  const Eigen::Index n = groups.rows();
  const Eigen::Index n_dims = groups.cols();
  if (pi_hat.rows() != n || pi_hat.cols() != n_dims) {
    throw std::invalid_argument("at_risk_proportion dimension mismatch");
  }
  std::vector<std::optional<double>> out(static_cast<std::size_t>(n_dims));
  for (Eigen::Index j = 0; j < n_dims; ++j) {
    int zeros = 0, flagged = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (groups(i, j) != 0) continue;
      ++zeros;
      if (pi_hat(i, j) > 0.5) ++flagged;
    }
    if (zeros > 0) out[static_cast<std::size_t>(j)] = static_cast<double>(flagged) / zeros;
  }
  return out;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gfzip: return "GFZIP";
    case ModelKind::gzip: return "GZIP";
    case ModelKind::fzip: return "FZIP";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "GFZIP" || name == "gfzip") return ModelKind::gfzip;
  if (name == "GZIP" || name == "gzip") return ModelKind::gzip;
  if (name == "FZIP" || name == "fzip") return ModelKind::fzip;
  throw std::invalid_argument("unknown model: " + name);
}

namespace {

struct FitMetrics {
  bool ok = false;
  std::string error;
  Eigen::MatrixXd beta_hat;                        // 2J x P
  Eigen::MatrixXd loading_product_hat;             // 2J x 2J
  std::vector<ClassificationRates> rates;
  std::vector<std::optional<double>> r_hat;
  std::vector<double> r_true;                      // per j
};

FitMetrics fit_one(const ReplicationPlan& plan, int rep, ModelKind model) {
  const RngStream study_root(plan.mcmc.seed);
  const RngStream data_rng = study_root.substream("sim-data", static_cast<std::uint64_t>(rep));
  auto [data, truth] = generate_dataset(plan.setting, plan.n_individuals, data_rng);

  const GroupedDataset* fit_data = &data;
  std::optional<GroupedDataset> exact;
  if (model == ModelKind::fzip) {
    const GroupingScheme scheme = exact_count_scheme(truth.y_star);
    exact.emplace(regroup_counts(truth.y_star, scheme), data.covariates(), scheme,
                  data.dim_names(), data.covariate_names());
    fit_data = &*exact;
  }

  ModelConfig config = plan.mcmc;
  if (model == ModelKind::gzip) config.n_factors = 0;

  RunOptions options;
  options.retain_u = false;
  options.retain_z = false;
  const std::uint64_t model_key = static_cast<std::uint64_t>(model);
  RngStream fit_rng =
      study_root.substream("fit", static_cast<std::uint64_t>(rep)).substream(model_key);
  PosteriorDraws draws = run_chain(*fit_data, config, std::move(fit_rng), options);
  postprocess_draws(draws);

  FitMetrics metrics;
  const int rows = 2 * data.n_dims();
  metrics.beta_hat = Eigen::MatrixXd::Zero(rows, data.n_covariates());
  for (const auto& b : draws.beta) metrics.beta_hat += b;
  metrics.beta_hat /= static_cast<double>(draws.n_retained);

  metrics.loading_product_hat = Eigen::MatrixXd::Zero(rows, rows);
  if (config.n_factors > 0) {
    for (const auto& l : draws.lambda) {
      metrics.loading_product_hat.noalias() += l * l.transpose();
    }
    metrics.loading_product_hat /= static_cast<double>(draws.n_retained);
  }

  metrics.rates = classification_rates(draws.pi_hat, data.groups(), truth.z);
  metrics.r_hat = at_risk_proportion(draws.pi_hat, data.groups());
  metrics.r_true.resize(static_cast<std::size_t>(data.n_dims()), 0.0);
  for (int j = 0; j < data.n_dims(); ++j) {
    int zeros = 0, at_risk = 0;
    for (int i = 0; i < data.n_individuals(); ++i) {
      if (data.groups()(i, j) != 0) continue;
      ++zeros;
      if (truth.z(i, j)) ++at_risk;
    }
    metrics.r_true[static_cast<std::size_t>(j)] =
        zeros > 0 ? static_cast<double>(at_risk) / zeros : 0.0;
  }
  metrics.ok = true;
  return metrics;
}

}  // namespace

ReplicationResults run_replications(const ReplicationPlan& plan) {
  if (plan.n_replications < 1) throw std::invalid_argument("need at least one replication");
  if (plan.models.empty()) throw std::invalid_argument("need at least one model");
  const int n_models = static_cast<int>(plan.models.size());
  const int n_jobs = plan.n_replications * n_models;

  std::vector<FitMetrics> slots(static_cast<std::size_t>(n_jobs));
  parallel_jobs(n_jobs, plan.threads, [&](int job) {
    const int rep = job / n_models;
    const ModelKind model = plan.models[static_cast<std::size_t>(job % n_models)];
    try {
      slots[static_cast<std::size_t>(job)] = fit_one(plan, rep, model);
    } catch (const std::exception& e) {
      slots[static_cast<std::size_t>(job)].ok = false;
      slots[static_cast<std::size_t>(job)].error = "replication " + std::to_string(rep) +
                                                   " model " + to_string(model) + ": " +
                                                   e.what();
    }
  });

  // truth shared by every replication
  const RngStream probe_rng = RngStream(plan.mcmc.seed).substream("sim-data", 0);
  const auto [probe_data, probe_truth] =
      generate_dataset(plan.setting, 1, probe_rng);
  const Eigen::MatrixXd beta_true = probe_truth.beta;
  const Eigen::MatrixXd ll_true = probe_truth.lambda * probe_truth.lambda.transpose();
  const int n_dims = kStudyDims;
  const int n_cov = static_cast<int>(beta_true.cols());

  ReplicationResults results;
  results.plan = plan;

  for (int m = 0; m < n_models; ++m) {
    const ModelKind model = plan.models[static_cast<std::size_t>(m)];
    std::vector<const FitMetrics*> fits;
    for (int rep = 0; rep < plan.n_replications; ++rep) {
      const FitMetrics& slot = slots[static_cast<std::size_t>(rep * n_models + m)];
      if (slot.ok) {
        fits.push_back(&slot);
      } else {
        ++results.failures;
        results.failure_log.push_back(slot.error);
      }
    }
    if (fits.empty()) continue;

    // beta bias/RMSE per (h, j, p) plus the J-averaged rows
    for (int h = 1; h <= 2; ++h) {
      for (int p = 0; p < n_cov; ++p) {
        double bias_sum = 0, rmse_sum = 0;
        for (int j = 0; j < n_dims; ++j) {
          const int row = part_row(h, j, n_dims);
          std::vector<double> est;
          est.reserve(fits.size());
          for (const auto* fit : fits) est.push_back(fit->beta_hat(row, p));
          const BiasRmse br = bias_rmse(est, beta_true(row, p));
          results.beta.push_back({model, plan.setting, h, j, p, br.bias, br.rmse});
          bias_sum += br.bias;
          rmse_sum += br.rmse;
        }
        results.beta.push_back(
            {model, plan.setting, h, -1, p, bias_sum / n_dims, rmse_sum / n_dims});
      }
    }

    for (int a = 0; a < 2 * n_dims; ++a) {
      for (int b = 0; b < 2 * n_dims; ++b) {
        std::vector<double> est;
        est.reserve(fits.size());
        for (const auto* fit : fits) est.push_back(fit->loading_product_hat(a, b));
        const BiasRmse br = bias_rmse(est, ll_true(a, b));
        results.loading_products.push_back({model, plan.setting, a, b, br.bias, br.rmse});
      }
    }

    for (int j = 0; j < n_dims; ++j) {
      RateMetricRow rate_row{model, plan.setting, j, {}, {}, {}, {}};
      const auto average = [&](auto member) {
        double sum = 0;
        int count = 0;
        for (const auto* fit : fits) {
          const auto& value = fit->rates[static_cast<std::size_t>(j)].*member;
          if (value) {
            sum += *value;
            ++count;
          }
        }
        return count > 0 ? std::optional<double>(sum / count) : std::nullopt;
      };
      rate_row.tpr = average(&ClassificationRates::tpr);
      rate_row.tnr = average(&ClassificationRates::tnr);
      rate_row.fpr = average(&ClassificationRates::fpr);
      rate_row.fnr = average(&ClassificationRates::fnr);
      results.rates.push_back(rate_row);

      double r_hat_sum = 0, r_true_sum = 0;
      int r_hat_count = 0;
      for (const auto* fit : fits) {
        if (fit->r_hat[static_cast<std::size_t>(j)]) {
          r_hat_sum += *fit->r_hat[static_cast<std::size_t>(j)];
          ++r_hat_count;
        }
        r_true_sum += fit->r_true[static_cast<std::size_t>(j)];
      }
      results.at_risk.push_back(
          {model, plan.setting, j,
           r_hat_count > 0 ? std::optional<double>(r_hat_sum / r_hat_count) : std::nullopt,
           r_true_sum / static_cast<double>(fits.size())});
    }
  }
  return results;
}

void write_replication_csv(const ReplicationResults& results, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string manifest =
      csv_manifest_line(results.plan.mcmc.seed,
                        "replications=" + std::to_string(results.plan.n_replications) +
                            " setting=" + std::to_string(results.plan.setting));

  {
    CsvWriter csv(fs::path(dir) / "beta_metrics.csv", manifest);
    csv.header({"model", "setting", "h", "j", "p", "bias", "rmse"});
    for (const auto& row : results.beta) {
      csv.field(to_string(row.model)).field(row.setting).field(row.h);
      if (row.j < 0) {
        csv.field("avg");
      } else {
        csv.field(row.j + 1);
      }
      csv.field(row.p + 1).field(row.bias).field(row.rmse).end_row();
    }
  }
  {
    CsvWriter csv(fs::path(dir) / "loading_product_metrics.csv", manifest);
    csv.header({"model", "setting", "row_a", "row_b", "bias", "rmse"});
    for (const auto& row : results.loading_products) {
      csv.field(to_string(row.model))
          .field(row.setting)
          .field(row.row_a + 1)
          .field(row.row_b + 1)
          .field(row.bias)
          .field(row.rmse)
          .end_row();
    }
  }
  {
    CsvWriter csv(fs::path(dir) / "classification_rates.csv", manifest);
    csv.header({"model", "setting", "j", "tpr", "tnr", "fpr", "fnr"});
    for (const auto& row : results.rates) {
      csv.field(to_string(row.model)).field(row.setting).field(row.j + 1);
      csv.field(row.tpr).field(row.tnr).field(row.fpr).field(row.fnr).end_row();
    }
  }
  {
    CsvWriter csv(fs::path(dir) / "at_risk_proportion.csv", manifest);
    csv.header({"model", "setting", "j", "r_hat", "r_true"});
    for (const auto& row : results.at_risk) {
      csv.field(to_string(row.model)).field(row.setting).field(row.j + 1);
      csv.field(row.r_hat).field(row.r_true).end_row();
    }
  }
  {
    std::ofstream log(fs::path(dir) / "failures.txt");
    log << "failures = " << results.failures << "\n";
    for (const auto& line : results.failure_log) log << line << "\n";
  }
}

}  // namespace gfzip
