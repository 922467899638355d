#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gfzip/dataset.hpp"
#include "gfzip/model.hpp"
#include "gfzip/rng.hpp"

namespace gfzip {

/// Parameters and latent variables behind one simulated dataset (J = 10,
/// P = 2, K = 1 study design).
struct SimTruth {
  Eigen::MatrixXd beta;    // 2J x P
  Eigen::MatrixXd lambda;  // 2J x 1
  MatrixXu8 z;             // N x J
  MatrixXi64 y_star;       // N x J
  int setting = 1;
};

/// Setting 1: {0},{1},{2},[3,5],[6,10],[11,50],[51,inf).
/// Setting 2: singletons {0}..{10}, then [11,15],[16,20],[21,25],[26,30],
/// [31,40],[41,50],[51,inf).
GroupingScheme setting_scheme(int setting);

/// Simulates the study design. The latent sample (x, u, z, y*) is drawn from
/// substreams of `rng` keyed independently of the setting, so the same stream
/// yields the same counts under both settings and only the grouping differs.
std::pair<GroupedDataset, SimTruth> generate_dataset(int setting, int n, const RngStream& rng);

/// Singleton groups covering every realized count exactly: {0},...,{max},
/// [max+1, inf).
GroupingScheme exact_count_scheme(const MatrixXi64& y_star);

Eigen::MatrixXi regroup_counts(const MatrixXi64& y_star, const GroupingScheme& scheme);

struct BiasRmse {
  double bias = 0;
  double rmse = 0;
};

BiasRmse bias_rmse(std::span<const double> estimates, double truth);

/// Rates are per dimension, restricted to cells with an observed zero and
/// classified by pi_hat > 0.5; an empty denominator leaves the rate missing.
struct ClassificationRates {
  std::optional<double> tpr, tnr, fpr, fnr;
};

std::vector<ClassificationRates> classification_rates(const Eigen::MatrixXd& pi_hat,
                                                      const Eigen::MatrixXi& groups,
                                                      const MatrixXu8& z_true);

/// R_j: share of at-risk-classified cells among observed zeros per dimension.
std::vector<std::optional<double>> at_risk_proportion(const Eigen::MatrixXd& pi_hat,
                                                      const Eigen::MatrixXi& groups);

enum class ModelKind { gfzip, gzip, fzip };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ReplicationPlan {
  int n_replications = 10;
  int setting = 1;
  std::vector<ModelKind> models{ModelKind::gfzip, ModelKind::gzip, ModelKind::fzip};
  int n_individuals = 1000;
  ModelConfig mcmc;  // seed doubles as the study seed
  int threads = 0;   // 0 -> hardware concurrency
};

struct BetaMetricRow {
  ModelKind model;
  int setting, h, j, p;  // j = -1 marks the J-averaged rows
  double bias, rmse;
};

struct LoadingMetricRow {
  ModelKind model;
  int setting, row_a, row_b;  // indices into the stacked 2J loading rows
  double bias, rmse;
};

struct RateMetricRow {
  ModelKind model;
  int setting, j;
  std::optional<double> tpr, tnr, fpr, fnr;
};

struct AtRiskMetricRow {
  ModelKind model;
  int setting, j;
  std::optional<double> r_hat;
  double r_true;
};

struct ReplicationResults {
  ReplicationPlan plan;
  std::vector<BetaMetricRow> beta;
  std::vector<LoadingMetricRow> loading_products;
  std::vector<RateMetricRow> rates;
  std::vector<AtRiskMetricRow> at_risk;
  int failures = 0;
  std::vector<std::string> failure_log;
};

/// Replication driver: per replication, simulates data and fits each model
/// on keyed substreams (replications run as independent jobs), then
/// aggregates bias/RMSE for beta, bias/RMSE per element of vec(Lambda
/// Lambda'), classification rates, and at-risk proportions. Failed
/// replications are logged and excluded.
ReplicationResults run_replications(const ReplicationPlan& plan);

void write_replication_csv(const ReplicationResults& results, const std::string& dir);

}  // namespace gfzip
