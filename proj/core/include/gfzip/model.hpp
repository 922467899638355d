#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gfzip/dataset.hpp"

namespace gfzip {

using MatrixXu8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixXi64 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Model and MCMC settings. Empty prior fields resolve to the defaults
/// b0 = 0, B0 = 100*I, a_k = b_k = 2.
struct ModelConfig {
  int n_factors = 1;     // K; 0 drops the factor part entirely
  double nb_r = 1000.0;  // negative-binomial approximation parameter r
  Eigen::VectorXd prior_b0;
  Eigen::MatrixXd prior_B0;
  Eigen::VectorXd prior_a;
  Eigen::VectorXd prior_b;
  int n_iter = 6000;
  int n_burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 0;

  void validate(int n_covariates) const;
  int n_retained() const { return (n_iter - n_burnin) / thin; }
  Eigen::VectorXd resolved_b0(int n_covariates) const;
  Eigen::MatrixXd resolved_B0(int n_covariates) const;
  Eigen::VectorXd resolved_a() const;
  Eigen::VectorXd resolved_b() const;
};

/// All latent variables and parameters of one Gibbs iteration. Loading-style
/// matrices stack the at-risk rows (h=1, j=0..J-1) above the Poisson rows
/// (h=2, j=0..J-1).
struct ChainState {
  Eigen::MatrixXd beta;         // 2J x P
  Eigen::MatrixXd lambda_star;  // 2J x K
  Eigen::MatrixXd u_star;       // N x K
  Eigen::VectorXd phi;          // K
  MatrixXu8 z;                  // N x J at-risk indicators
  MatrixXi64 y_star;            // N x J latent counts
  Eigen::MatrixXd omega1;       // N x J
  Eigen::MatrixXd omega2;       // N x J, only meaningful where z = 1
};

/// Row of beta/lambda matrices for part h in {1,2} and dimension j in [0, J).
inline int part_row(int h, int j, int n_dims) { return (h - 1) * n_dims + j; }

/// Retained post-burn-in draws. The lambda/u members hold the identified
/// (post-processed) views and stay empty until post-processing runs.
struct PosteriorDraws {
  int n_retained = 0;
  std::vector<Eigen::MatrixXd> beta;         // each 2J x P
  std::vector<Eigen::MatrixXd> lambda_star;  // each 2J x K
  std::vector<Eigen::VectorXd> phi;          // each K
  std::vector<Eigen::MatrixXd> u_star;       // each N x K; empty unless retained
  std::vector<MatrixXu8> z;                  // each N x J; empty unless retained
  Eigen::MatrixXd pi_hat;                    // N x J mean of z over retained draws

  std::vector<Eigen::MatrixXd> lambda;  // identified loadings, each 2J x K
  std::vector<Eigen::MatrixXd> u;       // identified scores, each N x K
};

/// eta = x'beta + u'lambda; the factor term vanishes for K = 0.
double linear_predictor(const Eigen::VectorXd& x, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& lambda);

/// Logistic link, overflow-safe for large |eta|.
double at_risk_prob(double eta1);

/// Log link.
double poisson_mean(double eta2);

/// log NB(y; r, psi) with success probability sigma(psi); psi = eta - log r
/// recovers the approximate-Poisson parameterization.
double nb_log_pmf(std::int64_t y, double r, double psi);

/// log(1 + e^x) without overflow.
double log1p_exp(double x);

}  // namespace gfzip
