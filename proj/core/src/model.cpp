#include "gfzip/model.hpp"

#include <cmath>
#include <stdexcept>

namespace gfzip {

void ModelConfig::validate(int n_covariates) const {
  if (n_factors < 0) throw std::invalid_argument("n_factors must be >= 0");
  if (!(nb_r > 0)) throw std::invalid_argument("nb_r must be positive");
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  if (n_burnin < 0 || n_burnin >= n_iter) {
    throw std::invalid_argument("n_burnin must lie in [0, n_iter)");
  }
  if (thin < 1 || (n_iter - n_burnin) % thin != 0) {
    throw std::invalid_argument("thin must divide n_iter - n_burnin");
  }
  if (prior_b0.size() != 0 && prior_b0.size() != n_covariates) {
    throw std::invalid_argument("prior_b0 size must equal the covariate count");
  }
  if (prior_B0.size() != 0) {
    if (prior_B0.rows() != n_covariates || prior_B0.cols() != n_covariates) {
      throw std::invalid_argument("prior_B0 must be P x P");
    }
    if (!prior_B0.isApprox(prior_B0.transpose(), 1e-12)) {
      throw std::invalid_argument("prior_B0 must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(prior_B0);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("prior_B0 must be positive definite");
    }
  }
  for (const auto* v : {&prior_a, &prior_b}) {
    if (v->size() != 0) {
      if (v->size() != n_factors) {
        throw std::invalid_argument("inverse-gamma hyperparameter vectors must have length K");
      }
      if ((v->array() <= 0).any()) {
        throw std::invalid_argument("inverse-gamma hyperparameters must be positive");
      }
    }
  }
}

Eigen::VectorXd ModelConfig::resolved_b0(int n_covariates) const {
  return prior_b0.size() ? prior_b0 : Eigen::VectorXd::Zero(n_covariates);
}

Eigen::MatrixXd ModelConfig::resolved_B0(int n_covariates) const {
  return prior_B0.size()
             ? prior_B0
             : Eigen::MatrixXd(100.0 * Eigen::MatrixXd::Identity(n_covariates, n_covariates));
}

Eigen::VectorXd ModelConfig::resolved_a() const {
  return prior_a.size() ? prior_a : Eigen::VectorXd::Constant(n_factors, 2.0);
}

Eigen::VectorXd ModelConfig::resolved_b() const {
  return prior_b.size() ? prior_b : Eigen::VectorXd::Constant(n_factors, 2.0);
}

double linear_predictor(const Eigen::VectorXd& x, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& lambda) {
  if (x.size() != beta.size()) throw std::invalid_argument("x/beta dimension mismatch");
  if (u.size() != lambda.size()) throw std::invalid_argument("u/lambda dimension mismatch");
  double eta = x.dot(beta);
  if (u.size() > 0) eta += u.dot(lambda);
  return eta;
}

double at_risk_prob(double eta1) { return 0.5 * (1.0 + std::tanh(0.5 * eta1)); }

double poisson_mean(double eta2) { return std::exp(eta2); }

double log1p_exp(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double nb_log_pmf(std::int64_t y, double r, double psi) {
  const double yd = static_cast<double>(y);
  return std::lgamma(yd + r) - std::lgamma(r) - std::lgamma(yd + 1.0) + yd * psi -
         (yd + r) * log1p_exp(psi);
}

}  // namespace gfzip
