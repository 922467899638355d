#include "gfzip/predictive.hpp"

#include <cmath>
#include <stdexcept>

namespace gfzip {

Eigen::MatrixXd observed_group_counts(const GroupedDataset& data) {
  Eigen::MatrixXd counts =
      Eigen::MatrixXd::Zero(data.n_dims(), data.scheme().group_count());
  for (int i = 0; i < data.n_individuals(); ++i) {
    for (int j = 0; j < data.n_dims(); ++j) counts(j, data.groups()(i, j)) += 1.0;
  }
  return counts;
}

PredictiveCounts predictive_group_counts(const PosteriorDraws& draws,
                                         const GroupedDataset& data,
                                         const ModelConfig& config, const RngStream& rng,
                                         PredictiveOptions options) {
  const int n = data.n_individuals();
  const int n_dims = data.n_dims();
  const int k = config.n_factors;
  const int n_groups = data.scheme().group_count();
  if (draws.n_retained < 2) throw std::invalid_argument("need at least 2 retained draws");
  if (k > 0 && draws.u_star.empty() && !options.resample_factors) {
    throw std::invalid_argument("predictive simulation needs retained factor scores");
  }
  // factor scores may be retained on a stride to save space
  const std::size_t n_usable =
      k > 0 && !options.resample_factors ? draws.u_star.size() : draws.beta.size();
  const std::size_t stride = draws.beta.size() / n_usable;

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n_dims, n_groups);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n_dims, n_groups);
  Eigen::MatrixXd counts(n_dims, n_groups);
  int used = 0;
  for (std::size_t t = 0; t < n_usable; ++t) {
    const std::size_t m = t * stride;
    const Eigen::MatrixXd& beta = draws.beta[m];
    const Eigen::MatrixXd& lambda = draws.lambda_star[m];
    RngStream draw_rng = rng.substream("predictive-draw", static_cast<std::uint64_t>(m));
    counts.setZero();
    Eigen::VectorXd u(k);
    for (int i = 0; i < n; ++i) {
      RngStream cell_rng = draw_rng.substream(static_cast<std::uint64_t>(i));
      if (k > 0) {
        if (options.resample_factors) {
          for (int c = 0; c < k; ++c) {
            u(c) = cell_rng.normal() * std::sqrt(draws.phi[m](c));
          }
        } else {
          u = draws.u_star[t].row(i);
        }
      }
      const auto x = data.covariates().row(i);
      for (int j = 0; j < n_dims; ++j) {
        double eta1 = x.dot(beta.row(j));
        double eta2 = x.dot(beta.row(n_dims + j));
        if (k > 0) {
          eta1 += u.dot(lambda.row(j));
          eta2 += u.dot(lambda.row(n_dims + j));
        }
        std::int64_t count = 0;
        if (cell_rng.uniform() < at_risk_prob(eta1)) {
          count = cell_rng.poisson(poisson_mean(eta2));
        }
        counts(j, data.scheme().group_of(count)) += 1.0;
      }
    }
    ++used;
    const Eigen::MatrixXd delta = counts - mean;
    mean += delta / static_cast<double>(used);
    m2.array() += delta.array() * (counts - mean).array();
  }
  PredictiveCounts out;
  out.mean = std::move(mean);
  out.variance = m2 / static_cast<double>(used - 1);
  return out;
}

PplParts ppl_parts(const PredictiveCounts& predictive, const GroupedDataset& data) {
  const Eigen::MatrixXd observed = observed_group_counts(data);
  if (observed.rows() != predictive.mean.rows() ||
      observed.cols() != predictive.mean.cols()) {
    throw std::invalid_argument("predictive table shape does not match the data");
  }
  const double n = static_cast<double>(data.n_individuals());
  PplParts parts;
  parts.variance_part = predictive.variance.sum() / n;
  parts.fit_part = (observed - predictive.mean).squaredNorm() / (n + 1.0);
  parts.total = parts.variance_part + parts.fit_part;
  return parts;
}

double ppl(const PredictiveCounts& predictive, const GroupedDataset& data) {
  return ppl_parts(predictive, data).total;
}

}  // namespace gfzip
