#include "gfzip/distributions.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "gfzip/model.hpp"

namespace gfzip {

namespace {

constexpr double kTailLoss = 1e-12;   // mass allowed beyond the open-interval cap
constexpr double kJitter = 1e-10;
constexpr double kPivotFloor = 1e-12;

// pmf(y+1)/pmf(y) for NB(r, psi) in log form.
double nb_log_ratio(double y, double r, double log_q) {
  return std::log(y + r) + log_q - std::log(y + 1.0);
}

std::int64_t draw_full_nb(double r, double psi, RngStream& rng) {
  // gamma-Poisson mixture: Y ~ Po(G), G ~ Ga(r, scale e^psi)
  const double scale = std::exp(psi);
  if (!std::isfinite(scale)) {
    throw degenerate_support_error("negative-binomial scale overflow (psi = " +
                                   std::to_string(psi) + ")");
  }
  const double g = rng.gamma(r, scale);
  if (!(g < 1e18)) {
    throw degenerate_support_error("negative-binomial mean overflow");
  }
  return rng.poisson(g);
}

std::int64_t sample_finite_interval(double r, double psi, std::int64_t lo,
                                    std::int64_t hi, RngStream& rng) {
  const double log_q = -log1p_exp(-psi);
  const std::int64_t width = hi - lo;
  std::vector<double> log_w(static_cast<std::size_t>(width));
  log_w[0] = 0.0;
  double max_lw = 0.0;
  for (std::int64_t k = 1; k < width; ++k) {
    log_w[static_cast<std::size_t>(k)] =
        log_w[static_cast<std::size_t>(k - 1)] +
        nb_log_ratio(static_cast<double>(lo + k - 1), r, log_q);
    max_lw = std::max(max_lw, log_w[static_cast<std::size_t>(k)]);
  }
  if (!std::isfinite(max_lw)) {
    throw degenerate_support_error("no negative-binomial mass on the interval");
  }
  double total = 0.0;
  for (double& w : log_w) {
    w = std::exp(w - max_lw);
    total += w;
  }
  const double target = rng.uniform() * total;
  double cum = 0.0;
  for (std::int64_t k = 0; k < width; ++k) {
    cum += log_w[static_cast<std::size_t>(k)];
    if (cum >= target) return lo + k;
  }
  return hi - 1;
}

std::int64_t sample_open_interval(double r, double psi, std::int64_t lo, RngStream& rng) {
  if (lo == 0) return draw_full_nb(r, psi, rng);

  const double log_q = -log1p_exp(-psi);
  const double mode = r > 1.0 ? std::floor((r - 1.0) * std::exp(psi)) : 0.0;
  if (mode > static_cast<double>(lo)) {
    // the tail holds a non-negligible share of the full law
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const std::int64_t y = draw_full_nb(r, psi, rng);
      if (y >= lo) return y;
    }
    throw std::runtime_error("truncated negative-binomial rejection did not terminate");
  }

  // weights decay beyond the mode; enumerate until the residual mass is
  // below the cap budget
  std::vector<double> weights;
  weights.push_back(1.0);
  double cum = 1.0;
  double y = static_cast<double>(lo);
  double t = 1.0;
  constexpr std::size_t kMaxTerms = 10'000'000;
  while (weights.size() < kMaxTerms) {
    t *= std::exp(nb_log_ratio(y, r, log_q));
    y += 1.0;
    if (!(t > cum * 1e-15) && y > mode) break;
    weights.push_back(t);
    cum += t;
  }
  if (!std::isfinite(cum) || cum <= 0.0) {
    throw degenerate_support_error("no negative-binomial mass on the interval");
  }
  const double target = std::min(rng.uniform(), 1.0 - kTailLoss) * cum;
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (acc >= target) return lo + static_cast<std::int64_t>(k);
  }
  return lo + static_cast<std::int64_t>(weights.size()) - 1;
}

// Cholesky with a jitter retry once the smallest pivot degenerates.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m, int* jitter_events) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  bool degenerate = llt.info() != Eigen::Success;
  if (!degenerate) {
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      if (l(i, i) * l(i, i) < kPivotFloor) {
        degenerate = true;
        break;
      }
    }
  }
  if (degenerate) {
    Eigen::MatrixXd fixed = m + kJitter * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    llt.compute(fixed);
    if (jitter_events) ++(*jitter_events);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("Cholesky factorization failed after jitter");
    }
  }
  return llt;
}

Eigen::VectorXd standard_normals(Eigen::Index d, RngStream& rng) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

std::int64_t sample_trunc_nb(double r, double psi, std::int64_t lo,
                             std::optional<std::int64_t> hi, RngStream& rng) {
  if (!(r > 0) || !std::isfinite(r)) throw std::invalid_argument("nb r must be positive finite");
  if (lo < 0) throw std::invalid_argument("interval lower bound must be non-negative");
  if (hi && *hi <= lo) throw std::invalid_argument("interval must be non-empty");
  if (std::isnan(psi) || psi == std::numeric_limits<double>::infinity()) {
    throw degenerate_support_error("non-finite negative-binomial tilt");
  }
  if (psi == -std::numeric_limits<double>::infinity()) {
    if (lo == 0) return 0;  // point mass at zero
    throw degenerate_support_error("no negative-binomial mass on the interval");
  }
  if (hi && *hi == lo + 1) return lo;
  if (hi) return sample_finite_interval(r, psi, lo, *hi, rng);
  return sample_open_interval(r, psi, lo, rng);
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& matrix,
                           MvnParam parameterization, RngStream& rng, int* jitter_events) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != mean.size()) {
    throw std::invalid_argument("sample_mvn dimension mismatch");
  }
  const auto llt = factor_spd(matrix, jitter_events);
  const Eigen::VectorXd z = standard_normals(mean.size(), rng);
  if (parameterization == MvnParam::covariance) {
    return mean + llt.matrixL() * z;
  }
  return mean + llt.matrixU().solve(z);
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& shift, RngStream& rng,
                                     int* jitter_events) {
  if (precision.rows() != precision.cols() || precision.rows() != shift.size()) {
    throw std::invalid_argument("sample_mvn_canonical dimension mismatch");
  }
  const auto llt = factor_spd(precision, jitter_events);
  const Eigen::VectorXd mean = llt.solve(shift);
  const Eigen::VectorXd z = standard_normals(shift.size(), rng);
  return mean + llt.matrixU().solve(z);
}

double sample_inv_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0) || !(rate > 0)) {
    throw std::invalid_argument("inverse-gamma parameters must be positive");
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double g = rng.gamma(shape, 1.0 / rate);
    const double x = 1.0 / g;
    if (std::isfinite(x) && x > 0) return x;
  }
  throw std::runtime_error("inverse-gamma sampling did not produce a positive value");
}

std::int64_t poisson_quantile(double mean, double p) {
  if (!(mean >= 0) || !std::isfinite(mean)) throw std::invalid_argument("bad poisson mean");
  if (!(p > 0) || !(p < 1)) throw std::invalid_argument("quantile level must be in (0,1)");
  if (mean == 0) return 0;
  const std::int64_t hard_cap =
      static_cast<std::int64_t>(mean + 20.0 * std::sqrt(mean) + 1000.0);
  double log_pmf = -mean;
  double cum = std::exp(log_pmf);
  std::int64_t y = 0;
  while (cum < p && y < hard_cap) {
    log_pmf += std::log(mean) - std::log(static_cast<double>(y + 1));
    cum += std::exp(log_pmf);
    ++y;
  }
  return y;
}

}  // namespace gfzip
