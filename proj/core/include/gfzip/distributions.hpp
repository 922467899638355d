#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "gfzip/rng.hpp"

namespace gfzip {

/// The requested truncation interval carries (numerically) no probability
/// mass under the given negative-binomial law.
struct degenerate_support_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Draw from NB(r, psi) restricted to [lo, hi); hi absent means unbounded.
/// Finite intervals use exact inverse-CDF over the enumerated support; the
/// open top interval walks the normalized tail weights, capped once the
/// accumulated mass reaches 1 - 1e-12 of the interval total.
std::int64_t sample_trunc_nb(double r, double psi, std::int64_t lo,
                             std::optional<std::int64_t> hi, RngStream& rng);

enum class MvnParam { covariance, precision };

/// Exact multivariate-normal draw via Cholesky; the precision
/// parameterization solves triangular systems rather than inverting.
/// A factorization whose smallest pivot drops below 1e-12 gets a 1e-10*I
/// jitter retry, counted in *jitter_events when provided.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& matrix,
                           MvnParam parameterization, RngStream& rng,
                           int* jitter_events = nullptr);

/// Draw from N(A^{-1} h, A^{-1}) given canonical parameters (precision A,
/// shift h).
Eigen::VectorXd sample_mvn_canonical(const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& shift, RngStream& rng,
                                     int* jitter_events = nullptr);

/// Inverse gamma IG(shape, rate): the reciprocal of a Gamma(shape, rate) draw.
double sample_inv_gamma(double shape, double rate, RngStream& rng);

/// Smallest y with Poisson(mean) CDF >= p.
std::int64_t poisson_quantile(double mean, double p);

}  // namespace gfzip
