#include "gfzip/polya_gamma.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gfzip {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;  // proposal split point of the Devroye sampler

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Alternating-series coefficients of the Jacobi density around the split point.
double jacobi_coef(int n, double x) {
  const double k = n + 0.5;
  if (x > kTrunc) {
    return kPi * k * std::exp(-0.5 * k * k * kPi * kPi * x);
  }
  return kPi * k * std::pow(2.0 / (kPi * x), 1.5) * std::exp(-2.0 * k * k / x);
}

// P(proposal takes the truncated-exponential branch) for tilt z >= 0.
double exponential_branch_prob(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + std::log(normal_cdf(b));
  const double xa = x0 + z + std::log(normal_cdf(a));
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian IG(1/z, 1) restricted to (0, kTrunc].
double truncated_inverse_gaussian(double z, RngStream& rng) {
  double x = kTrunc + 1.0;
  if (z < 1.0 / kTrunc) {
    // mean above the truncation point: rejection from the z = 0 law with an
    // exponential tilt correction
    while (true) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      if (rng.uniform() <= std::exp(-0.5 * z * z * x)) return x;
    }
  }
  const double mu = 1.0 / z;
  while (x > kTrunc) {
    const double n = rng.normal();
    const double y = n * n;
    const double mu_y = mu * y;
    x = mu + 0.5 * mu * mu_y - 0.5 * mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

// Devroye rejection sampler for PG(1, c).
double sample_pg1(double c, RngStream& rng) {
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_exp = exponential_branch_prob(z);
  while (true) {
    double x;
    if (rng.uniform() < p_exp) {
      x = kTrunc + rng.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z, rng);
    }
    double s = jacobi_coef(0, x);
    const double y = rng.uniform() * s;
    int n = 0;
    while (true) {
      ++n;
      if (n % 2 == 1) {
        s -= jacobi_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += jacobi_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

// Truncated sum-of-gammas representation, used for fractional shapes b < 1:
//   omega = (1 / 2 pi^2) sum_k g_k / ((k - 1/2)^2 + (c / 2 pi)^2), g_k ~ Ga(b, 1).
// The stochastic sum is cut at kSeriesTerms and the tail mean added back.
double sample_pg_series(double b, double c, RngStream& rng) {
  constexpr int kSeriesTerms = 500;
  const double a2 = c * c / (4.0 * kPi * kPi);
  double sum = 0.0;
  double inv_sum = 0.0;
  for (int k = 1; k <= kSeriesTerms; ++k) {
    const double d = (k - 0.5) * (k - 0.5) + a2;
    sum += rng.gamma(b, 1.0) / d;
    inv_sum += 1.0 / d;
  }
  const PgMoments full = pg_moments(b, c);
  const double tail_mean = full.mean - b * inv_sum / (2.0 * kPi * kPi);
  return sum / (2.0 * kPi * kPi) + std::max(tail_mean, 0.0);
}

double sample_pg_gaussian(double b, double c, RngStream& rng) {
  const PgMoments m = pg_moments(b, c);
  const double sd = std::sqrt(m.variance);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double x = m.mean + sd * rng.normal();
    if (x > 0) return x;
  }
  return m.mean;
}

}  // namespace

PgMoments pg_moments(double b, double c) {
  if (!(b > 0)) throw std::invalid_argument("pg_moments requires b > 0");
  PgMoments m;
  const double ac = std::fabs(c);
  if (ac < 1e-3) {
    const double c2 = c * c;
    m.mean = b * (0.25 - c2 / 48.0);
    m.variance = b * (1.0 / 24.0 - c2 / 120.0);
    return m;
  }
  m.mean = b / (2.0 * c) * std::tanh(0.5 * c);
  // sech^2(c/2) through exp(-|c|/2) stays finite for any c
  const double e = std::exp(-0.5 * ac);
  const double sech_half = 2.0 * e / (1.0 + e * e);
  m.variance =
      b / (4.0 * c * c * c) * (2.0 * std::tanh(0.5 * c) - c * sech_half * sech_half);
  return m;
}

double sample_pg(double b, double c, RngStream& rng, int b_exact) {
  if (!(b > 0)) throw std::invalid_argument("sample_pg requires b > 0");
  if (!std::isfinite(c)) throw std::invalid_argument("sample_pg requires finite c");
  if (b > b_exact) return sample_pg_gaussian(b, c, rng);
  const double whole = std::floor(b);
  const double frac = b - whole;
  double draw = 0.0;
  for (long k = 0; k < static_cast<long>(whole); ++k) draw += sample_pg1(c, rng);
  if (frac > 0) draw += sample_pg_series(frac, c, rng);
  return draw;
}

}  // namespace gfzip
