#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace testutil {

struct SampleMoments {
  double mean = 0;
  double variance = 0;
  double se_mean = 0;
  double se_variance = 0;
  std::size_t n = 0;
};

inline SampleMoments moments(const std::vector<double>& sample) {
  SampleMoments m;
  m.n = sample.size();
  m.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(m.n);
  double m2 = 0, m4 = 0;
  for (double x : sample) {
    const double d = x - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(m.n);
  m4 /= static_cast<double>(m.n);
  m.variance = m2 * static_cast<double>(m.n) / static_cast<double>(m.n - 1);
  m.se_mean = std::sqrt(m2 / static_cast<double>(m.n));
  m.se_variance = std::sqrt(std::max(m4 - m2 * m2, 0.0) / static_cast<double>(m.n));
  return m;
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// asymptotic Kolmogorov-Smirnov p-value
inline double kolmogorov_pvalue(double lambda) {
  double p = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double ks_pvalue_one_sample(std::vector<double> sample,
                                   const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  const double sqrt_n = std::sqrt(n);
  return kolmogorov_pvalue((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
}

inline double ks_pvalue_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] <= b[ib]) {
      ++ia;
    } else {
      ++ib;
    }
    d = std::max(d, std::fabs(static_cast<double>(ia) / a.size() -
                              static_cast<double>(ib) / b.size()));
  }
  const double n_eff = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                       static_cast<double>(a.size() + b.size());
  const double sqrt_n = std::sqrt(n_eff);
  return kolmogorov_pvalue((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
}

// independent NB oracle: direct log-gamma evaluation
inline double nb_pmf_oracle(long y, double r, double psi) {
  const double yd = static_cast<double>(y);
  const double log_norm = std::lgamma(yd + r) - std::lgamma(r) - std::lgamma(yd + 1.0);
  const double log_kernel = yd * psi - (yd + r) * (psi > 0 ? psi + std::log1p(std::exp(-psi))
                                                           : std::log1p(std::exp(psi)));
  return std::exp(log_norm + log_kernel);
}

inline double poisson_pmf_oracle(long y, double mean) {
  return std::exp(-mean + static_cast<double>(y) * std::log(mean) -
                  std::lgamma(static_cast<double>(y) + 1.0));
}

}  // namespace testutil
