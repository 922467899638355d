#pragma once

#include "gfzip/rng.hpp"

namespace gfzip {

struct PgMoments {
  double mean = 0;
  double variance = 0;
};

/// Exact mean and variance of PG(b, c):
///   mean = (b / 2c) tanh(c/2),  variance = (b / 4c^3) (sinh c - c) / cosh^2(c/2)
/// with the c -> 0 limits b/4 and b/24 evaluated by series to avoid
/// cancellation.
PgMoments pg_moments(double b, double c);

/// Draw from the tilted Polya-Gamma distribution PG(b, c).
///
/// Dispatch: exact Devroye rejection sampler for b = 1; a sum of b exact
/// draws for integer b <= b_exact; for b > b_exact a positive-truncated
/// Gaussian matched to the exact moments above. Non-integer b <= b_exact is
/// split into floor(b) exact draws plus a truncated sum-of-gammas remainder.
double sample_pg(double b, double c, RngStream& rng, int b_exact = 20);

}  // namespace gfzip
