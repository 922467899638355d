#pragma once

#include <Eigen/Dense>

#include "gfzip/dataset.hpp"
#include "gfzip/model.hpp"
#include "gfzip/rng.hpp"

namespace gfzip {

/// Posterior predictive mean and variance of the per-(dimension, group)
/// occupancy counts, each J x G.
struct PredictiveCounts {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;
};

struct PredictiveOptions {
  /// Redraw each individual's factor from N(0, Phi) per draw instead of
  /// reusing the retained score.
  bool resample_factors = false;
};

/// Observed counts c_jg, J x G.
Eigen::MatrixXd observed_group_counts(const GroupedDataset& data);

/// Per retained draw m, simulates a replicate table from the zero-inflated
/// Poisson law under that draw's parameters and factor scores (raw working
/// parameters; their products match the identified ones), groups it, and
/// accumulates the across-draw mean and variance of each cell count.
/// Substreams are keyed by ("predictive-draw", m) and individual index, so a
/// duplicate run with the same stream reproduces the counts.
PredictiveCounts predictive_group_counts(const PosteriorDraws& draws,
                                         const GroupedDataset& data,
                                         const ModelConfig& config, const RngStream& rng,
                                         PredictiveOptions options = {});

/// PPL = (1/N) sum_jg V_jg + (1/(N+1)) sum_jg (c_jg - E_jg)^2.
double ppl(const PredictiveCounts& predictive, const GroupedDataset& data);

struct PplParts {
  double variance_part = 0;
  double fit_part = 0;
  double total = 0;
};

PplParts ppl_parts(const PredictiveCounts& predictive, const GroupedDataset& data);

}  // namespace gfzip
