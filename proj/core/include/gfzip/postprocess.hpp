#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gfzip/model.hpp"

namespace gfzip {

/// Identified factor quantities: lambda = lambda* phi^{1/2}, u = u* phi^{-1/2}.
struct ScaleRecovered {
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd u;
};

/// Column-wise rescaling; preserves every lambda u' product exactly. An empty
/// u_star (zero rows) passes through.
ScaleRecovered recover_scale(const Eigen::MatrixXd& lambda_star,
                             const Eigen::MatrixXd& u_star, const Eigen::VectorXd& phi);

struct VarimaxResult {
  Eigen::MatrixXd rotated;
  Eigen::MatrixXd rotation;  // orthogonal, rotated = input * rotation
  int iterations = 0;
  bool converged = true;
};

/// Sum over columns of the variance of squared loadings.
double varimax_criterion(const Eigen::MatrixXd& loadings);

/// Orthogonal rotation maximizing the varimax criterion via pairwise
/// updates; K = 1 returns the input unchanged.
VarimaxResult varimax(const Eigen::MatrixXd& loadings, double tol = 1e-10,
                      int max_iter = 1000);

/// Signed column permutation: output column k = signs[k] * input column perm[k].
struct SignedPermutation {
  std::vector<int> perm;
  std::vector<double> signs;

  bool identity() const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
};

struct AlignmentReport {
  Eigen::MatrixXd reference;
  std::vector<Eigen::MatrixXd> rotations;        // per-draw varimax rotation (pipeline only)
  std::vector<SignedPermutation> transforms;     // per-draw signed permutation
  int iterations = 0;
  bool converged = false;
};

/// Aligns loading draws by signed column permutations: each draw gets the
/// transform minimizing Frobenius distance to a running reference (initially
/// the varimax-rotated mean draw, unless one is supplied), the reference is
/// recomputed as the mean of transformed draws, and the loop repeats to
/// convergence. The same transform applies to the matching u draw when
/// given. K must not exceed 6 (exhaustive K! 2^K search).
AlignmentReport align_draws(std::vector<Eigen::MatrixXd>& lambda_draws,
                            std::vector<Eigen::MatrixXd>* u_draws = nullptr,
                            const Eigen::MatrixXd* initial_reference = nullptr,
                            double tol = 1e-8, int max_iter = 100);

/// Full identification pipeline on retained draws: scale recovery, per-draw
/// varimax, signed-permutation alignment. Fills draws.lambda (and draws.u
/// when u* draws were retained).
AlignmentReport postprocess_draws(PosteriorDraws& draws);

struct Summary {
  double mean = 0;
  double lower = 0;  // 2.5% point
  double upper = 0;  // 97.5% point
};

/// Linear-interpolation (type 7) sample quantile.
double quantile(std::vector<double> values, double p);

/// Posterior mean and central 95% credible interval.
Summary summarize(std::span<const double> draws);

}  // namespace gfzip
