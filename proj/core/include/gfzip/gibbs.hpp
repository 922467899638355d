#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gfzip/dataset.hpp"
#include "gfzip/model.hpp"
#include "gfzip/rng.hpp"

namespace gfzip {

struct RunOptions {
  bool retain_u = true;
  bool retain_z = true;
  /// Per-individual substream keys; empty means 0..N-1. The j-block sums are
  /// accumulated in key order, so permuting individuals together with their
  /// keys reproduces the retained draws bit for bit.
  std::vector<std::uint64_t> unit_stream_keys;
};

struct ChainDiagnostics {
  double total_seconds = 0;
  double seconds_per_sweep = 0;
  int jitter_events = 0;
  Eigen::MatrixXd beta_mean, beta_var;
  Eigen::MatrixXd lambda_star_mean, lambda_star_var;
  Eigen::VectorXd phi_mean, phi_var;
};

/// P(z = 1 | y* = 0) = pi v^r / (1 - pi (1 - v^r)) with v = 1/(1 + e^psi),
/// evaluated in log space.
double at_risk_given_zero_prob(double pi, double r, double psi);

/// One full Gibbs sweep over the expanded (working-parameter) model and the
/// chain driver. Sweep order: y* -> z -> omega -> (beta1, lambda1*) blocks ->
/// (beta2, lambda2*) blocks -> u* -> phi.
class GibbsSampler {
 public:
  GibbsSampler(const GroupedDataset& data, const ModelConfig& config, RngStream root,
               RunOptions options = {});

  /// Draws the initial state: beta = 0, lambda* ~ N(0, 0.1^2), u* ~ N(0,1),
  /// phi = 1, z forced by positive observations else Bernoulli(1/2), y* at
  /// the group midpoint, omegas drawn from their conditionals.
  void initialize();

  const ChainState& state() const { return state_; }
  void set_state(ChainState state);

  void step_latent_counts();
  void step_z();
  void step_omega();
  void step_block_h1();
  void step_block_h2();
  void step_u();
  void step_phi();
  void sweep();

  /// Full schedule: initialize, n_iter sweeps, post-burn-in thinned retention.
  PosteriorDraws run();

  const ChainDiagnostics& diagnostics() const { return diag_; }

 private:
  void require_state() const;
  void compute_eta(Eigen::MatrixXd& eta1, Eigen::MatrixXd& eta2) const;

  const GroupedDataset& data_;
  ModelConfig config_;
  RunOptions options_;

  Eigen::MatrixXd prior_precision_;      // blockdiag(B0^-1, I_K)
  Eigen::VectorXd prior_shift_;          // blockdiag(B0^-1, I_K) * (b0, 0)
  Eigen::VectorXd ig_a_, ig_b_;
  double log_r_ = 0;
  std::vector<GroupInterval> intervals_;  // per group

  std::vector<int> unit_order_;
  std::vector<RngStream> unit_streams_;
  std::vector<RngStream> block1_streams_, block2_streams_;
  RngStream phi_stream_;
  RngStream init_stream_;

  ChainState state_;
  bool has_state_ = false;
  ChainDiagnostics diag_;
  Eigen::MatrixXd eta1_, eta2_;  // scratch
};

PosteriorDraws run_chain(const GroupedDataset& data, const ModelConfig& config,
                         RunOptions options = {}, ChainDiagnostics* diagnostics = nullptr);

PosteriorDraws run_chain(const GroupedDataset& data, const ModelConfig& config,
                         RngStream root, RunOptions options = {},
                         ChainDiagnostics* diagnostics = nullptr);

}  // namespace gfzip
