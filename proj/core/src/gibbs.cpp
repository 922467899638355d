#include "gfzip/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gfzip/distributions.hpp"
#include "gfzip/polya_gamma.hpp"

namespace gfzip {

namespace {

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double at_risk_given_zero_prob(double pi, double r, double psi) {
  if (pi <= 0) return 0.0;
  if (pi >= 1) return 1.0;
  const double log_v = -log1p_exp(psi);
  const double log_num = std::log(pi) + r * log_v;
  const double log_den = log_sum_exp(std::log1p(-pi), log_num);
  return std::exp(log_num - log_den);
}

GibbsSampler::GibbsSampler(const GroupedDataset& data, const ModelConfig& config,
                           RngStream root, RunOptions options)
    : data_(data),
      config_(config),
      options_(std::move(options)),
      phi_stream_(root.substream("phi")),
      init_stream_(root.substream("init")) {
  config_.validate(data_.n_covariates());
  const int n = data_.n_individuals();
  const int n_dims = data_.n_dims();
  const int p = data_.n_covariates();
  const int k = config_.n_factors;
  const int d = p + k;

  const Eigen::MatrixXd b0_full = config_.resolved_B0(p);
  Eigen::MatrixXd b0_inv = b0_full.llt().solve(Eigen::MatrixXd::Identity(p, p));
  prior_precision_ = Eigen::MatrixXd::Identity(d, d);
  prior_precision_.topLeftCorner(p, p) = b0_inv;
  Eigen::VectorXd bt0 = Eigen::VectorXd::Zero(d);
  bt0.head(p) = config_.resolved_b0(p);
  prior_shift_ = prior_precision_ * bt0;
  ig_a_ = config_.resolved_a();
  ig_b_ = config_.resolved_b();
  log_r_ = std::log(config_.nb_r);

  intervals_.reserve(static_cast<std::size_t>(data_.scheme().group_count()));
  for (int g = 0; g < data_.scheme().group_count(); ++g) {
    intervals_.push_back(data_.scheme().interval(g));
  }

  std::vector<std::uint64_t> keys = options_.unit_stream_keys;
  if (keys.empty()) {
    keys.resize(static_cast<std::size_t>(n));
    std::iota(keys.begin(), keys.end(), std::uint64_t{0});
  }
  if (static_cast<int>(keys.size()) != n) {
    throw std::invalid_argument("unit_stream_keys size must equal N");
  }
  unit_order_.resize(static_cast<std::size_t>(n));
  std::iota(unit_order_.begin(), unit_order_.end(), 0);
  std::stable_sort(unit_order_.begin(), unit_order_.end(),
                   [&](int a, int b) { return keys[a] < keys[b]; });
  unit_streams_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) unit_streams_.push_back(root.substream("unit", keys[i]));
  block1_streams_.reserve(static_cast<std::size_t>(n_dims));
  block2_streams_.reserve(static_cast<std::size_t>(n_dims));
  for (int j = 0; j < n_dims; ++j) {
    block1_streams_.push_back(root.substream("block1", static_cast<std::uint64_t>(j)));
    block2_streams_.push_back(root.substream("block2", static_cast<std::uint64_t>(j)));
  }
}

void GibbsSampler::require_state() const {
  if (!has_state_) throw std::logic_error("sampler state not initialized");
}

void GibbsSampler::set_state(ChainState state) {
  const int n = data_.n_individuals();
  const int n_dims = data_.n_dims();
  const int p = data_.n_covariates();
  const int k = config_.n_factors;
  if (state.beta.rows() != 2 * n_dims || state.beta.cols() != p ||
      state.lambda_star.rows() != 2 * n_dims || state.lambda_star.cols() != k ||
      state.u_star.rows() != n || state.u_star.cols() != k || state.phi.size() != k ||
      state.z.rows() != n || state.z.cols() != n_dims || state.y_star.rows() != n ||
      state.y_star.cols() != n_dims || state.omega1.rows() != n ||
      state.omega1.cols() != n_dims || state.omega2.rows() != n ||
      state.omega2.cols() != n_dims) {
    throw std::invalid_argument("chain state dimensions do not match data/config");
  }
  state_ = std::move(state);
  has_state_ = true;
}

void GibbsSampler::compute_eta(Eigen::MatrixXd& eta1, Eigen::MatrixXd& eta2) const {
  const int n_dims = data_.n_dims();
  eta1.noalias() = data_.covariates() * state_.beta.topRows(n_dims).transpose();
  eta2.noalias() = data_.covariates() * state_.beta.bottomRows(n_dims).transpose();
  if (config_.n_factors > 0) {
    eta1.noalias() += state_.u_star * state_.lambda_star.topRows(n_dims).transpose();
    eta2.noalias() += state_.u_star * state_.lambda_star.bottomRows(n_dims).transpose();
  }
}

void GibbsSampler::initialize() {
  const int n = data_.n_individuals();
  const int n_dims = data_.n_dims();
  const int p = data_.n_covariates();
  const int k = config_.n_factors;

  state_.beta = Eigen::MatrixXd::Zero(2 * n_dims, p);
  state_.lambda_star.resize(2 * n_dims, k);
  for (int row = 0; row < 2 * n_dims; ++row) {
    for (int col = 0; col < k; ++col) state_.lambda_star(row, col) = 0.1 * init_stream_.normal();
  }
  state_.phi = Eigen::VectorXd::Ones(k);
  state_.u_star.resize(n, k);
  state_.z.resize(n, n_dims);
  state_.y_star.resize(n, n_dims);
  state_.omega1.resize(n, n_dims);
  state_.omega2.resize(n, n_dims);

  for (int i = 0; i < n; ++i) {
    RngStream& rng = unit_streams_[static_cast<std::size_t>(i)];
    for (int col = 0; col < k; ++col) state_.u_star(i, col) = rng.normal();
    for (int j = 0; j < n_dims; ++j) {
      const int g = data_.groups()(i, j);
      const bool at_risk = g > 0 ? true : rng.uniform() < 0.5;
      state_.z(i, j) = at_risk ? 1 : 0;
      if (!at_risk) {
        state_.y_star(i, j) = 0;
      } else {
        const GroupInterval iv = intervals_[static_cast<std::size_t>(g)];
        state_.y_star(i, j) = iv.hi ? (iv.lo + *iv.hi - 1) / 2 : iv.lo + 1;
      }
    }
  }

  compute_eta(eta1_, eta2_);
  for (int i = 0; i < n; ++i) {
    RngStream& rng = unit_streams_[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_dims; ++j) {
      state_.omega1(i, j) = sample_pg(1.0, eta1_(i, j), rng);
      state_.omega2(i, j) = sample_pg(
          config_.nb_r + static_cast<double>(state_.y_star(i, j)), eta2_(i, j) - log_r_, rng);
    }
  }
  has_state_ = true;
}

void GibbsSampler::step_latent_counts() {
  require_state();
  compute_eta(eta1_, eta2_);
  for (int i : unit_order_) {
    RngStream& rng = unit_streams_[static_cast<std::size_t>(i)];
    for (int j = 0; j < data_.n_dims(); ++j) {
      if (!state_.z(i, j)) {
        state_.y_star(i, j) = 0;
        continue;
      }
      const GroupInterval iv = intervals_[static_cast<std::size_t>(data_.groups()(i, j))];
      if (iv.singleton()) {
        state_.y_star(i, j) = iv.lo;
        continue;
      }
      try {
        state_.y_star(i, j) =
            sample_trunc_nb(config_.nb_r, eta2_(i, j) - log_r_, iv.lo, iv.hi, rng);
      } catch (const degenerate_support_error& e) {
        throw degenerate_support_error("individual " + std::to_string(i) + ", dimension " +
                                       std::to_string(j) + ", group " +
                                       std::to_string(data_.groups()(i, j)) + ": " + e.what());
      }
    }
  }
}

void GibbsSampler::step_z() {
  require_state();
  compute_eta(eta1_, eta2_);
  for (int i : unit_order_) {
    RngStream& rng = unit_streams_[static_cast<std::size_t>(i)];
    for (int j = 0; j < data_.n_dims(); ++j) {
      if (data_.groups()(i, j) > 0 || state_.y_star(i, j) > 0) {
        state_.z(i, j) = 1;
        continue;
      }
      const double pi = at_risk_prob(eta1_(i, j));
      const double p = at_risk_given_zero_prob(pi, config_.nb_r, eta2_(i, j) - log_r_);
      state_.z(i, j) = rng.uniform() < p ? 1 : 0;
      if (!state_.z(i, j)) state_.y_star(i, j) = 0;
    }
  }
}

void GibbsSampler::step_omega() {
  require_state();
  compute_eta(eta1_, eta2_);
  for (int i : unit_order_) {
    RngStream& rng = unit_streams_[static_cast<std::size_t>(i)];
    for (int j = 0; j < data_.n_dims(); ++j) {
      state_.omega1(i, j) = sample_pg(1.0, eta1_(i, j), rng);
      if (state_.z(i, j)) {
        state_.omega2(i, j) = sample_pg(
            config_.nb_r + static_cast<double>(state_.y_star(i, j)), eta2_(i, j) - log_r_, rng);
      }
    }
  }
}

void GibbsSampler::step_block_h1() {
  require_state();
  const int n_dims = data_.n_dims();
  const int p = data_.n_covariates();
  const int k = config_.n_factors;
  const int d = p + k;
  Eigen::VectorXd xt(d);
  for (int j = 0; j < n_dims; ++j) {
    Eigen::MatrixXd precision = prior_precision_;
    Eigen::VectorXd shift = prior_shift_;
    for (int i : unit_order_) {
      xt.head(p) = data_.covariates().row(i);
      if (k > 0) xt.tail(k) = state_.u_star.row(i);
      precision.noalias() += state_.omega1(i, j) * xt * xt.transpose();
      shift.noalias() += (static_cast<double>(state_.z(i, j)) - 0.5) * xt;
    }
    Eigen::VectorXd draw;
    try {
      draw = sample_mvn_canonical(precision, shift, block1_streams_[static_cast<std::size_t>(j)],
                                  &diag_.jitter_events);
    } catch (const std::exception& e) {
      throw std::runtime_error("at-risk block " + std::to_string(j) + ": " + e.what());
    }
    state_.beta.row(j) = draw.head(p);
    if (k > 0) state_.lambda_star.row(j) = draw.tail(k);
  }
}

void GibbsSampler::step_block_h2() {
  require_state();
  const int n_dims = data_.n_dims();
  const int p = data_.n_covariates();
  const int k = config_.n_factors;
  const int d = p + k;
  const double r = config_.nb_r;
  Eigen::VectorXd xt(d);
  for (int j = 0; j < n_dims; ++j) {
    // empty at-risk set leaves the prior, the conjugate limit of the sum
    Eigen::MatrixXd precision = prior_precision_;
    Eigen::VectorXd shift = prior_shift_;
    for (int i : unit_order_) {
      if (!state_.z(i, j)) continue;
      xt.head(p) = data_.covariates().row(i);
      if (k > 0) xt.tail(k) = state_.u_star.row(i);
      const double w = state_.omega2(i, j);
      precision.noalias() += w * xt * xt.transpose();
      shift.noalias() +=
          (0.5 * (static_cast<double>(state_.y_star(i, j)) - r) + w * log_r_) * xt;
    }
    Eigen::VectorXd draw;
    try {
      draw = sample_mvn_canonical(precision, shift, block2_streams_[static_cast<std::size_t>(j)],
                                  &diag_.jitter_events);
    } catch (const std::exception& e) {
      throw std::runtime_error("count block " + std::to_string(j) + ": " + e.what());
    }
    state_.beta.row(n_dims + j) = draw.head(p);
    if (k > 0) state_.lambda_star.row(n_dims + j) = draw.tail(k);
  }
}

void GibbsSampler::step_u() {
  require_state();
  const int k = config_.n_factors;
  if (k == 0) return;
  const int n_dims = data_.n_dims();
  const double r = config_.nb_r;
  const Eigen::MatrixXd lambda1 = state_.lambda_star.topRows(n_dims);
  const Eigen::MatrixXd lambda2 = state_.lambda_star.bottomRows(n_dims);
  const Eigen::MatrixXd xb1 =
      data_.covariates() * state_.beta.topRows(n_dims).transpose();
  const Eigen::MatrixXd xb2 =
      data_.covariates() * state_.beta.bottomRows(n_dims).transpose();
  const Eigen::MatrixXd phi_inv =
      state_.phi.cwiseInverse().asDiagonal().toDenseMatrix();
  Eigen::MatrixXd precision(k, k);
  Eigen::VectorXd shift(k);
  for (int i : unit_order_) {
    precision = phi_inv;
    shift.setZero();
    for (int j = 0; j < n_dims; ++j) {
      const double w1 = state_.omega1(i, j);
      precision.noalias() += w1 * lambda1.row(j).transpose() * lambda1.row(j);
      shift.noalias() += (static_cast<double>(state_.z(i, j)) - 0.5 - w1 * xb1(i, j)) *
                         lambda1.row(j).transpose();
      if (state_.z(i, j)) {
        const double w2 = state_.omega2(i, j);
        precision.noalias() += w2 * lambda2.row(j).transpose() * lambda2.row(j);
        shift.noalias() +=
            (0.5 * (static_cast<double>(state_.y_star(i, j)) - r) - w2 * (xb2(i, j) - log_r_)) *
            lambda2.row(j).transpose();
      }
    }
    try {
      state_.u_star.row(i) = sample_mvn_canonical(
          precision, shift, unit_streams_[static_cast<std::size_t>(i)], &diag_.jitter_events);
    } catch (const std::exception& e) {
      throw std::runtime_error("factor score " + std::to_string(i) + ": " + e.what());
    }
  }
}

void GibbsSampler::step_phi() {
  require_state();
  const int k = config_.n_factors;
  if (k == 0) return;
  const double n = static_cast<double>(data_.n_individuals());
  for (int col = 0; col < k; ++col) {
    double ss = 0.0;  // accumulated in unit-key order for permutation invariance
    for (int i : unit_order_) ss += state_.u_star(i, col) * state_.u_star(i, col);
    state_.phi(col) =
        sample_inv_gamma(ig_a_(col) + 0.5 * n, ig_b_(col) + 0.5 * ss, phi_stream_);
  }
}

void GibbsSampler::sweep() {
  const auto guarded = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const degenerate_support_error&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("step ") + name + ": " + e.what());
    }
  };
  guarded("y_star", [&] { step_latent_counts(); });
  guarded("z", [&] { step_z(); });
  guarded("omega", [&] { step_omega(); });
  guarded("block_h1", [&] { step_block_h1(); });
  guarded("block_h2", [&] { step_block_h2(); });
  guarded("u", [&] { step_u(); });
  guarded("phi", [&] { step_phi(); });
}

PosteriorDraws GibbsSampler::run() {
  const int n = data_.n_individuals();
  const int n_dims = data_.n_dims();
  const int p = data_.n_covariates();
  const int k = config_.n_factors;
  const int retained = config_.n_retained();

  initialize();

  PosteriorDraws draws;
  draws.beta.reserve(static_cast<std::size_t>(retained));
  draws.lambda_star.reserve(static_cast<std::size_t>(retained));
  draws.phi.reserve(static_cast<std::size_t>(retained));
  if (options_.retain_u) draws.u_star.reserve(static_cast<std::size_t>(retained));
  if (options_.retain_z) draws.z.reserve(static_cast<std::size_t>(retained));
  draws.pi_hat = Eigen::MatrixXd::Zero(n, n_dims);

  diag_.beta_mean = Eigen::MatrixXd::Zero(2 * n_dims, p);
  diag_.beta_var = Eigen::MatrixXd::Zero(2 * n_dims, p);
  diag_.lambda_star_mean = Eigen::MatrixXd::Zero(2 * n_dims, k);
  diag_.lambda_star_var = Eigen::MatrixXd::Zero(2 * n_dims, k);
  diag_.phi_mean = Eigen::VectorXd::Zero(k);
  diag_.phi_var = Eigen::VectorXd::Zero(k);

  const auto welford = [](auto& mean, auto& m2, const auto& x, int count) {
    const auto delta = (x - mean).eval();
    mean += delta / static_cast<double>(count);
    m2.array() += delta.array() * (x - mean).array();
  };

  const auto start = std::chrono::steady_clock::now();
  for (int iter = 1; iter <= config_.n_iter; ++iter) {
    try {
      sweep();
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(iter) + ": " + e.what());
    }
    if (iter <= config_.n_burnin || (iter - config_.n_burnin) % config_.thin != 0) continue;
    draws.beta.push_back(state_.beta);
    draws.lambda_star.push_back(state_.lambda_star);
    draws.phi.push_back(state_.phi);
    if (options_.retain_u) draws.u_star.push_back(state_.u_star);
    if (options_.retain_z) draws.z.push_back(state_.z);
    draws.pi_hat += state_.z.cast<double>();
    ++draws.n_retained;
    welford(diag_.beta_mean, diag_.beta_var, state_.beta, draws.n_retained);
    welford(diag_.lambda_star_mean, diag_.lambda_star_var, state_.lambda_star,
            draws.n_retained);
    welford(diag_.phi_mean, diag_.phi_var, state_.phi, draws.n_retained);
  }
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
  diag_.total_seconds = elapsed.count();
  diag_.seconds_per_sweep = elapsed.count() / static_cast<double>(config_.n_iter);
  if (draws.n_retained > 1) {
    const double denom = static_cast<double>(draws.n_retained - 1);
    diag_.beta_var /= denom;
    diag_.lambda_star_var /= denom;
    diag_.phi_var /= denom;
  }
  draws.pi_hat /= static_cast<double>(draws.n_retained);
  return draws;
}

PosteriorDraws run_chain(const GroupedDataset& data, const ModelConfig& config,
                         RunOptions options, ChainDiagnostics* diagnostics) {
  return run_chain(data, config, RngStream(config.seed), std::move(options), diagnostics);
}

PosteriorDraws run_chain(const GroupedDataset& data, const ModelConfig& config,
                         RngStream root, RunOptions options, ChainDiagnostics* diagnostics) {
  GibbsSampler sampler(data, config, std::move(root), std::move(options));
  PosteriorDraws draws = sampler.run();
  if (diagnostics) *diagnostics = sampler.diagnostics();
  return draws;
}

}  // namespace gfzip
