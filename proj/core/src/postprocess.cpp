#include "gfzip/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gfzip {

ScaleRecovered recover_scale(const Eigen::MatrixXd& lambda_star,
                             const Eigen::MatrixXd& u_star, const Eigen::VectorXd& phi) {
  if (lambda_star.cols() != phi.size()) {
    throw std::invalid_argument("lambda*/phi dimension mismatch");
  }
  if (u_star.rows() > 0 && u_star.cols() != phi.size()) {
    throw std::invalid_argument("u*/phi dimension mismatch");
  }
  if ((phi.array() <= 0).any()) throw std::invalid_argument("phi must be positive");
  ScaleRecovered out;
  const Eigen::ArrayXd root = phi.array().sqrt();
  out.lambda = lambda_star.array().rowwise() * root.transpose();
  out.u = u_star.rows() > 0
              ? Eigen::MatrixXd(u_star.array().rowwise() / root.transpose())
              : u_star;
  return out;
}

double varimax_criterion(const Eigen::MatrixXd& loadings) {
  const double n = static_cast<double>(loadings.rows());
  const Eigen::ArrayXXd sq = loadings.array().square();
  double crit = 0.0;
  for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
    const double m = sq.col(k).mean();
    crit += sq.col(k).square().sum() / n - m * m;
  }
  return crit;
}

VarimaxResult varimax(const Eigen::MatrixXd& loadings, double tol, int max_iter) {
  const Eigen::Index k = loadings.cols();
  VarimaxResult result;
  result.rotated = loadings;
  result.rotation = Eigen::MatrixXd::Identity(k, k);
  if (k < 2) return result;

  const double n = static_cast<double>(loadings.rows());
  double crit = varimax_criterion(result.rotated);
  for (int pass = 1; pass <= max_iter; ++pass) {
    for (Eigen::Index p = 0; p + 1 < k; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) {
        const Eigen::ArrayXd x = result.rotated.col(p).array();
        const Eigen::ArrayXd y = result.rotated.col(q).array();
        const Eigen::ArrayXd u = x.square() - y.square();
        const Eigen::ArrayXd v = 2.0 * x * y;
        const double a = u.sum();
        const double b = v.sum();
        const double c = (u.square() - v.square()).sum();
        const double d = 2.0 * (u * v).sum();
        const double num = d - 2.0 * a * b / n;
        const double den = c - (a * a - b * b) / n;
        if (num == 0.0 && den == 0.0) continue;
        const double angle = 0.25 * std::atan2(num, den);
        const double cs = std::cos(angle);
        const double sn = std::sin(angle);
        const Eigen::VectorXd xp = cs * result.rotated.col(p) + sn * result.rotated.col(q);
        const Eigen::VectorXd yp = -sn * result.rotated.col(p) + cs * result.rotated.col(q);
        result.rotated.col(p) = xp;
        result.rotated.col(q) = yp;
        const Eigen::VectorXd rp = cs * result.rotation.col(p) + sn * result.rotation.col(q);
        const Eigen::VectorXd rq = -sn * result.rotation.col(p) + cs * result.rotation.col(q);
        result.rotation.col(p) = rp;
        result.rotation.col(q) = rq;
      }
    }
    const double next = varimax_criterion(result.rotated);
    result.iterations = pass;
    if (next - crit <= tol * std::max(1.0, std::fabs(crit))) {
      result.converged = true;
      return result;
    }
    crit = next;
  }
  result.converged = false;
  return result;
}

bool SignedPermutation::identity() const {
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] != static_cast<int>(i) || signs[i] != 1.0) return false;
  }
  return true;
}

Eigen::MatrixXd SignedPermutation::apply(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = signs[k] * m.col(perm[k]);
  }
  return out;
}

namespace {

// Best signed permutation minimizing ||apply(draw) - reference||_F, i.e.
// maximizing sum_k |cross(perm[k], k)| with cross = draw' * reference.
SignedPermutation best_signed_permutation(const Eigen::MatrixXd& draw,
                                          const Eigen::MatrixXd& reference) {
  const int k = static_cast<int>(draw.cols());
  const Eigen::MatrixXd cross = draw.transpose() * reference;
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> best = order;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int col = 0; col < k; ++col) score += std::fabs(cross(order[col], col));
    if (score > best_score) {
      best_score = score;
      best = order;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  SignedPermutation sp;
  sp.perm = best;
  sp.signs.resize(static_cast<std::size_t>(k));
  for (int col = 0; col < k; ++col) {
    sp.signs[static_cast<std::size_t>(col)] = cross(best[col], col) < 0 ? -1.0 : 1.0;
  }
  return sp;
}

SignedPermutation compose(const SignedPermutation& first, const SignedPermutation& second) {
  SignedPermutation out;
  const std::size_t k = first.perm.size();
  out.perm.resize(k);
  out.signs.resize(k);
  for (std::size_t col = 0; col < k; ++col) {
    out.perm[col] = first.perm[static_cast<std::size_t>(second.perm[col])];
    out.signs[col] = second.signs[col] * first.signs[static_cast<std::size_t>(second.perm[col])];
  }
  return out;
}

// Common canonical form: order columns by descending reference norm and make
// the dominant entry of each column positive, applied uniformly to all draws.
SignedPermutation canonical_transform(const Eigen::MatrixXd& reference) {
  const int k = static_cast<int>(reference.cols());
  SignedPermutation sp;
  sp.perm.resize(static_cast<std::size_t>(k));
  std::iota(sp.perm.begin(), sp.perm.end(), 0);
  std::stable_sort(sp.perm.begin(), sp.perm.end(), [&](int a, int b) {
    return reference.col(a).norm() > reference.col(b).norm();
  });
  sp.signs.assign(static_cast<std::size_t>(k), 1.0);
  for (int col = 0; col < k; ++col) {
    Eigen::Index dominant;
    reference.col(sp.perm[static_cast<std::size_t>(col)]).cwiseAbs().maxCoeff(&dominant);
    if (reference(dominant, sp.perm[static_cast<std::size_t>(col)]) < 0) {
      sp.signs[static_cast<std::size_t>(col)] = -1.0;
    }
  }
  return sp;
}

}  // namespace

AlignmentReport align_draws(std::vector<Eigen::MatrixXd>& lambda_draws,
                            std::vector<Eigen::MatrixXd>* u_draws,
                            const Eigen::MatrixXd* initial_reference, double tol,
                            int max_iter) {
  if (lambda_draws.size() < 2) throw std::invalid_argument("alignment needs at least 2 draws");
  const Eigen::Index k = lambda_draws.front().cols();
  if (k > 6) {
    throw std::invalid_argument(
        "alignment supports at most 6 factors (exhaustive signed-permutation search); "
        "reduce the factor count");
  }
  if (u_draws && u_draws->size() != lambda_draws.size() && !u_draws->empty()) {
    throw std::invalid_argument("u draw count must match lambda draw count");
  }
  const double m = static_cast<double>(lambda_draws.size());

  AlignmentReport report;
  report.transforms.resize(lambda_draws.size());
  for (auto& t : report.transforms) {
    t.perm.resize(static_cast<std::size_t>(k));
    std::iota(t.perm.begin(), t.perm.end(), 0);
    t.signs.assign(static_cast<std::size_t>(k), 1.0);
  }
  if (k == 0) {
    report.converged = true;
    return report;
  }

  Eigen::MatrixXd reference;
  if (initial_reference) {
    reference = *initial_reference;
  } else {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(lambda_draws.front().rows(), k);
    for (const auto& draw : lambda_draws) mean += draw;
    reference = varimax(mean / m).rotated;
  }

  std::vector<Eigen::MatrixXd> current = lambda_draws;
  for (int iter = 1; iter <= max_iter; ++iter) {
    report.iterations = iter;
    Eigen::MatrixXd next_ref = Eigen::MatrixXd::Zero(reference.rows(), reference.cols());
    for (std::size_t d = 0; d < lambda_draws.size(); ++d) {
      const SignedPermutation sp = best_signed_permutation(lambda_draws[d], reference);
      current[d] = sp.apply(lambda_draws[d]);
      report.transforms[d] = sp;
      next_ref += current[d];
    }
    next_ref /= m;
    const double change = (next_ref - reference).norm();
    reference = next_ref;
    if (change < tol) {
      report.converged = true;
      break;
    }
  }

  const SignedPermutation canon = canonical_transform(reference);
  for (std::size_t d = 0; d < lambda_draws.size(); ++d) {
    if (!canon.identity()) {
      report.transforms[d] = compose(report.transforms[d], canon);
      current[d] = canon.apply(current[d]);
    }
    lambda_draws[d] = std::move(current[d]);
    if (u_draws && !u_draws->empty()) {
      (*u_draws)[d] = report.transforms[d].apply((*u_draws)[d]);
    }
  }
  report.reference = canon.identity() ? reference : canon.apply(reference);
  return report;
}

AlignmentReport postprocess_draws(PosteriorDraws& draws) {
  const bool with_u = !draws.u_star.empty();
  draws.lambda.clear();
  draws.u.clear();
  draws.lambda.reserve(draws.lambda_star.size());
  if (with_u) draws.u.reserve(draws.u_star.size());

  Eigen::MatrixXd mean;
  for (std::size_t d = 0; d < draws.lambda_star.size(); ++d) {
    ScaleRecovered rec = recover_scale(
        draws.lambda_star[d], with_u ? draws.u_star[d] : Eigen::MatrixXd(0, 0),
        draws.phi[d]);
    if (d == 0) {
      mean = rec.lambda;
    } else {
      mean += rec.lambda;
    }
    draws.lambda.push_back(std::move(rec.lambda));
    if (with_u) draws.u.push_back(std::move(rec.u));
  }

  AlignmentReport report;
  const int k = static_cast<int>(draws.lambda.empty() ? 0 : draws.lambda.front().cols());
  if (k == 0 || draws.lambda.size() < 2) {
    report.converged = true;
    return report;
  }

  report.rotations.reserve(draws.lambda.size());
  for (std::size_t d = 0; d < draws.lambda.size(); ++d) {
    if (k == 1) {
      report.rotations.push_back(Eigen::MatrixXd::Identity(1, 1));
      continue;
    }
    VarimaxResult vr = varimax(draws.lambda[d]);
    draws.lambda[d] = std::move(vr.rotated);
    if (with_u) draws.u[d] = draws.u[d] * vr.rotation;
    report.rotations.push_back(std::move(vr.rotation));
  }

  mean /= static_cast<double>(draws.lambda.size());
  const Eigen::MatrixXd initial_reference = varimax(mean).rotated;
  AlignmentReport aligned = align_draws(draws.lambda, with_u ? &draws.u : nullptr,
                                        &initial_reference);
  aligned.rotations = std::move(report.rotations);
  return aligned;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(p >= 0) || !(p <= 1)) throw std::invalid_argument("quantile level must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = h - std::floor(h);
  return (1.0 - w) * values[lo] + w * values[hi];
}

Summary summarize(std::span<const double> draws) {
  if (draws.size() < 2) throw std::invalid_argument("summaries need at least 2 draws");
  Summary s;
  s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) /
           static_cast<double>(draws.size());
  std::vector<double> values(draws.begin(), draws.end());
  s.lower = quantile(values, 0.025);
  s.upper = quantile(std::move(values), 0.975);
  return s;
}

}  // namespace gfzip
