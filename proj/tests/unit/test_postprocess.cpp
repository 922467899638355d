#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gfzip/gibbs.hpp"
#include "gfzip/postprocess.hpp"
#include "gfzip/rng.hpp"
#include "gfzip/simulation.hpp"
#include "test_util.hpp"

using namespace gfzip;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

Eigen::MatrixXd rotation2(double angle, bool reflect) {
  Eigen::MatrixXd q(2, 2);
  q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  if (reflect) q.col(1) *= -1.0;
  return q;
}

}  // namespace

TEST_SUITE("postprocess") {

TEST_CASE("scale recovery") {
  RngStream rng(1);
  SUBCASE("unit phi is the identity") {
    const Eigen::MatrixXd l = random_matrix(6, 2, rng);
    const Eigen::MatrixXd u = random_matrix(4, 2, rng);
    const auto rec = recover_scale(l, u, Eigen::VectorXd::Ones(2));
    CHECK(rec.lambda.isApprox(l));
    CHECK(rec.u.isApprox(u));
  }
  SUBCASE("direct arithmetic") {
    Eigen::MatrixXd l(1, 1), u(1, 1);
    l << 0.5;
    u << 1.0;
    const auto rec = recover_scale(l, u, Eigen::VectorXd::Constant(1, 4.0));
    CHECK(rec.lambda(0, 0) == doctest::Approx(1.0));
    CHECK(rec.u(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("products are preserved exactly") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd l = random_matrix(8, 3, rng);
      const Eigen::MatrixXd u = random_matrix(5, 3, rng);
      Eigen::VectorXd phi(3);
      phi << 0.3 + rng.uniform(), 1.0 + rng.uniform(), 4.0 * rng.uniform() + 0.1;
      const auto rec = recover_scale(l, u, phi);
      const Eigen::MatrixXd before = l * u.transpose();
      const Eigen::MatrixXd after = rec.lambda * rec.u.transpose();
      CHECK((before - after).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, before.cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("rejects bad phi") {
    CHECK_THROWS_AS(
        (void)recover_scale(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(2, 1),
                            Eigen::VectorXd::Constant(1, -1.0)),
        std::invalid_argument);
  }
}

TEST_CASE("varimax basics") {
  RngStream rng(2);
  SUBCASE("K = 1 is a no-op") {
    const Eigen::MatrixXd l = random_matrix(7, 1, rng);
    const auto vr = varimax(l);
    CHECK(vr.rotated == l);
    CHECK(vr.rotation(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("perfectly simple structure stays put") {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(6, 2);
    for (int r = 0; r < 3; ++r) l(r, 0) = 1.0 + 0.2 * r;
    for (int r = 3; r < 6; ++r) l(r, 1) = 0.8 + 0.3 * r;
    const auto vr = varimax(l);
    CHECK(varimax_criterion(vr.rotated) == doctest::Approx(varimax_criterion(l)).epsilon(1e-9));
    // output equals input up to column sign/permutation
    Eigen::MatrixXd abs_in = l.cwiseAbs();
    Eigen::MatrixXd abs_out = vr.rotated.cwiseAbs();
    const bool same = abs_out.isApprox(abs_in, 1e-8);
    Eigen::MatrixXd swapped(6, 2);
    swapped.col(0) = abs_in.col(1);
    swapped.col(1) = abs_in.col(0);
    CHECK((same || abs_out.isApprox(swapped, 1e-8)));
  }
  SUBCASE("beats random orthogonal rotations") {
    const Eigen::MatrixXd l = random_matrix(10, 2, rng);
    const auto vr = varimax(l);
    const double best = varimax_criterion(vr.rotated);
    CHECK(best >= varimax_criterion(l) - 1e-12);
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::MatrixXd q = rotation2(2.0 * 3.14159265358979 * rng.uniform(),
                                          rng.uniform() < 0.5);
      CHECK(best >= varimax_criterion(l * q) - 1e-9);
    }
  }
  SUBCASE("rotation is orthogonal and criterion grows over iterations") {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd l = random_matrix(12, 3, rng);
      const auto vr = varimax(l);
      CHECK((vr.rotation.transpose() * vr.rotation - Eigen::MatrixXd::Identity(3, 3))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
      CHECK(vr.rotated.isApprox(l * vr.rotation, 1e-10));
      CHECK(varimax_criterion(vr.rotated) >= varimax_criterion(l) - 1e-12);
      CHECK(vr.converged);
    }
  }
}

TEST_CASE("alignment recovers a common signed permutation") {
  RngStream rng(3);
  const Eigen::MatrixXd base = random_matrix(8, 3, rng);
  std::vector<Eigen::MatrixXd> draws;
  const int m = 40;
  for (int d = 0; d < m; ++d) {
    std::vector<int> perm{0, 1, 2};
    for (int k = 2; k > 0; --k) std::swap(perm[static_cast<std::size_t>(k)],
                                          perm[rng.bits() % (k + 1)]);
    Eigen::MatrixXd draw(8, 3);
    for (int k = 0; k < 3; ++k) {
      draw.col(k) = (rng.uniform() < 0.5 ? -1.0 : 1.0) * base.col(perm[static_cast<std::size_t>(k)]);
    }
    draws.push_back(draw);
  }
  auto aligned = draws;
  const auto report = align_draws(aligned);
  CHECK(report.converged);
  for (int d = 1; d < m; ++d) {
    CHECK((aligned[static_cast<std::size_t>(d)] - aligned[0]).cwiseAbs().maxCoeff() < 1e-10);
  }
  // all draws equal the base up to one common signed permutation
  Eigen::MatrixXd abs_base = base.cwiseAbs();
  Eigen::MatrixXd abs_out = aligned[0].cwiseAbs();
  std::vector<int> cols{0, 1, 2};
  bool matched = false;
  std::sort(cols.begin(), cols.end());
  do {
    bool ok = true;
    for (int k = 0; k < 3 && ok; ++k) {
      ok = (abs_out.col(k) - abs_base.col(cols[static_cast<std::size_t>(k)])).cwiseAbs().maxCoeff() <
           1e-10;
    }
    matched = matched || ok;
  } while (std::next_permutation(cols.begin(), cols.end()));
  CHECK(matched);
}

TEST_CASE("alignment of identical draws is the identity and idempotent") {
  RngStream rng(4);
  const Eigen::MatrixXd base = random_matrix(6, 2, rng);
  // dominant entries positive so the canonical sign step is a no-op
  Eigen::MatrixXd canon = base;
  for (int k = 0; k < 2; ++k) {
    Eigen::Index arg;
    canon.col(k).cwiseAbs().maxCoeff(&arg);
    if (canon(arg, k) < 0) canon.col(k) *= -1.0;
  }
  const Eigen::MatrixXd sorted = [&] {
    Eigen::MatrixXd s = canon;
    if (canon.col(1).norm() > canon.col(0).norm()) {
      s.col(0) = canon.col(1);
      s.col(1) = canon.col(0);
    }
    return s;
  }();

  std::vector<Eigen::MatrixXd> draws{sorted, sorted};
  auto aligned = draws;
  const auto report = align_draws(aligned);
  CHECK(report.converged);
  CHECK(report.transforms[0].identity());
  CHECK(report.transforms[1].identity());
  CHECK(aligned[0] == sorted);

  // aligning already-aligned draws applies identity transforms
  auto again = aligned;
  const auto report2 = align_draws(again);
  for (const auto& t : report2.transforms) CHECK(t.identity());
}

TEST_CASE("alignment transforms carry over to factor scores") {
  RngStream rng(5);
  const Eigen::MatrixXd base = random_matrix(8, 2, rng);
  std::vector<Eigen::MatrixXd> lambda_draws, u_draws;
  for (int d = 0; d < 10; ++d) {
    Eigen::MatrixXd l = base;
    Eigen::MatrixXd u = random_matrix(5, 2, rng);
    if (d % 2 == 1) {
      l.col(0) *= -1.0;
      u.col(0) *= -1.0;
      l.col(0).swap(l.col(1));
      u.col(0).swap(u.col(1));
    }
    lambda_draws.push_back(l);
    u_draws.push_back(u);
  }
  std::vector<Eigen::MatrixXd> products;
  for (std::size_t d = 0; d < lambda_draws.size(); ++d) {
    products.push_back(lambda_draws[d] * u_draws[d].transpose());
  }
  (void)align_draws(lambda_draws, &u_draws);
  for (std::size_t d = 0; d < lambda_draws.size(); ++d) {
    CHECK((lambda_draws[d] * u_draws[d].transpose() - products[d]).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((lambda_draws[d] - lambda_draws[0]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("alignment rejects unsupported factor counts") {
  std::vector<Eigen::MatrixXd> draws{Eigen::MatrixXd::Ones(4, 7), Eigen::MatrixXd::Ones(4, 7)};
  CHECK_THROWS_AS((void)align_draws(draws), std::invalid_argument);
  std::vector<Eigen::MatrixXd> single{Eigen::MatrixXd::Ones(4, 1)};
  CHECK_THROWS_AS((void)align_draws(single), std::invalid_argument);
}

TEST_CASE("quantiles use linear interpolation between order statistics") {
  std::vector<double> draws(100);
  std::iota(draws.begin(), draws.end(), 1.0);
  const auto s = summarize(draws);
  CHECK(s.mean == doctest::Approx(50.5));
  CHECK(s.lower == doctest::Approx(3.475));
  CHECK(s.upper == doctest::Approx(97.525));

  // constant draws collapse the interval
  const std::vector<double> flat(10, 2.5);
  const auto sf = summarize(flat);
  CHECK(sf.lower == doctest::Approx(2.5));
  CHECK(sf.upper == doctest::Approx(2.5));
  CHECK(sf.mean == doctest::Approx(2.5));

  // negation flips and swaps the endpoints
  std::vector<double> negated = draws;
  for (auto& x : negated) x = -x;
  const auto sn = summarize(negated);
  CHECK(sn.mean == doctest::Approx(-s.mean));
  CHECK(sn.lower == doctest::Approx(-s.upper));
  CHECK(sn.upper == doctest::Approx(-s.lower));
}

TEST_CASE("pipeline identifies a one-factor chain without sign flips") {
  // chain output for the study design at small scale
  RngStream data_rng(71);
  const auto [data, truth] = generate_dataset(1, 250, data_rng);
  ModelConfig config;
  config.n_factors = 1;
  config.n_iter = 500;
  config.n_burnin = 200;
  config.seed = 71;
  PosteriorDraws draws = run_chain(data, config);
  const auto report = postprocess_draws(draws);
  REQUIRE(draws.lambda.size() == static_cast<std::size_t>(draws.n_retained));
  REQUIRE(draws.u.size() == static_cast<std::size_t>(draws.n_retained));

  // dominant loading entry keeps one sign across draws
  Eigen::Index dominant;
  report.reference.col(0).cwiseAbs().maxCoeff(&dominant);
  int agreements = 0;
  for (const auto& l : draws.lambda) {
    if (l(dominant, 0) > 0) ++agreements;
  }
  const double agreement_rate =
      static_cast<double>(agreements) / static_cast<double>(draws.lambda.size());
  CHECK(agreement_rate >= 0.99);

  // products are untouched by the whole pipeline
  for (int t = 0; t < draws.n_retained; t += 50) {
    const auto rec = recover_scale(draws.lambda_star[static_cast<std::size_t>(t)],
                                   draws.u_star[static_cast<std::size_t>(t)],
                                   draws.phi[static_cast<std::size_t>(t)]);
    const Eigen::MatrixXd before = rec.lambda * rec.u.transpose();
    const Eigen::MatrixXd after = draws.lambda[static_cast<std::size_t>(t)] *
                                  draws.u[static_cast<std::size_t>(t)].transpose();
    CHECK((before - after).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("two chains with different seeds agree after identification") {
  // loadings mix slowly in the expanded parameterization, so the chains are
  // long and the Monte Carlo s.e. comes from long batches
  RngStream data_rng(73);
  const auto [data, truth] = generate_dataset(1, 800, data_rng);
  ModelConfig config;
  config.n_factors = 1;
  config.n_iter = 16000;
  config.n_burnin = 4000;

  const auto fit = [&](std::uint64_t seed) {
    ModelConfig c = config;
    c.seed = seed;
    PosteriorDraws draws = run_chain(data, c);
    postprocess_draws(draws);
    return draws;
  };
  const PosteriorDraws a = fit(1001);
  const PosteriorDraws b = fit(2002);

  // batch-means Monte Carlo s.e. (autocorrelation-aware)
  const auto mc_se = [](const std::vector<Eigen::MatrixXd>& draws, int row) {
    const int batches = 12;
    const int len = static_cast<int>(draws.size()) / batches;
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
      double sum = 0;
      for (int t = b * len; t < (b + 1) * len; ++t) {
        sum += draws[static_cast<std::size_t>(t)](row, 0);
      }
      means.push_back(sum / len);
    }
    const auto m = testutil::moments(means);
    return std::sqrt(m.variance / batches);
  };
  const auto mean_of = [](const std::vector<Eigen::MatrixXd>& draws, int row) {
    double sum = 0;
    for (const auto& d : draws) sum += d(row, 0);
    return sum / static_cast<double>(draws.size());
  };

  for (int row = 0; row < 20; ++row) {
    const double se = std::sqrt(std::pow(mc_se(a.lambda, row), 2) +
                                std::pow(mc_se(b.lambda, row), 2));
    const double gap = std::fabs(mean_of(a.lambda, row) - mean_of(b.lambda, row));
    INFO("row=", row, " gap=", gap, " se=", se);
    CHECK(gap < 3.0 * se);
  }
}

}  // TEST_SUITE
