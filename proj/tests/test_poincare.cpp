#include <doctest.h>

#include <cmath>

#include "gsmix/poincare.hpp"
#include "gsmix/quadrature.hpp"
#include "gsmix/stats.hpp"
#include "test_helpers.hpp"

using namespace gsmix;
using namespace gsmix::test;

TEST_CASE("chi-squared same covariance: identity, closed form vs quadrature") {
  Eigen::VectorXd a(1), b(1);
  a << 0.0;
  b << 0.0;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(1, 1);
  CHECK(chisq_same_cov(a, a, eye) == doctest::Approx(0.0));

  b << 1.0;
  double closed = chisq_same_cov(a, b, eye);
  CHECK(closed == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  // numeric integral of (p-q)^2 / q for N(0,1) vs N(1,1)
  auto integrand = [&](double x) {
    double p = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    double q = std::exp(-0.5 * (x - 1.0) * (x - 1.0)) / std::sqrt(2.0 * M_PI);
    return (p - q) * (p - q) / q;
  };
  double quad = integrate(integrand, -14.0, 15.0, 1e-12);
  CHECK(std::fabs(closed - quad) < 1e-6 * std::max(1.0, closed));

  Eigen::MatrixXd bad = -eye;
  CHECK_THROWS_AS(chisq_same_cov(a, b, bad), std::invalid_argument);
}

TEST_CASE("closed form is dominated by the paper bound on admissible instances") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    int d = 1 + int(rng.uniform() * 3);
    double dd = 1.0 + 2.0 * rng.uniform();
    Eigen::VectorXd mi(d), mj(d);
    for (int i = 0; i < d; ++i) {
      mi[i] = rng.normal();
      mj[i] = rng.normal();
    }
    // scale means inside the radius-D ball
    mi *= dd * rng.uniform() / std::max(mi.norm(), 1e-9);
    mj *= dd * rng.uniform() / std::max(mj.norm(), 1e-9);
    double lam = 0.5 + rng.uniform();
    if (dd * dd / lam < 1.0) lam = dd * dd;  // keep the working regime
    double beta = 13.0 * rng.uniform();
    Eigen::MatrixXd sigma_beta = (lam + beta * lam) * Eigen::MatrixXd::Identity(d, d);
    // Sigma with lambda_min = lam tempered by beta*lam: smallest eigenvalue
    // (1+beta) lam, exactly the regime of the bound
    double closed = chisq_same_cov(mi, mj, sigma_beta);
    CHECK(closed <= chisq_same_cov_bound(dd, lam, beta));
  }
}

TEST_CASE("joint chi-squared: frozen quadrature value and importance-sampling cross-check") {
  auto m = make_1d({-1.0, 1.0}, {0.5, 0.5});
  TemperatureSchedule s(1.0, 1.0);
  CHECK(chisq_joint(m, s, 0, 0) == doctest::Approx(0.0));
  double v = chisq_joint(m, s, 0, 1);
  // frozen high-precision quadrature oracle
  CHECK(std::fabs(v - 0.70336237412432742) < 1e-8);
  // MC estimate: E_{beta ~ r} [chi^2_same(beta)]
  Rng rng(9);
  const int n = 400000;
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) {
    double beta = s.sample_beta(rng);
    vals[i] = std::expm1(4.0 / (1.0 + beta));
  }
  auto ms = mean_stderr(vals);
  CHECK(std::fabs(v - ms.mean) < 3.0 * ms.stderr_);
  CHECK_THROWS_AS(chisq_joint(m, s, 0, 5), std::invalid_argument);
}

TEST_CASE("joint chi-squared obeys the 14 D^2 / lambda bound on random instances") {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    int k = 2 + int(rng.uniform() * 2);
    auto m = random_instance(rng, k, 1 + int(rng.uniform() * 2));
    TemperatureSchedule s(std::max(m.diameter_bound(), std::sqrt(m.lambda_min())) + 1e-9,
                          m.lambda_min());
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        double v = chisq_joint(m, s, i, j);
        CHECK(v <= 14.0 * s.diameter() * s.diameter() / s.lambda_min());
      }
  }
}

TEST_CASE("projected chain: symmetry, detailed balance, eigensolve vs canonical path") {
  auto m = make_1d({-1.5, 1.5}, {0.5, 0.5}, 1.0, 1.5);
  TemperatureSchedule s(1.5, 1.0);
  ProjectedChain pc = projected_chain_bound(m, s);
  CHECK(pc.transition(0, 1) == doctest::Approx(pc.transition(1, 0)).epsilon(1e-12));
  CHECK(pc.detailed_balance_err < 1e-12);
  CHECK(pc.transition.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pc.c_exact <= pc.c_projected * (1.0 + 1e-9));
  CHECK(pc.c_projected <= 14.0 * s.diameter() * s.diameter() / s.lambda_min());
}

TEST_CASE("canonical-path bound dominates on 20 random instances") {
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    int k = 2 + int(rng.uniform() * 3);
    auto m = random_instance(rng, k, 1);
    TemperatureSchedule s(std::max(m.diameter_bound(), std::sqrt(m.lambda_min())) + 1e-9,
                          m.lambda_min());
    ProjectedChain pc = projected_chain_bound(m, s);
    CHECK(pc.detailed_balance_err < 1e-12);
    CHECK(pc.c_exact <= pc.c_projected * (1.0 + 1e-9));
    CHECK(pc.c_projected <= 14.0 * s.diameter() * s.diameter() / s.lambda_min());
  }
}

TEST_CASE("component bound: explicit constants and numeric-vs-paper dominance") {
  auto m = standard_normal(1);
  TemperatureSchedule s(1.0, 1.0);
  ComponentBound cb = component_bound(m, s, 0);
  CHECK(cb.c_beta == doctest::Approx(13.0 / M_PI).epsilon(1e-12));
  CHECK(cb.c_x_given_beta == doctest::Approx(1.0 + 13.0).epsilon(1e-12));
  CHECK(cb.rate_of_change_numeric <= cb.rate_of_change_closed);
  // numeric sup is attained at beta = 0: (lam^2/2) Tr Sigma^{-2} = 1/2
  CHECK(cb.rate_of_change_numeric == doctest::Approx(0.5).epsilon(1e-9));

  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    auto mr = random_instance(rng, 2, 2);
    TemperatureSchedule sr(std::max(mr.diameter_bound(), std::sqrt(mr.lambda_min())) + 1e-9,
                           mr.lambda_min());
    ComponentBound c = component_bound(mr, sr, 0);
    CHECK(c.rate_of_change_numeric <= c.rate_of_change_closed);
  }
}

TEST_CASE("component bound is nondecreasing in the diameter") {
  auto m = standard_normal(1);
  double prev = 0.0;
  for (double dd : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    TemperatureSchedule s(dd, 1.0);
    ComponentBound cb = component_bound(m, s, 0);
    CHECK(cb.value >= prev);
    prev = cb.value;
  }
}

TEST_CASE("total bound: K=1 reduces to the component bound; monotone in scale") {
  auto m = standard_normal(1);
  TemperatureSchedule s(1.0, 1.0);
  PoincareBoundBreakdown br = total_bound(m, s);
  CHECK(br.c_total == doctest::Approx(br.c_component));
  CHECK(br.c_projected == 0.0);

  auto m2 = make_1d({-1.0, 1.0}, {0.5, 0.5});
  TemperatureSchedule s2(1.0, 1.0);
  auto m4 = make_1d({-2.0, 2.0}, {0.5, 0.5}, 1.0, 2.0);
  TemperatureSchedule s4(2.0, 1.0);
  PoincareBoundBreakdown b2 = total_bound(m2, s2);
  PoincareBoundBreakdown b4 = total_bound(m4, s4);
  CHECK(b4.c_total >= b2.c_total);
  CHECK(b2.c_total >= b2.c_component);
  CHECK(b2.collapsed_reference > 0.0);
}

TEST_CASE("1d spectral oracle: Gaussian variance sweep at 2 percent") {
  for (double sig : {0.5, 1.0, 2.0}) {
    auto logp = [&](double x) { return -0.5 * x * x / (sig * sig); };
    OracleResult r = spectral_oracle_1d(logp, -8.0 * sig, 8.0 * sig, 513);
    CHECK(std::fabs(r.value - sig * sig) <= 0.02 * sig * sig);
  }
}

TEST_CASE("1d mixture oracle grows with separation and stays under the total bound") {
  double prev = 0.0;
  for (double a : {2.0, 3.0, 4.0}) {
    auto m = make_1d({-a, a}, {0.5, 0.5}, 1.0, a);
    OracleResult r = spectral_oracle_mixture(m, 1025);
    CHECK(r.value > prev);
    prev = r.value;
  }
  // upper-bound contract against the joint-chain pipeline on mu = +/-1
  auto m = make_1d({-1.0, 1.0}, {0.5, 0.5});
  TemperatureSchedule s(1.0, 1.0);
  OracleResult joint = spectral_oracle_joint(m, s, 97, 97);
  PoincareBoundBreakdown br = total_bound(m, s);
  CHECK(joint.value <= br.c_total);
}

TEST_CASE("oracle rejects unresolved densities") {
  auto logp = [](double x) { return -0.5 * (x - 30.0) * (x - 30.0); };
  CHECK_THROWS_AS(spectral_oracle_1d(logp, -5.0, 5.0, 257), std::runtime_error);
}

TEST_CASE("decomposition inequality on discrete instances") {
  Rng rng(19);
  // two overlapping 5-state components
  DiscreteMixtureInstance inst;
  inst.weights = Eigen::VectorXd::Constant(2, 0.5);
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXd dist(5);
    double center = j == 0 ? 1.2 : 2.8;
    for (int i = 0; i < 5; ++i)
      dist[i] = std::exp(-0.5 * (i - center) * (i - center) / 1.2);
    dist /= dist.sum();
    inst.components.push_back(dist);
    inst.generators.push_back(metropolis_path_generator(dist));
  }
  DecompositionReport rep = decomposition_check(inst, 100, rng);
  CHECK(rep.violations == 0);
  CHECK(rep.min_slack >= 0.0);
  CHECK(rep.adversarial_slack >= 0.0);
}

TEST_CASE("decomposition at m=1 reduces to the component inequality, tight at the gap") {
  Rng rng(23);
  DiscreteMixtureInstance inst;
  inst.weights = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd dist(5);
  for (int i = 0; i < 5; ++i) dist[i] = std::exp(-0.3 * i);
  dist /= dist.sum();
  inst.components.push_back(dist);
  inst.generators.push_back(metropolis_path_generator(dist));
  DecompositionReport rep = decomposition_check(inst, 100, rng);
  CHECK(rep.violations == 0);
  CHECK(rep.c_projected == 0.0);
  // adversarial = second eigenfunction of the component chain itself: the
  // inequality Var <= C * E is tight there, slack should be ~0
  CHECK(std::fabs(rep.adversarial_slack) < 1e-9 * std::max(1.0, rep.c_component));
}

TEST_CASE("projected-chain eigensolve gap respects 1/c_projected") {
  auto m = make_1d({-1.0, 0.5, 1.3}, {0.3, 0.3, 0.4}, 1.0, 1.3);
  TemperatureSchedule s(1.3, 1.0);
  ProjectedChain pc = projected_chain_bound(m, s);
  CHECK(1.0 / pc.c_exact >= 1.0 / pc.c_projected);
}

TEST_CASE("grid operator invariants: weights, symmetry, constant kernel") {
  GridOperator::Axis ax{-6.0, 6.0, 101, 12.0 / 100.0};
  GridOperator op = build_grid_operator(
      [](const std::vector<double>& c) { return -0.5 * c[0] * c[0]; }, {ax});
  CHECK(op.stationary.minCoeff() > 0.0);
  CHECK(op.stationary.sum() == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::MatrixXd q = Eigen::MatrixXd(op.dirichlet);
  CHECK((q - q.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // constants are in the kernel; the form is PSD on a few random functions
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(101);
  CHECK((q * ones).cwiseAbs().maxCoeff() < 1e-12);
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd g(101);
    for (int i = 0; i < 101; ++i) g[i] = rng.normal();
    CHECK(g.dot(q * g) >= 0.0);
  }
  CHECK(1.0 / grid_spectral_gap(op) == doctest::Approx(1.0).epsilon(0.01));
}
