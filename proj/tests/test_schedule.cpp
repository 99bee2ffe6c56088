#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gsmix/quadrature.hpp"
#include "gsmix/schedule.hpp"
#include "gsmix/stats.hpp"
#include "test_helpers.hpp"

using namespace gsmix;
using namespace gsmix::test;

TEST_CASE("construction enforces the working regime") {
  CHECK_THROWS_AS(TemperatureSchedule(0.5, 1.0), std::invalid_argument);  // D^2/lam < 1
  CHECK_THROWS_AS(TemperatureSchedule(1.0, -1.0), std::invalid_argument);
  TemperatureSchedule s(1.0, 1.0);
  CHECK(s.beta_max() == doctest::Approx(13.0));
}

TEST_CASE("unnormalized log density values for D^2/lambda = 1") {
  TemperatureSchedule s(1.0, 1.0);
  double logz = std::log(s.normalizer());
  CHECK(s.r_log_pdf(0.0) + logz == doctest::Approx(-7.0).epsilon(1e-12));
  CHECK(s.r_log_pdf(13.0) + logz == doctest::Approx(-0.5).epsilon(1e-12));
  // differences are independent of Z
  CHECK(s.r_log_pdf(3.0) - s.r_log_pdf(1.0) ==
        doctest::Approx(-7.0 / 4.0 + 7.0 / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(s.r_log_pdf(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(s.r_log_pdf(13.1), std::invalid_argument);
}

TEST_CASE("normalizer matches the frozen quadrature oracle and the substitution integral") {
  TemperatureSchedule s(1.0, 1.0);
  // frozen: adaptive quadrature of exp(-7/(1+b)) over [0, 13] at 1e-10
  CHECK(std::fabs(s.normalizer() - 4.5729105626994601) < 1e-10);
  // cross-check through the change of variables t = 7 D^2 / (lambda (1+beta)):
  // Z = (7 D^2 / lambda) * int_{1/2}^{7D^2/lambda} e^-t t^-2 dt
  double zsub = 7.0 * integrate([](double t) { return std::exp(-t) / (t * t); }, 0.5, 7.0, 1e-14);
  CHECK(std::fabs(s.normalizer() - zsub) < 1e-10);
}

TEST_CASE("r integrates to one and the CDF is monotone") {
  TemperatureSchedule s(1.7, 0.6);
  double total = integrate([&](double b) { return s.r_pdf(b); }, 0.0, s.beta_max(), 1e-12);
  CHECK(std::fabs(total - 1.0) < 1e-8);
  double prev = -1.0;
  for (int i = 0; i <= 64; ++i) {
    double c = s.cdf(s.beta_max() * i / 64.0);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("Z lower bound from the working regime holds on a grid") {
  for (double dd : {1.0, 1.5, 2.0, 3.0})
    for (double lam : {0.3, 0.7, 1.0}) {
      if (dd * dd / lam < 1.0) continue;
      TemperatureSchedule s(dd, lam);
      CHECK(s.normalizer() >= 1.0);
    }
}

TEST_CASE("r_grad_log closed form and finite differences") {
  TemperatureSchedule s(1.0, 1.0);
  CHECK(s.r_grad_log(0.0) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(s.r_grad_log(13.0) == doctest::Approx(7.0 / 196.0).epsilon(1e-12));
  TemperatureSchedule s2(1.4, 0.8);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    double b = 0.1 + (s2.beta_max() - 0.2) * rng.uniform();
    double h = 1e-5;
    double fd = (s2.r_log_pdf(b + h) - s2.r_log_pdf(b - h)) / (2.0 * h);
    CHECK(std::fabs(fd - s2.r_grad_log(b)) < 1e-8 * std::max(1.0, std::fabs(fd)));
  }
}

TEST_CASE("sample_beta reproduces the law: KS against the quadrature CDF") {
  TemperatureSchedule s(1.0, 1.0);
  Rng rng(99);
  const int n = 1000000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) {
    draws[i] = s.sample_beta(rng);
    REQUIRE(draws[i] >= 0.0);
    REQUIRE(draws[i] <= s.beta_max());
  }
  std::sort(draws.begin(), draws.end());
  double ks = ks_statistic(draws, [&](double b) { return s.cdf(b); });
  CHECK(ks <= 0.002);
}

TEST_CASE("sample_beta is reproducible under a fixed seed") {
  TemperatureSchedule s(1.0, 1.0);
  Rng a(42), b(42);
  for (int i = 0; i < 16; ++i) CHECK(s.sample_beta(a) == s.sample_beta(b));
}

TEST_CASE("noise channel conditional variance") {
  TemperatureSchedule s(1.0, 1.0);
  Rng rng(1);
  Eigen::VectorXd x0(2);
  x0 << 1.0, -2.0;
  // conditional on beta, x - x0 has covariance beta * lambda * I
  const int n = 200000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    TemperedSample t = s.noise_channel(x0, rng);
    REQUIRE(t.beta >= 0.0);
    REQUIRE(t.beta <= s.beta_max());
    acc += (t.x - x0).squaredNorm() / t.beta;
  }
  CHECK(acc / n == doctest::Approx(2.0).epsilon(0.02));  // d = 2 coordinates
}

TEST_CASE("channel output matches the tempered model in distribution (moments)") {
  // data = N(0,1), lambda = 1: conditional on beta, x has variance 1 + beta
  auto m = standard_normal(1);
  TemperatureSchedule s(1.0, 1.0);
  Rng rng(123);
  const int n = 400000;
  const int nb = 8;
  std::vector<double> sums(nb, 0.0), sums2(nb, 0.0), betas(nb, 0.0);
  std::vector<long> counts(nb, 0);
  for (int i = 0; i < n; ++i) {
    TemperedSample t = s.noise_channel(m.sample(rng), rng);
    int bin = std::min(nb - 1, int(s.cdf(t.beta) * nb));
    double x = t.x[0];
    sums[bin] += x;
    sums2[bin] += x * x;
    betas[bin] += t.beta;
    counts[bin] += 1;
  }
  for (int b = 0; b < nb; ++b) {
    REQUIRE(counts[b] > 1000);
    double mean = sums[b] / counts[b];
    double var = sums2[b] / counts[b] - mean * mean;
    double want = 1.0 + betas[b] / counts[b];
    double tol = 3.0 * want * std::sqrt(2.0 / counts[b]) + 0.05;
    CHECK(std::fabs(var - want) < tol);
  }
}

TEST_CASE("joint histogram of the channel matches r(beta) p^beta(x)") {
  auto m = make_1d({-1.0, 1.0}, {0.5, 0.5});
  TemperatureSchedule s(1.0, 1.0);
  Rng rng(31);
  const int n = 400000;
  const int nbb = 6, nxb = 8;
  double xmax = 1.0 + 5.0 * std::sqrt(14.0);
  std::vector<double> xedges(nxb + 1);
  for (int i = 0; i <= nxb; ++i) xedges[i] = -xmax + 2.0 * xmax * i / nxb;
  std::vector<double> bedges(nbb + 1, 0.0);
  bedges[nbb] = s.beta_max();
  for (int i = 1; i < nbb; ++i) {
    double lo = 0.0, hi = s.beta_max();
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (s.cdf(mid) < double(i) / nbb ? lo : hi) = mid;
    }
    bedges[i] = lo;
  }
  std::vector<double> counts(nbb * nxb, 0.0);
  for (int i = 0; i < n; ++i) {
    TemperedSample t = s.noise_channel(m.sample(rng), rng);
    int bb = int(std::upper_bound(bedges.begin(), bedges.end(), t.beta) - bedges.begin()) - 1;
    bb = std::clamp(bb, 0, nbb - 1);
    int xb = int(std::upper_bound(xedges.begin(), xedges.end(), t.x[0]) - xedges.begin()) - 1;
    if (xb < 0 || xb >= nxb) continue;  // tail mass outside the grid is tiny
    counts[bb * nxb + xb] += 1.0;
  }
  double chi2 = 0.0;
  int df = 0;
  for (int bb = 0; bb < nbb; ++bb) {
    for (int xb = 0; xb < nxb; ++xb) {
      auto cell = [&](double beta) {
        SharedCovMixture t = m.temper(beta, 1.0);
        auto f = [&](double x) {
          Eigen::VectorXd v(1);
          v << x;
          return std::exp(t.log_pdf(v));
        };
        return s.r_pdf(beta) * gauss15(f, xedges[xb], xedges[xb + 1]);
      };
      double want = n * integrate(cell, bedges[bb], bedges[bb + 1], 1e-9);
      if (want < 20.0) continue;  // skip sparse cells for the chi^2 approximation
      chi2 += (counts[bb * nxb + xb] - want) * (counts[bb * nxb + xb] - want) / want;
      ++df;
    }
  }
  REQUIRE(df >= 10);
  CHECK(chi2_pvalue(chi2, df) > 0.01);
}

TEST_CASE("schedule serialization recomputes derived quantities") {
  TemperatureSchedule s(1.5, 0.9);
  TemperatureSchedule t = TemperatureSchedule::deserialize(s.serialize());
  CHECK(t.beta_max() == s.beta_max());
  CHECK(t.normalizer() == doctest::Approx(s.normalizer()).epsilon(1e-14));
}
