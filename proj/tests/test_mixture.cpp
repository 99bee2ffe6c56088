#include <doctest.h>

#include <cmath>

#include "gsmix/losses.hpp"
#include "gsmix/stats.hpp"
#include "gsmix/mixture.hpp"
#include "test_helpers.hpp"

using namespace gsmix;
using namespace gsmix::test;

namespace {
double norm_logpdf(double x, double mu, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mu) * (x - mu) / var;
}
}  // namespace

TEST_CASE("log_pdf standard normal at the mode") {
  auto m = standard_normal(1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  CHECK(m.log_pdf(x) == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log_pdf symmetric pair at the midpoint equals one shifted component") {
  auto m = make_1d({-1.7, 1.7}, {0.5, 0.5}, 0.8);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  // by symmetry p(0) = phi(1.7; 0.8), the two halves add to one full density
  CHECK(m.log_pdf(x) == doctest::Approx(norm_logpdf(1.7, 0.0, 0.8)).epsilon(1e-12));
}

TEST_CASE("log_pdf two-component value against direct summation oracle") {
  // K=2, w=(1/2,1/2), mu=+/-2, var 1, x=1: log(phi(-1)/2 + phi(3)/2)
  auto m = make_1d({2.0, -2.0}, {0.5, 0.5});
  Eigen::VectorXd x(1);
  x << 1.0;
  double oracle = std::log(0.5 * std::exp(norm_logpdf(1.0, 2.0, 1.0)) +
                           0.5 * std::exp(norm_logpdf(1.0, -2.0, 1.0)));
  CHECK(std::fabs(m.log_pdf(x) - oracle) < 1e-14);
}

TEST_CASE("log-space responsibilities survive far-separated modes") {
  auto m = make_1d({-8.0, 8.0}, {0.5, 0.5});
  Eigen::VectorXd x(1);
  x << -8.0;
  auto b = m.derivatives(x);
  CHECK(std::isfinite(b.log_density));
  CHECK(b.responsibilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.score.allFinite());
  CHECK(std::isfinite(b.bilaplacian_ratio));
}

TEST_CASE("construction rejects bad inputs") {
  Eigen::VectorXd w(2);
  w << 0.6, 0.5;  // sums to 1.1
  std::vector<Eigen::VectorXd> mus(2, Eigen::VectorXd::Zero(1));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(1, 1);
  CHECK_THROWS_AS(SharedCovMixture(w, mus, cov, 1.0), std::invalid_argument);

  w << 0.5, 0.5;
  Eigen::MatrixXd bad = -cov;
  CHECK_THROWS_AS(SharedCovMixture(w, mus, bad, 1.0), std::invalid_argument);

  // condition number gate
  Eigen::MatrixXd ill(2, 2);
  ill << 1.0, 0.0, 0.0, 1e-13;
  std::vector<Eigen::VectorXd> mus2(2, Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(SharedCovMixture(w, mus2, ill, 1.0), std::invalid_argument);

  // diameter below largest mean
  mus[0][0] = 3.0;
  CHECK_THROWS_AS(SharedCovMixture(w, mus, cov, 1.0), std::invalid_argument);
}

TEST_CASE("sample determinism and moments") {
  auto m = make_1d({0.0}, {1.0});
  Rng r1(42), r2(42);
  auto a = m.sample(r1, 3);
  auto b = m.sample(r2, 3);
  for (int i = 0; i < 3; ++i) CHECK(a[i][0] == b[i][0]);

  Rng rng(7);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = m.sample(rng)[0];
    mean += x;
    var += x * x;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("component frequencies follow the weights") {
  auto m = make_1d({-30.0, 30.0}, {0.3, 0.7}, 1.0, 30.0);
  Rng rng(11);
  const int n = 1000000;
  int c0 = 0;
  for (int i = 0; i < n; ++i)
    if (m.sample(rng)[0] < 0.0) ++c0;
  CHECK(std::fabs(double(c0) / n - 0.3) < 0.005);
}

TEST_CASE("derivatives: standard normal closed forms") {
  auto m = standard_normal(1);
  Eigen::VectorXd x(1);
  x << 2.0;
  auto b = m.derivatives(x);
  CHECK(b.score[0] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(b.laplacian_ratio == doctest::Approx(3.0).epsilon(1e-12));  // x^2 - 1
  CHECK(b.hessian_log_trace == doctest::Approx(-1.0).epsilon(1e-12));
  // Delta^2 phi / phi = x^4 - 6 x^2 + 3 at x = 2
  CHECK(b.bilaplacian_ratio == doctest::Approx(16.0 - 24.0 + 3.0).epsilon(1e-12));
}

TEST_CASE("algebraic identity lap = hess_trace + |score|^2") {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    auto m = random_instance(rng, 1 + int(rng.uniform() * 3), 1 + int(rng.uniform() * 3));
    Eigen::VectorXd x(m.dim());
    for (int i = 0; i < m.dim(); ++i) x[i] = 3.0 * rng.normal();
    auto b = m.derivatives(x);
    CHECK(std::fabs(b.laplacian_ratio - b.hessian_log_trace - b.score.squaredNorm()) < 1e-10);
    CHECK(b.responsibilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("derivative bundle matches finite differences of log_pdf") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    int k = 1 + int(rng.uniform() * 3), d = 1 + int(rng.uniform() * 3);
    auto m = random_instance(rng, k, d);
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = 2.0 * rng.normal();
    auto b = m.derivatives(x);

    // score vs finite differences in x
    auto f = [&](const Eigen::VectorXd& y) { return m.log_pdf(y); };
    Eigen::VectorXd fd = fd_gradient(f, x, 1e-4);
    CHECK(rel_err_vec(b.score, fd) < 1e-6);

    // mean gradient vs finite differences in the stacked means
    Eigen::VectorXd theta = m.stacked_means();
    auto g = [&](const Eigen::VectorXd& th) { return m.with_means(th).log_pdf(x); };
    Eigen::VectorXd fd_theta = fd_gradient(g, theta, 1e-4);
    CHECK(rel_err_vec(b.mean_gradient, fd_theta) < 1e-6);

    // laplacian ratio via trace of the FD Hessian of log plus |score|^2
    double tr = 0.0;
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += 1e-4;
      xm[i] -= 1e-4;
      tr += (m.log_pdf(xp) - 2.0 * m.log_pdf(x) + m.log_pdf(xm)) / 1e-8;
    }
    CHECK(rel_err(tr + b.score.squaredNorm(), b.laplacian_ratio) < 1e-5);
  }
}

TEST_CASE("bilaplacian ratio validated against a finite-difference oracle") {
  // Delta^2 p / p via the 1d fourth derivative of p (single and two component)
  Rng rng(17);
  for (int t = 0; t < 8; ++t) {
    auto m = make_1d({-0.8 + 0.2 * t, 1.1}, {0.4, 0.6}, 0.7 + 0.1 * t);
    Eigen::VectorXd x(1);
    x << 0.3 * t - 1.0;
    double h = 3e-3;
    auto pdf = [&](double y) {
      Eigen::VectorXd v(1);
      v << y;
      return std::exp(m.log_pdf(v));
    };
    double p0 = pdf(x[0]);
    double d4 = (pdf(x[0] + 2 * h) - 4 * pdf(x[0] + h) + 6 * p0 - 4 * pdf(x[0] - h) +
                 pdf(x[0] - 2 * h)) /
                (h * h * h * h);
    auto b = m.derivatives(x);
    CHECK(rel_err(d4 / p0, b.bilaplacian_ratio) < 2e-4);
  }
}

TEST_CASE("K=1 mean gradient and score are the Gaussian closed forms") {
  Rng rng(23);
  auto m = random_instance(rng, 1, 3);
  Eigen::VectorXd x(3);
  x << 0.4, -1.2, 0.7;
  auto b = m.derivatives(x);
  Eigen::VectorXd want = m.precision() * (x - m.means()[0]);
  CHECK(rel_err_vec(b.mean_gradient, want) < 1e-12);
  CHECK(rel_err_vec(b.score, Eigen::VectorXd(-want)) < 1e-12);
}

TEST_CASE("temper: identity at beta 0 and scalar addition") {
  auto m = standard_normal(1);
  auto t0 = m.temper(0.0, 1.0);
  CHECK(t0.covariance()(0, 0) == doctest::Approx(1.0));
  auto t3 = m.temper(3.0, 1.0);
  CHECK(t3.covariance()(0, 0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(m.temper(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("temper matches a Monte Carlo convolution oracle") {
  Rng rng(29);
  auto m = random_instance(rng, 2, 3);
  double beta = 2.0, lam = m.lambda_min();
  auto tempered = m.temper(beta, lam);
  // estimate p^beta(x0) = E_z p(x0 - sqrt(beta lam) z) by MC and compare
  Eigen::VectorXd x0(3);
  x0 << 0.5, -0.4, 1.0;
  const int n = 1000000;
  double sd = std::sqrt(beta * lam);
  std::vector<double> vals(n);
  Eigen::VectorXd z(3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) z[j] = rng.normal();
    vals[i] = std::exp(m.log_pdf(x0 - sd * z));
  }
  auto ms = mean_stderr(vals);
  double got = std::exp(tempered.log_pdf(x0));
  CHECK(std::fabs(got - ms.mean) < 3.0 * ms.stderr_);
}

TEST_CASE("heat identity: d/dbeta log p^beta = (lambda/2) laplacian ratio") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    int k = 1 + int(rng.uniform() * 3), d = 1 + int(rng.uniform() * 3);
    auto m = random_instance(rng, k, d);
    double lam = m.lambda_min();
    double beta = 0.3 + 2.0 * rng.uniform();
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = 2.5 * rng.normal();
    double h = 1e-4;
    double fd = (m.temper(beta + h, lam).log_pdf(x) - m.temper(beta - h, lam).log_pdf(x)) /
                (2.0 * h);
    double analytic = fp_beta_grad(lam, m.temper(beta, lam).derivatives(x).laplacian_ratio);
    CHECK(rel_err(fd, analytic) < 1e-4);
  }
}

TEST_CASE("permutation equivariance of log_pdf, score and mean gradient") {
  Rng rng(37);
  auto m = random_instance(rng, 3, 2);
  // permuted copy: rotate components by one
  Eigen::VectorXd w(3);
  w << m.weights()[1], m.weights()[2], m.weights()[0];
  std::vector<Eigen::VectorXd> mus{m.means()[1], m.means()[2], m.means()[0]};
  SharedCovMixture mp(w, mus, m.covariance(), m.diameter_bound());
  Eigen::VectorXd x(2);
  x << 0.3, -0.8;
  CHECK(m.log_pdf(x) == doctest::Approx(mp.log_pdf(x)).epsilon(1e-13));
  auto ba = m.derivatives(x), bb = mp.derivatives(x);
  CHECK(rel_err_vec(ba.score, bb.score) < 1e-13);
  // mean gradient permutes in blocks
  for (int j = 0; j < 3; ++j) {
    int src = (j + 1) % 3;
    CHECK(rel_err_vec(Eigen::VectorXd(ba.mean_gradient.segment(src * 2, 2)),
                      Eigen::VectorXd(bb.mean_gradient.segment(j * 2, 2))) < 1e-13);
  }
}

TEST_CASE("serialization round-trips bit-exactly") {
  Rng rng(41);
  auto m = random_instance(rng, 3, 3);
  auto copy = SharedCovMixture::deserialize(m.serialize());
  CHECK(copy.num_components() == m.num_components());
  CHECK(copy.dim() == m.dim());
  for (int i = 0; i < 3; ++i) {
    CHECK(copy.weights()[i] == m.weights()[i]);
    for (int j = 0; j < 3; ++j) {
      CHECK(copy.means()[i][j] == m.means()[i][j]);
      CHECK(copy.covariance()(i, j) == m.covariance()(i, j));
    }
  }
  CHECK(copy.diameter_bound() == m.diameter_bound());
  CHECK(copy.serialize() == m.serialize());
}
