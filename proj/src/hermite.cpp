#include "gsmix/hermite.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "gsmix/stats.hpp"

namespace gsmix {

namespace {

long ipow(int b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void decode(long flat, int k, int d, std::vector<int>& idx) {
  idx.resize(k);
  for (int i = k - 1; i >= 0; --i) {
    idx[i] = int(flat % d);
    flat /= d;
  }
}

long encode(const std::vector<int>& idx, int d) {
  long f = 0;
  for (int v : idx) f = f * d + v;
  return f;
}

// log-spaced beta grid on [0, beta_max], densest near 0
std::vector<double> beta_grid(double beta_max, int n) {
  std::vector<double> g;
  g.push_back(0.0);
  double lo = beta_max * 1e-6;
  for (int i = 0; i < n - 1; ++i) {
    double t = double(i) / double(n - 2);
    g.push_back(lo * std::pow(beta_max / lo, t));
  }
  return g;
}

}  // namespace

double& HermiteTensor::at(const std::vector<int>& idx) { return entries[encode(idx, dim)]; }
double HermiteTensor::at(const std::vector<int>& idx) const { return entries[encode(idx, dim)]; }

HermiteTensor hermite_tensor(int k, const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma) {
  if (k < 0 || k > 4) throw std::invalid_argument("hermite_tensor: order must be in [0, 4]");
  const int d = int(x.size());
  std::vector<HermiteTensor> h(k + 1);
  h[0] = HermiteTensor{0, d, Eigen::VectorXd::Ones(1)};
  if (k >= 1) h[1] = HermiteTensor{1, d, x};
  std::vector<int> idx, sub;
  for (int ord = 2; ord <= k; ++ord) {
    HermiteTensor t{ord, d, Eigen::VectorXd::Zero(ipow(d, ord))};
    for (long f = 0; f < t.entries.size(); ++f) {
      decode(f, ord, d, idx);
      int a = idx[0];
      sub.assign(idx.begin() + 1, idx.end());
      double v = x[a] * h[ord - 1].entries[encode(sub, d)];
      for (int i = 0; i < ord - 1; ++i) {
        std::vector<int> rest;
        for (int j = 0; j < ord - 1; ++j)
          if (j != i) rest.push_back(sub[j]);
        v -= sigma(a, sub[i]) * h[ord - 2].entries[encode(rest, d)];
      }
      t.entries[f] = v;
    }
    h[ord] = std::move(t);
  }
  return h[k];
}

HermiteTensor hermite_tensor_mc(int k, const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma,
                                long n, Rng& rng, Eigen::VectorXd* stderr_out,
                                double* imag_max_t) {
  if (k < 0 || k > 4) throw std::invalid_argument("hermite_tensor_mc: order must be in [0, 4]");
  const int d = int(x.size());
  const long sz = ipow(d, k);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("hermite_tensor_mc: Sigma not SPD");
  Eigen::MatrixXd chol = llt.matrixL();

  Eigen::VectorXd sum_re = Eigen::VectorXd::Zero(sz), sum_re2 = Eigen::VectorXd::Zero(sz);
  Eigen::VectorXd sum_im = Eigen::VectorXd::Zero(sz), sum_im2 = Eigen::VectorXd::Zero(sz);
  Eigen::VectorXd z(d), u(d);
  std::vector<int> idx;
  for (long t = 0; t < n; ++t) {
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    u = chol * z;
    for (long f = 0; f < sz; ++f) {
      decode(f, k, d, idx);
      std::complex<double> prod(1.0, 0.0);
      for (int i = 0; i < k; ++i) prod *= std::complex<double>(x[idx[i]], u[idx[i]]);
      sum_re[f] += prod.real();
      sum_re2[f] += prod.real() * prod.real();
      sum_im[f] += prod.imag();
      sum_im2[f] += prod.imag() * prod.imag();
    }
  }
  HermiteTensor out{k, d, sum_re / double(n)};
  if (stderr_out) {
    stderr_out->resize(sz);
    for (long f = 0; f < sz; ++f) {
      double var = sum_re2[f] / n - out.entries[f] * out.entries[f];
      (*stderr_out)[f] = std::sqrt(std::max(var, 0.0) / double(n));
    }
  }
  if (imag_max_t) {
    *imag_max_t = 0.0;
    for (long f = 0; f < sz; ++f) {
      double m = sum_im[f] / n;
      double var = sum_im2[f] / n - m * m;
      double se = std::sqrt(std::max(var, 1e-300) / double(n));
      *imag_max_t = std::max(*imag_max_t, std::fabs(m) / se);
    }
  }
  return out;
}

Eigen::VectorXd mixed_derivative_ratio(int k1, int k2, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  const int k = k1 + k2;
  if (k1 < 0 || k2 < 0 || k > 3) throw std::invalid_argument("mixed_derivative_ratio: k1+k2 <= 3");
  const int d = int(x.size());
  HermiteTensor h = hermite_tensor(k, x - mu, sigma);
  Eigen::MatrixXd prec = sigma.llt().solve(Eigen::MatrixXd::Identity(d, d));
  const long sz = ipow(d, k);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sz);
  double sign = (k2 % 2 == 0) ? 1.0 : -1.0;
  std::vector<int> iidx, jidx;
  for (long fi = 0; fi < sz; ++fi) {
    decode(fi, k, d, iidx);
    double acc = 0.0;
    for (long fj = 0; fj < sz; ++fj) {
      decode(fj, k, d, jidx);
      double w = 1.0;
      for (int t = 0; t < k; ++t) w *= prec(iidx[t], jidx[t]);
      acc += w * h.entries[fj];
    }
    out[fi] = sign * acc;
  }
  return out;
}

Eigen::VectorXd mixed_laplacian_ratio(int k1, int k2, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  if (k1 < 0 || k2 < 0 || k1 + 2 * k2 > 4)
    throw std::invalid_argument("mixed_laplacian_ratio: order overflow");
  const int d = int(x.size());
  // contract the trailing 2*k2 gradient indices in pairs
  Eigen::VectorXd full;
  {
    int k = k1 + 2 * k2;
    if (k > 4) throw std::invalid_argument("mixed_laplacian_ratio: order overflow");
    // reuse the gradient form; allow k up to 4 here via hermite_tensor directly
    HermiteTensor h = hermite_tensor(k, x - mu, sigma);
    Eigen::MatrixXd prec = sigma.llt().solve(Eigen::MatrixXd::Identity(d, d));
    const long sz = ipow(d, k);
    full = Eigen::VectorXd::Zero(sz);
    double sign = (2 * k2 % 2 == 0) ? 1.0 : -1.0;
    std::vector<int> iidx, jidx;
    for (long fi = 0; fi < sz; ++fi) {
      decode(fi, k, d, iidx);
      double acc = 0.0;
      for (long fj = 0; fj < sz; ++fj) {
        decode(fj, k, d, jidx);
        double w = 1.0;
        for (int t = 0; t < k; ++t) w *= prec(iidx[t], jidx[t]);
        acc += w * h.entries[fj];
      }
      full[fi] = sign * acc;
    }
  }
  const long out_sz = ipow(d, k1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_sz);
  std::vector<int> head;
  for (long fo = 0; fo < out_sz; ++fo) {
    decode(fo, k1, d, head);
    double acc = 0.0;
    // sum over the k2 contracted pairs
    std::vector<int> pair(k2, 0);
    bool done = false;
    while (!done) {
      std::vector<int> idx = head;
      for (int t = 0; t < k2; ++t) {
        idx.push_back(pair[t]);
        idx.push_back(pair[t]);
      }
      acc += full[encode(idx, d)];
      done = true;
      for (int t = k2 - 1; t >= 0; --t) {
        if (++pair[t] < d) {
          done = false;
          break;
        }
        pair[t] = 0;
      }
      if (k2 == 0) break;
    }
    out[fo] = acc;
  }
  return out;
}

MomentBoundReport moment_bound_report(int k1, int k2, int k, const Eigen::MatrixXd& sigma,
                                      const Eigen::VectorXd& mu, long mc, Rng& rng,
                                      bool laplacian_variant) {
  const int d = int(mu.size());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  Eigen::MatrixXd chol = llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  double lam_min = es.eigenvalues().minCoeff();

  std::vector<double> vals(mc);
  Eigen::VectorXd z(d), x(d);
  for (long t = 0; t < mc; ++t) {
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    x = mu + chol * z;
    Eigen::VectorXd ratio = laplacian_variant ? mixed_laplacian_ratio(k1, k2, x, mu, sigma)
                                              : mixed_derivative_ratio(k1, k2, x, mu, sigma);
    vals[t] = std::pow(ratio.squaredNorm(), k);
  }
  MeanStderr ms = mean_stderr(vals);
  MomentBoundReport r;
  r.lhs = ms.mean;
  r.lhs_stderr = ms.stderr_;
  double expo = laplacian_variant ? double((k1 + 3 * k2) * k) : double((k1 + k2) * k);
  double expo_lam = laplacian_variant ? double((k1 + 3 * k2) * k) : double((k1 + k2) * k);
  r.rhs = std::pow(double(d), expo) * std::pow(lam_min, -expo_lam);
  r.ratio = r.lhs / r.rhs;
  r.laplacian_variant = laplacian_variant;
  return r;
}

namespace {

// ||(D p)(x)/p(x)|| for the mixture at one tempered slice
double mixture_ratio_norm(const SharedCovMixture& m, const Eigen::VectorXd& x, RatioOp op) {
  DerivativeBundle b = m.derivatives(x);
  switch (op) {
    case RatioOp::GradX: return b.score.norm();
    case RatioOp::GradTheta: return b.mean_gradient.norm();
    case RatioOp::LaplaceX: return std::fabs(b.laplacian_ratio);
    case RatioOp::GradThetaGradX: {
      const int d = m.dim(), k = m.num_components();
      const Eigen::MatrixXd& a = m.precision();
      double s2 = 0.0;
      for (int i = 0; i < k; ++i) {
        Eigen::VectorXd y = x - m.means()[i];
        Eigen::VectorXd ay = a * y;
        Eigen::MatrixXd blk = b.responsibilities[i] * (a - ay * ay.transpose());
        s2 += blk.squaredNorm();
      }
      return std::sqrt(s2);
    }
  }
  return 0.0;
}

// same ratio for a single component (only its own theta-block is nonzero)
double component_ratio_norm(const Eigen::VectorXd& y, const Eigen::MatrixXd& a, RatioOp op,
                            double tr_a) {
  Eigen::VectorXd ay = a * y;
  switch (op) {
    case RatioOp::GradX: return ay.norm();
    case RatioOp::GradTheta: return ay.norm();
    case RatioOp::LaplaceX: return std::fabs(ay.squaredNorm() - tr_a);
    case RatioOp::GradThetaGradX: return (a - ay * ay.transpose()).norm();
  }
  return 0.0;
}

}  // namespace

PerspectiveReport perspective_check(const SharedCovMixture& model, const TemperatureSchedule& s,
                                    RatioOp op, int k, long mc, Rng& rng, int beta_grid_n,
                                    long component_mc) {
  if (k % 2 != 0 || k <= 0) throw std::invalid_argument("perspective_check: k must be even > 0");
  // mixture side: E over the joint channel
  std::vector<double> vals(mc);
  for (long t = 0; t < mc; ++t) {
    TemperedSample ts = s.noise_channel(model.sample(rng), rng);
    SharedCovMixture mt = model.temper(ts.beta, s.lambda_min());
    vals[t] = std::pow(mixture_ratio_norm(mt, ts.x, op), k);
  }
  MeanStderr ms = mean_stderr(vals);

  // component side: grid max over beta and components
  double rhs = 0.0;
  for (double beta : beta_grid(s.beta_max(), beta_grid_n)) {
    SharedCovMixture mt = model.temper(beta, s.lambda_min());
    const Eigen::MatrixXd& a = mt.precision();
    double tr_a = a.trace();
    Eigen::LLT<Eigen::MatrixXd> llt(mt.covariance());
    Eigen::MatrixXd chol = llt.matrixL();
    for (int i = 0; i < model.num_components(); ++i) {
      double acc = 0.0;
      Eigen::VectorXd z(model.dim());
      for (long t = 0; t < component_mc; ++t) {
        for (int j = 0; j < model.dim(); ++j) z[j] = rng.normal();
        Eigen::VectorXd y = chol * z;  // x - mu_i
        acc += std::pow(component_ratio_norm(y, a, op, tr_a), k);
      }
      rhs = std::max(rhs, acc / double(component_mc));
    }
  }
  PerspectiveReport r;
  r.lhs = ms.mean;
  r.lhs_stderr = ms.stderr_;
  r.rhs = rhs;
  r.holds = ms.mean <= rhs + 3.0 * ms.stderr_ + 3.0 * rhs / std::sqrt(double(component_mc));
  return r;
}

LogDerivativeReport log_derivative_bound_check(const std::vector<int>& index,
                                               const SharedCovMixture& model, long mc, Rng& rng,
                                               double ceiling) {
  const int d = model.dim();
  if (int(index.size()) != d) throw std::invalid_argument("log_derivative_bound_check: index size");
  int total = 0;
  for (int v : index) {
    if (v < 0) throw std::invalid_argument("negative multi-index");
    total += v;
  }
  if (total < 1 || total > 3) throw std::invalid_argument("need 1 <= |I| <= 3");

  // helper: mixture ratio d_J f / f for exponent vector J
  auto ratio = [&](const Eigen::VectorXd& x, const std::vector<int>& expo) -> double {
    int kk = 0;
    std::vector<int> flatidx;
    for (int c = 0; c < d; ++c)
      for (int t = 0; t < expo[c]; ++t) flatidx.push_back(c);
    kk = int(flatidx.size());
    if (kk == 0) return 1.0;
    DerivativeBundle b = model.derivatives(x);
    double acc = 0.0;
    for (int i = 0; i < model.num_components(); ++i) {
      Eigen::VectorXd g = mixed_derivative_ratio(0, kk, x, model.means()[i], model.covariance());
      acc += b.responsibilities[i] * g[encode(flatidx, d)];
    }
    return acc;
  };

  LogDerivativeReport rep;
  rep.ceiling = ceiling;
  Eigen::VectorXd x;
  for (long t = 0; t < mc; ++t) {
    x = model.sample(rng);
    // all sub-exponents J <= I
    double rhs = 1.0;
    std::vector<int> j(d, 0);
    bool done = false;
    std::vector<std::pair<std::vector<int>, double>> cache;
    while (!done) {
      int tot = 0;
      for (int c = 0; c < d; ++c) tot += j[c];
      if (tot >= 1) {
        double rj = ratio(x, j);
        cache.emplace_back(j, rj);
        rhs = std::max(rhs, std::pow(std::fabs(rj), total));
      }
      done = true;
      for (int c = d - 1; c >= 0; --c) {
        if (++j[c] <= index[c]) {
          done = false;
          break;
        }
        j[c] = 0;
      }
    }
    // log-derivative up to order 3 from the ratios
    auto get = [&](std::initializer_list<int> coords) {
      std::vector<int> e(d, 0);
      for (int c : coords) e[c]++;
      for (auto& kv : cache)
        if (kv.first == e) return kv.second;
      return ratio(x, e);
    };
    std::vector<int> coords;
    for (int c = 0; c < d; ++c)
      for (int tt = 0; tt < index[c]; ++tt) coords.push_back(c);
    double lhs = 0.0;
    if (total == 1) {
      lhs = get({coords[0]});
    } else if (total == 2) {
      int a = coords[0], b2 = coords[1];
      lhs = get({a, b2}) - get({a}) * get({b2});
    } else {
      int a = coords[0], b2 = coords[1], c = coords[2];
      lhs = get({a, b2, c}) - get({a, b2}) * get({c}) - get({a, c}) * get({b2}) -
            get({b2, c}) * get({a}) + 2.0 * get({a}) * get({b2}) * get({c});
    }
    rep.max_ratio = std::max(rep.max_ratio, std::fabs(lhs) / rhs);
  }
  rep.holds = rep.max_ratio <= ceiling;
  return rep;
}

}  // namespace gsmix
