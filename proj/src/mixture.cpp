#include "gsmix/mixture.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gsmix {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

SharedCovMixture::SharedCovMixture(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                                   Eigen::MatrixXd covariance, double diameter_bound)
    : weights_(std::move(weights)), means_(std::move(means)), covariance_(std::move(covariance)),
      diameter_(diameter_bound) {
  k_ = static_cast<int>(weights_.size());
  require(k_ >= 1, "mixture needs at least one component");
  require(static_cast<int>(means_.size()) == k_, "weights/means size mismatch");
  d_ = static_cast<int>(means_[0].size());
  require(d_ >= 1, "dimension must be positive");
  for (const auto& m : means_) {
    require(static_cast<int>(m.size()) == d_, "inconsistent mean dimensions");
    require(m.allFinite(), "non-finite mean");
  }
  require(covariance_.rows() == d_ && covariance_.cols() == d_, "covariance shape mismatch");
  require(covariance_.allFinite(), "non-finite covariance");
  require((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
          "covariance not symmetric");

  double wsum = weights_.sum();
  require(std::fabs(wsum - 1.0) <= 1e-12, "weights must sum to 1");
  for (int i = 0; i < k_; ++i) require(weights_[i] > 0.0, "weights must be positive");
  log_weights_ = weights_.array().log().matrix();

  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  require(llt.info() == Eigen::Success, "covariance factorization failed");
  chol_ = llt.matrixL();
  log_det_ = 0.0;
  for (int i = 0; i < d_; ++i) log_det_ += 2.0 * std::log(chol_(i, i));
  precision_ = llt.solve(Eigen::MatrixXd::Identity(d_, d_));
  precision_ = 0.5 * (precision_ + precision_.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance_);
  lambda_min_ = es.eigenvalues().minCoeff();
  lambda_max_ = es.eigenvalues().maxCoeff();
  require(lambda_min_ > 0.0, "covariance not positive definite");
  require(lambda_max_ / lambda_min_ <= 1e12, "covariance condition number above 1e12");

  double max_norm = 0.0;
  for (const auto& m : means_) max_norm = std::max(max_norm, m.norm());
  require(diameter_ >= max_norm, "diameter bound below the largest mean norm");

  trace_prec_ = precision_.trace();
  prec_sq_ = precision_ * precision_;
  prec_cu_ = prec_sq_ * precision_;
  trace_prec_sq_ = prec_sq_.trace();
}

void SharedCovMixture::component_log_pdfs(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.resize(k_);
  for (int i = 0; i < k_; ++i) {
    Eigen::VectorXd y = x - means_[i];
    double quad = y.dot(precision_ * y);
    out[i] = -0.5 * (d_ * kLog2Pi + log_det_ + quad);
  }
}

double SharedCovMixture::log_pdf(const Eigen::VectorXd& x) const {
  require(x.size() == d_ && x.allFinite(), "log_pdf: bad input point");
  Eigen::VectorXd lp;
  component_log_pdfs(x, lp);
  lp += log_weights_;
  double m = lp.maxCoeff();
  return m + std::log((lp.array() - m).exp().sum());
}

DerivativeBundle SharedCovMixture::derivatives(const Eigen::VectorXd& x) const {
  require(x.size() == d_ && x.allFinite(), "derivatives: bad input point");
  DerivativeBundle b;
  Eigen::VectorXd lp;
  component_log_pdfs(x, lp);
  lp += log_weights_;
  double m = lp.maxCoeff();
  Eigen::ArrayXd g = (lp.array() - m).exp();
  double z = g.sum();
  b.log_density = m + std::log(z);
  g /= z;
  b.responsibilities = g.matrix();

  b.score = Eigen::VectorXd::Zero(d_);
  b.mean_gradient = Eigen::VectorXd::Zero(k_ * d_);
  b.laplacian_ratio = 0.0;
  b.bilaplacian_ratio = 0.0;
  for (int i = 0; i < k_; ++i) {
    Eigen::VectorXd y = x - means_[i];
    Eigen::VectorXd ay = precision_ * y;
    double q2 = y.dot(prec_sq_ * y);       // y' A^2 y
    double q3 = y.dot(prec_cu_ * y);       // y' A^3 y
    double a = q2 - trace_prec_;           // Delta phi_i / phi_i
    double bi = a * a - 4.0 * q3 + 2.0 * trace_prec_sq_;  // Delta^2 phi_i / phi_i
    b.score.noalias() -= g[i] * ay;
    b.mean_gradient.segment(i * d_, d_) = g[i] * ay;
    b.laplacian_ratio += g[i] * a;
    b.bilaplacian_ratio += g[i] * bi;
  }
  b.hessian_log_trace = b.laplacian_ratio - b.score.squaredNorm();
  return b;
}

Eigen::VectorXd SharedCovMixture::sample(Rng& rng) const {
  double u = rng.uniform();
  int comp = k_ - 1;
  double acc = 0.0;
  for (int i = 0; i < k_; ++i) {
    acc += weights_[i];
    if (u <= acc) { comp = i; break; }
  }
  Eigen::VectorXd z(d_);
  for (int i = 0; i < d_; ++i) z[i] = rng.normal();
  return means_[comp] + chol_ * z;
}

std::vector<Eigen::VectorXd> SharedCovMixture::sample(Rng& rng, int n) const {
  require(n >= 1, "sample: n must be >= 1");
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(sample(rng));
  return out;
}

SharedCovMixture SharedCovMixture::temper(double beta, double lambda_min_ref) const {
  require(beta >= 0.0, "temper: beta must be nonnegative");
  require(lambda_min_ref > 0.0, "temper: lambda_min_ref must be positive");
  Eigen::MatrixXd cov = covariance_ + beta * lambda_min_ref * Eigen::MatrixXd::Identity(d_, d_);
  return SharedCovMixture(weights_, means_, cov, diameter_);
}

SharedCovMixture SharedCovMixture::with_means(const std::vector<Eigen::VectorXd>& means) const {
  double mx = 0.0;
  for (const auto& m : means) mx = std::max(mx, m.norm());
  return SharedCovMixture(weights_, means, covariance_, std::max(diameter_, mx));
}

SharedCovMixture SharedCovMixture::with_means(const Eigen::VectorXd& stacked) const {
  require(stacked.size() == k_ * d_, "with_means: bad stacked size");
  std::vector<Eigen::VectorXd> ms(k_);
  for (int i = 0; i < k_; ++i) ms[i] = stacked.segment(i * d_, d_);
  return with_means(ms);
}

Eigen::VectorXd SharedCovMixture::stacked_means() const {
  Eigen::VectorXd s(k_ * d_);
  for (int i = 0; i < k_; ++i) s.segment(i * d_, d_) = means_[i];
  return s;
}

namespace {
void put(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
}  // namespace

std::string SharedCovMixture::serialize() const {
  std::ostringstream os;
  os << "mixture " << k_ << " " << d_ << "\n";
  os << "weights";
  for (int i = 0; i < k_; ++i) { os << " "; put(os, weights_[i]); }
  os << "\n";
  for (int i = 0; i < k_; ++i) {
    os << "mean";
    for (int j = 0; j < d_; ++j) { os << " "; put(os, means_[i][j]); }
    os << "\n";
  }
  os << "cov";
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) { os << " "; put(os, covariance_(i, j)); }
  os << "\n";
  os << "diameter ";
  put(os, diameter_);
  os << "\n";
  return os.str();
}

SharedCovMixture SharedCovMixture::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int k = 0, d = 0;
  is >> tag >> k >> d;
  require(tag == "mixture" && k >= 1 && d >= 1, "deserialize: bad header");
  Eigen::VectorXd w(k);
  is >> tag;
  require(tag == "weights", "deserialize: expected weights");
  for (int i = 0; i < k; ++i) is >> w[i];
  std::vector<Eigen::VectorXd> means(k, Eigen::VectorXd(d));
  for (int i = 0; i < k; ++i) {
    is >> tag;
    require(tag == "mean", "deserialize: expected mean");
    for (int j = 0; j < d; ++j) is >> means[i][j];
  }
  Eigen::MatrixXd cov(d, d);
  is >> tag;
  require(tag == "cov", "deserialize: expected cov");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) is >> cov(i, j);
  double diam = 0.0;
  is >> tag >> diam;
  require(tag == "diameter" && is.good(), "deserialize: expected diameter");
  return SharedCovMixture(w, means, cov, diam);
}

std::vector<int> best_permutation(const std::vector<Eigen::VectorXd>& ref,
                                  const std::vector<Eigen::VectorXd>& cand) {
  int k = static_cast<int>(ref.size());
  std::vector<int> perm(k), best(k);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < k; ++i) c += (ref[i] - cand[perm[i]]).squaredNorm();
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double permutation_distance(const SharedCovMixture& a, const Eigen::VectorXd& stacked_b) {
  int k = a.num_components(), d = a.dim();
  std::vector<Eigen::VectorXd> cand(k);
  for (int i = 0; i < k; ++i) cand[i] = stacked_b.segment(i * d, d);
  auto perm = best_permutation(a.means(), cand);
  double c = 0.0;
  for (int i = 0; i < k; ++i) c += (a.means()[i] - cand[perm[i]]).squaredNorm();
  return std::sqrt(c);
}

}  // namespace gsmix
