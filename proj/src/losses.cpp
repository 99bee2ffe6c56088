#include "gsmix/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "gsmix/stats.hpp"

namespace gsmix {

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::SM_population: return "SM_population";
    case LossKind::SM_ibp: return "SM_ibp";
    case LossKind::GSM_population: return "GSM_population";
    case LossKind::GSM_ibp: return "GSM_ibp";
  }
  return "unknown";
}

LossQuants loss_quants(const SharedCovMixture& model, const Eigen::VectorXd& x) {
  const int k = model.num_components(), d = model.dim();
  const Eigen::MatrixXd& a = model.precision();
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a3 = a2 * a;
  const double tr_a = a.trace(), tr_a2 = a2.trace();

  DerivativeBundle bundle = model.derivatives(x);
  LossQuants q;
  q.log_density = bundle.log_density;
  q.gamma = bundle.responsibilities;
  q.score = bundle.score;
  q.lap = bundle.laplacian_ratio;
  q.bilap = bundle.bilaplacian_ratio;
  q.hess_trace = bundle.hessian_log_trace;
  q.d_logp = bundle.mean_gradient;

  q.d_lap.resize(k * d);
  q.d_bilap.resize(k * d);
  q.d_score.resize(d, k * d);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd y = x - model.means()[i];
    Eigen::VectorXd ay = a * y;
    Eigen::VectorXd a2y = a2 * y;
    Eigen::VectorXd a3y = a3 * y;
    double ai = y.dot(a2y) - tr_a;
    double bi = ai * ai - 4.0 * y.dot(a3y) + 2.0 * tr_a2;
    double g = q.gamma[i];
    q.d_lap.segment(i * d, d) = g * (-2.0 * a2y + (ai - q.lap) * ay);
    q.d_bilap.segment(i * d, d) =
        g * (-4.0 * ai * a2y + 8.0 * a3y + (bi - q.bilap) * ay);
    q.d_score.block(0, i * d, d, d) =
        g * (a - ay * ay.transpose() - q.score * ay.transpose());
  }
  return q;
}

double sm_per_sample(const SharedCovMixture& model, const Eigen::VectorXd& x,
                     Eigen::VectorXd* grad_means) {
  LossQuants q = loss_quants(model, x);
  if (grad_means) *grad_means = q.d_lap - q.d_score.transpose() * q.score;
  return q.lap - 0.5 * q.score.squaredNorm();
}

LossReport sm_population(const SharedCovMixture& p, const SharedCovMixture& q, long mc, Rng& rng) {
  if (p.dim() != q.dim()) throw std::invalid_argument("sm_population: dimension mismatch");
  if (mc < 2) throw std::invalid_argument("sm_population: need at least 2 samples");
  std::vector<double> vals(mc);
  for (long i = 0; i < mc; ++i) {
    Eigen::VectorXd x = p.sample(rng);
    Eigen::VectorXd sp = p.derivatives(x).score;
    Eigen::VectorXd sq = q.derivatives(x).score;
    vals[i] = 0.5 * (sp - sq).squaredNorm();
  }
  MeanStderr ms = mean_stderr(vals);
  return LossReport{ms.mean, ms.stderr_, mc, LossKind::SM_population};
}

PerSampleLoss gsm_ctld_per_sample(const SharedCovMixture& model, const TemperatureSchedule& s,
                                  const TemperedSample& ts) {
  if (model.dim() != ts.x.size()) throw std::invalid_argument("gsm per-sample: dim mismatch");
  const double lam = s.lambda_min();
  const double half = 0.5 * lam;
  const double rg = s.r_grad_log(ts.beta);  // throws if beta out of range

  SharedCovMixture tempered = model.temper(ts.beta, lam);
  LossQuants q = loss_quants(tempered, ts.x);

  PerSampleLoss out;
  out.l1 = q.lap - 0.5 * q.score.squaredNorm();
  out.l2 = rg * half * q.lap + half * half * (q.bilap - 0.5 * q.lap * q.lap);
  out.grad_means = (q.d_lap - q.d_score.transpose() * q.score) +
                   rg * half * q.d_lap + half * half * (q.d_bilap - q.lap * q.d_lap);
  return out;
}

LossReport gsm_ctld_population(const SharedCovMixture& p, const SharedCovMixture& q,
                               const TemperatureSchedule& s, long mc, Rng& rng) {
  if (p.dim() != q.dim()) throw std::invalid_argument("gsm_population: dimension mismatch");
  if (mc < 2) throw std::invalid_argument("gsm_population: need at least 2 samples");
  const double half = 0.5 * s.lambda_min();
  std::vector<double> vals(mc);
  for (long i = 0; i < mc; ++i) {
    TemperedSample ts = s.noise_channel(p.sample(rng), rng);
    SharedCovMixture pt = p.temper(ts.beta, s.lambda_min());
    SharedCovMixture qt = q.temper(ts.beta, s.lambda_min());
    DerivativeBundle bp = pt.derivatives(ts.x);
    DerivativeBundle bq = qt.derivatives(ts.x);
    double du = half * (bp.laplacian_ratio - bq.laplacian_ratio);
    vals[i] = 0.5 * ((bp.score - bq.score).squaredNorm() + du * du);
  }
  MeanStderr ms = mean_stderr(vals);
  return LossReport{ms.mean, ms.stderr_, mc, LossKind::GSM_population};
}

double empirical_loss(const SharedCovMixture& model, const TemperatureSchedule& s,
                      const std::vector<TemperedSample>& samples, Eigen::VectorXd* grad_means) {
  if (samples.empty()) throw std::invalid_argument("empirical_loss: empty sample list");
  const long n = static_cast<long>(samples.size());
  std::vector<double> vals(n);
  const int p = model.num_components() * model.dim();
  std::vector<std::vector<double>> grads;
  if (grad_means) grads.assign(p, std::vector<double>(n));
  for (long i = 0; i < n; ++i) {
    PerSampleLoss ps = gsm_ctld_per_sample(model, s, samples[i]);
    vals[i] = ps.l1 + ps.l2;
    if (grad_means)
      for (int j = 0; j < p; ++j) grads[j][i] = ps.grad_means[j];
  }
  if (grad_means) {
    grad_means->resize(p);
    for (int j = 0; j < p; ++j) (*grad_means)[j] = pairwise_mean(grads[j]);
  }
  return pairwise_mean(vals);
}

}  // namespace gsmix
