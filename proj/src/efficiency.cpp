#include "gsmix/efficiency.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsmix/parallel.hpp"
#include "gsmix/poincare.hpp"
#include "gsmix/stats.hpp"

namespace gsmix {

std::string estimator_kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::MLE: return "mle";
    case EstimatorKind::SM: return "sm";
    case EstimatorKind::GSM: return "gsm";
  }
  return "unknown";
}

namespace {

// Per-sample loss/gradient evaluator in the eigenbasis of the shared
// covariance. Tempering shifts the spectrum, so no per-sample factorizations
// are needed; the losses touch each sample in O(K d).
class TemperedEval {
 public:
  TemperedEval(const SharedCovMixture& base, double lambda_min_ref)
      : k_(base.num_components()), d_(base.dim()), lam_(lambda_min_ref) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base.covariance());
    u_ = es.eigenvectors();
    evals_ = es.eigenvalues();
    logw_ = base.weights().array().log().matrix();
    inv_d_.resize(d_);
    lp_.resize(k_);
    a_.resize(k_);
    b_.resize(k_);
    gam_.resize(k_);
    score_.resize(d_);
    y_.resize(d_, k_);
  }

  int params() const { return k_ * d_; }
  const Eigen::MatrixXd& basis() const { return u_; }

  Eigen::VectorXd to_eigen_coords(const Eigen::VectorXd& x) const { return u_.transpose() * x; }

  void set_theta(const Eigen::VectorXd& stacked) {
    mu_t_.resize(k_);
    for (int j = 0; j < k_; ++j) mu_t_[j] = u_.transpose() * stacked.segment(j * d_, d_);
  }

  // value of the per-sample loss and (optionally) its gradient in eigen
  // coordinates; xt must already be in eigen coordinates
  struct Sample {
    double value = 0.0;
    double l1 = 0.0, l2 = 0.0;
    Eigen::VectorXd grad;  // K*d in eigen coords; rotate_back() maps to x coords
  };

  enum class Mode { MLE, SM, GSM };

  // scratch buffers live in the evaluator; callers copy the evaluator per
  // thread, so eval stays allocation-free on the hot path
  Sample eval(const Eigen::VectorXd& xt, double beta, double r_grad, Mode mode,
              bool want_grad) {
    Sample out;
    double log_norm = 0.0, tr1 = 0.0, tr2 = 0.0;
    for (int c = 0; c < d_; ++c) {
      double dv = evals_[c] + beta * lam_;
      double iv = 1.0 / dv;
      inv_d_[c] = iv;
      log_norm += std::log(dv);
      tr1 += iv;
      tr2 += iv * iv;
    }
    log_norm = -0.5 * (d_ * 1.8378770664093454836 + log_norm);

    double lpmax = -1e300;
    for (int j = 0; j < k_; ++j) {
      double quad = 0.0, q2 = 0.0, q3 = 0.0;
      const double* mu = mu_t_[j].data();
      for (int c = 0; c < d_; ++c) {
        double yv = xt[c] - mu[c];
        double iv = inv_d_[c];
        y_(c, j) = yv;
        double y2iv = yv * yv * iv;
        quad += y2iv;
        q2 += y2iv * iv;
        q3 += y2iv * iv * iv;
      }
      lp_[j] = logw_[j] + log_norm - 0.5 * quad;
      a_[j] = q2 - tr1;
      b_[j] = a_[j] * a_[j] - 4.0 * q3 + 2.0 * tr2;
      lpmax = std::max(lpmax, lp_[j]);
    }
    double zsum = 0.0;
    for (int j = 0; j < k_; ++j) {
      gam_[j] = std::exp(lp_[j] - lpmax);
      zsum += gam_[j];
    }
    double lap = 0.0, bilap = 0.0;
    for (int c = 0; c < d_; ++c) score_[c] = 0.0;
    for (int j = 0; j < k_; ++j) {
      gam_[j] /= zsum;
      lap += gam_[j] * a_[j];
      bilap += gam_[j] * b_[j];
      for (int c = 0; c < d_; ++c) score_[c] -= gam_[j] * y_(c, j) * inv_d_[c];
    }
    double s2 = 0.0;
    for (int c = 0; c < d_; ++c) s2 += score_[c] * score_[c];

    if (mode == Mode::MLE) {
      out.value = -(lpmax + std::log(zsum));
      if (want_grad) {
        out.grad.resize(k_ * d_);
        for (int j = 0; j < k_; ++j)
          for (int c = 0; c < d_; ++c)
            out.grad[j * d_ + c] = -gam_[j] * y_(c, j) * inv_d_[c];
      }
      return out;
    }

    double half = 0.5 * lam_;
    out.l1 = lap - 0.5 * s2;
    out.l2 = (mode == Mode::GSM)
                 ? r_grad * half * lap + half * half * (bilap - 0.5 * lap * lap)
                 : 0.0;
    out.value = out.l1 + out.l2;
    if (!want_grad) return out;

    out.grad.resize(k_ * d_);
    for (int j = 0; j < k_; ++j) {
      double ays = 0.0;  // (A y_j) . score
      for (int c = 0; c < d_; ++c) ays += y_(c, j) * inv_d_[c] * score_[c];
      for (int c = 0; c < d_; ++c) {
        double iv = inv_d_[c];
        double ay = y_(c, j) * iv;
        double a2y = ay * iv;
        double a3y = a2y * iv;
        double d_lap = gam_[j] * (-2.0 * a2y + (a_[j] - lap) * ay);
        double mts = gam_[j] * (score_[c] * iv - ay * ays - ay * s2);
        double g = d_lap - mts;
        if (mode == Mode::GSM) {
          double d_bilap =
              gam_[j] * (-4.0 * a_[j] * a2y + 8.0 * a3y + (b_[j] - bilap) * ay);
          g += r_grad * half * d_lap + half * half * (d_bilap - lap * d_lap);
        }
        out.grad[j * d_ + c] = g;
      }
    }
    return out;
  }

  Eigen::VectorXd rotate_back(const Eigen::VectorXd& grad_eigen) const {
    Eigen::VectorXd g(k_ * d_);
    for (int j = 0; j < k_; ++j) g.segment(j * d_, d_) = u_ * grad_eigen.segment(j * d_, d_);
    return g;
  }

 private:
  int k_, d_;
  double lam_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd evals_;
  Eigen::VectorXd logw_;
  std::vector<Eigen::VectorXd> mu_t_;
  // scratch
  Eigen::VectorXd inv_d_, lp_, a_, b_, gam_, score_;
  Eigen::MatrixXd y_;  // d x K
};

struct Dataset {
  std::vector<Eigen::VectorXd> xt;  // eigen coordinates
  std::vector<double> beta;
  std::vector<double> r_grad;
};

Dataset transform_plain(const TemperedEval& ev, const std::vector<Eigen::VectorXd>& xs) {
  Dataset ds;
  ds.xt.reserve(xs.size());
  for (const auto& x : xs) ds.xt.push_back(ev.to_eigen_coords(x));
  ds.beta.assign(xs.size(), 0.0);
  ds.r_grad.assign(xs.size(), 0.0);
  return ds;
}

Dataset transform_tempered(const TemperedEval& ev, const TemperatureSchedule& s,
                           const std::vector<TemperedSample>& ts) {
  Dataset ds;
  ds.xt.reserve(ts.size());
  for (const auto& t : ts) {
    ds.xt.push_back(ev.to_eigen_coords(t.x));
    ds.beta.push_back(t.beta);
    ds.r_grad.push_back(s.r_grad_log(t.beta));
  }
  return ds;
}

// mean loss and mean gradient (x coords) of a dataset at theta
double dataset_loss(const TemperedEval& ev_const, const Dataset& ds, const Eigen::VectorXd& theta,
                    TemperedEval::Mode mode, Eigen::VectorXd* grad) {
  TemperedEval ev = ev_const;
  ev.set_theta(theta);
  const long n = static_cast<long>(ds.xt.size());
  std::vector<double> vals(n);
  Eigen::VectorXd gsum = Eigen::VectorXd::Zero(ev.params());
  for (long i = 0; i < n; ++i) {
    auto smp = ev.eval(ds.xt[i], ds.beta[i], ds.r_grad[i], mode, grad != nullptr);
    vals[i] = smp.value;
    if (grad) gsum += smp.grad;
  }
  if (grad) *grad = ev.rotate_back(gsum / double(n));
  return pairwise_mean(vals);
}

FitResult gradient_descent_fit(const TemperedEval& ev, const Dataset& ds,
                               const Eigen::VectorXd& init, TemperedEval::Mode mode,
                               const FitConfig& cfg) {
  FitResult res;
  Eigen::VectorXd theta = init, grad;
  double step = 1.0;
  double f = dataset_loss(ev, ds, theta, mode, &grad);
  for (int it = 0; it < cfg.max_iters; ++it) {
    res.iterations = it;
    double gn = grad.norm();
    res.final_grad_norm = gn;
    if (cfg.record_trajectory) res.trajectory.push_back(f);
    if (gn < cfg.grad_tol) {
      res.converged = true;
      break;
    }
    // Armijo backtracking
    double fnew = 0.0;
    Eigen::VectorXd cand;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      cand = theta - step * grad;
      fnew = dataset_loss(ev, ds, cand, mode, nullptr);
      if (fnew <= f - 1e-4 * step * gn * gn) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search stalled; report best iterate
    theta = cand;
    f = dataset_loss(ev, ds, theta, mode, &grad);
    step = std::min(step * 2.0, 1e6);
  }
  res.theta = theta;
  return res;
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() >= 0.0) return m;
  if (es.eigenvalues().minCoeff() < -1e-8)
    return m;  // leave genuinely indefinite matrices alone
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FitResult fit_mle(const std::vector<Eigen::VectorXd>& samples, const Eigen::VectorXd& init,
                  const SharedCovMixture& model_template, const FitConfig& cfg) {
  const int k = model_template.num_components(), d = model_template.dim();
  if (samples.empty()) throw std::invalid_argument("fit_mle: no samples");
  if (init.size() != k * d) throw std::invalid_argument("fit_mle: bad init size");
  SharedCovMixture cur = model_template.with_means(init);
  FitResult res;
  for (int it = 0; it < cfg.em_max_iters; ++it) {
    res.iterations = it + 1;
    Eigen::MatrixXd num = Eigen::MatrixXd::Zero(d, k);
    Eigen::VectorXd den = Eigen::VectorXd::Zero(k);
    for (const auto& x : samples) {
      Eigen::VectorXd g = cur.derivatives(x).responsibilities;
      den += g;
      num += x * g.transpose();
    }
    for (int j = 0; j < k; ++j)
      if (den[j] < 1e-10)
        throw std::runtime_error("fit_mle: degenerate fit, component " + std::to_string(j) +
                                 " lost all responsibility");
    Eigen::VectorXd next(k * d);
    for (int j = 0; j < k; ++j) next.segment(j * d, d) = num.col(j) / den[j];
    res.final_change = (next - cur.stacked_means()).norm();
    cur = model_template.with_means(next);
    if (res.final_change < cfg.em_tol) {
      res.converged = true;
      break;
    }
  }
  // resolve the component permutation against the init
  std::vector<Eigen::VectorXd> ref(k), cand(k);
  for (int j = 0; j < k; ++j) {
    ref[j] = init.segment(j * d, d);
    cand[j] = cur.means()[j];
  }
  auto perm = best_permutation(ref, cand);
  res.theta.resize(k * d);
  for (int j = 0; j < k; ++j) res.theta.segment(j * d, d) = cand[perm[j]];
  return res;
}

FitResult fit_sm(const std::vector<Eigen::VectorXd>& samples, const Eigen::VectorXd& init,
                 const SharedCovMixture& model_template, const FitConfig& cfg) {
  TemperedEval ev(model_template, model_template.lambda_min());
  Dataset ds = transform_plain(ev, samples);
  return gradient_descent_fit(ev, ds, init, TemperedEval::Mode::SM, cfg);
}

FitResult fit_gsm(const std::vector<TemperedSample>& samples, const Eigen::VectorXd& init,
                  const SharedCovMixture& model_template, const TemperatureSchedule& s,
                  const FitConfig& cfg) {
  TemperedEval ev(model_template, s.lambda_min());
  Dataset ds = transform_tempered(ev, s, samples);
  return gradient_descent_fit(ev, ds, init, TemperedEval::Mode::GSM, cfg);
}

namespace {

FisherResult information_matrix(const TemperedEval& ev_const, const Dataset& ds,
                                const Eigen::VectorXd& theta) {
  TemperedEval ev = ev_const;
  ev.set_theta(theta);
  const int p = ev.params();
  const long n = static_cast<long>(ds.xt.size());
  const int batches = 10;
  std::vector<Eigen::MatrixXd> acc(batches, Eigen::MatrixXd::Zero(p, p));
  std::vector<long> cnt(batches, 0);
  for (long i = 0; i < n; ++i) {
    auto smp = ev.eval(ds.xt[i], ds.beta[i], ds.r_grad[i], TemperedEval::Mode::MLE, true);
    Eigen::VectorXd g = ev.rotate_back(-smp.grad);  // grad log p = -grad nll
    int b = int(i % batches);
    acc[b] += g * g.transpose();
    cnt[b] += 1;
  }
  Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(p, p);
  for (int b = 0; b < batches; ++b) fisher += acc[b];
  fisher /= double(n);
  Eigen::MatrixXd mean_sq = Eigen::MatrixXd::Zero(p, p);
  for (int b = 0; b < batches; ++b) {
    Eigen::MatrixXd diff = acc[b] / double(cnt[b]) - fisher;
    mean_sq += diff.cwiseProduct(diff);
  }
  FisherResult out;
  out.fisher = fisher;
  out.entry_stderr = std::sqrt(mean_sq.maxCoeff() / double(batches * (batches - 1)));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fisher);
  if (!lu.isInvertible()) throw std::runtime_error("fisher_information: singular Fisher matrix");
  out.gamma_mle = lu.inverse();
  return out;
}

}  // namespace

FisherResult fisher_information(const SharedCovMixture& model, long mc, Rng& rng) {
  // distinct means are required for identifiability
  for (int i = 0; i < model.num_components(); ++i)
    for (int j = i + 1; j < model.num_components(); ++j)
      if ((model.means()[i] - model.means()[j]).norm() < 1e-12)
        throw std::invalid_argument("fisher_information: duplicate means");
  TemperedEval ev(model, model.lambda_min());
  std::vector<Eigen::VectorXd> xs = model.sample(rng, int(mc));
  Dataset ds = transform_plain(ev, xs);
  return information_matrix(ev, ds, model.stacked_means());
}

FisherResult gsm_information(const SharedCovMixture& model, const TemperatureSchedule& s, long mc,
                             Rng& rng) {
  TemperedEval ev(model, s.lambda_min());
  std::vector<TemperedSample> ts = make_tempered_dataset(model, s, mc, rng);
  Dataset ds = transform_tempered(ev, s, ts);
  return information_matrix(ev, ds, model.stacked_means());
}

std::vector<TemperedSample> make_tempered_dataset(const SharedCovMixture& model,
                                                  const TemperatureSchedule& s, long n, Rng& rng) {
  std::vector<TemperedSample> ts;
  ts.reserve(n);
  for (long i = 0; i < n; ++i) ts.push_back(s.noise_channel(model.sample(rng), rng));
  return ts;
}

SandwichCovariance sandwich(const SharedCovMixture& model, EstimatorKind kind,
                            const TemperatureSchedule* s, long mc, Rng& rng, double fd_step) {
  if (kind == EstimatorKind::GSM && s == nullptr)
    throw std::invalid_argument("sandwich: GSM needs a schedule");
  double lam = s ? s->lambda_min() : model.lambda_min();
  TemperedEval ev(model, lam);
  Dataset ds;
  if (kind == EstimatorKind::GSM) {
    ds = transform_tempered(ev, *s, make_tempered_dataset(model, *s, mc, rng));
  } else {
    ds = transform_plain(ev, model.sample(rng, int(mc)));
  }
  TemperedEval::Mode mode = kind == EstimatorKind::MLE ? TemperedEval::Mode::MLE
                            : kind == EstimatorKind::SM ? TemperedEval::Mode::SM
                                                        : TemperedEval::Mode::GSM;
  const int p = ev.params();
  const long n = static_cast<long>(ds.xt.size());
  const Eigen::VectorXd theta = model.stacked_means();

  // covariance of per-sample gradients at theta*, with batch stderr
  TemperedEval evt = ev;
  evt.set_theta(theta);
  const int batches = 10;
  std::vector<Eigen::MatrixXd> acc2(batches, Eigen::MatrixXd::Zero(p, p));
  std::vector<Eigen::VectorXd> acc1(batches, Eigen::VectorXd::Zero(p));
  std::vector<long> cnt(batches, 0);
  for (long i = 0; i < n; ++i) {
    auto smp = evt.eval(ds.xt[i], ds.beta[i], ds.r_grad[i], mode, true);
    Eigen::VectorXd g = evt.rotate_back(smp.grad);
    int b = int(i % batches);
    acc1[b] += g;
    acc2[b] += g * g.transpose();
    cnt[b] += 1;
  }
  Eigen::VectorXd gbar = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd sec = Eigen::MatrixXd::Zero(p, p);
  for (int b = 0; b < batches; ++b) {
    gbar += acc1[b];
    sec += acc2[b];
  }
  gbar /= double(n);
  sec /= double(n);
  SandwichCovariance out;
  out.grad_cov = sec - gbar * gbar.transpose();
  {
    Eigen::MatrixXd mean_sq = Eigen::MatrixXd::Zero(p, p);
    for (int b = 0; b < batches; ++b) {
      Eigen::MatrixXd cb = acc2[b] / double(cnt[b]) -
                           (acc1[b] / double(cnt[b])) * (acc1[b] / double(cnt[b])).transpose();
      Eigen::MatrixXd diff = cb - out.grad_cov;
      mean_sq += diff.cwiseProduct(diff);
    }
    out.mc_stderr = (mean_sq / double(batches * (batches - 1))).cwiseSqrt();
  }

  // Hessian: central differences of the CRN-averaged analytic gradient
  out.hessian.resize(p, p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
    e[j] = fd_step;
    Eigen::VectorXd gp, gm;
    dataset_loss(ev, ds, theta + e, mode, &gp);
    dataset_loss(ev, ds, theta - e, mode, &gm);
    out.hessian.col(j) = (gp - gm) / (2.0 * fd_step);
  }
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hes(out.hessian);
  out.hessian_min_eig = hes.eigenvalues().minCoeff();
  if (out.hessian_min_eig <= 0.0)
    throw std::runtime_error(
        "sandwich: loss Hessian not positive definite (non-identifiable or under-sampled)");
  Eigen::MatrixXd hinv = out.hessian.llt().solve(Eigen::MatrixXd::Identity(p, p));
  out.gamma = hinv * out.grad_cov * hinv;
  out.gamma = psd_project(0.5 * (out.gamma + out.gamma.transpose().eval()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(out.gamma);
  out.operator_norm = ges.eigenvalues().cwiseAbs().maxCoeff();
  out.trace = out.gamma.trace();
  return out;
}

SmoothnessReport smoothness_terms(const SharedCovMixture& model, const TemperatureSchedule& s,
                                  long mc, Rng& rng) {
  const int p = model.num_components() * model.dim();
  const int d = model.dim();
  const double half = 0.5 * s.lambda_min();
  const int q1 = (d + 1) * p;

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(q1), m2 = Eigen::VectorXd::Zero(p),
                  m3 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(q1, q1), s2 = Eigen::MatrixXd::Zero(p, p),
                  s3 = Eigen::MatrixXd::Zero(p, p);
  double n1 = 0.0, n2 = 0.0, n3 = 0.0;  // E |X|^2 accumulators

  for (long i = 0; i < mc; ++i) {
    TemperedSample ts = s.noise_channel(model.sample(rng), rng);
    SharedCovMixture mt = model.temper(ts.beta, s.lambda_min());
    LossQuants q = loss_quants(mt, ts.x);
    double rg = s.r_grad_log(ts.beta);

    Eigen::VectorXd v1(q1);
    for (int r = 0; r < d; ++r) v1.segment(r * p, p) = q.d_score.row(r).transpose();
    v1.segment(d * p, p) = half * q.d_lap;

    Eigen::VectorXd op(d + 1);
    op.head(d) = q.score;
    op[d] = rg + half * q.lap;
    Eigen::VectorXd v2 = q.d_score.transpose() * q.score + (half * q.d_lap) * op[d];

    Eigen::VectorXd grad_h = q.d_lap - 2.0 * q.d_score.transpose() * q.score;
    Eigen::VectorXd v3 = grad_h + half * half * (q.d_bilap - 2.0 * q.lap * q.d_lap);

    m1 += v1; s1 += v1 * v1.transpose(); n1 += v1.squaredNorm();
    m2 += v2; s2 += v2 * v2.transpose(); n2 += v2.squaredNorm();
    m3 += v3; s3 += v3 * v3.transpose(); n3 += v3.squaredNorm();
  }
  double n = double(mc);
  m1 /= n; m2 /= n; m3 /= n;
  Eigen::MatrixXd c1 = s1 / n - m1 * m1.transpose();
  Eigen::MatrixXd c2 = s2 / n - m2 * m2.transpose();
  Eigen::MatrixXd c3 = s3 / n - m3 * m3.transpose();

  auto opnorm = [](const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  SmoothnessReport rep;
  rep.cov_o_grad = opnorm(c1);
  rep.cov_o_grad_weighted = opnorm(c2);
  rep.cov_delta_grad = opnorm(c3);
  rep.var_bound_max_ratio =
      std::max({rep.cov_o_grad / (6.0 * n1 / n), rep.cov_o_grad_weighted / (6.0 * n2 / n),
                rep.cov_delta_grad / (6.0 * n3 / n)});
  return rep;
}

SampleComplexityReport sample_complexity_check(const SharedCovMixture& model, const TemperatureSchedule& s,
                                long mc, Rng& rng, double c_total,
                                std::optional<double> oracle_cp) {
  SampleComplexityReport rep;
  SandwichCovariance sc = sandwich(model, EstimatorKind::GSM, &s, mc, rng);
  rep.lhs_opnorm = sc.operator_norm;
  FisherResult joint = gsm_information(model, s, mc, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(joint.gamma_mle);
  rep.gamma_mle_joint_opnorm = ges.eigenvalues().cwiseAbs().maxCoeff();
  SmoothnessReport sm = smoothness_terms(model, s, mc, rng);
  rep.c_used = c_total;
  double pref = 2.0 * c_total * c_total * rep.gamma_mle_joint_opnorm * rep.gamma_mle_joint_opnorm;
  rep.rhs = pref * (sm.cov_o_grad_weighted + sm.cov_delta_grad);
  rep.rhs_display_variant = pref * (sm.cov_o_grad + sm.cov_delta_grad);
  rep.holds = rep.lhs_opnorm <= rep.rhs;
  if (oracle_cp) {
    Eigen::MatrixXd gap = sc.hessian - joint.fisher / *oracle_cp;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gap);
    rep.hessian_gap_min_eig = es.eigenvalues().minCoeff();
    double scale = joint.fisher.norm() / *oracle_cp;
    rep.hessian_dominates_scaled_fisher = rep.hessian_gap_min_eig >= -1e-6 * scale;
  }
  return rep;
}

std::vector<EfficiencyRow> separation_sweep(const SweepConfig& cfg) {
  std::vector<EfficiencyRow> rows(cfg.diameters.size());
  int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  parallel_for(cfg.diameters.size(), workers, [&](std::size_t c) {
    EfficiencyRow& row = rows[c];
    row.diameter = cfg.diameters[c];
    row.n = cfg.mc;
    row.seed = cfg.seed + c;
    try {
      double half_sep = row.diameter / 2.0;
      Eigen::VectorXd w(2);
      w << 0.5, 0.5;
      std::vector<Eigen::VectorXd> mus(2, Eigen::VectorXd(1));
      mus[0][0] = -half_sep;
      mus[1][0] = half_sep;
      SharedCovMixture model(w, mus, Eigen::MatrixXd::Identity(1, 1), half_sep);
      TemperatureSchedule sched(half_sep, 1.0);

      Rng rng = Rng::substream(cfg.seed, c);
      FisherResult fr = fisher_information(model, cfg.mc, rng);
      SandwichCovariance ssm = sandwich(model, EstimatorKind::SM, nullptr, cfg.mc, rng);
      SandwichCovariance sgsm = sandwich(model, EstimatorKind::GSM, &sched, cfg.mc, rng);
      row.ratio_sm = ssm.trace / fr.gamma_mle.trace();
      row.ratio_gsm = sgsm.trace / fr.gamma_mle.trace();

      PoincareBoundBreakdown bound = total_bound(model, sched);
      row.cp_bound = bound.c_total;
      OracleResult orc = spectral_oracle_joint(model, sched, cfg.oracle_nx, cfg.oracle_nb);
      row.cp_oracle = orc.value;
      SampleComplexityReport th = sample_complexity_check(model, sched, cfg.mc / 2, rng, bound.c_total);
      row.rhs_thm31 = th.rhs;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  return rows;
}

}  // namespace gsmix
