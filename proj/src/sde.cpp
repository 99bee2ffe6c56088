#include "gsmix/sde.hpp"

#include <algorithm>
#include <cmath>

#include "gsmix/losses.hpp"
#include "gsmix/parallel.hpp"
#include "gsmix/stats.hpp"

namespace gsmix {

namespace {

double fold(double beta, double beta_max) {
  // reflect until inside; each pass shrinks the excursion
  for (int i = 0; i < 64 && (beta < 0.0 || beta > beta_max); ++i) {
    if (beta < 0.0) beta = -beta;
    if (beta > beta_max) beta = 2.0 * beta_max - beta;
  }
  if (beta < 0.0 || beta > beta_max)
    beta = std::clamp(beta, 0.0, beta_max);
  return beta;
}

void check_dt(double dt, const SharedCovMixture& model) {
  double guard = 1e-2 * std::min(1.0, model.lambda_min());
  if (!(dt > 0.0) || dt > guard)
    throw std::invalid_argument("step size must satisfy 0 < dt <= 1e-2 * min(1, lambda_min)");
}

}  // namespace

void ctld_drift(const ChainState& state, const SharedCovMixture& model,
                const TemperatureSchedule& s, Eigen::VectorXd& drift_x, double& drift_beta) {
  SharedCovMixture tempered = model.temper(state.beta, s.lambda_min());
  DerivativeBundle b = tempered.derivatives(state.x);
  drift_x = b.score;
  drift_beta = s.r_grad_log(state.beta) + fp_beta_grad(s.lambda_min(), b.laplacian_ratio);
}

ChainState ctld_step(const ChainState& state, double dt, const SharedCovMixture& model,
                     const TemperatureSchedule& s, Rng& rng, double noise_scale) {
  check_dt(dt, model);
  Eigen::VectorXd dx;
  double db = 0.0;
  ctld_drift(state, model, s, dx, db);
  if (!dx.allFinite() || !std::isfinite(db))
    throw StepError("ctld_step: non-finite drift", state);
  ChainState next;
  double sd = noise_scale * std::sqrt(2.0 * dt);
  next.x = state.x + dt * dx;
  for (int i = 0; i < next.x.size(); ++i) next.x[i] += sd * rng.normal();
  next.beta = fold(state.beta + dt * db + sd * rng.normal(), s.beta_max());
  next.step_count = state.step_count + 1;
  if (!next.x.allFinite()) throw StepError("ctld_step: non-finite state", state);
  return next;
}

Eigen::VectorXd langevin_step(const Eigen::VectorXd& x, double dt, const SharedCovMixture& model,
                              Rng& rng) {
  check_dt(dt, model);
  Eigen::VectorXd s = model.derivatives(x).score;
  if (!s.allFinite()) throw StepError("langevin_step: non-finite drift", ChainState{x, 0.0, 0});
  Eigen::VectorXd next = x + dt * s;
  double sd = std::sqrt(2.0 * dt);
  for (int i = 0; i < next.size(); ++i) next[i] += sd * rng.normal();
  if (!next.allFinite()) throw StepError("langevin_step: non-finite state", ChainState{x, 0.0, 0});
  return next;
}

int nearest_mean(const SharedCovMixture& model, const Eigen::VectorXd& x) {
  int best = 0;
  double bd = (x - model.means()[0]).squaredNorm();
  for (int i = 1; i < model.num_components(); ++i) {
    double d = (x - model.means()[i]).squaredNorm();
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

double integrated_autocorrelation(const std::vector<double>& series) {
  const long n = static_cast<long>(series.size());
  if (n < 16) return 1.0;
  double mean = pairwise_mean(series);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= double(n);
  if (var <= 0.0) return 1.0;
  double tau = 1.0;
  for (long lag = 1; lag < n / 4; ++lag) {
    double c = 0.0;
    for (long i = 0; i + lag < n; ++i) c += (series[i] - mean) * (series[i + lag] - mean);
    c /= double(n - lag) * var;
    tau += 2.0 * c;
    if (double(lag) >= 5.0 * tau) break;  // Sokal window
  }
  return std::max(tau, 1.0);
}

ChainResult run_chain(ChainState init, long steps, double dt, long thin,
                      const SharedCovMixture& model, const TemperatureSchedule& s, Rng& rng) {
  if (steps < 1) throw std::invalid_argument("run_chain: steps must be >= 1");
  if (thin < 1) thin = 1;
  ChainResult out;
  out.trajectory.reserve(steps / thin + 1);
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(model.num_components());
  std::vector<double> proj;
  proj.reserve(steps / thin + 1);
  std::vector<double> betas;
  betas.reserve(steps / thin + 1);

  ChainState st = std::move(init);
  for (long t = 0; t < steps; ++t) {
    st = ctld_step(st, dt, model, s, rng);
    occ[nearest_mean(model, st.x)] += 1.0;
    if (t % thin == 0) {
      out.trajectory.push_back(st);
      proj.push_back(st.x[0]);
      betas.push_back(st.beta);
    }
  }
  out.report.mode_occupancy = occ / double(steps);
  out.report.autocorrelation_time = integrated_autocorrelation(proj);

  // descriptive chi-squared of the thinned beta histogram against r(beta),
  // equal-probability bins (correlated samples, so the p-value is only a
  // diagnostic here; the stationarity test uses stationary_ensemble_betas)
  int nb = 20;
  out.report.histogram_bins = nb;
  std::vector<double> edges(nb + 1);
  edges[0] = 0.0;
  edges[nb] = s.beta_max();
  for (int i = 1; i < nb; ++i) {
    // invert the CDF by bisection
    double target = double(i) / nb, lo = 0.0, hi = s.beta_max();
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (s.cdf(mid) < target ? lo : hi) = mid;
    }
    edges[i] = 0.5 * (lo + hi);
  }
  std::vector<double> counts(nb, 0.0);
  for (double b : betas) {
    int bin = int(std::upper_bound(edges.begin(), edges.end(), b) - edges.begin()) - 1;
    counts[std::clamp(bin, 0, nb - 1)] += 1.0;
  }
  double expect = double(betas.size()) / nb, chi2 = 0.0;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  out.report.histogram_chisq = chi2;
  out.report.histogram_pvalue = chi2_pvalue(chi2, nb - 1);
  return out;
}

Eigen::VectorXd langevin_occupancy(Eigen::VectorXd x0, long steps, double dt,
                                   const SharedCovMixture& model, Rng& rng) {
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(model.num_components());
  Eigen::VectorXd x = std::move(x0);
  for (long t = 0; t < steps; ++t) {
    x = langevin_step(x, dt, model, rng);
    occ[nearest_mean(model, x)] += 1.0;
  }
  return occ / double(steps);
}

std::vector<double> stationary_ensemble_betas(const SharedCovMixture& model,
                                              const TemperatureSchedule& s, int n_chains,
                                              long steps, double dt, std::uint64_t seed,
                                              int workers) {
  std::vector<double> betas(n_chains, 0.0);
  parallel_for(n_chains, workers, [&](std::size_t c) {
    Rng rng = Rng::substream(seed, c);
    ChainState st;
    TemperedSample ts = s.noise_channel(model.sample(rng), rng);
    st.x = ts.x;
    st.beta = ts.beta;
    for (long t = 0; t < steps; ++t) st = ctld_step(st, dt, model, s, rng);
    betas[c] = st.beta;
  });
  return betas;
}

}  // namespace gsmix
