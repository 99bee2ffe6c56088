#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gsmix/mixture.hpp"
#include "gsmix/schedule.hpp"

namespace gsmix {

enum class LossKind { SM_population, SM_ibp, GSM_population, GSM_ibp };

std::string loss_kind_name(LossKind k);

struct LossReport {
  double value = 0.0;
  double std_error = 0.0;
  long n_points = 0;
  LossKind kind = LossKind::SM_population;
};

struct PerSampleLoss {
  double l1 = 0.0;
  double l2 = 0.0;
  Eigen::VectorXd grad_means;  // K*d, gradient of l1 + l2
};

// Per-sample quantities of one model at one point, with their analytic
// gradients in the stacked means. All losses and the smoothness estimators
// are assembled from these.
struct LossQuants {
  double log_density = 0.0;
  Eigen::VectorXd gamma;    // K responsibilities
  Eigen::VectorXd score;    // d
  double lap = 0.0;         // Delta p / p
  double bilap = 0.0;       // Delta^2 p / p
  double hess_trace = 0.0;  // Tr grad^2 log p = lap - |score|^2
  Eigen::VectorXd d_logp;   // K*d   grad_theta log p
  Eigen::VectorXd d_lap;    // K*d   grad_theta (Delta p / p)
  Eigen::VectorXd d_bilap;  // K*d   grad_theta (Delta^2 p / p)
  Eigen::MatrixXd d_score;  // d x K*d   grad_theta score
};

LossQuants loss_quants(const SharedCovMixture& model, const Eigen::VectorXd& x);

// Fokker-Planck identity for the Gaussian-convolution channel
// p^beta = p * N(0, beta lambda I):
//   d/dbeta log p^beta   = (lambda/2) (Delta p / p)
//   d^2/dbeta^2 log p^beta = (lambda/2)^2 (Delta^2 p / p - (Delta p / p)^2)
inline double fp_beta_grad(double lambda, double lap) { return 0.5 * lambda * lap; }
inline double fp_beta_hess(double lambda, double lap, double bilap) {
  double h = 0.5 * lambda;
  return h * h * (bilap - lap * lap);
}

// vanilla score matching, IBP form: Tr grad^2 log q + 1/2 |grad log q|^2
double sm_per_sample(const SharedCovMixture& model, const Eigen::VectorXd& x,
                     Eigen::VectorXd* grad_means = nullptr);

LossReport sm_population(const SharedCovMixture& p, const SharedCovMixture& q, long mc, Rng& rng);

// CTLD generalized score matching, IBP form (per tempered sample)
PerSampleLoss gsm_ctld_per_sample(const SharedCovMixture& model, const TemperatureSchedule& s,
                                  const TemperedSample& ts);

LossReport gsm_ctld_population(const SharedCovMixture& p, const SharedCovMixture& q,
                               const TemperatureSchedule& s, long mc, Rng& rng);

// mean of gsm_ctld_per_sample over a fixed sample list, with mean gradient;
// deterministic pairwise summation
double empirical_loss(const SharedCovMixture& model, const TemperatureSchedule& s,
                      const std::vector<TemperedSample>& samples,
                      Eigen::VectorXd* grad_means = nullptr);

}  // namespace gsmix
