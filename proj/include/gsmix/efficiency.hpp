#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gsmix/losses.hpp"
#include "gsmix/mixture.hpp"
#include "gsmix/schedule.hpp"

namespace gsmix {

enum class EstimatorKind { MLE, SM, GSM };
std::string estimator_kind_name(EstimatorKind k);

struct FitConfig {
  double grad_tol = 1e-7;
  int max_iters = 2000;
  double em_tol = 1e-8;
  int em_max_iters = 500;
  bool record_trajectory = false;
};

struct FitResult {
  Eigen::VectorXd theta;  // stacked means
  int iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;   // gradient fits
  double final_change = 0.0;      // EM
  std::vector<double> trajectory;  // loss per iteration when recorded
};

// EM with known weights and shared covariance (means only)
FitResult fit_mle(const std::vector<Eigen::VectorXd>& samples, const Eigen::VectorXd& init,
                  const SharedCovMixture& model_template, const FitConfig& cfg = {});

// full-gradient descent with backtracking on the empirical SM loss
FitResult fit_sm(const std::vector<Eigen::VectorXd>& samples, const Eigen::VectorXd& init,
                 const SharedCovMixture& model_template, const FitConfig& cfg = {});

// same on the empirical CTLD-GSM loss over tempered samples
FitResult fit_gsm(const std::vector<TemperedSample>& samples, const Eigen::VectorXd& init,
                  const SharedCovMixture& model_template, const TemperatureSchedule& s,
                  const FitConfig& cfg = {});

struct FisherResult {
  Eigen::MatrixXd fisher;     // E grad_theta log p grad_theta log p'
  Eigen::MatrixXd gamma_mle;  // inverse
  double entry_stderr = 0.0;  // largest per-entry stderr of the Fisher estimate
};

// data-model Fisher information (expectations over p(x))
FisherResult fisher_information(const SharedCovMixture& model, long mc, Rng& rng);

// Fisher of the temperature-augmented family (expectations over p(x, beta));
// this is the Gamma_MLE entering the Hessian bound for the annealed loss
FisherResult gsm_information(const SharedCovMixture& model, const TemperatureSchedule& s, long mc,
                             Rng& rng);

struct SandwichCovariance {
  Eigen::MatrixXd hessian;   // grad^2_theta of the population loss at theta*
  Eigen::MatrixXd grad_cov;  // Cov(grad_theta l)
  Eigen::MatrixXd gamma;     // H^{-1} Cov H^{-1}
  double operator_norm = 0.0;
  double trace = 0.0;
  Eigen::MatrixXd mc_stderr;  // per-entry stderr of grad_cov (batch splits)
  double hessian_min_eig = 0.0;
};

// Asymptotic covariance of the estimator minimizing the given empirical loss,
// at the data-generating theta*. Hessian by central differences of the
// MC-averaged analytic gradient with common random numbers (step 1e-4).
SandwichCovariance sandwich(const SharedCovMixture& model, EstimatorKind kind,
                            const TemperatureSchedule* s, long mc, Rng& rng,
                            double fd_step = 1e-4);

struct SmoothnessReport {
  double cov_o_grad = 0.0;           // ||Cov(O grad_theta log p)||_op (flattened)
  double cov_o_grad_weighted = 0.0;  // ||Cov((O grad_theta log p)(O p / p))||_op
  double cov_delta_grad = 0.0;       // ||Cov((O+O) grad_theta log p)||_op
  double var_bound_max_ratio = 0.0;  // max over the three of ||Var X|| / (6 E|X|^2)
};

SmoothnessReport smoothness_terms(const SharedCovMixture& model, const TemperatureSchedule& s,
                                  long mc, Rng& rng);

struct SampleComplexityReport {
  double lhs_opnorm = 0.0;           // ||Gamma_GSM||_op via the sandwich
  double rhs = 0.0;                  // 2 c^2 |Gamma|^2 (weighted cov + delta cov)
  double rhs_display_variant = 0.0;  // same with the unweighted first covariance
  double c_used = 0.0;
  double gamma_mle_joint_opnorm = 0.0;
  bool holds = false;
  double hessian_gap_min_eig = 0.0;  // min eig of H - (1/C_P) F_joint with oracle C_P
  bool hessian_dominates_scaled_fisher = false;
};

SampleComplexityReport sample_complexity_check(const SharedCovMixture& model, const TemperatureSchedule& s,
                                long mc, Rng& rng, double c_total,
                                std::optional<double> oracle_cp = std::nullopt);

struct EfficiencyRow {
  double diameter = 0.0;  // mean-diameter knob of the sweep (means at +/- D/2)
  long n = 0;             // MC budget per cell
  double ratio_sm = 0.0;
  double ratio_gsm = 0.0;
  double cp_oracle = 0.0;
  double cp_bound = 0.0;
  double rhs_thm31 = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
};

struct SweepConfig {
  std::vector<double> diameters{2.0, 4.0, 6.0};
  long mc = 2000000;
  int oracle_nx = 129;
  int oracle_nb = 129;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware
};

std::vector<EfficiencyRow> separation_sweep(const SweepConfig& cfg);

// helpers used by the CLI and tests
std::vector<TemperedSample> make_tempered_dataset(const SharedCovMixture& model,
                                                  const TemperatureSchedule& s, long n, Rng& rng);

}  // namespace gsmix
