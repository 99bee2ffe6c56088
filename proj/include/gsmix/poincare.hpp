#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <vector>

#include "gsmix/mixture.hpp"
#include "gsmix/rng.hpp"
#include "gsmix/schedule.hpp"

namespace gsmix {

// chi^2(N(mu_i, Sigma) || N(mu_j, Sigma)) = exp((mu_i-mu_j)' Sigma^{-1} (mu_i-mu_j)) - 1
double chisq_same_cov(const Eigen::VectorXd& mu_i, const Eigen::VectorXd& mu_j,
                      const Eigen::MatrixXd& sigma);

// the closed bound exp(7 D^2 / (lambda_min (1+beta))) the pipeline compares against
double chisq_same_cov_bound(double diameter, double lambda_min, double beta);

// chi^2 between the joint "annealed" component laws p(x, beta | i), p(x, beta | j):
// integral over beta of the same-covariance chi^2 under r(beta)
double chisq_joint(const SharedCovMixture& model, const TemperatureSchedule& s, int i, int j,
                   double tol = 1e-8);

struct ProjectedChain {
  Eigen::MatrixXd transition;  // K x K, self-loops filled
  double c_projected = 0.0;    // canonical-path bound
  double c_exact = 0.0;        // eigensolve Poincare constant of the chain
  double detailed_balance_err = 0.0;
};

ProjectedChain projected_chain_bound(const SharedCovMixture& model, const TemperatureSchedule& s);

struct ComponentBound {
  double value = 0.0;        // max{C2 (1 + 2 C1 Linf_closed), 2 C1}
  double c_beta = 0.0;       // C1 = beta_max / pi
  double c_x_given_beta = 0.0;  // C2 = lambda_max + beta_max lambda_min
  double rate_of_change_closed = 0.0;    // 16 d^2 max{lambda_max^8, 14^8 D^16}
  double rate_of_change_numeric = 0.0;  // sup_beta E (d/dbeta log p(x|beta,i))^2
};

ComponentBound component_bound(const SharedCovMixture& model, const TemperatureSchedule& s, int i);

struct PoincareBoundBreakdown {
  double c_beta = 0.0;
  double c_x_given_beta = 0.0;
  double rate_of_change_sup = 0.0;
  double rate_of_change_closed = 0.0;
  double c_component = 0.0;
  Eigen::MatrixXd chisq_joint_matrix;
  Eigen::MatrixXd projected_T;
  double c_projected = 0.0;
  double c_total = 0.0;
  double collapsed_reference = 0.0;  // D^22 d^2 lambda_max^9 lambda_min^-2 profile
  std::optional<double> oracle_value;
};

PoincareBoundBreakdown total_bound(const SharedCovMixture& model, const TemperatureSchedule& s);

struct OracleResult {
  double value = 0.0;   // Richardson-extrapolated 1/lambda_1
  double coarse = 0.0;
  double fine = 0.0;
};

// Discretized Langevin generator on a rectangular grid: stationary weights on
// the nodes and the finite-volume Dirichlet quadratic form as a sparse
// symmetric PSD operator whose kernel is the constants.
struct GridOperator {
  struct Axis {
    double lo = 0.0, hi = 0.0;
    int n = 0;
    double step = 0.0;
  };
  std::vector<Axis> axes;              // 1 or 2 axes
  Eigen::VectorXd stationary;          // node weights, positive, sum 1
  Eigen::SparseMatrix<double> dirichlet;
};

// weighted-graph-Laplacian discretization of E(g) = E_pi |grad g|^2;
// log_density is evaluated on nodes and edge midpoints
GridOperator build_grid_operator(const std::function<double(const std::vector<double>&)>& log_density,
                                 const std::vector<GridOperator::Axis>& axes);

// smallest nonzero generalized eigenvalue of (dirichlet, diag(stationary))
double grid_spectral_gap(const GridOperator& op);

// Best Poincare constant of the Langevin diffusion with stationary density
// exp(log_density) on [lo, hi], by a finite-difference Dirichlet form and a
// sparse eigensolve at n and 2n-1 nodes.
OracleResult spectral_oracle_1d(const std::function<double(double)>& log_density, double lo,
                                double hi, int n);

// same for a 1d mixture target
OracleResult spectral_oracle_mixture(const SharedCovMixture& model, int n, double span_sd = 8.0);

// joint (x, beta) CTLD chain for a 1d model; reflecting ends in beta
OracleResult spectral_oracle_joint(const SharedCovMixture& model, const TemperatureSchedule& s,
                                   int nx, int nb, double span_sd = 6.0);

// ---------------------------------------------------------------------------
// discrete decomposition instances (variance decomposition inequality)

struct DiscreteMixtureInstance {
  Eigen::VectorXd weights;                  // m
  std::vector<Eigen::VectorXd> components;  // m distributions on n states
  std::vector<Eigen::MatrixXd> generators;  // m generators, reversible wrt component
};

// random-walk Metropolis generator on a path, reversible wrt dist
Eigen::MatrixXd metropolis_path_generator(const Eigen::VectorXd& dist);

struct DecompositionReport {
  int trials = 0;
  int violations = 0;
  double min_slack = 0.0;       // min over trials of rhs - lhs
  double c_component = 0.0;     // max_j exact component constant
  double c_projected = 0.0;     // exact projected-chain constant
  double adversarial_slack = 0.0;  // slack at the full chain's second eigenfunction
};

DecompositionReport decomposition_check(const DiscreteMixtureInstance& inst, int trials, Rng& rng);

// exact Poincare constant (1/spectral gap) of a reversible generator
double discrete_poincare_constant(const Eigen::MatrixXd& generator,
                                  const Eigen::VectorXd& stationary);

double chisq_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace gsmix
