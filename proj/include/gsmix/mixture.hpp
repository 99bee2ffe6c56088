#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsmix/rng.hpp"

namespace gsmix {

// Everything a loss needs at one point x: log-density, score, trace of the
// log-Hessian, the Laplacian ratios (Delta p / p and Delta^2 p / p), the
// gradient with respect to the stacked means, and the responsibilities.
struct DerivativeBundle {
  double log_density = 0.0;
  Eigen::VectorXd score;            // d
  double hessian_log_trace = 0.0;   // Tr grad^2 log p
  double laplacian_ratio = 0.0;     // Delta p / p
  double bilaplacian_ratio = 0.0;   // Delta^2 p / p
  Eigen::VectorXd mean_gradient;    // K*d, block i = grad_{mu_i} log p
  Eigen::VectorXd responsibilities; // K
};

// Gaussian mixture with one shared SPD covariance. Immutable after
// construction; the factorization is computed once and shared.
class SharedCovMixture {
 public:
  SharedCovMixture(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                   Eigen::MatrixXd covariance, double diameter_bound);

  int dim() const { return d_; }
  int num_components() const { return k_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  double diameter_bound() const { return diameter_; }

  double log_pdf(const Eigen::VectorXd& x) const;
  DerivativeBundle derivatives(const Eigen::VectorXd& x) const;

  // componentwise log N(x; mu_i, Sigma), before the weight
  void component_log_pdfs(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;

  Eigen::VectorXd sample(Rng& rng) const;
  std::vector<Eigen::VectorXd> sample(Rng& rng, int n) const;

  // model with covariance Sigma + beta * lambda_min_ref * I (Gaussian
  // convolution channel); weights and means unchanged
  SharedCovMixture temper(double beta, double lambda_min_ref) const;

  // replaces the means, keeping weights/covariance/diameter
  SharedCovMixture with_means(const std::vector<Eigen::VectorXd>& means) const;
  SharedCovMixture with_means(const Eigen::VectorXd& stacked) const;

  Eigen::VectorXd stacked_means() const;

  std::string serialize() const;
  static SharedCovMixture deserialize(const std::string& text);

 private:
  int k_ = 0, d_ = 0;
  Eigen::VectorXd weights_;
  Eigen::VectorXd log_weights_;
  std::vector<Eigen::VectorXd> means_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd chol_;       // lower Cholesky factor of Sigma
  Eigen::MatrixXd precision_;  // Sigma^{-1}
  double log_det_ = 0.0;
  double lambda_min_ = 0.0, lambda_max_ = 0.0;
  double diameter_ = 0.0;
  double trace_prec_ = 0.0;       // Tr Sigma^{-1}
  double trace_prec_sq_ = 0.0;    // Tr Sigma^{-2}
  Eigen::MatrixXd prec_sq_;       // Sigma^{-2}
  Eigen::MatrixXd prec_cu_;       // Sigma^{-3}
};

// min over component permutations of the l2 distance between stacked means;
// exact matching, the K here are small
double permutation_distance(const SharedCovMixture& a, const Eigen::VectorXd& stacked_b);
std::vector<int> best_permutation(const std::vector<Eigen::VectorXd>& ref,
                                  const std::vector<Eigen::VectorXd>& cand);

}  // namespace gsmix
