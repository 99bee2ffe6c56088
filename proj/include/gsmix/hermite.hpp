#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gsmix/mixture.hpp"
#include "gsmix/rng.hpp"
#include "gsmix/schedule.hpp"

namespace gsmix {

// Order-k Hermite tensor for N(0, Sigma), flat Kronecker (row-major) layout:
// entry (j_1..j_k) sits at j_1 d^{k-1} + ... + j_k.
struct HermiteTensor {
  int order = 0;
  int dim = 0;
  Eigen::VectorXd entries;  // length dim^order

  double& at(const std::vector<int>& idx);
  double at(const std::vector<int>& idx) const;
};

// Exact tensor via the Rodrigues-form recursion
//   H_{k+1}[a, J] = x_a H_k[J] - sum_i Sigma(a, J_i) H_{k-1}[J \ i].
// Supported for k <= 4.
HermiteTensor hermite_tensor(int k, const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma);

// Monte Carlo of the integral representation E[(x + i u)^{(x) k}], u ~ N(0, Sigma).
// Returns the real-part average; imag_max_t is the largest |mean/stderr| over
// entries of the imaginary part (should be noise).
HermiteTensor hermite_tensor_mc(int k, const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma,
                                long n, Rng& rng, Eigen::VectorXd* stderr_out = nullptr,
                                double* imag_max_t = nullptr);

// grad_mu^{k1} grad_x^{k2} phi(x - mu; Sigma) / phi, flattened, via the Hermite
// identity (-1)^{k2} (Sigma^{-1})^{(x) k} H_k(x - mu; Sigma), k = k1 + k2 <= 3.
Eigen::VectorXd mixed_derivative_ratio(int k1, int k2, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

// same with k2 Laplacians in x instead of gradients (indices contracted in pairs)
Eigen::VectorXd mixed_laplacian_ratio(int k1, int k2, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

struct MomentBoundReport {
  double lhs = 0.0;         // MC estimate of E |ratio|^{2k}
  double lhs_stderr = 0.0;
  double rhs = 0.0;         // d^{(k1+k2)k} lambda_min^{-(k1+k2)k} profile
  double ratio = 0.0;       // lhs / rhs
  bool laplacian_variant = false;
};

MomentBoundReport moment_bound_report(int k1, int k2, int k, const Eigen::MatrixXd& sigma,
                                      const Eigen::VectorXd& mu, long mc, Rng& rng,
                                      bool laplacian_variant = false);

enum class RatioOp { GradX, GradTheta, LaplaceX, GradThetaGradX };

struct PerspectiveReport {
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;        // max over (beta grid x components)
  bool holds = false;      // lhs <= rhs + 3 stderr allowance
};

// Mixture-vs-component moment comparison for the ratio (D p)/p,
// D in {grad_x, grad_theta, Delta_x, grad_theta grad_x}, even k.
PerspectiveReport perspective_check(const SharedCovMixture& model, const TemperatureSchedule& s,
                                    RatioOp op, int k, long mc, Rng& rng, int beta_grid = 33,
                                    long component_mc = 20000);

struct LogDerivativeReport {
  double max_ratio = 0.0;   // max over draws of |d_I log f| / rhs
  double ceiling = 0.0;
  bool holds = false;
};

// Faa di Bruno-style bound check: |d_{x_I} log f| vs
// max(1, max_{J <= I} |d_J f / f|^{|I|}) for the mixture at a fixed beta.
// `index` is an exponent vector over coordinates, |index| <= 3.
LogDerivativeReport log_derivative_bound_check(const std::vector<int>& index,
                                               const SharedCovMixture& model_at_beta, long mc,
                                               Rng& rng, double ceiling = 50.0);

}  // namespace gsmix
