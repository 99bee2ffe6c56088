#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gsmix/mixture.hpp"
#include "gsmix/rng.hpp"

namespace gsmix {

struct TemperedSample {
  Eigen::VectorXd x;
  double beta = 0.0;
};

// Annealing law r(beta) on [0, beta_max]:
//   r(beta) = exp(-7 D^2 / (lambda_min (1+beta))) / Z,
//   beta_max = 14 D^2 / lambda_min - 1.
// Normalized over the truncated interval; sampling goes through a cached
// inverse-CDF table refined by bisection.
class TemperatureSchedule {
 public:
  TemperatureSchedule(double diameter, double lambda_min);

  double diameter() const { return diameter_; }
  double lambda_min() const { return lambda_min_; }
  double beta_max() const { return beta_max_; }
  double normalizer() const { return z_; }

  double r_log_pdf(double beta) const;
  double r_pdf(double beta) const;
  double r_grad_log(double beta) const;  // d/dbeta log r = 7 D^2 / (lambda (1+beta)^2)
  double cdf(double beta) const;

  double sample_beta(Rng& rng) const;
  TemperedSample noise_channel(const Eigen::VectorXd& x0, Rng& rng) const;

  std::string serialize() const;
  static TemperatureSchedule deserialize(const std::string& text);

 private:
  double unnormalized(double beta) const;
  void check_range(double beta) const;

  double diameter_ = 0.0;
  double lambda_min_ = 0.0;
  double beta_max_ = 0.0;
  double z_ = 0.0;
  std::vector<double> knots_;     // uniform grid in beta
  std::vector<double> cdf_knots_; // CDF values at the knots, strictly increasing
};

}  // namespace gsmix
