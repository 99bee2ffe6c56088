#include "gsmix/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gsmix/quadrature.hpp"

namespace gsmix {

namespace {
constexpr int kTableKnots = 4097;
}

TemperatureSchedule::TemperatureSchedule(double diameter, double lambda_min)
    : diameter_(diameter), lambda_min_(lambda_min) {
  if (!(lambda_min > 0.0)) throw std::invalid_argument("schedule: lambda_min must be positive");
  double ratio = diameter * diameter / lambda_min;
  // working regime of the paper; beta_max > 0 only needs ratio > 1/14, but the
  // chi^2 bound (Z >= 1) requires D^2/lambda_min >= 1
  if (!(ratio >= 1.0)) throw std::invalid_argument("schedule: requires D^2/lambda_min >= 1");
  beta_max_ = 14.0 * ratio - 1.0;

  auto un = [this](double b) { return unnormalized(b); };
  z_ = integrate(un, 0.0, beta_max_, 1e-14 * beta_max_);

  knots_.resize(kTableKnots);
  cdf_knots_.resize(kTableKnots);
  double h = beta_max_ / (kTableKnots - 1);
  knots_[0] = 0.0;
  cdf_knots_[0] = 0.0;
  double acc = 0.0;
  for (int i = 1; i < kTableKnots; ++i) {
    knots_[i] = i * h;
    acc += gauss15(un, knots_[i - 1], knots_[i]);
    cdf_knots_[i] = acc / z_;
  }
  // guard the table invariants: strictly increasing, endpoint at 1
  for (int i = 1; i < kTableKnots; ++i) {
    if (!(cdf_knots_[i] > cdf_knots_[i - 1]))
      throw std::runtime_error("schedule: inverse-CDF table not strictly increasing");
  }
  if (std::fabs(cdf_knots_.back() - 1.0) > 1e-10)
    throw std::runtime_error("schedule: CDF endpoint drifted from 1");
  cdf_knots_.back() = 1.0;
}

double TemperatureSchedule::unnormalized(double beta) const {
  return std::exp(-7.0 * diameter_ * diameter_ / (lambda_min_ * (1.0 + beta)));
}

void TemperatureSchedule::check_range(double beta) const {
  if (!(beta >= 0.0 && beta <= beta_max_))
    throw std::invalid_argument("schedule: beta outside [0, beta_max]");
}

double TemperatureSchedule::r_log_pdf(double beta) const {
  check_range(beta);
  return -7.0 * diameter_ * diameter_ / (lambda_min_ * (1.0 + beta)) - std::log(z_);
}

double TemperatureSchedule::r_pdf(double beta) const { return std::exp(r_log_pdf(beta)); }

double TemperatureSchedule::r_grad_log(double beta) const {
  check_range(beta);
  double one_b = 1.0 + beta;
  return 7.0 * diameter_ * diameter_ / (lambda_min_ * one_b * one_b);
}

double TemperatureSchedule::cdf(double beta) const {
  check_range(beta);
  int hi = int(std::upper_bound(knots_.begin(), knots_.end(), beta) - knots_.begin());
  if (hi == 0) return 0.0;
  if (hi >= kTableKnots) return 1.0;
  int lo = hi - 1;
  auto un = [this](double b) { return unnormalized(b); };
  return cdf_knots_[lo] + gauss15(un, knots_[lo], beta) / z_;
}

double TemperatureSchedule::sample_beta(Rng& rng) const {
  double u = rng.uniform();
  int hi = int(std::lower_bound(cdf_knots_.begin(), cdf_knots_.end(), u) - cdf_knots_.begin());
  hi = std::min(std::max(hi, 1), kTableKnots - 1);
  double lo_b = knots_[hi - 1], hi_b = knots_[hi];
  // bisection on the quadrature CDF until the CDF value is pinned to 1e-10
  double f_lo = cdf_knots_[hi - 1];
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo_b + hi_b);
    auto un = [this](double b) { return unnormalized(b); };
    double f_mid = f_lo + gauss15(un, knots_[hi - 1], mid) / z_;
    if (std::fabs(f_mid - u) <= 1e-10) return mid;
    if (f_mid < u)
      lo_b = mid;
    else
      hi_b = mid;
  }
  return 0.5 * (lo_b + hi_b);
}

TemperedSample TemperatureSchedule::noise_channel(const Eigen::VectorXd& x0, Rng& rng) const {
  TemperedSample ts;
  ts.beta = sample_beta(rng);
  double sd = std::sqrt(ts.beta * lambda_min_);
  ts.x = x0;
  for (int i = 0; i < x0.size(); ++i) ts.x[i] += sd * rng.normal();
  return ts;
}

std::string TemperatureSchedule::serialize() const {
  std::ostringstream os;
  char buf[80];
  std::snprintf(buf, sizeof buf, "schedule %.17g %.17g\n", diameter_, lambda_min_);
  os << buf;
  return os.str();
}

TemperatureSchedule TemperatureSchedule::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  double dd = 0.0, lm = 0.0;
  is >> tag >> dd >> lm;
  if (tag != "schedule" || !is) throw std::invalid_argument("schedule: bad serialization");
  return TemperatureSchedule(dd, lm);
}

}  // namespace gsmix
