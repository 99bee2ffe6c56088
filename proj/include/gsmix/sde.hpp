#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsmix/mixture.hpp"
#include "gsmix/rng.hpp"
#include "gsmix/schedule.hpp"

namespace gsmix {

struct ChainState {
  Eigen::VectorXd x;
  double beta = 0.0;
  long step_count = 0;
};

struct MixingReport {
  Eigen::VectorXd mode_occupancy;   // K, fractions by nearest mean
  double autocorrelation_time = 0.0;  // integrated, on <x, e1>
  double histogram_chisq = 0.0;       // beta histogram vs r(beta)
  double histogram_pvalue = 0.0;
  int histogram_bins = 0;
};

// raised when a step produces a non-finite drift or state
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, ChainState state)
      : std::runtime_error(what), state(std::move(state)) {}
  ChainState state;
};

// drift of the temperature-augmented dynamics at one state
void ctld_drift(const ChainState& state, const SharedCovMixture& model,
                const TemperatureSchedule& s, Eigen::VectorXd& drift_x, double& drift_beta);

// One Euler-Maruyama step of CTLD. beta is folded back into [0, beta_max].
// noise_scale = 0 gives the deterministic drift map (test hook).
ChainState ctld_step(const ChainState& state, double dt, const SharedCovMixture& model,
                     const TemperatureSchedule& s, Rng& rng, double noise_scale = 1.0);

// plain Langevin on the data model (no temperature coordinate)
Eigen::VectorXd langevin_step(const Eigen::VectorXd& x, double dt, const SharedCovMixture& model,
                              Rng& rng);

struct ChainResult {
  std::vector<ChainState> trajectory;  // thinned
  MixingReport report;
};

ChainResult run_chain(ChainState init, long steps, double dt, long thin,
                      const SharedCovMixture& model, const TemperatureSchedule& s, Rng& rng);

// occupancy over a plain Langevin run, same nearest-mean rule
Eigen::VectorXd langevin_occupancy(Eigen::VectorXd x0, long steps, double dt,
                                   const SharedCovMixture& model, Rng& rng);

// Final beta of n_chains independent chains started from exact stationary
// draws (mixture sample + noise channel) and run for `steps` steps. Gives
// i.i.d.-quality draws for goodness-of-fit against r(beta).
std::vector<double> stationary_ensemble_betas(const SharedCovMixture& model,
                                              const TemperatureSchedule& s, int n_chains,
                                              long steps, double dt, std::uint64_t seed,
                                              int workers);

int nearest_mean(const SharedCovMixture& model, const Eigen::VectorXd& x);

// integrated autocorrelation time with Sokal's adaptive cutoff
double integrated_autocorrelation(const std::vector<double>& series);

}  // namespace gsmix
