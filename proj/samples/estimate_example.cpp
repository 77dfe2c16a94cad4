// Minimal use of the library: synthesize one noisy pulse block from a known
// bearing and estimate it back.

#include <cstdio>
#include <random>

#include "dirmusic/dirmusic.hpp"

int main() {
  using namespace dirmusic;

  const DirMusic estimator(preset_pattern(), ArrayConfig::uniform(6));
  std::mt19937_64 rng(7);

  const double truth = 123.4;
  const GainVector g = steering_vector(estimator.pattern(), estimator.array(), truth);
  const Eigen::VectorXd pulse = pd_pulse(PulseModel{}, SamplingSpec{10.0e9, kSimulationSnapshots});
  const SnapshotMatrix x = add_awgn(synthesize_clean(g, pulse), 0.0, rng);

  const DoaEstimate est = estimator.estimate(x);
  std::printf("true %.1f deg, estimated %.1f deg, error %+.1f deg\n", truth, est.theta_deg,
              angular_error(est.theta_deg, truth));
  return 0;
}
