#pragma once

// Synthetic PD pulses, the rank-one received block X = g s^T and white
// Gaussian noise at a prescribed SNR.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "dirmusic/errors.hpp"
#include "dirmusic/manifold.hpp"

namespace dirmusic {

/// Double-exponential oscillating pulse
///   s(t) = A (exp(-t/decay) - exp(-t/rise)) cos(2 pi f_c t).
/// The defaults give an envelope about 2.5 ns wide on a 1.25 GHz carrier.
struct PulseModel {
  double amplitude = 1.0;     // volts
  double decay_s = 1.0e-9;    // tau1
  double rise_s = 0.2e-9;     // tau2, must be < decay_s
  double carrier_hz = 1.25e9;

  void validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw InvalidInput("PulseModel: amplitude must be > 0");
    if (!(rise_s > 0.0)) throw InvalidInput("PulseModel: rise constant must be > 0");
    if (!(decay_s > rise_s)) throw InvalidInput("PulseModel: decay constant must exceed rise constant");
    if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) throw InvalidInput("PulseModel: carrier must be > 0");
  }

  double envelope(double t) const { return amplitude * (std::exp(-t / decay_s) - std::exp(-t / rise_s)); }

  /// Time of the envelope maximum: tau1 tau2 / (tau1 - tau2) ln(tau1 / tau2).
  double envelope_peak_time() const { return decay_s * rise_s / (decay_s - rise_s) * std::log(decay_s / rise_s); }
};

struct SamplingSpec {
  double rate_hz = 10.0e9;
  std::size_t n_samples = 512;

  double step_s() const { return 1.0 / rate_hz; }
};

/// N x T real block, one row per element in element order.
using SnapshotMatrix = Eigen::MatrixXd;

inline void validate_sampling(const SamplingSpec& spec, double carrier_hz) {
  if (!(spec.rate_hz > 0.0) || !std::isfinite(spec.rate_hz)) throw InvalidInput("SamplingSpec: rate must be > 0");
  if (spec.n_samples < 2) throw InvalidInput("SamplingSpec: need at least 2 samples");
  if (!(spec.rate_hz > 2.0 * carrier_hz)) {
    throw InvalidInput("SamplingSpec: sample rate must exceed twice the carrier frequency");
  }
}

inline Eigen::VectorXd pd_pulse(const PulseModel& m, const SamplingSpec& spec) {
  m.validate();
  validate_sampling(spec, m.carrier_hz);
  const double dt = spec.step_s();
  Eigen::VectorXd s(static_cast<Eigen::Index>(spec.n_samples));
  s(0) = 0.0;
  for (std::size_t i = 1; i < spec.n_samples; ++i) {
    const double t = static_cast<double>(i) * dt;
    s(static_cast<Eigen::Index>(i)) = m.envelope(t) * std::cos(2.0 * std::numbers::pi * m.carrier_hz * t);
  }
  return s;
}

/// Row k is g_k * s.
inline SnapshotMatrix synthesize_clean(const GainVector& g, const Eigen::VectorXd& s) {
  if (g.size() == 0 || s.size() == 0) throw InvalidInput("synthesize_clean: empty gain or pulse vector");
  return g * s.transpose();
}

/// Mean square over every entry of x.
inline double mean_power(const SnapshotMatrix& x) {
  return x.size() == 0 ? 0.0 : x.squaredNorm() / static_cast<double>(x.size());
}

/// Noise standard deviation giving the requested SNR against the global
/// mean-square power of the clean block.
inline double noise_sigma_for(const SnapshotMatrix& clean, double snr_db) {
  if (!std::isfinite(snr_db)) throw DomainError("add_awgn: non-finite SNR");
  const double ps = mean_power(clean);
  if (!(ps > 0.0)) throw InvalidInput("add_awgn: clean signal has zero power, SNR undefined");
  return std::sqrt(ps / std::pow(10.0, snr_db / 10.0));
}

/// x + n with n i.i.d. N(0, sigma^2), one sigma for every channel and sample.
template <class URBG>
SnapshotMatrix add_awgn(const SnapshotMatrix& x, double snr_db, URBG& rng) {
  const double sigma = noise_sigma_for(x, snr_db);
  std::normal_distribution<double> normal(0.0, sigma);
  SnapshotMatrix out = x;
  // column-major storage: walk memory order so the draw sequence is fixed
  double* data = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) data[i] += normal(rng);
  return out;
}

/// Continuous sinusoid A cos(2 pi f t + phase) sampled at spec.
inline Eigen::VectorXd tone(double freq_hz, double amplitude, double phase_rad, const SamplingSpec& spec) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(spec.n_samples));
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const double t = static_cast<double>(i) * spec.step_s();
    v(static_cast<Eigen::Index>(i)) = amplitude * std::cos(2.0 * std::numbers::pi * freq_hz * t + phase_rad);
  }
  return v;
}

}  // namespace dirmusic
