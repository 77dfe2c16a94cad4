#pragma once

// Offline processing of a multichannel pulse recording:
// band-pass -> pulse interception -> global [-1, 1] scaling -> Dir-MUSIC.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirmusic/errors.hpp"
#include "dirmusic/estimator.hpp"
#include "dirmusic/manifold.hpp"
#include "dirmusic/signal.hpp"

namespace dirmusic {

struct Recording {
  double sample_rate_hz = 0.0;
  Eigen::MatrixXd channels;             // N x L, volts
  std::vector<std::size_t> channel_map;  // element index of each channel; empty means identity

  std::size_t n_channels() const { return static_cast<std::size_t>(channels.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(channels.cols()); }

  /// Rows rearranged so row k holds element k.
  Eigen::MatrixXd in_element_order() const {
    if (channel_map.empty()) return channels;
    if (channel_map.size() != n_channels()) throw InvalidInput("Recording: channel map size does not match channel count");
    Eigen::MatrixXd out(channels.rows(), channels.cols());
    std::vector<bool> seen(n_channels(), false);
    for (std::size_t c = 0; c < n_channels(); ++c) {
      const std::size_t e = channel_map[c];
      if (e >= n_channels() || seen[e]) throw InvalidInput("Recording: channel map is not a permutation");
      seen[e] = true;
      out.row(static_cast<Eigen::Index>(e)) = channels.row(static_cast<Eigen::Index>(c));
    }
    return out;
  }
};

/// Linear-phase Hamming-windowed sinc band-pass.
struct FilterSpec {
  double low_hz = 1.0e9;
  double high_hz = 2.0e9;
  std::size_t taps = 301;
};

inline void validate_filter(const FilterSpec& spec, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) throw InvalidInput("bandpass: sample rate must be > 0");
  if (!(spec.low_hz > 0.0) || !(spec.high_hz > spec.low_hz) || !(spec.high_hz < 0.5 * sample_rate_hz)) {
    throw InvalidInput("bandpass: passband must satisfy 0 < low < high < fs/2");
  }
  if (spec.taps < 11 || spec.taps % 2 == 0) throw InvalidInput("bandpass: tap count must be odd and >= 11");
}

/// |H(f)| of an FIR kernel.
inline double fir_magnitude(const std::vector<double>& h, double freq_hz, double sample_rate_hz) {
  double re = 0.0;
  double im = 0.0;
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  for (std::size_t n = 0; n < h.size(); ++n) {
    re += h[n] * std::cos(w * static_cast<double>(n));
    im -= h[n] * std::sin(w * static_cast<double>(n));
  }
  return std::hypot(re, im);
}

/// Kernel normalised to unit gain at the passband centre.
inline std::vector<double> design_bandpass(const FilterSpec& spec, double sample_rate_hz) {
  validate_filter(spec, sample_rate_hz);
  const std::size_t m = spec.taps;
  const double half = 0.5 * static_cast<double>(m - 1);
  const double fl = spec.low_hz / sample_rate_hz;
  const double fh = spec.high_hz / sample_rate_hz;
  auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x); };
  std::vector<double> h(m);
  for (std::size_t n = 0; n <= m / 2; ++n) {
    const double k = static_cast<double>(n) - half;
    const double ideal = 2.0 * fh * sinc(2.0 * fh * k) - 2.0 * fl * sinc(2.0 * fl * k);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(m - 1));
    h[n] = ideal * window;
    h[m - 1 - n] = h[n];  // exact symmetry keeps the phase linear
  }
  const double g = fir_magnitude(h, 0.5 * (spec.low_hz + spec.high_hz), sample_rate_hz);
  for (double& v : h) v /= g;
  return h;
}

/// Same-length filtering of one row; the (taps-1)/2 group delay is removed
/// and samples outside the record are taken as zero.
inline Eigen::RowVectorXd fir_same(const std::vector<double>& h, const Eigen::RowVectorXd& x) {
  const auto len = x.size();
  const auto m = static_cast<Eigen::Index>(h.size());
  const Eigen::Index delay = (m - 1) / 2;
  Eigen::RowVectorXd y = Eigen::RowVectorXd::Zero(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    double acc = 0.0;
    const Eigen::Index k_lo = std::max<Eigen::Index>(0, i + delay - (len - 1));
    const Eigen::Index k_hi = std::min<Eigen::Index>(m - 1, i + delay);
    for (Eigen::Index k = k_lo; k <= k_hi; ++k) acc += h[static_cast<std::size_t>(k)] * x(i + delay - k);
    y(i) = acc;
  }
  return y;
}

inline Recording bandpass(const Recording& rec, const FilterSpec& spec) {
  const std::vector<double> h = design_bandpass(spec, rec.sample_rate_hz);
  if (rec.length() < spec.taps) {
    throw InvalidInput("bandpass: record of " + std::to_string(rec.length()) + " samples is shorter than the " +
                       std::to_string(spec.taps) + "-tap filter");
  }
  Recording out = rec;
  for (Eigen::Index c = 0; c < rec.channels.rows(); ++c) out.channels.row(c) = fir_same(h, rec.channels.row(c));
  return out;
}

/// Half-open sample range [start, end) around the strongest pulse.
struct PulseWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t peak_index = 0;
  std::size_t channel = 0;
  double threshold = 0.0;
};

struct DetectOptions {
  double k_sigma = 5.0;
  double pre_s = 5.0e-9;
  double post_s = 20.0e-9;
  double noise_fraction = 0.1;  // leading part of the record used for the noise estimate
};

/// Locates the global |x| maximum over all channels and requires it to exceed
/// k_sigma times the noise std of that channel's leading samples.
inline PulseWindow detect_pulse(const Recording& rec, const DetectOptions& opt = {}) {
  if (!(opt.k_sigma > 0.0)) throw InvalidInput("detect_pulse: k_sigma must be > 0");
  if (!(opt.noise_fraction > 0.0 && opt.noise_fraction <= 1.0)) {
    throw InvalidInput("detect_pulse: noise fraction must be in (0, 1]");
  }
  if (rec.length() < 2 || rec.n_channels() == 0) throw InvalidInput("detect_pulse: empty recording");

  Eigen::Index ch = 0;
  Eigen::Index peak = 0;
  const double peak_abs = rec.channels.cwiseAbs().maxCoeff(&ch, &peak);

  const auto n_noise = std::max<Eigen::Index>(
      2, static_cast<Eigen::Index>(std::ceil(opt.noise_fraction * static_cast<double>(rec.length()))));
  const Eigen::RowVectorXd lead = rec.channels.row(ch).head(std::min<Eigen::Index>(n_noise, rec.channels.cols()));
  const double mean = lead.mean();
  const double sigma = std::sqrt((lead.array() - mean).square().mean());

  PulseWindow w;
  w.channel = static_cast<std::size_t>(ch);
  w.peak_index = static_cast<std::size_t>(peak);
  w.threshold = opt.k_sigma * sigma;
  if (!(peak_abs > w.threshold) || peak_abs == 0.0) {
    throw NoPulseFound("detect_pulse: peak " + std::to_string(peak_abs) + " on channel " + std::to_string(ch + 1) +
                       " does not exceed threshold " + std::to_string(w.threshold));
  }
  const auto pre = static_cast<std::size_t>(std::llround(opt.pre_s * rec.sample_rate_hz));
  const auto post = static_cast<std::size_t>(std::llround(opt.post_s * rec.sample_rate_hz));
  w.start = w.peak_index > pre ? w.peak_index - pre : 0;
  w.end = std::min(rec.length(), w.peak_index + post + 1);
  if (w.end - w.start < 2) {
    if (w.end < rec.length()) {
      ++w.end;
    } else {
      --w.start;
    }
  }
  return w;
}

/// Divides every entry by the single largest |entry|, so inter-channel ratios
/// and signs survive and the result lies in [-1, 1].
inline SnapshotMatrix normalize_bipolar(const SnapshotMatrix& x) {
  if (x.size() == 0) throw InvalidInput("normalize_bipolar: empty block");
  const double m = x.cwiseAbs().maxCoeff();
  if (!(m > 0.0)) throw InvalidInput("normalize_bipolar: all-zero block");
  if (!std::isfinite(m)) throw InvalidInput("normalize_bipolar: non-finite entries");
  return x / m;
}

struct PipelineResult {
  DoaEstimate estimate;
  PulseWindow window;
  FilterSpec filter;
};

inline PipelineResult process_recording(const Recording& rec, const FilterSpec& filter, const DetectOptions& detect,
                                        const DirMusic& estimator) {
  if (rec.n_channels() != estimator.array().size()) {
    throw InvalidInput("process_recording: recording has " + std::to_string(rec.n_channels()) +
                       " channels but the array has " + std::to_string(estimator.array().size()) + " elements");
  }
  const Recording filtered = bandpass(rec, filter);
  const PulseWindow w = detect_pulse(filtered, detect);
  Recording sliced = filtered;
  sliced.channels = filtered.channels.middleCols(static_cast<Eigen::Index>(w.start), static_cast<Eigen::Index>(w.end - w.start));
  const SnapshotMatrix x = normalize_bipolar(sliced.in_element_order());
  return {estimator.estimate(x), w, filter};
}

// ---------------------------------------------------------------------------
// Synthetic recordings

struct SyntheticRecordingSpec {
  double theta_deg = 0.0;
  double snr_db = 10.0;
  SamplingSpec sampling{10.0e9, 4096};
  std::size_t pulse_start = 1600;
  PulseModel pulse{};
  double tone_hz = 948.0e6;
  double tone_power_ratio = 0.0;  // interferer power relative to the clean pulse block; 0 disables
};

/// Pulse through the nominal manifold, AWGN at the requested SNR against the
/// clean block, plus an optional tone common to every channel (random phase).
template <class URBG>
Recording synthesize_recording(const GaussianMixturePattern& p, const ArrayConfig& arr,
                               const SyntheticRecordingSpec& spec, URBG& rng) {
  if (spec.pulse_start >= spec.sampling.n_samples) throw InvalidInput("synthesize_recording: pulse starts after record end");
  SamplingSpec pulse_spec{spec.sampling.rate_hz, spec.sampling.n_samples - spec.pulse_start};
  const Eigen::VectorXd shape = pd_pulse(spec.pulse, pulse_spec);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.sampling.n_samples));
  s.tail(shape.size()) = shape;

  const SnapshotMatrix clean = synthesize_clean(steering_vector(p, arr, spec.theta_deg), s);
  Recording rec;
  rec.sample_rate_hz = spec.sampling.rate_hz;
  rec.channels = add_awgn(clean, spec.snr_db, rng);
  if (spec.tone_power_ratio > 0.0) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double amp = std::sqrt(2.0 * spec.tone_power_ratio * mean_power(clean));
    const Eigen::VectorXd t = tone(spec.tone_hz, amp, phase(rng), spec.sampling);
    rec.channels.rowwise() += t.transpose();
  }
  return rec;
}

}  // namespace dirmusic
