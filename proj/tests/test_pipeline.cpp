#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dirmusic/pipeline.hpp"

using namespace dirmusic;

namespace {

constexpr double kFs = 10.0e9;

Recording single_channel(const Eigen::VectorXd& v) {
  Recording r;
  r.sample_rate_hz = kFs;
  r.channels = v.transpose();
  return r;
}

// Direct DFT of the kernel, kept separate from fir_magnitude.
double dft_gain(const std::vector<double>& h, double f) {
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    acc += h[n] * std::polar(1.0, -2.0 * std::numbers::pi * f / kFs * static_cast<double>(n));
  }
  return std::abs(acc);
}

double rms(const Eigen::RowVectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

Recording pulse_recording(std::size_t start, std::size_t length = 4096, double amp = 1.0) {
  SamplingSpec spec{kFs, length - start};
  PulseModel m;
  m.amplitude = amp;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length));
  v.tail(static_cast<Eigen::Index>(length - start)) = pd_pulse(m, spec);
  return single_channel(v);
}

}  // namespace

TEST(Bandpass, Design) {
  const auto h = design_bandpass(FilterSpec{}, kFs);
  ASSERT_EQ(h.size(), 301u);
  for (std::size_t n = 0; n < h.size(); ++n) ASSERT_DOUBLE_EQ(h[n], h[h.size() - 1 - n]);  // linear phase
  EXPECT_NEAR(dft_gain(h, 1.5e9), 1.0, 1e-12);
  EXPECT_NEAR(dft_gain(h, 1.25e9), 1.0, 0.05);
  EXPECT_LE(20.0 * std::log10(dft_gain(h, 948e6)), -20.0);
  EXPECT_NEAR(fir_magnitude(h, 948e6, kFs), dft_gain(h, 948e6), 1e-12);
}

TEST(Bandpass, InvalidSpecs) {
  EXPECT_THROW(design_bandpass(FilterSpec{2e9, 1e9, 101}, kFs), InvalidInput);
  EXPECT_THROW(design_bandpass(FilterSpec{1e9, 6e9, 101}, kFs), InvalidInput);
  EXPECT_THROW(design_bandpass(FilterSpec{1e9, 2e9, 100}, kFs), InvalidInput);
  EXPECT_THROW(design_bandpass(FilterSpec{1e9, 2e9, 9}, kFs), InvalidInput);
  EXPECT_THROW(bandpass(single_channel(Eigen::VectorXd::Ones(100)), FilterSpec{}), InvalidInput);
}

TEST(Bandpass, MidBandTonePreserved) {
  const auto x = tone(1.5e9, 1.0, 0.3, SamplingSpec{kFs, 4096});
  const auto y = bandpass(single_channel(x), FilterSpec{});
  const auto mid_in = x.segment(500, 3000).transpose();
  const auto mid_out = y.channels.row(0).segment(500, 3000);
  EXPECT_NEAR(rms(mid_out) / rms(mid_in), 1.0, 0.05);
  // group delay removed: output in phase with the input
  EXPECT_LE((mid_out - mid_in).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Bandpass, InterferenceToneAttenuated) {
  const auto x = tone(948e6, 1.0, 0.0, SamplingSpec{kFs, 4096});
  const auto y = bandpass(single_channel(x), FilterSpec{});
  const double ratio = rms(y.channels.row(0).segment(500, 3000)) / rms(x.segment(500, 3000).transpose());
  EXPECT_LE(20.0 * std::log10(ratio), -20.0);
}

TEST(Bandpass, ZeroInLinearAndAligned) {
  Recording zero;
  zero.sample_rate_hz = kFs;
  zero.channels = Eigen::MatrixXd::Zero(3, 1000);
  EXPECT_EQ(bandpass(zero, FilterSpec{}).channels, zero.channels);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Recording a = zero, b = zero;
  for (Eigen::Index i = 0; i < a.channels.size(); ++i) {
    a.channels.data()[i] = nd(rng);
    b.channels.data()[i] = nd(rng);
  }
  Recording mix = zero;
  mix.channels = 2.0 * a.channels - 0.5 * b.channels;
  const auto lhs = bandpass(mix, FilterSpec{}).channels;
  const auto rhs = 2.0 * bandpass(a, FilterSpec{}).channels - 0.5 * bandpass(b, FilterSpec{}).channels;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(bandpass(a, FilterSpec{}).length(), a.length());
}

TEST(Detect, WindowContainsPulse) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 1e-3);
  auto rec = pulse_recording(2000);
  for (Eigen::Index i = 0; i < rec.channels.size(); ++i) rec.channels.data()[i] += nd(rng);
  const auto w = detect_pulse(rec);
  EXPECT_LE(w.start, 2000u + 4u);
  EXPECT_GT(w.end, 2010u);
  EXPECT_LT(w.start, w.end);
  EXPECT_EQ(w.end - w.start, 251u);
  EXPECT_EQ(w.channel, 0u);
}

TEST(Detect, PureNoiseRarelyTriggers) {
  // known-sigma tail bound for 4 x 4096 samples at 5 sigma is 0.93%; the
  // leading-sample sigma estimate roughly doubles it
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  int alarms = 0;
  const int records = 500;
  for (int t = 0; t < records; ++t) {
    Recording r;
    r.sample_rate_hz = kFs;
    r.channels.resize(4, 4096);
    for (Eigen::Index i = 0; i < r.channels.size(); ++i) r.channels.data()[i] = nd(rng);
    try {
      detect_pulse(r);
      ++alarms;
    } catch (const NoPulseFound&) {
    }
  }
  EXPECT_LE(alarms, records * 3 / 100);
}

TEST(Detect, PicksLargerOfTwoPulses) {
  auto rec = pulse_recording(1000, 4096, 0.5);
  rec.channels += pulse_recording(3000, 4096, 1.0).channels;
  rec.channels.row(0).head(400).array() += 1e-4;
  const auto w = detect_pulse(rec);
  EXPECT_GE(w.peak_index, 3000u);
  EXPECT_LT(w.peak_index, 3100u);
}

TEST(Detect, TranslationCovariant) {
  const auto a = detect_pulse(pulse_recording(1500), DetectOptions{5.0, 5e-9, 20e-9, 0.05});
  const auto b = detect_pulse(pulse_recording(1737), DetectOptions{5.0, 5e-9, 20e-9, 0.05});
  EXPECT_EQ(b.start - a.start, 237u);
  EXPECT_EQ(b.end - a.end, 237u);
}

TEST(Detect, ClippedAtRecordEdges) {
  auto rec = pulse_recording(4080, 4096);
  const auto w = detect_pulse(rec, DetectOptions{5.0, 5e-9, 20e-9, 0.5});
  EXPECT_EQ(w.end, 4096u);
  EXPECT_GE(w.end - w.start, 2u);
  EXPECT_THROW(detect_pulse(rec, DetectOptions{0.0}), InvalidInput);
}

TEST(Normalize, Examples) {
  Eigen::MatrixXd x(2, 2);
  x << 2, -4, 1, 0;
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, -1, 0.25, 0;
  EXPECT_EQ(normalize_bipolar(x), expect);
  EXPECT_EQ(normalize_bipolar(expect), expect);
  EXPECT_THROW(normalize_bipolar(Eigen::MatrixXd::Zero(2, 2)), InvalidInput);
}

TEST(Normalize, IdempotentRatioPreservingAndEstimatorInvariant) {
  std::mt19937_64 rng(4);
  const DirMusic est(preset_pattern(), ArrayConfig::uniform(6));
  for (int t = 0; t < 10; ++t) {
    const auto x = add_awgn(synthesize_clean(steering_vector(preset_pattern(), ArrayConfig::uniform(6), 33.0 * t),
                                             pd_pulse(PulseModel{}, SamplingSpec{})),
                            0.0, rng);
    const auto n = normalize_bipolar(x);
    EXPECT_EQ(normalize_bipolar(n), n);
    EXPECT_EQ(n.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_NEAR(n(1, 7) / n(0, 7), x(1, 7) / x(0, 7), 1e-12);
    EXPECT_EQ(est.estimate(n).theta_deg, est.estimate(x).theta_deg);
  }
}

TEST(Process, CleanRecordingExact) {
  const DirMusic est(preset_pattern(), ArrayConfig::uniform(6));
  std::mt19937_64 rng(5);
  for (double theta : {0.0, 93.0, 250.0}) {
    SyntheticRecordingSpec spec;
    spec.theta_deg = theta;
    spec.snr_db = 300.0;
    const auto rec = synthesize_recording(preset_pattern(), ArrayConfig::uniform(6), spec, rng);
    EXPECT_EQ(process_recording(rec, FilterSpec{}, DetectOptions{}, est).estimate.theta_deg, theta);
  }
}

TEST(Process, NoisyWithInterferer) {
  const DirMusic est(preset_pattern(), ArrayConfig::uniform(6));
  std::mt19937_64 rng(6);
  SyntheticRecordingSpec spec;
  spec.theta_deg = 93.0;
  spec.snr_db = 10.0;
  spec.tone_power_ratio = 1.0;
  const auto rec = synthesize_recording(preset_pattern(), ArrayConfig::uniform(6), spec, rng);
  const auto res = process_recording(rec, FilterSpec{}, DetectOptions{}, est);
  EXPECT_LE(std::fabs(angular_error(res.estimate.theta_deg, 93.0)), 2.0);
  EXPECT_LE(res.window.start, spec.pulse_start + 10);
  EXPECT_GT(res.window.end, spec.pulse_start + 10);
}

TEST(Process, ChannelPermutation) {
  const DirMusic est(preset_pattern(), ArrayConfig::uniform(6));
  std::mt19937_64 rng(7);
  SyntheticRecordingSpec spec;
  spec.theta_deg = 140.0;
  spec.snr_db = 300.0;
  auto rec = synthesize_recording(preset_pattern(), ArrayConfig::uniform(6), spec, rng);
  // channel c carries element (c+1) mod 6; reading it as identity shifts the bearing by +60
  Recording shifted = rec;
  for (Eigen::Index c = 0; c < 6; ++c) shifted.channels.row(c) = rec.channels.row((c + 1) % 6);
  EXPECT_EQ(process_recording(shifted, FilterSpec{}, DetectOptions{}, est).estimate.theta_deg, 200.0);
  shifted.channel_map = {1, 2, 3, 4, 5, 0};
  EXPECT_EQ(process_recording(shifted, FilterSpec{}, DetectOptions{}, est).estimate.theta_deg, 140.0);
  shifted.channel_map = {0, 0, 1, 2, 3, 4};
  EXPECT_THROW(process_recording(shifted, FilterSpec{}, DetectOptions{}, est), InvalidInput);
}

TEST(Process, ChannelCountMismatch) {
  const DirMusic est(preset_pattern(), ArrayConfig::uniform(6));
  std::mt19937_64 rng(8);
  const auto rec = synthesize_recording(preset_pattern(), ArrayConfig::uniform(4), SyntheticRecordingSpec{}, rng);
  EXPECT_THROW(process_recording(rec, FilterSpec{}, DetectOptions{}, est), InvalidInput);
}
