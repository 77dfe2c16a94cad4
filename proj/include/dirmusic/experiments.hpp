#pragma once

// Monte Carlo harness: random bearings, synthetic pulses through an
// (optionally perturbed) manifold, AWGN, and estimation against the nominal
// manifold. Sweeps over SNR, amplitude error and element count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dirmusic/errors.hpp"
#include "dirmusic/estimator.hpp"
#include "dirmusic/manifold.hpp"
#include "dirmusic/pattern.hpp"
#include "dirmusic/signal.hpp"

namespace dirmusic {

inline constexpr std::uint64_t kDefaultSeed = 20210601;

/// Snapshot count used by the simulation studies (1.536 us at 10 GS/s).
inline constexpr std::size_t kSimulationSnapshots = 15360;

struct TrialConfig {
  std::size_t n_elements = 6;
  std::vector<double> offsets_deg;  // empty: uniform circular array of n_elements
  double snr_db = 10.0;
  double manifold_error = 0.0;      // half-width of U(-e, e) added to each gain
  std::size_t n_trials = 3600;
  double grid_step_deg = 1.0;
  std::uint64_t seed = kDefaultSeed;
  double success_threshold_deg = 2.0;
  double direction_min_deg = 1.0;
  double direction_max_deg = 360.0;
  GaussianMixturePattern pattern = preset_pattern();
  PulseModel pulse{};
  SamplingSpec sampling{10.0e9, kSimulationSnapshots};
  unsigned threads = 0;  // 0: hardware concurrency

  ArrayConfig array() const {
    if (!offsets_deg.empty()) {
      if (offsets_deg.size() != n_elements) {
        throw InvalidInput("TrialConfig: " + std::to_string(offsets_deg.size()) + " offsets given for " +
                           std::to_string(n_elements) + " elements");
      }
      return ArrayConfig::with_offsets(offsets_deg);
    }
    return ArrayConfig::uniform(n_elements);
  }

  void validate() const {
    if (n_trials < 1) throw InvalidInput("TrialConfig: n_trials must be >= 1");
    if (!(success_threshold_deg > 0.0)) throw InvalidInput("TrialConfig: success threshold must be > 0");
    if (!(manifold_error >= 0.0) || !std::isfinite(manifold_error)) {
      throw InvalidInput("TrialConfig: manifold error half-width must be >= 0");
    }
    if (!std::isfinite(snr_db)) throw InvalidInput("TrialConfig: SNR must be finite");
    if (!(direction_max_deg > direction_min_deg)) throw InvalidInput("TrialConfig: empty direction range");
    (void)array();
  }
};

struct TrialReport {
  double theta_true_deg = 0.0;
  double theta_hat_deg = 0.0;
  double error_deg = 0.0;
  bool success = false;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

/// Population statistics of signed errors (variance divides by n).
struct ErrorStats {
  std::size_t n = 0;
  double accuracy = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

inline ErrorStats summarize(std::span<const double> errors, double success_threshold_deg = 2.0) {
  if (errors.empty()) throw InvalidInput("summarize: empty error list");
  ErrorStats s;
  s.n = errors.size();
  const double n = static_cast<double>(s.n);
  double sum = 0.0;
  std::size_t hits = 0;
  s.min = errors.front();
  s.max = errors.front();
  for (double e : errors) {
    sum += e;
    if (std::fabs(e) < success_threshold_deg) ++hits;
    s.min = std::min(s.min, e);
    s.max = std::max(s.max, e);
  }
  s.mean = sum / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - s.mean) * (e - s.mean);
  s.variance = ss / n;
  s.stddev = std::sqrt(s.variance);
  s.accuracy = static_cast<double>(hits) / n;
  return s;
}

inline ErrorStats summarize(std::span<const TrialReport> trials, double success_threshold_deg) {
  std::vector<double> errors;
  errors.reserve(trials.size());
  for (const auto& t : trials) errors.push_back(t.error_deg);
  return summarize(errors, success_threshold_deg);
}

struct SweepRow {
  double setting = 0.0;
  ErrorStats stats;
  std::vector<TrialReport> trials;
};

struct SweepReport {
  std::string parameter;  // "snr_db", "epsilon", "elements"
  std::vector<SweepRow> rows;
};

/// SplitMix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of trial `index` under `master`. Independent of the swept setting, so
/// every setting of a sweep sees the same bearings (common random numbers).
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t index) {
  return mix64(mix64(master) ^ mix64(static_cast<std::uint64_t>(index) + 0x5851F42D4C957F2DULL));
}

/// Precomputes the estimator and pulse for one configuration.
class TrialRunner {
 public:
  explicit TrialRunner(const TrialConfig& cfg)
      : cfg_((cfg.validate(), cfg)),
        estimator_(cfg.pattern, cfg.array(), uniform_grid(cfg.grid_step_deg)),
        pulse_(pd_pulse(cfg.pulse, cfg.sampling)) {}

  const TrialConfig& config() const { return cfg_; }
  const DirMusic& estimator() const { return estimator_; }

  template <class URBG>
  TrialReport run(double theta_true_deg, URBG& rng) const {
    const GainVector nominal = steering_vector(cfg_.pattern, estimator_.array(), theta_true_deg);
    const GainVector actual = perturb(nominal, ManifoldPerturbation{cfg_.manifold_error}, rng);
    const SnapshotMatrix x = add_awgn(synthesize_clean(actual, pulse_), cfg_.snr_db, rng);
    const DoaEstimate est = estimator_.estimate(x);
    TrialReport r;
    r.theta_true_deg = theta_true_deg;
    r.theta_hat_deg = est.theta_deg;
    r.error_deg = angular_error(est.theta_deg, theta_true_deg);
    r.success = std::fabs(r.error_deg) < cfg_.success_threshold_deg;
    return r;
  }

  /// Trial `index` with its own generator: bearing, perturbation, noise.
  TrialReport run_indexed(std::size_t index) const {
    std::mt19937_64 rng(trial_seed(cfg_.seed, index));
    std::uniform_real_distribution<double> bearing(cfg_.direction_min_deg, cfg_.direction_max_deg);
    const double theta = bearing(rng);
    return run(theta, rng);
  }

 private:
  TrialConfig cfg_;
  DirMusic estimator_;
  Eigen::VectorXd pulse_;
};

template <class URBG>
TrialReport run_trial(const TrialConfig& cfg, double theta_true_deg, URBG& rng) {
  return TrialRunner(cfg).run(theta_true_deg, rng);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; the first exception is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// All n_trials of one configuration, ordered by trial index.
inline std::vector<TrialReport> run_trials(const TrialConfig& cfg) {
  const TrialRunner runner(cfg);
  std::vector<TrialReport> out(cfg.n_trials);
  parallel_for(cfg.n_trials, cfg.threads, [&](std::size_t i) { out[i] = runner.run_indexed(i); });
  return out;
}

namespace detail {

template <class Apply>
SweepReport run_sweep(std::string parameter, const TrialConfig& base, std::span<const double> settings, Apply apply) {
  if (settings.empty()) throw InvalidInput("sweep: empty " + parameter + " list");
  SweepReport rep{std::move(parameter), {}};
  for (double v : settings) {
    TrialConfig cfg = base;
    apply(cfg, v);
    SweepRow row;
    row.setting = v;
    row.trials = run_trials(cfg);
    row.stats = summarize(std::span<const TrialReport>(row.trials), cfg.success_threshold_deg);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace detail

inline SweepReport run_snr_sweep(const TrialConfig& base, std::span<const double> snr_list) {
  return detail::run_sweep("snr_db", base, snr_list, [](TrialConfig& c, double v) { c.snr_db = v; });
}

/// Generates data with G' = G + U(-e, e) and searches with the nominal G.
/// SNR comes from the template (10 dB by default).
inline SweepReport run_manifold_error_sweep(const TrialConfig& base, std::span<const double> eps_list) {
  return detail::run_sweep("epsilon", base, eps_list, [](TrialConfig& c, double v) { c.manifold_error = v; });
}

/// Uniform circular array re-derived for each element count.
inline SweepReport run_element_sweep(const TrialConfig& base, std::span<const double> n_list) {
  for (double v : n_list) {
    if (!(v >= 1.0) || v != std::floor(v)) throw InvalidInput("element sweep: counts must be integers >= 1");
  }
  return detail::run_sweep("elements", base, n_list, [](TrialConfig& c, double v) {
    c.n_elements = static_cast<std::size_t>(v);
    c.offsets_deg.clear();
  });
}

}  // namespace dirmusic
