// dirmusic: command-line front end.
//
// Exit status
//   0  success
//   1  unexpected internal error
//   2  usage error (bad flags, missing required inputs, empty lists)
//   3  I/O error (file missing or unwritable)
//   4  parse error (malformed CSV, pattern or config file)
//   5  no pulse found in the recording
//   6  validation error (inconsistent inputs, e.g. channel count vs array)

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dirmusic/dirmusic.hpp"

namespace fs = std::filesystem;
using namespace dirmusic;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kParse = 4,
  kNoPulse = 5,
  kValidation = 6,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// CLI11 turns an empty list item into 0; reject it instead.
const CLI::Validator kNonEmptyItem(
    [](std::string& item) { return io::trim(item).empty() ? std::string("empty list entry") : std::string(); },
    "", "NON_EMPTY");

// Flags shared by every subcommand; they override the config file.
struct CommonOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> grid_step;
  std::optional<std::size_t> elements;
  std::vector<double> offsets;
  std::optional<std::size_t> trials;
  std::optional<double> threshold;
  std::optional<fs::path> pattern;
  std::optional<unsigned> threads;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--seed", seed, "master RNG seed");
    app->add_option("--grid-step", grid_step, "search grid step in degrees");
    app->add_option("--elements", elements, "number of array elements (uniform circular array)");
    app->add_option("--offsets", offsets, "explicit element offsets in degrees, comma separated")
        ->delimiter(',')
        ->check(kNonEmptyItem);
    app->add_option("--trials", trials, "Monte Carlo trials per setting");
    app->add_option("--threshold-deg", threshold, "success threshold in degrees");
    app->add_option("--pattern", pattern, "pattern parameter file (default: built-in preset)");
    app->add_option("--threads", threads, "worker threads (0 = all cores)");
  }

  RunConfig resolve() const {
    RunConfig c = config ? load_run_config(*config) : RunConfig{};
    if (seed) c.seed = *seed;
    if (grid_step) c.grid_step = *grid_step;
    if (elements) {
      c.elements = *elements;
      if (offsets.empty()) c.offsets_deg.clear();
    }
    if (!offsets.empty()) {
      c.offsets_deg = offsets;
      if (!elements) c.elements = offsets.size();
    }
    if (trials) c.trials = *trials;
    if (threshold) c.threshold = *threshold;
    if (pattern) c.pattern_file = *pattern;
    if (threads) c.threads = *threads;
    if (c.trials == 0) throw UsageError("--trials must be >= 1");
    if (!(c.grid_step > 0.0)) throw UsageError("--grid-step must be > 0");
    return c;
  }
};

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_extension();
  out += suffix;
  return out;
}

void print_sweep(const SweepReport& rep) {
  std::printf("%-10s %9s %9s %9s %7s %7s %6s\n", rep.parameter.c_str(), "accuracy", "mean", "std", "min", "max", "n");
  for (const auto& r : rep.rows) {
    std::printf("%-10g %8.2f%% %9.4f %9.4f %7.2f %7.2f %6zu\n", r.setting, 100.0 * r.stats.accuracy, r.stats.mean,
                r.stats.stddev, r.stats.min, r.stats.max, r.stats.n);
  }
}

void write_sweep_outputs(const SweepReport& rep, const TrialConfig& base, const fs::path& csv_out,
                         const std::optional<fs::path>& trials_out) {
  io::write_file_atomic(csv_out, io::sweep_csv(rep));
  io::write_file_atomic(with_suffix(csv_out, ".json"), io::sweep_json(rep, base).dump(2) + "\n");
  if (trials_out) io::write_file_atomic(*trials_out, io::trials_csv(rep));
}

// --- fit-pattern -----------------------------------------------------------

struct FitCommand {
  std::optional<fs::path> samples;
  bool demo = false;
  int k = 3;
  fs::path out;
  std::optional<fs::path> report;

  void attach(CLI::App* app) {
    app->add_option("--samples", samples, "measured pattern CSV (angle_deg,gain)");
    app->add_flag("--demo", demo, "fit samples generated from the built-in pattern at 1 degree spacing");
    app->add_option("-k,--components", k, "number of Gaussian components");
    app->add_option("--out", out, "output pattern file")->required();
    app->add_option("--report", report, "write the fit report as JSON");
  }

  int run() const {
    if (k < 1) throw UsageError("--components must be >= 1");
    if (samples.has_value() == demo) throw UsageError("give exactly one of --samples or --demo");
    const std::vector<PatternSample> data = demo ? sample_pattern(preset_pattern(), 1.0) : io::read_samples(*samples);
    const FitResult fit = fit_pattern(data, static_cast<std::size_t>(k));
    io::write_pattern(out, fit.pattern);
    nlohmann::ordered_json j;
    j["components"] = k;
    j["samples"] = fit.n_samples;
    j["initial_rss"] = fit.initial_rss;
    j["final_rss"] = fit.final_rss;
    j["rmse"] = fit.rmse();
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    const std::string text = j.dump(2) + "\n";
    if (report) io::write_file_atomic(*report, text);
    std::cout << text;
    return kOk;
  }
};

// --- manifold ----------------------------------------------------------------

struct ManifoldCommand {
  CommonOptions common;
  fs::path out;
  bool ambiguity = false;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--out", out, "output CSV")->required();
    app->add_flag("--ambiguity", ambiguity, "write the noise-free ambiguity scan instead of the gain table");
  }

  int run() const {
    const RunConfig c = common.resolve();
    const DirMusic est(c.pattern(), c.array(), uniform_grid(c.grid_step));
    std::string text;
    if (ambiguity) {
      text = "angle_deg,worst_angle_deg,max_offpeak_p_mu\n";
      for (const auto& r : ambiguity_scan(est)) {
        text += io::format_double(r.theta_deg) + "," + io::format_double(r.worst_angle_deg) + "," +
                io::format_double(r.max_offpeak) + "\n";
      }
    } else {
      text = "angle_deg";
      for (std::size_t k = 0; k < est.array().size(); ++k) text += ",g" + std::to_string(k + 1);
      text += "\n";
      const auto& m = est.manifold();
      for (std::size_t j = 0; j < est.grid().size(); ++j) {
        text += io::format_double(est.grid()[j]);
        for (Eigen::Index k = 0; k < m.rows(); ++k) text += "," + io::format_double(m(k, static_cast<Eigen::Index>(j)));
        text += "\n";
      }
    }
    io::write_file_atomic(out, text);
    return kOk;
  }
};

// --- simulate / sweeps -----------------------------------------------------

enum class SweepKind { simulate, snr, error, elements };

struct SweepCommand {
  SweepKind kind;
  CommonOptions common;
  std::vector<double> values;
  std::optional<double> snr;
  std::optional<double> epsilon;
  std::optional<std::size_t> snapshots;
  fs::path out;
  std::optional<fs::path> trials_out;

  explicit SweepCommand(SweepKind k) : kind(k) {}

  void attach(CLI::App* app) {
    common.attach(app);
    switch (kind) {
      case SweepKind::simulate:
      case SweepKind::snr:
        app->add_option("--snr", values, "SNR list in dB, comma separated")
            ->delimiter(',')
            ->check(kNonEmptyItem);
        app->add_option("--epsilon", epsilon, "manifold error half-width");
        break;
      case SweepKind::error:
        app->add_option("--epsilon", values, "manifold error half-widths, comma separated")
            ->delimiter(',')
            ->check(kNonEmptyItem);
        app->add_option("--snr", snr, "SNR in dB (default 10)");
        break;
      case SweepKind::elements:
        app->add_option("--counts", values, "element counts, comma separated")
            ->delimiter(',')
            ->check(kNonEmptyItem);
        app->add_option("--snr", snr, "SNR in dB (default 10)");
        app->add_option("--epsilon", epsilon, "manifold error half-width (default 0.05)");
        break;
    }
    app->add_option("--snapshots", snapshots, "samples per trial");
    if (kind == SweepKind::simulate) {
      app->add_option("--out", out, "per-trial CSV; summaries go next to it")->required();
    } else {
      app->add_option("--out", out, "summary CSV; a JSON summary is written next to it")->required();
      app->add_option("--trials-out", trials_out, "optional per-trial CSV");
    }
  }

  int run() const {
    const RunConfig c = common.resolve();
    TrialConfig base = c.trial_config();
    if (snapshots) base.sampling.n_samples = *snapshots;
    std::vector<double> list;
    SweepReport rep;
    switch (kind) {
      case SweepKind::simulate:
      case SweepKind::snr:
        list = values.empty() ? c.snr_db : values;
        if (list.empty()) throw UsageError("SNR list is empty");
        if (epsilon) base.manifold_error = *epsilon;
        rep = run_snr_sweep(base, list);
        break;
      case SweepKind::error:
        list = values.empty() ? c.epsilon : values;
        if (list.empty()) throw UsageError("epsilon list is empty");
        if (snr) base.snr_db = *snr;
        rep = run_manifold_error_sweep(base, list);
        break;
      case SweepKind::elements:
        list = values.empty() ? c.elements_list : values;
        if (list.empty()) throw UsageError("element count list is empty");
        if (snr) base.snr_db = *snr;
        base.manifold_error = epsilon ? *epsilon : (c.manifold_error > 0.0 ? c.manifold_error : 0.05);
        rep = run_element_sweep(base, list);
        break;
    }
    if (kind == SweepKind::simulate) {
      io::write_file_atomic(out, io::trials_csv(rep));
      write_sweep_outputs(rep, base, with_suffix(out, ".summary.csv"), std::nullopt);
    } else {
      write_sweep_outputs(rep, base, out, trials_out);
    }
    print_sweep(rep);
    return kOk;
  }
};

// --- estimate ----------------------------------------------------------------

struct EstimateCommand {
  CommonOptions common;
  fs::path recording;
  std::optional<fs::path> out;
  std::optional<fs::path> spectrum_out;
  bool normalized = false;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("recording", recording, "waveform CSV (time_s,ch1,...,chN)")->required();
    app->add_option("--out", out, "result JSON (default: stdout)");
    app->add_option("--spectrum-out", spectrum_out, "spatial spectrum CSV");
    app->add_flag("--normalized-spectrum", normalized, "use the unit-norm steering variant (diagnostic)");
  }

  int run() const {
    RunConfig c = common.resolve();
    if (normalized) c.normalized_spectrum = true;
    Recording rec = io::read_waveform_csv(recording);
    rec.channel_map = c.channel_map;
    const DirMusic est(c.pattern(), c.array(), uniform_grid(c.grid_step),
                       c.normalized_spectrum ? SpectrumNormalization::unit_steering : SpectrumNormalization::raw);
    if (rec.n_channels() != est.array().size()) {
      throw InvalidInput("recording '" + recording.string() + "' has " + std::to_string(rec.n_channels()) +
                         " channels but the configured array has " + std::to_string(est.array().size()) +
                         " elements");
    }
    PipelineResult res = process_recording(rec, c.filter, c.detect, est);
    if (spectrum_out) {
      // recompute with the spectrum attached; same deterministic path
      const Recording filtered = bandpass(rec, c.filter);
      Recording sliced = filtered;
      sliced.channels = filtered.channels.middleCols(static_cast<Eigen::Index>(res.window.start),
                                                     static_cast<Eigen::Index>(res.window.end - res.window.start));
      const DoaEstimate full = est.estimate(normalize_bipolar(sliced.in_element_order()), true);
      io::write_file_atomic(*spectrum_out, io::spectrum_csv(full.spectrum));
    }
    nlohmann::ordered_json j;
    j["theta_hat_deg"] = res.estimate.theta_deg;
    j["peak_value"] = res.estimate.peak_value;
    j["grid_step_deg"] = est.grid_step();
    j["n_elements"] = est.array().size();
    j["snapshots_used"] = res.estimate.snapshots_used;
    j["window_start_s"] = static_cast<double>(res.window.start) / rec.sample_rate_hz;
    j["window_end_s"] = static_cast<double>(res.window.end) / rec.sample_rate_hz;
    j["detection_channel"] = res.window.channel + 1;
    j["filter_band_hz"] = {c.filter.low_hz, c.filter.high_hz};
    const std::string text = j.dump(2) + "\n";
    if (out) {
      io::write_file_atomic(*out, text);
    } else {
      std::cout << text;
    }
    return kOk;
  }
};

// --- synthesize --------------------------------------------------------------

struct SynthesizeCommand {
  CommonOptions common;
  double theta = 0.0;
  double snr = 10.0;
  double tone_ratio = 0.0;
  double tone_hz = 948.0e6;
  std::size_t samples = 4096;
  std::size_t pulse_start = 1600;
  fs::path out;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--theta", theta, "true bearing in degrees")->required();
    app->add_option("--snr", snr, "SNR in dB");
    app->add_option("--tone-ratio", tone_ratio, "interferer power relative to the pulse (0 = none)");
    app->add_option("--tone-hz", tone_hz, "interferer frequency");
    app->add_option("--samples", samples, "record length");
    app->add_option("--pulse-start", pulse_start, "sample index where the pulse begins");
    app->add_option("--out", out, "output waveform CSV")->required();
  }

  int run() const {
    const RunConfig c = common.resolve();
    SyntheticRecordingSpec spec;
    spec.theta_deg = theta;
    spec.snr_db = snr;
    spec.sampling = {c.sampling.rate_hz, samples};
    spec.pulse_start = pulse_start;
    spec.pulse = c.pulse;
    spec.tone_hz = tone_hz;
    spec.tone_power_ratio = tone_ratio;
    std::mt19937_64 rng(c.seed);
    io::write_waveform_csv(out, synthesize_recording(c.pattern(), c.array(), spec, rng));
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dir-MUSIC direction finding with an antenna-gain array manifold"};
  app.require_subcommand(1);

  FitCommand fit;
  fit.attach(app.add_subcommand("fit-pattern", "fit a Gaussian-sum pattern to measured samples"));
  ManifoldCommand manifold;
  manifold.attach(app.add_subcommand("manifold", "dump steering vectors over the search grid"));
  SweepCommand simulate(SweepKind::simulate);
  simulate.attach(app.add_subcommand("simulate", "run seeded Monte Carlo trials"));
  SweepCommand sweep_snr(SweepKind::snr);
  sweep_snr.attach(app.add_subcommand("sweep-snr", "accuracy versus SNR"));
  SweepCommand sweep_error(SweepKind::error);
  sweep_error.attach(app.add_subcommand("sweep-error", "accuracy versus manifold amplitude error"));
  SweepCommand sweep_elements(SweepKind::elements);
  sweep_elements.attach(app.add_subcommand("sweep-elements", "accuracy versus element count"));
  EstimateCommand estimate;
  estimate.attach(app.add_subcommand("estimate", "estimate the bearing of a recorded pulse"));
  SynthesizeCommand synthesize;
  synthesize.attach(app.add_subcommand("synthesize", "write a synthetic multichannel recording"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "fit-pattern") return fit.run();
    if (name == "manifold") return manifold.run();
    if (name == "simulate") return simulate.run();
    if (name == "sweep-snr") return sweep_snr.run();
    if (name == "sweep-error") return sweep_error.run();
    if (name == "sweep-elements") return sweep_elements.run();
    if (name == "estimate") return estimate.run();
    if (name == "synthesize") return synthesize.run();
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const NoPulseFound& e) {
    std::cerr << "no pulse found: " << e.what() << "\n";
    return kNoPulse;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
}
