#pragma once

// JSON run configuration shared by the CLI subcommands. Unknown keys are
// rejected so typos surface instead of silently falling back to defaults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirmusic/errors.hpp"
#include "dirmusic/experiments.hpp"
#include "dirmusic/io.hpp"
#include "dirmusic/pipeline.hpp"

namespace dirmusic {

inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  std::size_t elements = 6;
  std::vector<double> offsets_deg;        // explicit array geometry; empty means uniform
  std::vector<double> elements_list;      // sweep-elements
  std::vector<double> snr_db{10.0};       // first entry used by single-setting commands
  std::vector<double> epsilon;            // sweep-error
  double manifold_error = 0.0;
  std::size_t trials = 3600;
  std::uint64_t seed = kDefaultSeed;
  double grid_step = 1.0;
  double threshold = 2.0;
  std::optional<std::filesystem::path> pattern_file;
  PulseModel pulse{};
  SamplingSpec sampling{10.0e9, kSimulationSnapshots};
  FilterSpec filter{};
  DetectOptions detect{};
  std::vector<std::size_t> channel_map;
  bool normalized_spectrum = false;
  unsigned threads = 0;

  GaussianMixturePattern pattern() const { return pattern_file ? io::read_pattern(*pattern_file) : preset_pattern(); }

  ArrayConfig array() const {
    if (!offsets_deg.empty()) {
      if (offsets_deg.size() != elements) {
        throw InvalidInput("config: " + std::to_string(offsets_deg.size()) + " offsets_deg given for " +
                           std::to_string(elements) + " elements");
      }
      return ArrayConfig::with_offsets(offsets_deg);
    }
    return ArrayConfig::uniform(elements);
  }

  TrialConfig trial_config() const {
    TrialConfig t;
    t.n_elements = elements;
    t.offsets_deg = offsets_deg;
    t.snr_db = snr_db.empty() ? 10.0 : snr_db.front();
    t.manifold_error = manifold_error;
    t.n_trials = trials;
    t.grid_step_deg = grid_step;
    t.seed = seed;
    t.success_threshold_deg = threshold;
    t.pattern = pattern();
    t.pulse = pulse;
    t.sampling = sampling;
    t.threads = threads;
    return t;
  }
};

namespace detail {

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("config: key '" + key + "' has the wrong type");
  }
}

inline std::vector<double> number_or_list(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return {get_as<double>(j, key)};
  if (j.is_array()) return get_as<std::vector<double>>(j, key);
  throw ParseError("config: key '" + key + "' must be a number or a list of numbers");
}

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& scope) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ParseError("config: unknown key '" + scope + item.key() + "'");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  if (!j.contains("schema_version")) throw ParseError("config: missing 'schema_version'");
  if (detail::get_as<int>(j["schema_version"], "schema_version") != kConfigSchemaVersion) {
    throw ParseError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  detail::check_keys(j,
                     {"schema_version", "elements", "offsets_deg", "snr_db", "epsilon", "manifold_error", "trials",
                      "seed", "grid_step", "threshold", "pattern_file", "pulse", "snapshots", "sample_rate_hz",
                      "filter", "detect", "channel_map", "normalized_spectrum", "threads"},
                     "");

  RunConfig c;
  using detail::get_as;
  if (j.contains("elements")) {
    const auto& e = j["elements"];
    if (e.is_array()) {
      c.elements_list = get_as<std::vector<double>>(e, "elements");
    } else {
      c.elements = get_as<std::size_t>(e, "elements");
    }
  }
  if (j.contains("offsets_deg")) {
    c.offsets_deg = get_as<std::vector<double>>(j["offsets_deg"], "offsets_deg");
    if (!j.contains("elements") || j["elements"].is_array()) c.elements = c.offsets_deg.size();
  }
  if (j.contains("snr_db")) c.snr_db = detail::number_or_list(j["snr_db"], "snr_db");
  if (j.contains("epsilon")) c.epsilon = detail::number_or_list(j["epsilon"], "epsilon");
  if (j.contains("manifold_error")) c.manifold_error = get_as<double>(j["manifold_error"], "manifold_error");
  if (j.contains("trials")) c.trials = get_as<std::size_t>(j["trials"], "trials");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("grid_step")) c.grid_step = get_as<double>(j["grid_step"], "grid_step");
  if (j.contains("threshold")) c.threshold = get_as<double>(j["threshold"], "threshold");
  if (j.contains("pattern_file")) {
    std::filesystem::path p = get_as<std::string>(j["pattern_file"], "pattern_file");
    c.pattern_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (j.contains("snapshots")) c.sampling.n_samples = get_as<std::size_t>(j["snapshots"], "snapshots");
  if (j.contains("sample_rate_hz")) c.sampling.rate_hz = get_as<double>(j["sample_rate_hz"], "sample_rate_hz");
  if (j.contains("pulse")) {
    const auto& p = j["pulse"];
    detail::check_keys(p, {"amplitude", "decay_s", "rise_s", "carrier_hz"}, "pulse.");
    if (p.contains("amplitude")) c.pulse.amplitude = get_as<double>(p["amplitude"], "pulse.amplitude");
    if (p.contains("decay_s")) c.pulse.decay_s = get_as<double>(p["decay_s"], "pulse.decay_s");
    if (p.contains("rise_s")) c.pulse.rise_s = get_as<double>(p["rise_s"], "pulse.rise_s");
    if (p.contains("carrier_hz")) c.pulse.carrier_hz = get_as<double>(p["carrier_hz"], "pulse.carrier_hz");
  }
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    detail::check_keys(f, {"low_hz", "high_hz", "taps"}, "filter.");
    if (f.contains("low_hz")) c.filter.low_hz = get_as<double>(f["low_hz"], "filter.low_hz");
    if (f.contains("high_hz")) c.filter.high_hz = get_as<double>(f["high_hz"], "filter.high_hz");
    if (f.contains("taps")) c.filter.taps = get_as<std::size_t>(f["taps"], "filter.taps");
  }
  if (j.contains("detect")) {
    const auto& d = j["detect"];
    detail::check_keys(d, {"k_sigma", "pre_s", "post_s", "noise_fraction"}, "detect.");
    if (d.contains("k_sigma")) c.detect.k_sigma = get_as<double>(d["k_sigma"], "detect.k_sigma");
    if (d.contains("pre_s")) c.detect.pre_s = get_as<double>(d["pre_s"], "detect.pre_s");
    if (d.contains("post_s")) c.detect.post_s = get_as<double>(d["post_s"], "detect.post_s");
    if (d.contains("noise_fraction")) c.detect.noise_fraction = get_as<double>(d["noise_fraction"], "detect.noise_fraction");
  }
  if (j.contains("channel_map")) c.channel_map = get_as<std::vector<std::size_t>>(j["channel_map"], "channel_map");
  if (j.contains("normalized_spectrum")) c.normalized_spectrum = get_as<bool>(j["normalized_spectrum"], "normalized_spectrum");
  if (j.contains("threads")) c.threads = get_as<unsigned>(j["threads"], "threads");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path), path.parent_path());
}

}  // namespace dirmusic
