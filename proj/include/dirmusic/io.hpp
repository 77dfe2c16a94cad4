#pragma once

// Text formats: waveform CSV, pattern parameter CSV, measured-pattern CSV,
// sweep reports. Writes go through a temp file and rename.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dirmusic/errors.hpp"
#include "dirmusic/experiments.hpp"
#include "dirmusic/pattern.hpp"
#include "dirmusic/pipeline.hpp"

namespace dirmusic::io {

/// Shortest decimal text that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, const std::string& where) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError(where + ": invalid number '" + std::string(field) + "'");
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

/// Writes to a sibling temp file, then renames over the destination.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move result into '" + path.string() + "'");
  }
}

/// Non-empty lines, with the 1-based line number of each.
struct Line {
  std::size_t number;
  std::string_view text;
};

inline std::vector<Line> lines_of(std::string_view text) {
  std::vector<Line> out;
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++n;
    if (!trim(raw).empty()) out.push_back({n, trim(raw)});
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Waveform CSV: time_s,ch1,...,chN

inline std::string waveform_csv(const Recording& rec) {
  std::string out = "time_s";
  for (std::size_t c = 0; c < rec.n_channels(); ++c) out += ",ch" + std::to_string(c + 1);
  out += '\n';
  for (std::size_t i = 0; i < rec.length(); ++i) {
    out += format_double(static_cast<double>(i) / rec.sample_rate_hz);
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      out += ',';
      out += format_double(rec.channels(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)));
    }
    out += '\n';
  }
  return out;
}

inline Recording parse_waveform_csv(std::string_view text, const std::string& source = "waveform") {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source + ": empty file");
  const auto header = split_csv(lines.front().text);
  if (header.front() != "time_s") {
    throw ParseError(source + ": column 1 must be 'time_s', found '" + std::string(header.front()) + "'");
  }
  if (header.size() < 2) throw ParseError(source + ": no channel columns");
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string expected = "ch" + std::to_string(c);
    if (header[c] != expected) {
      throw ParseError(source + ": column " + std::to_string(c + 1) + " must be '" + expected + "', found '" +
                       std::string(header[c]) + "'");
    }
  }
  const std::size_t n_ch = header.size() - 1;
  const std::size_t n_rows = lines.size() - 1;
  if (n_rows < 2) throw ParseError(source + ": need at least 2 samples");

  std::vector<double> times(n_rows);
  Eigen::MatrixXd data(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& ln = lines[r + 1];
    const auto fields = split_csv(ln.text);
    const std::string where = source + ":" + std::to_string(ln.number);
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    times[r] = parse_double(fields[0], where + " (time_s)");
    for (std::size_t c = 0; c < n_ch; ++c) {
      data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) =
          parse_double(fields[c + 1], where + " (ch" + std::to_string(c + 1) + ")");
    }
  }
  const double step = (times.back() - times.front()) / static_cast<double>(n_rows - 1);
  if (!(step > 0.0)) throw ParseError(source + ": time column must be strictly increasing");
  for (std::size_t r = 1; r < n_rows; ++r) {
    const double dt = times[r] - times[r - 1];
    if (!(dt > 0.0)) throw ParseError(source + ":" + std::to_string(lines[r + 1].number) + ": time not strictly increasing");
    if (std::fabs(dt - step) > 1e-6 * step) {
      throw ParseError(source + ":" + std::to_string(lines[r + 1].number) + ": non-uniform time step");
    }
  }
  Recording rec;
  rec.sample_rate_hz = 1.0 / step;
  rec.channels = std::move(data);
  return rec;
}

inline Recording read_waveform_csv(const std::filesystem::path& path) {
  return parse_waveform_csv(read_file(path), path.string());
}

inline void write_waveform_csv(const std::filesystem::path& path, const Recording& rec) {
  write_file_atomic(path, waveform_csv(rec));
}

// ---------------------------------------------------------------------------
// Pattern parameters: amplitude,center_deg,width_deg (one component per row)

inline std::string pattern_csv(const GaussianMixturePattern& p) {
  std::string out = "amplitude,center_deg,width_deg\n";
  for (const auto& c : p.components()) {
    out += format_double(c.amplitude) + "," + format_double(c.center_deg) + "," + format_double(c.width_deg) + "\n";
  }
  return out;
}

inline GaussianMixturePattern parse_pattern_csv(std::string_view text, const std::string& source = "pattern") {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source + ": empty file");
  const auto header = split_csv(lines.front().text);
  const char* names[] = {"amplitude", "center_deg", "width_deg"};
  if (header.size() != 3) throw ParseError(source + ": header must be amplitude,center_deg,width_deg");
  for (std::size_t c = 0; c < 3; ++c) {
    if (header[c] != names[c]) {
      throw ParseError(source + ": column " + std::to_string(c + 1) + " must be '" + names[c] + "', found '" +
                       std::string(header[c]) + "'");
    }
  }
  std::vector<GaussianComponent> comps;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_csv(lines[r].text);
    const std::string where = source + ":" + std::to_string(lines[r].number);
    if (f.size() != 3) throw ParseError(where + ": expected 3 fields");
    comps.push_back({parse_double(f[0], where), parse_double(f[1], where), parse_double(f[2], where)});
  }
  try {
    return GaussianMixturePattern(std::move(comps));
  } catch (const InvalidInput& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline GaussianMixturePattern read_pattern(const std::filesystem::path& path) {
  return parse_pattern_csv(read_file(path), path.string());
}

inline void write_pattern(const std::filesystem::path& path, const GaussianMixturePattern& p) {
  write_file_atomic(path, pattern_csv(p));
}

// ---------------------------------------------------------------------------
// Measured pattern samples: angle_deg,gain

inline std::string samples_csv(const std::vector<PatternSample>& samples) {
  std::string out = "angle_deg,gain\n";
  for (const auto& s : samples) out += format_double(s.angle_deg) + "," + format_double(s.gain) + "\n";
  return out;
}

inline std::vector<PatternSample> parse_samples_csv(std::string_view text, const std::string& source = "samples") {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source + ": empty file");
  const auto header = split_csv(lines.front().text);
  if (header.size() != 2 || header[0] != "angle_deg" || header[1] != "gain") {
    throw ParseError(source + ": header must be 'angle_deg,gain'");
  }
  std::vector<PatternSample> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_csv(lines[r].text);
    const std::string where = source + ":" + std::to_string(lines[r].number);
    if (f.size() != 2) throw ParseError(where + ": expected 2 fields");
    const PatternSample s{parse_double(f[0], where + " (angle_deg)"), parse_double(f[1], where + " (gain)")};
    if (s.gain < 0.0) throw ParseError(where + ": gain must be >= 0");
    out.push_back(s);
  }
  return out;
}

inline std::vector<PatternSample> read_samples(const std::filesystem::path& path) {
  return parse_samples_csv(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Sweep reports

inline std::string sweep_csv(const SweepReport& rep) {
  std::string out = "setting,accuracy,mean_err,std_err,min_err,max_err,n\n";
  for (const auto& row : rep.rows) {
    const auto& s = row.stats;
    out += format_double(row.setting) + "," + format_double(s.accuracy) + "," + format_double(s.mean) + "," +
           format_double(s.stddev) + "," + format_double(s.min) + "," + format_double(s.max) + "," +
           std::to_string(s.n) + "\n";
  }
  return out;
}

inline std::string trials_csv(const SweepReport& rep) {
  std::string out = "setting,trial,theta_true_deg,theta_hat_deg,error_deg,success\n";
  for (const auto& row : rep.rows) {
    for (std::size_t i = 0; i < row.trials.size(); ++i) {
      const auto& t = row.trials[i];
      out += format_double(row.setting) + "," + std::to_string(i) + "," + format_double(t.theta_true_deg) + "," +
             format_double(t.theta_hat_deg) + "," + format_double(t.error_deg) + "," + (t.success ? "1" : "0") + "\n";
    }
  }
  return out;
}

inline nlohmann::ordered_json sweep_json(const SweepReport& rep, const TrialConfig& base) {
  nlohmann::ordered_json j;
  j["parameter"] = rep.parameter;
  j["n_elements"] = base.n_elements;
  j["snr_db"] = base.snr_db;
  j["manifold_error"] = base.manifold_error;
  j["trials"] = base.n_trials;
  j["seed"] = base.seed;
  j["grid_step_deg"] = base.grid_step_deg;
  j["threshold_deg"] = base.success_threshold_deg;
  j["snapshots"] = base.sampling.n_samples;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rep.rows) {
    const auto& s = row.stats;
    j["rows"].push_back({{"setting", row.setting},
                         {"accuracy", s.accuracy},
                         {"mean_err", s.mean},
                         {"variance_err", s.variance},
                         {"std_err", s.stddev},
                         {"min_err", s.min},
                         {"max_err", s.max},
                         {"n", s.n}});
  }
  return j;
}

inline std::string spectrum_csv(const SpatialSpectrum& s) {
  std::string out = "angle_deg,p_mu\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i) out += format_double(s.grid[i]) + "," + format_double(s.values[i]) + "\n";
  return out;
}

}  // namespace dirmusic::io
