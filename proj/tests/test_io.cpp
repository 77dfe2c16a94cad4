#include <filesystem>
#include <fstream>
#include <functional>
#include <unistd.h>
#include <random>

#include <gtest/gtest.h>

#include "dirmusic/config.hpp"
#include "dirmusic/io.hpp"

using namespace dirmusic;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("dirmusic_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    ASSERT_EQ(io::parse_double(io::format_double(v), "t"), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_THROW(io::parse_double("1.5x", "t"), ParseError);
  EXPECT_THROW(io::parse_double("", "t"), ParseError);
}

TEST(WaveformCsv, RoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 5; ++t) {
    Recording rec;
    rec.sample_rate_hz = 10e9;
    rec.channels.resize(1 + t, 50 + 17 * t);
    for (Eigen::Index i = 0; i < rec.channels.size(); ++i) rec.channels.data()[i] = nd(rng) * std::pow(10.0, t - 3);
    const auto back = io::parse_waveform_csv(io::waveform_csv(rec));
    ASSERT_EQ(back.channels, rec.channels);
    ASSERT_NEAR(back.sample_rate_hz / rec.sample_rate_hz, 1.0, 1e-9);
  }
}

TEST(WaveformCsv, HeaderErrorsNameTheColumn) {
  const std::string bad = "time_s,ch1,chan2\n0,1,2\n1e-10,1,2\n";
  const std::string msg = error_of([&] { io::parse_waveform_csv(bad, "rec.csv"); });
  EXPECT_NE(msg.find("column 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("chan2"), std::string::npos) << msg;
  EXPECT_THROW(io::parse_waveform_csv("t,ch1\n0,1\n1,2\n"), ParseError);
  EXPECT_THROW(io::parse_waveform_csv("time_s\n0\n1\n"), ParseError);
  EXPECT_THROW(io::parse_waveform_csv(""), ParseError);
}

TEST(WaveformCsv, BodyErrors) {
  EXPECT_THROW(io::parse_waveform_csv("time_s,ch1\n0,1\n1,abc\n"), ParseError);
  EXPECT_THROW(io::parse_waveform_csv("time_s,ch1\n0,1\n1\n"), ParseError);
  EXPECT_THROW(io::parse_waveform_csv("time_s,ch1\n0,1\n1,2\n3,2\n"), ParseError);
  EXPECT_THROW(io::parse_waveform_csv("time_s,ch1\n1,1\n0,2\n"), ParseError);
  EXPECT_THROW(io::parse_waveform_csv("time_s,ch1\n0,1\n"), ParseError);
}

TEST(PatternCsv, RoundTrip) {
  const auto p = preset_pattern();
  EXPECT_EQ(io::parse_pattern_csv(io::pattern_csv(p)), p);
  EXPECT_THROW(io::parse_pattern_csv("amplitude,center,width_deg\n1,2,3\n"), ParseError);
  EXPECT_THROW(io::parse_pattern_csv("amplitude,center_deg,width_deg\n1,2,0\n"), ParseError);
  EXPECT_THROW(io::parse_pattern_csv("amplitude,center_deg,width_deg\n"), ParseError);
}

TEST(SamplesCsv, RoundTrip) {
  const auto s = sample_pattern(preset_pattern(), 5.0);
  const auto back = io::parse_samples_csv(io::samples_csv(s));
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back[i].angle_deg, s[i].angle_deg);
    EXPECT_EQ(back[i].gain, s[i].gain);
  }
  EXPECT_THROW(io::parse_samples_csv("angle,gain\n0,1\n"), ParseError);
  EXPECT_THROW(io::parse_samples_csv("angle_deg,gain\n0,-1\n"), ParseError);
}

TEST(Files, MissingFileNamesPath) {
  const std::string msg = error_of([] { io::read_file("/nonexistent/dir/file.csv"); });
  EXPECT_NE(msg.find("/nonexistent/dir/file.csv"), std::string::npos);
  EXPECT_THROW(io::read_file("/nonexistent/dir/file.csv"), IoError);
  EXPECT_THROW(io::write_file_atomic("/nonexistent/dir/out.csv", "x"), IoError);
}

TEST(Files, AtomicWriteLeavesNoTemp) {
  const fs::path d = scratch_dir();
  const fs::path f = d / "a.txt";
  io::write_file_atomic(f, "one\n");
  io::write_file_atomic(f, "two\n");
  EXPECT_EQ(io::read_file(f), "two\n");
  for (const auto& e : fs::directory_iterator(d)) EXPECT_EQ(e.path().extension(), ".txt");
  fs::remove_all(d);
}

TEST(Reports, SweepCsvLayout) {
  SweepReport rep{"snr_db", {}};
  SweepRow row;
  row.setting = -5;
  row.trials = {{10.0, 10.0, 0.0, true}, {20.0, 23.0, 3.0, false}};
  row.stats = summarize(row.trials, 2.0);
  rep.rows.push_back(row);
  EXPECT_EQ(io::sweep_csv(rep), "setting,accuracy,mean_err,std_err,min_err,max_err,n\n-5,0.5,1.5,1.5,0,3,2\n");
  EXPECT_EQ(io::trials_csv(rep),
            "setting,trial,theta_true_deg,theta_hat_deg,error_deg,success\n-5,0,10,10,0,1\n-5,1,20,23,3,0\n");
  const auto j = io::sweep_json(rep, TrialConfig{});
  EXPECT_EQ(j["rows"][0]["variance_err"], 2.25);
  EXPECT_EQ(j["parameter"], "snr_db");
}

TEST(Config, Defaults) {
  const auto c = parse_run_config(R"({"schema_version": 1})");
  EXPECT_EQ(c.elements, 6u);
  EXPECT_EQ(c.seed, kDefaultSeed);
  EXPECT_EQ(c.trials, 3600u);
  EXPECT_EQ(c.grid_step, 1.0);
  EXPECT_EQ(c.threshold, 2.0);
  EXPECT_EQ(c.pattern(), preset_pattern());
  EXPECT_TRUE(c.array().is_uniform());
}

TEST(Config, FullDocument) {
  const auto c = parse_run_config(R"({
    "schema_version": 1,
    "elements": 4,
    "offsets_deg": [0, 60, 120, 180],
    "snr_db": [10, 5, 0],
    "epsilon": 0.05,
    "trials": 100,
    "seed": 7,
    "grid_step": 0.5,
    "threshold": 3,
    "snapshots": 2048,
    "pulse": {"decay_s": 2e-9},
    "filter": {"low_hz": 0.9e9, "taps": 201},
    "detect": {"k_sigma": 6},
    "channel_map": [3, 2, 1, 0],
    "threads": 1
  })");
  EXPECT_EQ(c.elements, 4u);
  EXPECT_FALSE(c.array().is_uniform());
  EXPECT_EQ(c.snr_db, (std::vector<double>{10, 5, 0}));
  EXPECT_EQ(c.epsilon, (std::vector<double>{0.05}));
  const auto t = c.trial_config();
  EXPECT_EQ(t.n_trials, 100u);
  EXPECT_EQ(t.snr_db, 10.0);
  EXPECT_EQ(t.sampling.n_samples, 2048u);
  EXPECT_EQ(t.pulse.decay_s, 2e-9);
  EXPECT_EQ(c.filter.low_hz, 0.9e9);
  EXPECT_EQ(c.filter.high_hz, 2e9);
  EXPECT_EQ(c.detect.k_sigma, 6.0);
  EXPECT_EQ(c.channel_map.size(), 4u);
}

TEST(Config, ElementList) {
  const auto c = parse_run_config(R"({"schema_version": 1, "elements": [1, 2, 4]})");
  EXPECT_EQ(c.elements_list, (std::vector<double>{1, 2, 4}));
  EXPECT_EQ(c.elements, 6u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_run_config("{"), ParseError);
  EXPECT_THROW(parse_run_config("{}"), ParseError);
  EXPECT_THROW(parse_run_config(R"({"schema_version": 2})"), ParseError);
  EXPECT_THROW(parse_run_config(R"({"schema_version": 1, "sedd": 1})"), ParseError);
  EXPECT_THROW(parse_run_config(R"({"schema_version": 1, "trials": "many"})"), ParseError);
  EXPECT_THROW(parse_run_config(R"({"schema_version": 1, "filter": {"order": 3}})"), ParseError);
  const auto c = parse_run_config(R"({"schema_version": 1, "elements": 3, "offsets_deg": [0, 90]})");
  EXPECT_THROW(c.array(), InvalidInput);
  EXPECT_THROW(load_run_config("/nonexistent/run.json"), IoError);
}

TEST(Config, PatternFileRelativeToConfig) {
  const fs::path d = scratch_dir();
  io::write_pattern(d / "p.csv", GaussianMixturePattern({{1.0, 90.0, 30.0}}));
  io::write_file_atomic(d / "run.json", R"({"schema_version": 1, "pattern_file": "p.csv"})");
  const auto c = load_run_config(d / "run.json");
  EXPECT_EQ(c.pattern().size(), 1u);
  fs::remove_all(d);
}
