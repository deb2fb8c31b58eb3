#include "echomap/config.hpp"
#include "echomap/dataset.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace echomap;
using nlohmann::json;

namespace {

DatasetRecord sample_record(double t, bool with_gt) {
  DatasetRecord r;
  r.frame.timestamp = t;
  r.frame.pose_estimate = Pose2(0.1, -0.2, 0.3);
  r.frame.freqs = {2000, 2500, 3000};
  r.frame.mags.resize(2, 3);
  r.frame.mags << 1.5, 0.25, 3.0, 0.125, 2.0, 1.0 / 3.0;
  if (with_gt) r.gt = GroundTruth{Pose2(0.1, -0.2, 0.3), {PlaneParams::global(0.57, 0.0)}};
  return r;
}

}  // namespace

TEST(Config, DefaultsFromEmptyObject) {
  const ExperimentConfig cfg = parse_config(json::object());
  EXPECT_EQ(cfg.scenario, Scenario::Stepper);
  EXPECT_EQ(cfg.mics.size(), 4u);
  EXPECT_EQ(cfg.filter.n_particles, 400u);
  EXPECT_DOUBLE_EQ(cfg.filter.inject_frac, 0.10);
  EXPECT_DOUBLE_EQ(cfg.slam.wall_detect_threshold, 0.20);
  EXPECT_DOUBLE_EQ(cfg.slam.association_threshold, 0.30);
  EXPECT_EQ(cfg.sweep.freqs.size(), 32u);
}

TEST(Config, DefaultMicLayout) {
  const auto mics = default_mic_layout();
  ASSERT_EQ(mics.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(mics[k].norm(), 0.04, 1e-15);
    EXPECT_NEAR(normalize_angle(std::atan2(mics[k].y(), mics[k].x())), kPi / 4 + k * kPi / 2, 1e-12);
  }
}

TEST(Config, ScenarioNames) {
  for (Scenario s : {Scenario::Stepper, Scenario::Flight, Scenario::Multiwall, Scenario::Replay}) {
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  }
  EXPECT_THROW(parse_scenario("orbit"), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config(json::array()), ConfigError);
  EXPECT_THROW(parse_config({{"trajectory", {{"step", 0.0}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"filter", {{"inject_frac", 1.5}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"filter", {{"n_particles", 0}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"filter", {{"process_noise_d", -0.1}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"walls", {{0.5}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"walls", {{-0.5, 0.0}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"seed", "seven"}}), ConfigError);
  EXPECT_THROW(parse_config({{"slam", {{"pose_sigma", {0.01, 0.01}}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"mics", json::array()}}), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/echomap.json"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  for (const char* name : {"stepper", "stepper_noisy", "flight", "multiwall"}) {
    const ExperimentConfig cfg = load_config(std::string(ECHOMAP_CONFIG_DIR) + "/" + name + ".json");
    const json once = config_to_json(cfg);
    EXPECT_EQ(config_to_json(parse_config(once)), once) << name;
  }
}

TEST(Config, ShippedScenarios) {
  const std::string dir = ECHOMAP_CONFIG_DIR;
  EXPECT_EQ(load_config(dir + "/stepper.json").scenario, Scenario::Stepper);
  EXPECT_EQ(load_config(dir + "/flight.json").scenario, Scenario::Flight);
  const ExperimentConfig mw = load_config(dir + "/multiwall.json");
  EXPECT_EQ(mw.scenario, Scenario::Multiwall);
  EXPECT_EQ(mw.walls.size(), 2u);
  EXPECT_GT(load_config(dir + "/flight.json").acoustics.noise_std, 0.0);
}

TEST(Seeds, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stream = 1; stream <= 4; ++stream) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, stream, i));
  }
  EXPECT_EQ(seen.size(), 200u);
  EXPECT_EQ(derive_seed(7, 2, 3), derive_seed(7, 2, 3));
  EXPECT_NE(derive_seed(7, 2, 3), derive_seed(8, 2, 3));
}

TEST(Dataset, RecordRoundTrip) {
  for (bool gt : {true, false}) {
    const DatasetRecord r = sample_record(0.25, gt);
    const DatasetRecord back = parse_record(record_to_json_line(r), 1);
    EXPECT_EQ(back.frame.timestamp, 0.25);
    EXPECT_EQ(back.frame.freqs, r.frame.freqs);
    EXPECT_EQ(back.frame.mags, r.frame.mags);
    EXPECT_EQ(back.frame.pose_estimate.phi(), r.frame.pose_estimate.phi());
    EXPECT_EQ(back.gt.has_value(), gt);
    if (gt) {
      ASSERT_EQ(back.gt->planes.size(), 1u);
      EXPECT_EQ(back.gt->planes[0].d, 0.57);
    }
    EXPECT_EQ(record_to_json_line(back), record_to_json_line(r));
  }
}

TEST(Dataset, StreamRoundTripSkipsBlankLines) {
  std::stringstream ss;
  write_dataset(ss, {sample_record(0, true), sample_record(0.1, true)});
  std::stringstream padded(ss.str() + "\n\n");
  const auto recs = read_dataset(padded);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].frame.timestamp, 0.1);
}

TEST(Dataset, SchemaErrorsCarryLineNumbers) {
  const std::string good = record_to_json_line(sample_record(0, true));
  const auto line_of = [](const std::string& text) -> std::size_t {
    std::stringstream ss(text);
    try {
      read_dataset(ss);
    } catch (const DataError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(good + "\n" + good + "\n{not json\n"), 3u);
  EXPECT_EQ(line_of(good + "\n{\"t\": 1}\n"), 2u);
  EXPECT_EQ(line_of("{\"t\": 0, \"pose\": [0, 0], \"freqs\": [1, 2], \"mags\": [[1, 2]]}\n"), 1u);
  EXPECT_EQ(line_of("{\"t\": 0, \"pose\": [0, 0, 0], \"freqs\": [1, 2], \"mags\": [[1]]}\n"), 1u);
  EXPECT_EQ(line_of("{\"t\": 0, \"pose\": [0, 0, 0], \"freqs\": [1, 2], \"mags\": [[1, -2]]}\n"), 1u);
  EXPECT_EQ(line_of("[1, 2]\n"), 1u);

  DatasetRecord other = sample_record(0.1, true);
  other.frame.freqs = {2000, 2600, 3000};
  EXPECT_EQ(line_of(good + "\n" + record_to_json_line(other) + "\n"), 2u);
  try {
    parse_record("{}", 7);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
}

TEST(Estimates, RoundTrip) {
  std::vector<EstimateRow> rows{{0.0, {0.5, 1.25, 0.01, 0.2}, 310.5}, {0.1, {0.123456789, 6.0, 0.0, 0.0}, 1.0}};
  std::stringstream ss;
  write_estimates(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kEstimatesHeader);
  const auto back = read_estimates(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].estimate.d_mean, 0.123456789);
  EXPECT_EQ(back[0].n_eff, 310.5);
  std::stringstream again;
  write_estimates(again, back);
  std::stringstream first;
  write_estimates(first, rows);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Estimates, Errors) {
  std::stringstream bad_header("t,d\n");
  EXPECT_THROW(read_estimates(bad_header), DataError);
  std::stringstream short_row(std::string(kEstimatesHeader) + "\n0,1,2\n");
  try {
    read_estimates(short_row);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::stringstream text_cell(std::string(kEstimatesHeader) + "\n0,1,2,3,x,5\n");
  EXPECT_THROW(read_estimates(text_cell), DataError);
  std::stringstream empty;
  EXPECT_TRUE(read_estimates(empty).empty());
}

TEST(FormatNumber, Stable) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.0 + 0.0), "0");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(format_number(2500), "2500");
}
