#include "echomap/config.hpp"

#include <cmath>
#include <fstream>

namespace echomap {

using nlohmann::json;

namespace {

Eigen::Vector2d parse_point(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(std::string(what) + ": expected a [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

FrequencyResponse parse_response(const json& j, const char* what) {
  if (j.is_number()) return FrequencyResponse(j.get<double>());
  if (j.is_object()) {
    try {
      return FrequencyResponse(j.at("freqs").get<std::vector<double>>(),
                               j.at("values").get<std::vector<double>>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  }
  throw ConfigError(std::string(what) + ": expected a number or {freqs, values}");
}

json response_to_json(const FrequencyResponse& r) {
  if (r.freqs().size() == 1) return r.values().front();
  return {{"freqs", r.freqs()}, {"values", r.values()}};
}

SweepSchedule parse_sweep(const json& j) {
  const int buffer_len = j.value("buffer_len", 2048);
  const double sample_rate = j.value("sample_rate", 48000.0);
  try {
    if (j.contains("freqs")) {
      SweepSchedule s;
      s.freqs = j.at("freqs").get<std::vector<double>>();
      s.buffer_len = buffer_len;
      s.sample_rate = sample_rate;
      s.validate();
      return s;
    }
    return make_bin_aligned_sweep(j.value("n_freqs", 32), j.value("f_min", 2000.0),
                                  j.value("f_max", 4500.0), buffer_len, sample_rate);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sweep: ") + e.what());
  }
}

AcousticConfig parse_acoustics(const json& j) {
  AcousticConfig a;
  a.c = j.value("c", a.c);
  a.rho = j.value("rho", a.rho);
  a.noise_std = j.value("noise_std", a.noise_std);
  if (j.contains("snr_db") && !j.at("snr_db").is_null()) a.snr_db = j.at("snr_db").get<double>();
  if (j.contains("source_spectrum")) {
    a.source_spectrum = parse_response(j.at("source_spectrum"), "acoustics.source_spectrum");
  }
  if (j.contains("mic_gains")) {
    a.mic_gains.clear();
    const json& g = j.at("mic_gains");
    if (!g.is_array()) a.mic_gains.push_back(parse_response(g, "acoustics.mic_gains"));
    else
      for (const auto& item : g) a.mic_gains.push_back(parse_response(item, "acoustics.mic_gains"));
  }
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return a;
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

Scenario parse_scenario(const std::string& name) {
  if (name == "stepper") return Scenario::Stepper;
  if (name == "flight") return Scenario::Flight;
  if (name == "multiwall") return Scenario::Multiwall;
  if (name == "replay") return Scenario::Replay;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Stepper: return "stepper";
    case Scenario::Flight: return "flight";
    case Scenario::Multiwall: return "multiwall";
    case Scenario::Replay: return "replay";
  }
  return "stepper";
}

std::vector<Eigen::Vector2d> default_mic_layout() {
  std::vector<Eigen::Vector2d> mics;
  for (int k = 0; k < 4; ++k) {
    const double a = kPi / 4.0 + k * kPi / 2.0;
    mics.push_back(0.04 * normal_vec(a));
  }
  return mics;
}

void ExperimentConfig::validate() const {
  if (mics.empty()) throw ConfigError("at least one microphone is required");
  if (acoustics.mic_gains.size() != 1 && acoustics.mic_gains.size() != mics.size()) {
    throw ConfigError("acoustics.mic_gains must hold one entry or one per microphone");
  }
  if (trajectory.waypoints.empty()) throw ConfigError("trajectory needs at least one waypoint");
  if (!(trajectory.step > 0.0)) throw ConfigError("trajectory.step must be > 0");
  if (filter.n_particles == 0) throw ConfigError("filter.n_particles must be >= 1");
  if (!(filter.inject_frac >= 0.0 && filter.inject_frac <= 1.0)) {
    throw ConfigError("filter.inject_frac must be in [0, 1]");
  }
  if (!(filter.process_noise.d >= 0.0 && filter.process_noise.theta >= 0.0)) {
    throw ConfigError("filter.process_noise_d and process_noise_theta must be >= 0");
  }
  if (static_cast<std::size_t>(filter.delta_grid_size) < 2 * sweep.freqs.size()) {
    throw ConfigError("filter.delta_grid_size must be at least twice the number of frequencies");
  }
  if (!(filter.calibration_lambda > 0.0 && filter.calibration_lambda <= 1.0)) {
    throw ConfigError("filter.calibration_lambda must be in (0, 1]");
  }
  if (!(slam.pose_sigma.x > 0.0 && slam.pose_sigma.y > 0.0 && slam.pose_sigma.phi > 0.0)) {
    throw ConfigError("slam.pose_sigma entries must be > 0");
  }
  if (!(slam.min_sigma_d > 0.0 && slam.min_sigma_theta > 0.0)) {
    throw ConfigError("slam minimum sigmas must be > 0");
  }
  for (const auto& w : walls) {
    if (!(w.d >= 0.0)) throw ConfigError("wall distances must be >= 0");
  }
}

ExperimentConfig parse_config(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    ExperimentConfig cfg;
    cfg.scenario = parse_scenario(j.value("scenario", std::string("stepper")));
    cfg.seed = j.value("seed", std::uint64_t{0});

    if (j.contains("mics")) {
      for (const auto& m : j.at("mics")) cfg.mics.push_back(parse_point(m, "mics"));
    } else {
      cfg.mics = default_mic_layout();
    }
    cfg.sweep = parse_sweep(j.value("sweep", json::object()));
    cfg.acoustics = parse_acoustics(j.value("acoustics", json::object()));

    for (const auto& w : j.value("walls", json::array())) {
      const Eigen::Vector2d p = parse_point(w, "walls");
      cfg.walls.push_back(PlaneParams::global(p.x(), p.y()));
    }

    const json t = j.value("trajectory", json::object());
    if (t.contains("waypoints")) {
      cfg.trajectory.waypoints.clear();
      for (const auto& w : t.at("waypoints")) {
        cfg.trajectory.waypoints.push_back(parse_point(w, "trajectory.waypoints"));
      }
    }
    cfg.trajectory.step = t.value("step", cfg.trajectory.step);
    cfg.trajectory.heading = optional_number(t, "heading");
    cfg.trajectory.lateral_jitter_std = t.value("lateral_jitter_std", 0.0);
    cfg.trajectory.odometry_xy_std = t.value("odometry_xy_std", 0.0);
    cfg.trajectory.odometry_phi_std = t.value("odometry_phi_std", 0.0);

    const json f = j.value("filter", json::object());
    cfg.filter.n_particles = f.value("n_particles", cfg.filter.n_particles);
    cfg.filter.inject_frac = f.value("inject_frac", cfg.filter.inject_frac);
    cfg.filter.process_noise.d = f.value("process_noise_d", cfg.filter.process_noise.d);
    cfg.filter.process_noise.theta = f.value("process_noise_theta", cfg.filter.process_noise.theta);
    cfg.filter.delta_grid_size = f.value("delta_grid_size", cfg.filter.delta_grid_size);
    cfg.filter.calibration_warmup = f.value("calibration_warmup", cfg.filter.calibration_warmup);
    cfg.filter.calibration_lambda = f.value("calibration_lambda", cfg.filter.calibration_lambda);

    const json s = j.value("slam", json::object());
    if (s.contains("pose_sigma")) {
      const auto ps = s.at("pose_sigma").get<std::vector<double>>();
      if (ps.size() != 3) throw ConfigError("slam.pose_sigma: expected [x, y, phi]");
      cfg.slam.pose_sigma = {ps[0], ps[1], ps[2]};
    }
    cfg.slam.association_threshold = s.value("association_threshold", cfg.slam.association_threshold);
    cfg.slam.wall_detect_threshold = s.value("wall_detect_threshold", cfg.slam.wall_detect_threshold);
    cfg.slam.heading_normal = s.value("heading_normal", cfg.slam.heading_normal);
    cfg.slam.min_sigma_d = s.value("min_sigma_d", cfg.slam.min_sigma_d);
    cfg.slam.min_sigma_theta = s.value("min_sigma_theta", cfg.slam.min_sigma_theta);
    cfg.slam.sigma_d = optional_number(s, "sigma_d");
    cfg.slam.sigma_theta = optional_number(s, "sigma_theta");
    cfg.slam.solve.max_iters = s.value("max_iters", cfg.slam.solve.max_iters);
    cfg.slam.solve.tol = s.value("tol", cfg.slam.solve.tol);

    const json e = j.value("eval", json::object());
    cfg.eval.skip_frames = e.value("skip_frames", cfg.eval.skip_frames);

    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json mics = json::array();
  for (const auto& m : cfg.mics) mics.push_back({m.x(), m.y()});
  json walls = json::array();
  for (const auto& w : cfg.walls) walls.push_back({w.d, w.theta});
  json waypoints = json::array();
  for (const auto& w : cfg.trajectory.waypoints) waypoints.push_back({w.x(), w.y()});
  json gains = json::array();
  for (const auto& g : cfg.acoustics.mic_gains) gains.push_back(response_to_json(g));

  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["seed"] = cfg.seed;
  j["mics"] = mics;
  j["sweep"] = {{"freqs", cfg.sweep.freqs},
                {"buffer_len", cfg.sweep.buffer_len},
                {"sample_rate", cfg.sweep.sample_rate}};
  j["acoustics"] = {{"c", cfg.acoustics.c},
                    {"rho", cfg.acoustics.rho},
                    {"noise_std", cfg.acoustics.noise_std},
                    {"source_spectrum", response_to_json(cfg.acoustics.source_spectrum)},
                    {"mic_gains", gains}};
  if (cfg.acoustics.snr_db) j["acoustics"]["snr_db"] = *cfg.acoustics.snr_db;
  j["walls"] = walls;
  j["trajectory"] = {{"waypoints", waypoints},
                     {"step", cfg.trajectory.step},
                     {"lateral_jitter_std", cfg.trajectory.lateral_jitter_std},
                     {"odometry_xy_std", cfg.trajectory.odometry_xy_std},
                     {"odometry_phi_std", cfg.trajectory.odometry_phi_std}};
  if (cfg.trajectory.heading) j["trajectory"]["heading"] = *cfg.trajectory.heading;
  j["filter"] = {{"n_particles", cfg.filter.n_particles},
                 {"inject_frac", cfg.filter.inject_frac},
                 {"process_noise_d", cfg.filter.process_noise.d},
                 {"process_noise_theta", cfg.filter.process_noise.theta},
                 {"delta_grid_size", cfg.filter.delta_grid_size},
                 {"calibration_warmup", cfg.filter.calibration_warmup},
                 {"calibration_lambda", cfg.filter.calibration_lambda}};
  j["slam"] = {{"pose_sigma", {cfg.slam.pose_sigma.x, cfg.slam.pose_sigma.y, cfg.slam.pose_sigma.phi}},
               {"association_threshold", cfg.slam.association_threshold},
               {"wall_detect_threshold", cfg.slam.wall_detect_threshold},
               {"heading_normal", cfg.slam.heading_normal},
               {"min_sigma_d", cfg.slam.min_sigma_d},
               {"min_sigma_theta", cfg.slam.min_sigma_theta},
               {"max_iters", cfg.slam.solve.max_iters},
               {"tol", cfg.slam.solve.tol}};
  if (cfg.slam.sigma_d) j["slam"]["sigma_d"] = *cfg.slam.sigma_d;
  if (cfg.slam.sigma_theta) j["slam"]["sigma_theta"] = *cfg.slam.sigma_theta;
  j["eval"] = {{"skip_frames", cfg.eval.skip_frames}};
  return j;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

}  // namespace echomap
