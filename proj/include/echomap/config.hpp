#pragma once

// Experiment configuration, loaded from JSON.

#include "echomap/acoustics.hpp"
#include "echomap/calibration.hpp"
#include "echomap/geometry.hpp"
#include "echomap/particle_filter.hpp"
#include "echomap/pathdiff.hpp"
#include "echomap/slam.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace echomap {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { Stepper, Flight, Multiwall, Replay };

Scenario parse_scenario(const std::string& name);
std::string to_string(Scenario s);

struct TrajectorySpec {
  std::vector<Eigen::Vector2d> waypoints{Eigen::Vector2d::Zero()};
  double step = 0.01;
  /// Fixed heading for the whole run; otherwise the robot faces its direction of travel.
  std::optional<double> heading;
  double lateral_jitter_std = 0.0;
  double odometry_xy_std = 0.0;
  double odometry_phi_std = 0.0;
};

struct FilterParams {
  std::size_t n_particles = kDefaultParticleCount;
  double inject_frac = kDefaultInjectFraction;
  ProcessNoise process_noise{0.002, 2.0 * kPi / 180.0};
  int delta_grid_size = kDefaultDeltaGridSize;
  int calibration_warmup = kDefaultCalibrationWarmup;
  double calibration_lambda = kDefaultCalibrationLambda;
};

struct SlamParams {
  PoseSigma pose_sigma;
  double association_threshold = kDefaultAssociationThreshold;
  double wall_detect_threshold = 0.20;
  /// Assign the wall normal to the direction of travel instead of the filter angle.
  bool heading_normal = false;
  /// Lower bounds applied to filter standard deviations before they enter the graph.
  double min_sigma_d = 0.005;
  double min_sigma_theta = 2.0 * kPi / 180.0;
  /// Replace the filter standard deviations entirely.
  std::optional<double> sigma_d;
  std::optional<double> sigma_theta;
  SolveOptions solve;
};

struct EvalParams {
  std::size_t skip_frames = 5;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::Stepper;
  std::uint64_t seed = 0;
  std::vector<Eigen::Vector2d> mics;
  SweepSchedule sweep;
  AcousticConfig acoustics;
  std::vector<PlaneParams> walls;
  TrajectorySpec trajectory;
  FilterParams filter;
  SlamParams slam;
  EvalParams eval;

  MicGeometry mic_geometry() const { return MicGeometry(mics); }
  void validate() const;
};

/// Four microphones on a 4 cm circle around the buzzer, at 45 + k * 90 degrees.
std::vector<Eigen::Vector2d> default_mic_layout();

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Independent 64-bit seed for a named stream and index (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace echomap
