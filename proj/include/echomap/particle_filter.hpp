#pragma once

// Particle filter over the local (distance, angle) of the nearest wall,
// fusing per-microphone path-difference posteriors with relative motion.

#include "echomap/geometry.hpp"
#include "echomap/pathdiff.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace echomap {

inline constexpr std::size_t kDefaultParticleCount = 400;
inline constexpr double kDefaultInjectFraction = 0.10;

struct Particle {
  double d = 0.0;
  double theta = 0.0;
  double w = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  double d_max = 0.0;
  std::mt19937_64 rng;

  std::size_t size() const { return particles.size(); }
  double weight_sum() const;
};

/// Relative motion between consecutive pose estimates. The translation is in
/// the odometry (global) frame; `heading` is the absolute heading at the new pose.
struct Motion {
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double heading_change = 0.0;

  static Motion between(const Pose2& previous, const Pose2& current);
};

struct WallEstimate {
  double d_mean = 0.0;
  double theta_mean = 0.0;
  double sigma_d = 0.0;
  double sigma_theta = 0.0;
};

struct UpdateResult {
  bool degenerate = false;
  double n_eff = 0.0;
};

/// Uniform particles on [0, d_max] x [0, 2pi) with equal weights.
ParticleSet init_particles(std::size_t n, double d_max, std::uint64_t seed);

/// Gaussian jitter added to each moved particle, in meters and radians.
struct ProcessNoise {
  double d = 0.0;
  double theta = 0.0;
};

/// Moves every particle into the new local frame, optionally jitters it, then
/// replaces a random `inject_frac` of them with fresh uniform draws.
void predict(ParticleSet& ps, const Motion& motion, double inject_frac = kDefaultInjectFraction,
             const ProcessNoise& noise = {});

/// Sets each weight to the product over microphones of p_m(delta_m(d, theta)).
/// A set whose weights all vanish is reset to uniform and reported degenerate.
UpdateResult update_weights(ParticleSet& ps, std::span<const PathDiffDistribution> dists,
                            const MicGeometry& mics);

/// Stratified resampling; one uniform draw per stratum [i/N, (i+1)/N).
void resample_stratified(ParticleSet& ps);

/// Weighted linear moments for distance, circular moments for angle.
WallEstimate estimate_moments(const ParticleSet& ps);

}  // namespace echomap
