#include "echomap/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace echomap {

using nlohmann::json;

namespace {

enum SeedStream : std::uint64_t { kMotionStream = 1, kSweepStream = 2, kFilterStream = 3, kEvalStream = 4 };

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

SweepFrame select_mics(const SweepFrame& frame, std::size_t k) {
  SweepFrame out = frame;
  out.mags = frame.mags.topRows(static_cast<Eigen::Index>(k));
  return out;
}

}  // namespace

std::vector<Pose2> build_trajectory(const TrajectorySpec& spec) {
  if (spec.waypoints.empty()) throw ConfigError("trajectory needs at least one waypoint");
  const auto& wp = spec.waypoints;
  auto heading_of = [&](const Eigen::Vector2d& dir, double fallback) {
    if (spec.heading) return *spec.heading;
    return dir.norm() > 0.0 ? std::atan2(dir.y(), dir.x()) : fallback;
  };

  std::vector<Pose2> poses;
  double heading = spec.heading.value_or(0.0);
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    const Eigen::Vector2d seg = wp[i + 1] - wp[i];
    const double new_heading = heading_of(seg, heading);
    if (i > 0 && std::abs(wrap_angle(new_heading - heading)) > 1e-12) {
      poses.emplace_back(wp[i], new_heading);
    }
    heading = new_heading;
    const auto steps = static_cast<std::size_t>(std::llround(seg.norm() / spec.step));
    for (std::size_t k = (i == 0 ? 0 : 1); k < steps; ++k) {
      poses.emplace_back(wp[i] + seg * (static_cast<double>(k) / static_cast<double>(steps)), heading);
    }
    if (steps > 0 || i == 0) poses.emplace_back(wp[i + 1], heading);
  }
  if (wp.size() == 1) poses.emplace_back(wp.front(), heading);
  return poses;
}

double sweep_duration(const SweepSchedule& sched) {
  return static_cast<double>(sched.freqs.size()) * sched.buffer_len / sched.sample_rate;
}

std::vector<DatasetRecord> run_simulation(const ExperimentConfig& cfg) {
  if (cfg.scenario == Scenario::Replay) {
    throw ConfigError("replay scenarios read recorded data and cannot be simulated");
  }
  const MicGeometry mics = cfg.mic_geometry();
  const auto nominal = build_trajectory(cfg.trajectory);
  const double dt = sweep_duration(cfg.sweep);

  std::mt19937_64 rng(derive_seed(cfg.seed, kMotionStream));
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::Vector2d drift = Eigen::Vector2d::Zero();
  double drift_phi = 0.0;

  std::vector<DatasetRecord> out;
  out.reserve(nominal.size());
  for (std::size_t n = 0; n < nominal.size(); ++n) {
    const Pose2& p = nominal[n];
    const double jitter = cfg.trajectory.lateral_jitter_std * unit(rng);
    const Pose2 truth(p.translation() + jitter * normal_vec(p.phi() + 0.5 * kPi), p.phi());
    if (n > 0) {
      drift += cfg.trajectory.odometry_xy_std * Eigen::Vector2d(unit(rng), unit(rng));
      drift_phi += cfg.trajectory.odometry_phi_std * unit(rng);
    }
    const Pose2 estimate(truth.translation() + drift, truth.phi() + drift_phi);

    DatasetRecord rec;
    try {
      rec.frame = simulate_sweep_frame(truth, cfg.walls, mics, cfg.acoustics, cfg.sweep,
                                       derive_seed(cfg.seed, kSweepStream, n));
    } catch (const BehindPlaneError& e) {
      throw TrajectoryError(std::string("trajectory crosses a wall (") + e.what() + ")", n);
    }
    rec.frame.timestamp = static_cast<double>(n) * dt;
    rec.frame.pose_estimate = estimate;
    rec.gt = GroundTruth{truth, cfg.walls};
    out.push_back(std::move(rec));
  }
  return out;
}

double filter_range(const ExperimentConfig& cfg, std::span<const double> freqs,
                    std::optional<std::size_t> mics) {
  const MicGeometry all = cfg.mic_geometry();
  return max_distance(freqs, mics ? all.first(*mics) : all, cfg.acoustics.c);
}

EstimationOutput run_estimation(std::span<const DatasetRecord> records, const ExperimentConfig& cfg,
                                std::optional<std::size_t> mics_k) {
  EstimationOutput out;
  if (records.empty()) return out;

  const MicGeometry all = cfg.mic_geometry();
  const std::size_t k = mics_k.value_or(all.size());
  if (k == 0 || k > all.size()) throw ConfigError("--mics must be between 1 and the layout size");
  const MicGeometry mics = all.first(k);
  const auto& freqs = records.front().frame.freqs;
  if (records.front().frame.num_mics() < k) {
    throw DataError("dataset has fewer microphones than requested", 1);
  }

  const double c = cfg.acoustics.c;
  const DeltaGrid grid = DeltaGrid::for_sweep(freqs, c, cfg.filter.delta_grid_size);
  ParticleSet ps = init_particles(cfg.filter.n_particles, max_distance(freqs, mics, c),
                                  derive_seed(cfg.seed, kFilterStream));
  GainState gain(cfg.filter.calibration_lambda);

  std::vector<PathDiffDistribution> dists(k, PathDiffDistribution::uniform(grid));
  std::vector<double> y, f;
  for (std::size_t n = 0; n < records.size(); ++n) {
    const SweepFrame frame = select_mics(records[n].frame, k);
    const auto start = std::chrono::steady_clock::now();

    if (n > 0) {
      predict(ps, Motion::between(records[n - 1].frame.pose_estimate, frame.pose_estimate),
              cfg.filter.inject_frac, cfg.filter.process_noise);
    }
    const bool calibrated = gain.frame_count >= cfg.filter.calibration_warmup;
    gain = update_gain(std::move(gain), frame);
    if (calibrated) {
      const NormalizedFrame norm = normalize_frame(gain, frame, cfg.filter.calibration_warmup);
      for (std::size_t m = 0; m < k; ++m) {
        norm.active_samples(m, y, f);
        dists[m] = y.size() >= 3 ? delta_distribution(y, f, grid, c)
                                 : PathDiffDistribution::uniform(grid);
      }
    } else {
      std::fill(dists.begin(), dists.end(), PathDiffDistribution::uniform(grid));
    }
    const UpdateResult upd = update_weights(ps, dists, mics);
    const WallEstimate est = estimate_moments(ps);
    resample_stratified(ps);

    out.cycle_ms.push_back(elapsed_ms(start));
    if (upd.degenerate) ++out.degenerate_updates;
    out.rows.push_back({frame.timestamp, est, upd.n_eff});
  }
  return out;
}

SlamOutput run_slam(std::span<const DatasetRecord> records, std::span<const EstimateRow> estimates,
                    const ExperimentConfig& cfg) {
  if (records.size() != estimates.size()) {
    throw DataError("estimates are not aligned with dataset frames",
                    std::min(records.size(), estimates.size()) + 1);
  }
  IncrementalMapper::Options opts;
  opts.pose_sigma = cfg.slam.pose_sigma;
  opts.association_threshold = cfg.slam.association_threshold;
  opts.solve = cfg.slam.solve;
  IncrementalMapper mapper(opts);

  SlamOutput out;
  std::optional<double> travel_angle;  // direction of travel in the body frame
  for (std::size_t n = 0; n < records.size(); ++n) {
    const Pose2& pose = records[n].frame.pose_estimate;
    if (n > 0) {
      const Eigen::Vector2d step =
          pose.rotation().transpose() * (pose.translation() - records[n - 1].frame.pose_estimate.translation());
      if (step.norm() > 1e-9) travel_angle = std::atan2(step.y(), step.x());
    }

    const WallEstimate& est = estimates[n].estimate;
    std::optional<PlaneMeasurement> wall;
    if (est.d_mean < cfg.slam.wall_detect_threshold) {
      PlaneMeasurement m;
      m.d = est.d_mean;
      m.theta = est.theta_mean;
      if (cfg.slam.heading_normal && travel_angle) m.theta = normalize_angle(*travel_angle);
      m.sigma_d = cfg.slam.sigma_d.value_or(std::max(est.sigma_d, cfg.slam.min_sigma_d));
      m.sigma_theta = cfg.slam.sigma_theta.value_or(std::max(est.sigma_theta, cfg.slam.min_sigma_theta));
      wall = m;
    }

    const auto start = std::chrono::steady_clock::now();
    mapper.add_frame(n, pose, wall);
    out.update_ms.push_back(elapsed_ms(start));
  }
  out.poses = mapper.graph().poses();
  out.planes = mapper.graph().planes();
  out.associations = mapper.associations();
  out.final_cost = mapper.last_cost();
  return out;
}

json slam_to_json(const SlamOutput& out) {
  json poses = json::array();
  for (const auto& p : out.poses) poses.push_back({p.x(), p.y(), p.phi()});
  json planes = json::array();
  for (const auto& p : out.planes) planes.push_back({p.d, p.theta});
  json assoc = json::array();
  for (const auto& a : out.associations) {
    assoc.push_back({{"frame", a.frame}, {"plane", a.plane}, {"new", a.created}, {"loss", a.loss}});
  }
  return {{"poses", poses}, {"planes", planes}, {"associations", assoc}, {"final_cost", out.final_cost}};
}

std::vector<AssociationRecord> associations_from_json(const json& j) {
  std::vector<AssociationRecord> out;
  try {
    for (const auto& a : j.at("associations")) {
      out.push_back({a.at("frame").get<std::size_t>(), a.at("plane").get<std::size_t>(),
                     a.at("new").get<bool>(), a.at("loss").get<double>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed map: ") + e.what(), 1);
  }
  return out;
}

MetricsReport run_evaluation(std::span<const DatasetRecord> records,
                             std::span<const EstimateRow> estimates, const ExperimentConfig& cfg,
                             const std::optional<json>& map) {
  const auto truths = frame_truths(records);
  const double d_max = records.empty() ? kMaxRangeClip : filter_range(cfg, records.front().frame.freqs);
  MetricsReport report =
      evaluate(estimates, truths, d_max, cfg.eval.skip_frames, derive_seed(cfg.seed, kEvalStream));
  if (map) {
    const auto assoc = associations_from_json(*map);
    report.association_accuracy = association_accuracy(assoc, truths);
    report.plane_count = map->at("planes").size();
  }
  return report;
}

}  // namespace echomap
