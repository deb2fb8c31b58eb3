#pragma once

// End-to-end experiment stages: simulate a dataset, estimate the nearest wall
// frame by frame, build the plane map, and score the result.

#include "echomap/config.hpp"
#include "echomap/dataset.hpp"
#include "echomap/metrics.hpp"
#include "echomap/slam.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace echomap {

class TrajectoryError : public std::runtime_error {
 public:
  TrajectoryError(const std::string& what, std::size_t frame)
      : std::runtime_error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}
  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

/// Nominal poses along the waypoints, spaced by `step`. At a corner the robot
/// first arrives, then turns in place in a separate frame.
std::vector<Pose2> build_trajectory(const TrajectorySpec& spec);

/// Duration of one sweep: every note fills one analysis buffer.
double sweep_duration(const SweepSchedule& sched);

std::vector<DatasetRecord> run_simulation(const ExperimentConfig& cfg);

struct EstimationOutput {
  std::vector<EstimateRow> rows;
  std::vector<double> cycle_ms;  // filter predict + update + resample time per frame
  std::size_t degenerate_updates = 0;
};

/// `mics` restricts estimation to the first k microphones of the layout.
EstimationOutput run_estimation(std::span<const DatasetRecord> records, const ExperimentConfig& cfg,
                                std::optional<std::size_t> mics = std::nullopt);

struct SlamOutput {
  std::vector<Pose2> poses;
  std::vector<PlaneParams> planes;
  std::vector<AssociationRecord> associations;
  double final_cost = 0.0;
  std::vector<double> update_ms;  // per-frame graph update time
};

SlamOutput run_slam(std::span<const DatasetRecord> records, std::span<const EstimateRow> estimates,
                    const ExperimentConfig& cfg);

nlohmann::json slam_to_json(const SlamOutput& out);
std::vector<AssociationRecord> associations_from_json(const nlohmann::json& j);

/// Range bound used by the filter for this configuration and sweep.
double filter_range(const ExperimentConfig& cfg, std::span<const double> freqs,
                    std::optional<std::size_t> mics = std::nullopt);

MetricsReport run_evaluation(std::span<const DatasetRecord> records,
                             std::span<const EstimateRow> estimates, const ExperimentConfig& cfg,
                             const std::optional<nlohmann::json>& map = std::nullopt);

}  // namespace echomap
