#pragma once

// Error statistics for wall estimates against ground truth, with the
// random-guess and fixed-guess baselines used for comparison plots.

#include "echomap/dataset.hpp"
#include "echomap/slam.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace echomap {

struct CdfPoint {
  double error = 0.0;
  double probability = 0.0;
};

struct ErrorSummary {
  std::vector<double> errors;
  double median = 0.0;
  double max = 0.0;
  std::vector<CdfPoint> cdf;

  static ErrorSummary from(std::vector<double> errors);
};

double median(std::vector<double> values);

/// Empirical CDF: sorted errors paired with (i + 1) / n.
std::vector<CdfPoint> empirical_cdf(std::vector<double> errors);

struct FrameTruth {
  double t = 0.0;
  double d = 0.0;
  double theta = 0.0;
  std::size_t plane = 0;
};

/// Local parameters of the nearest ground-truth wall at every frame.
std::vector<FrameTruth> frame_truths(std::span<const DatasetRecord> records);

struct FrameError {
  double t = 0.0;
  double true_d = 0.0;
  double d_error = 0.0;
  double theta_error = 0.0;  // radians, wrapped to [0, pi]
};

struct MetricsReport {
  std::vector<FrameError> frames;
  ErrorSummary distance;
  ErrorSummary angle;
  ErrorSummary random_distance;
  ErrorSummary fixed_distance;
  ErrorSummary random_angle;
  ErrorSummary fixed_angle;
  std::optional<double> association_accuracy;
  std::optional<std::size_t> plane_count;
};

/// Compares estimates with truths frame by frame, skipping the first
/// `skip_frames`. Baseline guesses use [0, d_max] and [0, 2pi).
MetricsReport evaluate(std::span<const EstimateRow> estimates, std::span<const FrameTruth> truths,
                       double d_max, std::size_t skip_frames, std::uint64_t seed);

/// Fraction of association decisions whose plane agrees with the majority
/// ground-truth wall of that plane.
double association_accuracy(std::span<const AssociationRecord> records,
                            std::span<const FrameTruth> truths);

nlohmann::json report_to_json(const MetricsReport& report);

}  // namespace echomap
