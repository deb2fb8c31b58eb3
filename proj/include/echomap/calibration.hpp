#pragma once

// Online estimate of the joint speaker/microphone gain and the normalized
// interference signal left after dividing it out.

#include "echomap/acoustics.hpp"

#include <Eigen/Core>

#include <vector>

namespace echomap {

inline constexpr double kDefaultCalibrationLambda = 0.3;
inline constexpr int kDefaultCalibrationWarmup = 3;
inline constexpr double kGainMaskFloor = 1e-12;

/// Running IIR estimate of g(f)^2 |s(f)|^2, in squared-magnitude units.
struct GainState {
  Eigen::MatrixXd g_tilde;  // mics x freqs
  double lambda = kDefaultCalibrationLambda;
  int frame_count = 0;

  explicit GainState(double lambda = kDefaultCalibrationLambda);
  /// Starts from an explicit estimate, as if `frame_count` frames had been seen.
  GainState(Eigen::MatrixXd initial, double lambda, int frame_count);
};

GainState update_gain(GainState state, const SweepFrame& frame);

/// Gain-normalized, per-mic zero-mean squared magnitudes. Entries whose gain
/// estimate falls below kGainMaskFloor are masked out and hold zero.
struct NormalizedFrame {
  Eigen::MatrixXd values;  // mics x freqs
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active;
  std::vector<double> freqs;

  std::size_t num_mics() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t active_count(std::size_t mic) const;
  /// Active values and their frequencies for one microphone.
  void active_samples(std::size_t mic, std::vector<double>& y, std::vector<double>& f) const;
};

NormalizedFrame normalize_frame(const GainState& state, const SweepFrame& frame,
                                int warmup = kDefaultCalibrationWarmup);

}  // namespace echomap
