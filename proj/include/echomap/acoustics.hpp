#pragma once

// Forward model of the buzzer/microphone measurements: the time-domain
// direct-plus-echo signal, its squared-magnitude interference spectrum, and
// the flattop-windowed bin extraction performed on board.

#include "echomap/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace echomap {

/// Piecewise-linear magnitude response over frequency, held constant outside
/// the knot range. A single knot is a flat response.
class FrequencyResponse {
 public:
  FrequencyResponse() = default;
  explicit FrequencyResponse(double flat) : freqs_{0.0}, values_{flat} {}
  FrequencyResponse(std::vector<double> freqs, std::vector<double> values);

  double at(double f) const;
  const std::vector<double>& freqs() const { return freqs_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> freqs_{0.0};
  std::vector<double> values_{1.0};
};

struct AcousticConfig {
  double c = 343.0;
  double rho = 0.0;
  FrequencyResponse source_spectrum;
  /// One response per microphone; a single entry is shared by all microphones.
  std::vector<FrequencyResponse> mic_gains{FrequencyResponse{}};
  double noise_std = 0.0;
  /// When set, noise_std is derived per frame from the RMS noise-free magnitude.
  std::optional<double> snr_db;

  void validate() const;
  double mic_gain(std::size_t mic, double f) const;
};

struct SweepSchedule {
  std::vector<double> freqs;
  int buffer_len = 2048;
  double sample_rate = 48000.0;

  double bin_width() const { return sample_rate / buffer_len; }
  double mean_spacing() const;
  void validate() const;
};

/// `n` roughly uniform frequencies in [f_min, f_max], each rounded to the
/// nearest analysis bin.
SweepSchedule make_bin_aligned_sweep(int n, double f_min, double f_max, int buffer_len = 2048,
                                     double sample_rate = 48000.0);

struct SweepFrame {
  double timestamp = 0.0;
  Pose2 pose_estimate;
  std::vector<double> freqs;
  Eigen::MatrixXd mags;  // mics x freqs

  std::size_t num_mics() const { return static_cast<std::size_t>(mags.rows()); }
  std::size_t num_freqs() const { return freqs.size(); }
};

class BehindPlaneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Squared magnitude of the direct plus first-order echo response.
/// `joint_gain` is g(f)^2 |s(f)|^2.
double interference_power(double joint_gain, double ell, double r, double f, double rho, double c);

/// Index of the closest plane in front of the pose, or empty for an empty
/// scene. Throws BehindPlaneError if the pose is beyond any plane.
std::optional<std::size_t> nearest_plane(const Pose2& pose, std::span<const PlaneParams> planes);

SweepFrame simulate_sweep_frame(const Pose2& pose, std::span<const PlaneParams> planes,
                                const MicGeometry& mics, const AcousticConfig& cfg,
                                const SweepSchedule& sched, std::uint64_t seed);

/// Per-microphone waveform for a pure tone sin(2 pi f t) switched on at t = 0.
std::vector<std::vector<double>> simulate_time_signal(const Pose2& pose, const PlaneParams& plane,
                                                      const MicGeometry& mics,
                                                      const AcousticConfig& cfg, double tone_freq,
                                                      double duration,
                                                      double sample_rate = 48000.0);

/// Periodic 5-term flattop window.
std::vector<double> flattop_window(int n);

/// Amplitude-calibrated flattop DFT magnitude at `target_freq`, computed on the
/// last `buffer_len` samples of the waveform.
double extract_bin_magnitude(std::span<const double> waveform, const SweepSchedule& sched,
                             double target_freq);

/// Noise-free magnitudes with the wall straight ahead (local angle
/// `local_angle`) at each distance. One (distances x freqs) matrix per mic.
std::vector<Eigen::MatrixXd> make_interference_matrix(std::span<const double> distances,
                                                      const SweepSchedule& sched,
                                                      const MicGeometry& mics,
                                                      const AcousticConfig& cfg,
                                                      double local_angle = 0.0);

}  // namespace echomap
