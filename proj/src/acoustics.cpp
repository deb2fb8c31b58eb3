#include "echomap/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>

namespace echomap {

namespace {

constexpr double kBinTolerance = 1e-6;

// Standard 5-term flattop coefficients.
constexpr double kFlattop[5] = {0.21557895, 0.41663158, 0.277263158, 0.083578947, 0.006947368};

bool is_bin_aligned(double f, double bin_width) {
  const double k = f / bin_width;
  return std::abs(k - std::round(k)) < kBinTolerance;
}

}  // namespace

FrequencyResponse::FrequencyResponse(std::vector<double> freqs, std::vector<double> values)
    : freqs_(std::move(freqs)), values_(std::move(values)) {
  if (freqs_.empty() || freqs_.size() != values_.size()) {
    throw std::invalid_argument("FrequencyResponse: knots and values must be non-empty and equal length");
  }
  if (!std::is_sorted(freqs_.begin(), freqs_.end())) {
    throw std::invalid_argument("FrequencyResponse: knot frequencies must be ascending");
  }
  for (double v : values_) {
    if (!(v >= 0.0)) throw std::invalid_argument("FrequencyResponse: values must be >= 0");
  }
}

double FrequencyResponse::at(double f) const {
  if (freqs_.size() == 1 || f <= freqs_.front()) return values_.front();
  if (f >= freqs_.back()) return values_.back();
  const auto it = std::upper_bound(freqs_.begin(), freqs_.end(), f);
  const std::size_t i = static_cast<std::size_t>(it - freqs_.begin());
  const double t = (f - freqs_[i - 1]) / (freqs_[i] - freqs_[i - 1]);
  return values_[i - 1] + t * (values_[i] - values_[i - 1]);
}

void AcousticConfig::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("AcousticConfig: c must be > 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("AcousticConfig: rho must be in [0, 1]");
  if (mic_gains.empty()) throw std::invalid_argument("AcousticConfig: mic_gains must not be empty");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("AcousticConfig: noise_std must be >= 0");
}

double AcousticConfig::mic_gain(std::size_t mic, double f) const {
  if (mic_gains.size() == 1) return mic_gains.front().at(f);
  if (mic >= mic_gains.size()) {
    throw std::invalid_argument("AcousticConfig: no gain response for microphone");
  }
  return mic_gains[mic].at(f);
}

double SweepSchedule::mean_spacing() const {
  if (freqs.size() < 2) throw std::invalid_argument("SweepSchedule: need at least 2 frequencies");
  return (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
}

void SweepSchedule::validate() const {
  if (freqs.size() < 2) throw std::invalid_argument("SweepSchedule: need at least 2 frequencies");
  if (buffer_len <= 0 || !(sample_rate > 0.0)) {
    throw std::invalid_argument("SweepSchedule: buffer_len and sample_rate must be positive");
  }
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (i > 0 && !(freqs[i] > freqs[i - 1])) {
      throw std::invalid_argument("SweepSchedule: frequencies must be strictly ascending");
    }
    if (!(freqs[i] > 0.0 && freqs[i] < 0.5 * sample_rate)) {
      throw std::invalid_argument("SweepSchedule: frequencies must lie in (0, sample_rate/2)");
    }
    if (!is_bin_aligned(freqs[i], bin_width())) {
      throw std::invalid_argument("SweepSchedule: frequency is not aligned to an analysis bin");
    }
  }
}

SweepSchedule make_bin_aligned_sweep(int n, double f_min, double f_max, int buffer_len,
                                     double sample_rate) {
  if (n < 2 || !(f_max > f_min)) {
    throw std::invalid_argument("make_bin_aligned_sweep: need n >= 2 and f_max > f_min");
  }
  SweepSchedule s;
  s.buffer_len = buffer_len;
  s.sample_rate = sample_rate;
  const double bw = s.bin_width();
  const double k_lo = std::ceil(f_min / bw - kBinTolerance);
  const double k_hi = std::floor(f_max / bw + kBinTolerance);
  if (k_hi - k_lo + 1 < n) {
    throw std::invalid_argument("make_bin_aligned_sweep: range holds fewer bins than requested");
  }
  for (int i = 0; i < n; ++i) {
    const double k = std::round(k_lo + (k_hi - k_lo) * i / (n - 1));
    s.freqs.push_back(k * bw);
  }
  s.validate();
  return s;
}

double interference_power(double joint_gain, double ell, double r, double f, double rho,
                          double c) {
  const double a = 1.0 - rho;
  const double four_pi_sq = 16.0 * kPi * kPi;
  double bracket = 1.0 / (ell * ell);
  if (a > 0.0) {
    bracket += a * a / (r * r) + 2.0 * a / (ell * r) * std::cos(kTwoPi * f * (r - ell) / c);
  }
  return joint_gain / four_pi_sq * bracket;
}

std::optional<std::size_t> nearest_plane(const Pose2& pose, std::span<const PlaneParams> planes) {
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const LocalPlane lp = local_plane_params(pose, planes[i]);
    if (lp.behind) {
      throw BehindPlaneError("pose lies beyond plane " + std::to_string(i));
    }
    if (!best || lp.signed_d < best_d) {
      best = i;
      best_d = lp.signed_d;
    }
  }
  return best;
}

SweepFrame simulate_sweep_frame(const Pose2& pose, std::span<const PlaneParams> planes,
                                const MicGeometry& mics, const AcousticConfig& cfg,
                                const SweepSchedule& sched, std::uint64_t seed) {
  cfg.validate();
  sched.validate();
  for (const auto& mic : mics) {
    if (mic.ell < 1e-6) {
      throw std::invalid_argument("simulate_sweep_frame: microphone coincides with the source");
    }
  }

  const auto nearest = nearest_plane(pose, planes);
  std::optional<PlaneParams> local;
  if (nearest) local = local_plane_params(pose, planes[*nearest]).plane;

  SweepFrame frame;
  frame.pose_estimate = pose;
  frame.freqs = sched.freqs;
  frame.mags.resize(static_cast<Eigen::Index>(mics.size()),
                    static_cast<Eigen::Index>(sched.freqs.size()));

  for (std::size_t m = 0; m < mics.size(); ++m) {
    const double ell = mics[m].ell;
    const double r = local ? reflected_path_length(ell, mics[m].bearing, *local) : 0.0;
    // An empty scene is the fully absorbing limit.
    const double rho = local ? cfg.rho : 1.0;
    for (std::size_t k = 0; k < sched.freqs.size(); ++k) {
      const double f = sched.freqs[k];
      const double g = cfg.mic_gain(m, f) * cfg.source_spectrum.at(f);
      const double power = interference_power(g * g, ell, r, f, rho, cfg.c);
      frame.mags(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = std::sqrt(power);
    }
  }

  double noise_std = cfg.noise_std;
  if (cfg.snr_db) {
    const double rms = std::sqrt(frame.mags.array().square().mean());
    noise_std = rms * std::pow(10.0, -*cfg.snr_db / 20.0);
  }
  if (noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (Eigen::Index m = 0; m < frame.mags.rows(); ++m) {
      for (Eigen::Index k = 0; k < frame.mags.cols(); ++k) {
        frame.mags(m, k) = std::max(0.0, frame.mags(m, k) + noise(rng));
      }
    }
  }
  return frame;
}

std::vector<std::vector<double>> simulate_time_signal(const Pose2& pose, const PlaneParams& plane,
                                                      const MicGeometry& mics,
                                                      const AcousticConfig& cfg, double tone_freq,
                                                      double duration, double sample_rate) {
  cfg.validate();
  const LocalPlane lp = local_plane_params(pose, plane);
  if (lp.behind) throw BehindPlaneError("simulate_time_signal: pose lies beyond the plane");

  const auto n = static_cast<std::size_t>(std::max(0.0, std::round(duration * sample_rate)));
  const double a = 1.0 - cfg.rho;
  auto tone = [&](double t) { return t < 0.0 ? 0.0 : std::sin(kTwoPi * tone_freq * t); };

  std::vector<std::vector<double>> out(mics.size(), std::vector<double>(n, 0.0));
  for (std::size_t m = 0; m < mics.size(); ++m) {
    const double ell = mics[m].ell;
    if (ell < 1e-6) {
      throw std::invalid_argument("simulate_time_signal: microphone coincides with the source");
    }
    const double r = reflected_path_length(ell, mics[m].bearing, lp.plane);
    const double g = cfg.mic_gain(m, tone_freq) * cfg.source_spectrum.at(tone_freq);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      double z = tone(t - ell / cfg.c) / (4.0 * kPi * ell);
      if (a > 0.0) z += a * tone(t - r / cfg.c) / (4.0 * kPi * r);
      out[m][i] = g * z;
    }
  }
  return out;
}

std::vector<double> flattop_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    const double x = kTwoPi * i / n;
    w[static_cast<std::size_t>(i)] = kFlattop[0] - kFlattop[1] * std::cos(x) +
                                     kFlattop[2] * std::cos(2 * x) - kFlattop[3] * std::cos(3 * x) +
                                     kFlattop[4] * std::cos(4 * x);
  }
  return w;
}

double extract_bin_magnitude(std::span<const double> waveform, const SweepSchedule& sched,
                             double target_freq) {
  const auto n = static_cast<std::size_t>(sched.buffer_len);
  if (waveform.size() < n) {
    throw std::invalid_argument("extract_bin_magnitude: waveform shorter than buffer_len");
  }
  if (!is_bin_aligned(target_freq, sched.bin_width())) {
    throw std::invalid_argument("extract_bin_magnitude: target frequency is not bin-aligned");
  }
  const double k = std::round(target_freq / sched.bin_width());
  const auto window = flattop_window(sched.buffer_len);
  const auto buffer = waveform.subspan(waveform.size() - n);

  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    acc += window[i] * buffer[i] * std::polar(1.0, -kTwoPi * k * static_cast<double>(i) / n);
  }
  const double window_sum = std::accumulate(window.begin(), window.end(), 0.0);
  return 2.0 * std::abs(acc) / window_sum;
}

std::vector<Eigen::MatrixXd> make_interference_matrix(std::span<const double> distances,
                                                      const SweepSchedule& sched,
                                                      const MicGeometry& mics,
                                                      const AcousticConfig& cfg,
                                                      double local_angle) {
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (!(distances[i] > 0.0) || (i > 0 && !(distances[i] > distances[i - 1]))) {
      throw std::invalid_argument("make_interference_matrix: distances must be positive ascending");
    }
  }
  AcousticConfig clean = cfg;
  clean.noise_std = 0.0;
  clean.snr_db.reset();

  const auto rows = static_cast<Eigen::Index>(distances.size());
  const auto cols = static_cast<Eigen::Index>(sched.freqs.size());
  std::vector<Eigen::MatrixXd> out(mics.size(), Eigen::MatrixXd(rows, cols));
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const PlaneParams plane = PlaneParams::global(distances[i], local_angle);
    const SweepFrame f = simulate_sweep_frame(Pose2::identity(), std::span(&plane, 1), mics, clean,
                                              sched, 0);
    for (std::size_t m = 0; m < mics.size(); ++m) {
      out[m].row(static_cast<Eigen::Index>(i)) = f.mags.row(static_cast<Eigen::Index>(m));
    }
  }
  return out;
}

}  // namespace echomap
