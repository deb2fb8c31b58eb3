#include "echomap/acoustics.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace echomap;

namespace {

SweepSchedule default_sweep() { return make_bin_aligned_sweep(32, 2000, 4500); }

// Least-squares fit of y = A + B cos(2 pi f delta / c); returns the max abs residual.
double cosine_fit_residual(const std::vector<double>& f, const std::vector<double>& y,
                           double delta, double c) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(f.size()), 2);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    X(i, 0) = 1.0;
    X(i, 1) = std::cos(2 * kPi * f[k] * delta / c);
    Y(i) = y[k];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
  return (X * beta - Y).cwiseAbs().maxCoeff();
}

std::vector<double> tone(double freq, double amp, int n, double fs) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = amp * std::sin(2 * kPi * freq * i / fs + 0.3);
  return x;
}

}  // namespace

TEST(Sweep, BinAlignedDefault) {
  const SweepSchedule s = default_sweep();
  ASSERT_EQ(s.freqs.size(), 32u);
  EXPECT_NO_THROW(s.validate());
  EXPECT_NEAR(s.bin_width(), 23.4375, 1e-12);
  for (double f : s.freqs) {
    EXPECT_NEAR(std::remainder(f, s.bin_width()), 0.0, 1e-9);
    EXPECT_GE(f, 2000 - s.bin_width());
    EXPECT_LE(f, 4500 + s.bin_width());
  }
}

TEST(Sweep, ValidationErrors) {
  SweepSchedule s = default_sweep();
  s.freqs[3] += 5.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = default_sweep();
  std::swap(s.freqs[0], s.freqs[1]);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.freqs = {1000.0};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(make_bin_aligned_sweep(1, 2000, 4500), std::invalid_argument);
  EXPECT_THROW(make_bin_aligned_sweep(40, 2000, 2100), std::invalid_argument);
}

TEST(FrequencyResponse, PiecewiseLinear) {
  const FrequencyResponse r({1000, 2000}, {1.0, 3.0});
  EXPECT_DOUBLE_EQ(r.at(500), 1.0);
  EXPECT_DOUBLE_EQ(r.at(1500), 2.0);
  EXPECT_DOUBLE_EQ(r.at(9000), 3.0);
  EXPECT_DOUBLE_EQ(FrequencyResponse(0.7).at(1234), 0.7);
  EXPECT_THROW(FrequencyResponse({2000, 1000}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(FrequencyResponse({1000}, {-1}), std::invalid_argument);
}

TEST(AcousticConfig, Validation) {
  AcousticConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rho = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.rho = 0.0;
  cfg.c = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Simulate, FreeFieldDirectTerm) {
  const MicGeometry mics({{0.05, 0.0}});
  const AcousticConfig cfg;
  const SweepFrame fr = simulate_sweep_frame(Pose2(), {}, mics, cfg, default_sweep(), 1);
  ASSERT_EQ(fr.mags.rows(), 1);
  ASSERT_EQ(fr.mags.cols(), 32);
  for (Eigen::Index k = 0; k < fr.mags.cols(); ++k) {
    EXPECT_NEAR(fr.mags(0, k), 1.0 / (4 * kPi * 0.05), 1e-12);
  }
}

TEST(Simulate, FullAbsorptionEqualsFreeField) {
  const MicGeometry mics({{0.05, 0.0}, {0.0, 0.03}});
  AcousticConfig cfg;
  cfg.rho = 1.0;
  const std::vector<PlaneParams> walls{PlaneParams::global(0.3, 0.0)};
  const SweepFrame a = simulate_sweep_frame(Pose2(), walls, mics, cfg, default_sweep(), 1);
  const SweepFrame b = simulate_sweep_frame(Pose2(), {}, mics, cfg, default_sweep(), 1);
  EXPECT_NEAR((a.mags - b.mags).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Simulate, SquaredMagnitudesFollowCosine) {
  // A coincident microphone makes the direct term infinite, so use l = 0.05
  // and the matching path difference r - l instead of 2d.
  const MicGeometry mics({{0.05, 0.0}});
  const AcousticConfig cfg;
  const SweepSchedule s = default_sweep();
  const double d = 0.3;
  const SweepFrame fr = simulate_sweep_frame(Pose2(), std::vector{PlaneParams::global(d, 0)}, mics,
                                             cfg, s, 1);
  std::vector<double> y2;
  for (Eigen::Index k = 0; k < fr.mags.cols(); ++k) y2.push_back(fr.mags(0, k) * fr.mags(0, k));
  const double delta = (2 * d - 0.05) - 0.05;
  const double scale = *std::max_element(y2.begin(), y2.end());
  EXPECT_LT(cosine_fit_residual(s.freqs, y2, delta, cfg.c) / scale, 1e-9);
  EXPECT_GT(cosine_fit_residual(s.freqs, y2, delta + 0.01, cfg.c) / scale, 1e-3);
}

TEST(Simulate, MatchesClosedFormEverywhere) {
  const MicGeometry mics({{0.03, 0.03}, {-0.03, 0.03}, {0.0, -0.05}});
  AcousticConfig cfg;
  cfg.rho = 0.35;
  cfg.source_spectrum = FrequencyResponse({2000, 4500}, {0.5, 1.5});
  cfg.mic_gains = {FrequencyResponse(1.0), FrequencyResponse(0.8), FrequencyResponse(1.2)};
  const SweepSchedule s = default_sweep();
  const Pose2 pose(0.1, 0.2, 0.4);
  const PlaneParams wall = PlaneParams::global(0.7, 0.2);
  const SweepFrame fr = simulate_sweep_frame(pose, std::vector{wall}, mics, cfg, s, 1);
  const auto lp = local_plane_params(pose, wall);
  for (std::size_t m = 0; m < mics.size(); ++m) {
    const double r = reflected_path_length(mics[m].ell, mics[m].bearing, lp.plane);
    for (std::size_t k = 0; k < s.freqs.size(); ++k) {
      const double f = s.freqs[k];
      const double g = cfg.mic_gain(m, f) * cfg.source_spectrum.at(f);
      const double a = 1 - cfg.rho;
      const double ell = mics[m].ell;
      const double expected = g * g / std::pow(4 * kPi, 2) *
                              (1 / (ell * ell) + a * a / (r * r) +
                               2 * a / (ell * r) * std::cos(2 * kPi * f * (r - ell) / cfg.c));
      const double got = fr.mags(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
      EXPECT_NEAR(got * got, expected, 1e-12 * expected);
    }
  }
}

TEST(Simulate, AbsorptionShrinksOscillation) {
  const MicGeometry mics({{0.04, 0.0}});
  const SweepSchedule s = default_sweep();
  double prev = std::numeric_limits<double>::infinity();
  for (double rho : {0.0, 0.2, 0.5, 0.8, 0.95}) {
    AcousticConfig cfg;
    cfg.rho = rho;
    const SweepFrame fr =
        simulate_sweep_frame(Pose2(), std::vector{PlaneParams::global(0.3, 0)}, mics, cfg, s, 1);
    const Eigen::ArrayXd y2 = fr.mags.row(0).array().square();
    const double swing = y2.maxCoeff() - y2.minCoeff();
    EXPECT_LT(swing, prev);
    prev = swing;
  }
}

TEST(Simulate, FarFieldApproachesFreeField) {
  const MicGeometry mics({{0.04, 0.0}});
  const AcousticConfig cfg;
  const SweepSchedule s = default_sweep();
  const SweepFrame free = simulate_sweep_frame(Pose2(), {}, mics, cfg, s, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double d : {1.0, 10.0, 100.0, 1000.0}) {
    const SweepFrame fr =
        simulate_sweep_frame(Pose2(), std::vector{PlaneParams::global(d, 0)}, mics, cfg, s, 1);
    const double err = (fr.mags - free.mags).cwiseAbs().maxCoeff();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev / free.mags.maxCoeff(), 1e-4);
}

TEST(Simulate, NearestPlaneOnly) {
  const MicGeometry mics({{0.04, 0.0}});
  const AcousticConfig cfg;
  const SweepSchedule s = default_sweep();
  const std::vector walls{PlaneParams::global(0.3, 0), PlaneParams::global(0.9, kPi)};
  const std::vector near{walls[0]};
  const SweepFrame a = simulate_sweep_frame(Pose2(), walls, mics, cfg, s, 1);
  const SweepFrame b = simulate_sweep_frame(Pose2(), near, mics, cfg, s, 1);
  EXPECT_EQ((a.mags - b.mags).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(*nearest_plane(Pose2(), walls), 0u);
  EXPECT_EQ(*nearest_plane(Pose2(-0.5, 0, 0), walls), 1u);
  EXPECT_FALSE(nearest_plane(Pose2(), std::span<const PlaneParams>{}).has_value());
}

TEST(Simulate, RejectsPoseBeyondPlane) {
  const MicGeometry mics({{0.04, 0.0}});
  const std::vector walls{PlaneParams::global(0.3, 0)};
  EXPECT_THROW(simulate_sweep_frame(Pose2(0.5, 0, 0), walls, mics, AcousticConfig{},
                                    default_sweep(), 1),
               BehindPlaneError);
}

TEST(Simulate, RejectsCoincidentMicrophone) {
  const MicGeometry mics({{0.0, 0.0}});
  EXPECT_THROW(simulate_sweep_frame(Pose2(), {}, mics, AcousticConfig{}, default_sweep(), 1),
               std::invalid_argument);
}

TEST(Simulate, NoiseIsSeededAndNonNegative) {
  const MicGeometry mics({{0.04, 0.0}, {0.0, 0.04}});
  AcousticConfig cfg;
  cfg.noise_std = 5.0;  // large enough to hit the clamp
  const std::vector walls{PlaneParams::global(0.3, 0)};
  const SweepFrame a = simulate_sweep_frame(Pose2(), walls, mics, cfg, default_sweep(), 42);
  const SweepFrame b = simulate_sweep_frame(Pose2(), walls, mics, cfg, default_sweep(), 42);
  const SweepFrame c = simulate_sweep_frame(Pose2(), walls, mics, cfg, default_sweep(), 43);
  EXPECT_EQ(a.mags, b.mags);
  EXPECT_NE(a.mags, c.mags);
  EXPECT_GE(a.mags.minCoeff(), 0.0);
  EXPECT_EQ(a.mags.minCoeff(), 0.0);
}

TEST(Simulate, SnrSetsNoiseLevel) {
  const MicGeometry mics({{0.04, 0.0}});
  AcousticConfig clean;
  AcousticConfig noisy;
  noisy.snr_db = 20.0;
  const std::vector walls{PlaneParams::global(0.3, 0)};
  const SweepSchedule s = make_bin_aligned_sweep(400, 2000, 12000);
  const SweepFrame a = simulate_sweep_frame(Pose2(), walls, mics, clean, s, 1);
  const SweepFrame b = simulate_sweep_frame(Pose2(), walls, mics, noisy, s, 1);
  const double rms = std::sqrt(a.mags.array().square().mean());
  const double noise_rms = std::sqrt((b.mags - a.mags).array().square().mean());
  EXPECT_NEAR(20 * std::log10(rms / noise_rms), 20.0, 1.0);
}

TEST(Flattop, ExactBinUnitAmplitude) {
  const SweepSchedule s = default_sweep();
  const double f = s.freqs[10];
  const auto x = tone(f, 1.0, s.buffer_len, s.sample_rate);
  EXPECT_NEAR(extract_bin_magnitude(x, s, f), 1.0, 1e-3);
}

TEST(Flattop, DetunedBinStaysFlat) {
  const SweepSchedule s = default_sweep();
  for (double off : {-0.4, -0.2, 0.2, 0.4}) {
    const double f = s.freqs[7];
    const auto x = tone(f + off * s.bin_width(), 1.0, s.buffer_len, s.sample_rate);
    EXPECT_NEAR(extract_bin_magnitude(x, s, f), 1.0, 0.01) << off;
  }
}

TEST(Flattop, ZeroAndErrors) {
  const SweepSchedule s = default_sweep();
  const std::vector<double> zero(static_cast<std::size_t>(s.buffer_len), 0.0);
  EXPECT_EQ(extract_bin_magnitude(zero, s, s.freqs[0]), 0.0);
  EXPECT_THROW(extract_bin_magnitude(zero, s, s.freqs[0] + 3.0), std::invalid_argument);
  const std::vector<double> shorter(100, 0.0);
  EXPECT_THROW(extract_bin_magnitude(shorter, s, s.freqs[0]), std::invalid_argument);
}

TEST(Flattop, WindowCoefficients) {
  const auto w = flattop_window(8);
  ASSERT_EQ(w.size(), 8u);
  EXPECT_NEAR(w[0], 0.21557895 - 0.41663158 + 0.277263158 - 0.083578947 + 0.006947368, 1e-12);
  EXPECT_NEAR(w[4], 0.21557895 + 0.41663158 + 0.277263158 + 0.083578947 + 0.006947368, 1e-12);
}

TEST(TimeSignal, FullAbsorptionIsDelayedTone) {
  const MicGeometry mics({{0.05, 0.0}});
  AcousticConfig cfg;
  cfg.rho = 1.0;
  const double f = 3000.0, fs = 48000.0;
  const auto w = simulate_time_signal(Pose2(), PlaneParams::global(0.4, 0), mics, cfg, f, 0.05, fs);
  ASSERT_EQ(w.size(), 1u);
  const double amp = 1.0 / (4 * kPi * 0.05);
  const double lag = 0.05 / cfg.c;
  for (std::size_t i = 0; i < w[0].size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    const double expect = t >= lag ? amp * std::sin(2 * kPi * f * (t - lag)) : 0.0;
    ASSERT_NEAR(w[0][i], expect, 1e-12);
  }
}

TEST(TimeSignal, SteadyStateMatchesSpectrum) {
  const MicGeometry mics({{0.03, 0.03}, {-0.04, 0.0}});
  AcousticConfig cfg;
  cfg.rho = 0.2;
  const SweepSchedule s = default_sweep();
  const PlaneParams wall = PlaneParams::global(0.35, 0.3);
  for (std::size_t k : {0u, 13u, 31u}) {
    const double f = s.freqs[k];
    // the extraction uses the last buffer, well past the 2r/c transient
    const auto w = simulate_time_signal(Pose2(), wall, mics, cfg, f, 0.06, s.sample_rate);
    const SweepFrame fr = simulate_sweep_frame(Pose2(), std::vector{wall}, mics, cfg, s, 1);
    for (std::size_t m = 0; m < mics.size(); ++m) {
      const double got = extract_bin_magnitude(w[m], s, f);
      const double want = fr.mags(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
      EXPECT_NEAR(got / want, 1.0, 0.01);
    }
  }
}

TEST(TimeSignal, ZeroDuration) {
  const MicGeometry mics({{0.05, 0.0}});
  const auto w = simulate_time_signal(Pose2(), PlaneParams::global(0.4, 0), mics, AcousticConfig{},
                                      3000, 0.0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_TRUE(w[0].empty());
}

TEST(InterferenceMatrix, SingleRowMatchesFrame) {
  const MicGeometry mics({{0.04, 0.0}, {0.0, 0.04}});
  AcousticConfig cfg;
  cfg.rho = 0.3;
  const SweepSchedule s = default_sweep();
  const std::vector<double> dist{0.42};
  const auto mats = make_interference_matrix(dist, s, mics, cfg);
  const SweepFrame fr =
      simulate_sweep_frame(Pose2(), std::vector{PlaneParams::global(0.42, 0)}, mics, cfg, s, 1);
  ASSERT_EQ(mats.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    ASSERT_EQ(mats[m].rows(), 1);
    EXPECT_NEAR((mats[m].row(0) - fr.mags.row(static_cast<Eigen::Index>(m))).cwiseAbs().maxCoeff(),
                0.0, 1e-15);
  }
}

TEST(InterferenceMatrix, RowsAreCosines) {
  const MicGeometry mics({{0.04, 0.0}});
  const AcousticConfig cfg;
  const SweepSchedule s = default_sweep();
  std::vector<double> dist;
  for (double d = 0.1; d < 0.6; d += 0.05) dist.push_back(d);
  const auto mats = make_interference_matrix(dist, s, mics, cfg);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    std::vector<double> y2;
    for (Eigen::Index k = 0; k < mats[0].cols(); ++k) {
      y2.push_back(std::pow(mats[0](static_cast<Eigen::Index>(i), k), 2));
    }
    const double delta = (2 * dist[i] - 0.04) - 0.04;
    EXPECT_LT(cosine_fit_residual(s.freqs, y2, delta, cfg.c) /
                  *std::max_element(y2.begin(), y2.end()),
              1e-9);
  }
}

TEST(InterferenceMatrix, ConstantGainScalesRows) {
  const MicGeometry mics({{0.04, 0.0}});
  AcousticConfig a, b;
  b.mic_gains = {FrequencyResponse(2.5)};
  const SweepSchedule s = default_sweep();
  const std::vector<double> dist{0.1, 0.2, 0.3};
  const auto ma = make_interference_matrix(dist, s, mics, a);
  const auto mb = make_interference_matrix(dist, s, mics, b);
  EXPECT_NEAR((mb[0] - 2.5 * ma[0]).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  const std::vector<double> bad{0.3, 0.2};
  EXPECT_THROW(make_interference_matrix(bad, s, mics, a), std::invalid_argument);
}
