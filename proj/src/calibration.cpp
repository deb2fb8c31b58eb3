#include "echomap/calibration.hpp"

#include <stdexcept>

namespace echomap {

GainState::GainState(double lambda_) : lambda(lambda_) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("GainState: lambda must be in (0, 1]");
  }
}

GainState::GainState(Eigen::MatrixXd initial, double lambda_, int frame_count_)
    : GainState(lambda_) {
  if ((initial.array() < 0.0).any()) {
    throw std::invalid_argument("GainState: gain estimate must be non-negative");
  }
  g_tilde = std::move(initial);
  frame_count = frame_count_;
}

GainState update_gain(GainState state, const SweepFrame& frame) {
  const Eigen::MatrixXd power = frame.mags.array().square().matrix();
  if (state.frame_count == 0) {
    state.g_tilde = power;
  } else {
    if (state.g_tilde.rows() != power.rows() || state.g_tilde.cols() != power.cols()) {
      throw std::invalid_argument("update_gain: frame dimensions do not match the gain state");
    }
    state.g_tilde = (1.0 - state.lambda) * state.g_tilde + state.lambda * power;
  }
  ++state.frame_count;
  return state;
}

std::size_t NormalizedFrame::active_count(std::size_t mic) const {
  return static_cast<std::size_t>(active.row(static_cast<Eigen::Index>(mic)).count());
}

void NormalizedFrame::active_samples(std::size_t mic, std::vector<double>& y,
                                     std::vector<double>& f) const {
  y.clear();
  f.clear();
  const auto m = static_cast<Eigen::Index>(mic);
  for (Eigen::Index k = 0; k < values.cols(); ++k) {
    if (active(m, k)) {
      y.push_back(values(m, k));
      f.push_back(freqs[static_cast<std::size_t>(k)]);
    }
  }
}

NormalizedFrame normalize_frame(const GainState& state, const SweepFrame& frame, int warmup) {
  if (state.frame_count < warmup) {
    throw std::logic_error("normalize_frame: calibration warmup not reached");
  }
  if (state.g_tilde.rows() != frame.mags.rows() || state.g_tilde.cols() != frame.mags.cols()) {
    throw std::invalid_argument("normalize_frame: frame dimensions do not match the gain state");
  }
  NormalizedFrame out;
  out.freqs = frame.freqs;
  out.values = Eigen::MatrixXd::Zero(frame.mags.rows(), frame.mags.cols());
  out.active = (state.g_tilde.array() >= kGainMaskFloor).matrix();

  for (Eigen::Index m = 0; m < frame.mags.rows(); ++m) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index k = 0; k < frame.mags.cols(); ++k) {
      if (!out.active(m, k)) continue;
      const double v = frame.mags(m, k) * frame.mags(m, k) / state.g_tilde(m, k);
      out.values(m, k) = v;
      sum += v;
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    for (Eigen::Index k = 0; k < frame.mags.cols(); ++k) {
      if (out.active(m, k)) out.values(m, k) -= mean;
    }
  }
  return out;
}

}  // namespace echomap
