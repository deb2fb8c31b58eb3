#include "echomap/pathdiff.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace echomap {

namespace {

double mean_spacing(std::span<const double> freqs) {
  if (freqs.size() < 2) throw std::invalid_argument("need at least 2 frequencies");
  return (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
}

void check_inputs(std::span<const double> y_hat, std::span<const double> freqs,
                  std::size_t min_size) {
  if (y_hat.size() != freqs.size()) {
    throw std::invalid_argument("path difference: y_hat and freqs differ in length");
  }
  if (y_hat.size() < min_size) {
    throw std::invalid_argument("path difference: too few frequency samples");
  }
}

}  // namespace

DeltaGrid::DeltaGrid(double delta_max, int size) {
  if (size < 2 || !(delta_max > 0.0)) {
    throw std::invalid_argument("DeltaGrid: need size >= 2 and delta_max > 0");
  }
  step_ = delta_max / (size - 1);
  values_.resize(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) values_[static_cast<std::size_t>(i)] = step_ * i;
  values_.back() = delta_max;
}

DeltaGrid DeltaGrid::for_sweep(std::span<const double> freqs, double c, int size) {
  if (static_cast<std::size_t>(size) < 2 * freqs.size()) {
    throw std::invalid_argument("DeltaGrid: grid must have at least twice as many points as frequencies");
  }
  return DeltaGrid(c / (2.0 * mean_spacing(freqs)), size);
}

PathDiffDistribution PathDiffDistribution::uniform(const DeltaGrid& grid) {
  return {grid, std::vector<double>(grid.size(), 1.0 / static_cast<double>(grid.size()))};
}

double PathDiffDistribution::at(double delta) const {
  if (!(delta >= 0.0) || delta > grid.delta_max()) return 0.0;
  const double pos = delta / grid.step();
  const auto i = std::min(static_cast<std::size_t>(pos), probs.size() - 2);
  const double t = pos - static_cast<double>(i);
  return (1.0 - t) * probs[i] + t * probs[i + 1];
}

std::size_t PathDiffDistribution::argmax() const {
  // A clamped bracket leaves a flat top; report the middle of the first one.
  const auto first = std::max_element(probs.begin(), probs.end());
  auto last = first;
  while (last + 1 != probs.end() && *(last + 1) == *first) ++last;
  return static_cast<std::size_t>((first - probs.begin()) + (last - first) / 2);
}

std::vector<double> periodogram(std::span<const double> y_hat, std::span<const double> freqs,
                                const DeltaGrid& grid, double c) {
  check_inputs(y_hat, freqs, 2);
  const double inv_n = 1.0 / static_cast<double>(y_hat.size());
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double tau = grid.values()[i] / c;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < y_hat.size(); ++k) {
      acc += y_hat[k] * std::polar(1.0, kTwoPi * tau * freqs[k]);
    }
    out[i] = inv_n * std::norm(acc);
  }
  return out;
}

PathDiffDistribution delta_distribution(std::span<const double> y_hat,
                                        std::span<const double> freqs, const DeltaGrid& grid,
                                        double c) {
  check_inputs(y_hat, freqs, 3);
  const double energy = std::inner_product(y_hat.begin(), y_hat.end(), y_hat.begin(), 0.0);
  if (!(energy > 0.0)) return PathDiffDistribution::uniform(grid);

  const auto power = periodogram(y_hat, freqs, grid, c);
  const double exponent = (2.0 - static_cast<double>(y_hat.size())) / 2.0;

  // Work in the log domain: the exponent is large and negative.
  std::vector<double> log_p(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double bracket = std::max(1.0 - 2.0 * power[i] / energy, kBracketFloor);
    log_p[i] = exponent * std::log(bracket);
  }
  const double peak = *std::max_element(log_p.begin(), log_p.end());
  PathDiffDistribution dist{grid, std::vector<double>(grid.size())};
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    dist.probs[i] = std::exp(log_p[i] - peak);
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

double max_distance(std::span<const double> freqs, const MicGeometry& mics, double c) {
  if (freqs.size() < 2) throw std::invalid_argument("max_distance: need at least 2 frequencies");
  const double ell = mics.max_ell();
  const double delta_max = c / (2.0 * mean_spacing(freqs));
  // Microphone aligned with the wall normal: the real root always exists.
  const double d = *distance_from_path(delta_max + ell, 0.0, ell, 0.0);
  return std::min(d, kMaxRangeClip);
}

}  // namespace echomap
