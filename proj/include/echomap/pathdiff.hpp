#pragma once

// Path-difference inference: a non-uniform periodogram of the normalized
// interference signal and the posterior over path difference it implies for
// a single sinusoid with unknown amplitude and phase.

#include "echomap/geometry.hpp"

#include <span>
#include <vector>

namespace echomap {

inline constexpr int kDefaultDeltaGridSize = 512;
inline constexpr double kMaxRangeClip = 0.80;
inline constexpr double kBracketFloor = 1e-10;

/// Uniform grid of path differences over [0, delta_max].
class DeltaGrid {
 public:
  DeltaGrid(double delta_max, int size);

  /// Grid spanning the maximally resolvable path difference c / (2 mean_spacing).
  static DeltaGrid for_sweep(std::span<const double> freqs, double c,
                             int size = kDefaultDeltaGridSize);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double delta_max() const { return values_.back(); }
  double step() const { return step_; }

 private:
  std::vector<double> values_;
  double step_ = 0.0;
};

struct PathDiffDistribution {
  DeltaGrid grid;
  std::vector<double> probs;

  static PathDiffDistribution uniform(const DeltaGrid& grid);

  /// Linear interpolation on the grid; zero outside [0, delta_max].
  double at(double delta) const;
  /// Index of the largest probability; the middle of a run of ties.
  std::size_t argmax() const;
};

/// (1/N) |sum_k y_k exp(j 2 pi (delta / c) f_k)|^2 at every grid point.
std::vector<double> periodogram(std::span<const double> y_hat, std::span<const double> freqs,
                                const DeltaGrid& grid, double c);

/// Normalized posterior [1 - 2P / sum y^2]^((2 - N)/2) over the grid.
PathDiffDistribution delta_distribution(std::span<const double> y_hat,
                                        std::span<const double> freqs, const DeltaGrid& grid,
                                        double c);

/// Largest wall distance the sweep can resolve, clipped at kMaxRangeClip.
double max_distance(std::span<const double> freqs, const MicGeometry& mics, double c);

}  // namespace echomap
