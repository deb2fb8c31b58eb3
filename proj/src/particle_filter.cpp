#include "echomap/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace echomap {

namespace {

Particle uniform_particle(std::mt19937_64& rng, double d_max, double w) {
  std::uniform_real_distribution<double> dist_d(0.0, d_max);
  std::uniform_real_distribution<double> dist_theta(0.0, kTwoPi);
  const double d = dist_d(rng);
  return {d, normalize_angle(dist_theta(rng)), w};
}

}  // namespace

double ParticleSet::weight_sum() const {
  return std::accumulate(particles.begin(), particles.end(), 0.0,
                         [](double acc, const Particle& p) { return acc + p.w; });
}

Motion Motion::between(const Pose2& previous, const Pose2& current) {
  return {current.translation() - previous.translation(), current.phi(),
          wrap_angle(current.phi() - previous.phi())};
}

ParticleSet init_particles(std::size_t n, double d_max, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("init_particles: need at least one particle");
  if (!(d_max > 0.0)) throw std::invalid_argument("init_particles: d_max must be > 0");
  ParticleSet ps;
  ps.d_max = d_max;
  ps.rng.seed(seed);
  ps.particles.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) ps.particles.push_back(uniform_particle(ps.rng, d_max, w));
  return ps;
}

void predict(ParticleSet& ps, const Motion& motion, double inject_frac,
             const ProcessNoise& noise) {
  if (!(inject_frac >= 0.0 && inject_frac <= 1.0)) {
    throw std::invalid_argument("predict: inject_frac must be in [0, 1]");
  }
  if (!(noise.d >= 0.0 && noise.theta >= 0.0)) {
    throw std::invalid_argument("predict: process noise must be >= 0");
  }
  for (auto& p : ps.particles) {
    p.d -= normal_vec(p.theta + motion.heading).dot(motion.translation);
    p.theta = normalize_angle(p.theta - motion.heading_change);
  }
  if (noise.d > 0.0 || noise.theta > 0.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& p : ps.particles) {
      p.d += noise.d * gauss(ps.rng);
      p.theta = normalize_angle(p.theta + noise.theta * gauss(ps.rng));
    }
  }

  const std::size_t n = ps.size();
  const auto n_inject =
      std::min(n, static_cast<std::size_t>(std::llround(inject_frac * static_cast<double>(n))));
  if (n_inject > 0) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n_inject; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(ps.rng)]);
      ps.particles[idx[i]] = uniform_particle(ps.rng, ps.d_max, w);
    }
    const double total = ps.weight_sum();
    if (total > 0.0) {
      for (auto& p : ps.particles) p.w /= total;
    }
  }

  for (auto& p : ps.particles) p.d = std::clamp(p.d, 0.0, ps.d_max);
}

UpdateResult update_weights(ParticleSet& ps, std::span<const PathDiffDistribution> dists,
                            const MicGeometry& mics) {
  if (dists.empty()) throw std::invalid_argument("update_weights: no distributions");
  if (dists.size() > mics.size()) {
    throw std::invalid_argument("update_weights: more distributions than microphones");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Products of sharp per-mic posteriors underflow, so accumulate logs.
  std::vector<double> log_w(ps.size(), 0.0);
  double best = kNegInf;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const Particle& p = ps.particles[k];
    const PlaneParams local = PlaneParams::local(p.d, p.theta);
    double acc = 0.0;
    for (std::size_t m = 0; m < dists.size() && acc > kNegInf; ++m) {
      const double r = reflected_path_length(mics[m].ell, mics[m].bearing, local);
      const double prob = dists[m].at(r - mics[m].ell);
      acc += prob > 0.0 ? std::log(prob) : kNegInf;
    }
    log_w[k] = acc;
    best = std::max(best, acc);
  }

  UpdateResult result;
  const double uniform = 1.0 / static_cast<double>(ps.size());
  if (best == kNegInf) {
    for (auto& p : ps.particles) p.w = uniform;
    result.degenerate = true;
    result.n_eff = static_cast<double>(ps.size());
    return result;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    ps.particles[k].w = std::exp(log_w[k] - best);
    total += ps.particles[k].w;
  }
  double sum_sq = 0.0;
  for (auto& p : ps.particles) {
    p.w /= total;
    sum_sq += p.w * p.w;
  }
  result.n_eff = 1.0 / sum_sq;
  return result;
}

void resample_stratified(ParticleSet& ps) {
  const std::size_t n = ps.size();
  if (n == 0) return;
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += ps.particles[i].w;
    cumulative[i] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("resample_stratified: weights sum to zero");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<Particle> out;
  out.reserve(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + unit(ps.rng)) * inv_n * acc;
    while (j + 1 < n && cumulative[j] <= u) ++j;
    Particle p = ps.particles[j];
    p.w = inv_n;
    out.push_back(p);
  }
  ps.particles = std::move(out);
}

WallEstimate estimate_moments(const ParticleSet& ps) {
  WallEstimate est;
  double total = 0.0;
  double mean_d = 0.0;
  double c = 0.0;
  double s = 0.0;
  for (const auto& p : ps.particles) {
    total += p.w;
    mean_d += p.w * p.d;
    c += p.w * std::cos(p.theta);
    s += p.w * std::sin(p.theta);
  }
  if (!(total > 0.0)) throw std::invalid_argument("estimate_moments: weights sum to zero");
  mean_d /= total;
  c /= total;
  s /= total;

  double var_d = 0.0;
  for (const auto& p : ps.particles) var_d += p.w * (p.d - mean_d) * (p.d - mean_d);
  var_d /= total;

  // Floor keeps the circular std finite for a perfectly balanced set.
  const double resultant = std::clamp(std::hypot(c, s), 1e-12, 1.0);
  est.d_mean = mean_d;
  est.sigma_d = std::sqrt(std::max(var_d, 0.0));
  est.theta_mean = normalize_angle(std::atan2(s, c));
  est.sigma_theta = std::sqrt(std::max(-2.0 * std::log(resultant), 0.0)) + 0.0;
  return est;
}

}  // namespace echomap
