#include "echomap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace echomap {

using nlohmann::json;

namespace {

constexpr double kTimestampTolerance = 1e-6;

json summary_to_json(const ErrorSummary& s, double scale) {
  json cdf = json::array();
  for (const auto& p : s.cdf) cdf.push_back({p.error * scale, p.probability});
  return {{"median", s.median * scale}, {"max", s.max * scale}, {"cdf", cdf}};
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> errors) {
  std::sort(errors.begin(), errors.end());
  std::vector<CdfPoint> out;
  out.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    out.push_back({errors[i], static_cast<double>(i + 1) / static_cast<double>(errors.size())});
  }
  return out;
}

ErrorSummary ErrorSummary::from(std::vector<double> errors) {
  ErrorSummary s;
  s.median = echomap::median(errors);
  s.max = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
  s.cdf = empirical_cdf(errors);
  s.errors = std::move(errors);
  return s;
}

std::vector<FrameTruth> frame_truths(std::span<const DatasetRecord> records) {
  std::vector<FrameTruth> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!rec.gt) throw DataError("record has no ground truth", i + 1);
    const auto nearest = nearest_plane(rec.gt->pose, rec.gt->planes);
    if (!nearest) throw DataError("ground truth has no planes", i + 1);
    const LocalPlane lp = local_plane_params(rec.gt->pose, rec.gt->planes[*nearest]);
    out.push_back({rec.frame.timestamp, lp.signed_d, lp.plane.theta, *nearest});
  }
  return out;
}

MetricsReport evaluate(std::span<const EstimateRow> estimates, std::span<const FrameTruth> truths,
                       double d_max, std::size_t skip_frames, std::uint64_t seed) {
  if (estimates.size() != truths.size()) {
    throw DataError("estimates and ground truth differ in length", std::min(estimates.size(), truths.size()) + 1);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> guess_d(0.0, d_max);
  std::uniform_real_distribution<double> guess_theta(0.0, kTwoPi);

  MetricsReport report;
  std::vector<double> d_err, a_err, rd_err, fd_err, ra_err, fa_err;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (std::abs(estimates[i].t - truths[i].t) > kTimestampTolerance) {
      throw DataError("estimate timestamp does not match ground truth", i + 2);
    }
    if (i < skip_frames) continue;
    const auto& e = estimates[i].estimate;
    const auto& g = truths[i];
    FrameError fe{g.t, g.d, std::abs(e.d_mean - g.d), std::abs(wrap_angle(e.theta_mean - g.theta))};
    report.frames.push_back(fe);
    d_err.push_back(fe.d_error);
    a_err.push_back(fe.theta_error);
    rd_err.push_back(std::abs(guess_d(rng) - g.d));
    ra_err.push_back(std::abs(wrap_angle(guess_theta(rng) - g.theta)));
    fd_err.push_back(std::abs(0.5 * d_max - g.d));
    fa_err.push_back(std::abs(wrap_angle(kPi - g.theta)));
  }
  report.distance = ErrorSummary::from(std::move(d_err));
  report.angle = ErrorSummary::from(std::move(a_err));
  report.random_distance = ErrorSummary::from(std::move(rd_err));
  report.fixed_distance = ErrorSummary::from(std::move(fd_err));
  report.random_angle = ErrorSummary::from(std::move(ra_err));
  report.fixed_angle = ErrorSummary::from(std::move(fa_err));
  return report;
}

double association_accuracy(std::span<const AssociationRecord> records,
                            std::span<const FrameTruth> truths) {
  if (records.empty()) return 1.0;
  std::map<std::size_t, std::map<std::size_t, std::size_t>> votes;
  for (const auto& r : records) {
    if (r.frame >= truths.size()) throw DataError("association frame out of range", r.frame + 1);
    ++votes[r.plane][truths[r.frame].plane];
  }
  std::map<std::size_t, std::size_t> label;
  for (const auto& [plane, counts] : votes) {
    label[plane] = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   })->first;
  }
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (label[r.plane] == truths[r.frame].plane) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

json report_to_json(const MetricsReport& report) {
  const double deg = 180.0 / kPi;
  json frames = json::array();
  for (const auto& f : report.frames) {
    frames.push_back({{"t", f.t}, {"true_d", f.true_d}, {"d_error", f.d_error},
                      {"theta_error_deg", f.theta_error * deg}});
  }
  json j;
  j["frames"] = frames;
  j["distance_m"] = summary_to_json(report.distance, 1.0);
  j["angle_deg"] = summary_to_json(report.angle, deg);
  j["baselines"] = {{"random_distance_m", summary_to_json(report.random_distance, 1.0)},
                    {"fixed_distance_m", summary_to_json(report.fixed_distance, 1.0)},
                    {"random_angle_deg", summary_to_json(report.random_angle, deg)},
                    {"fixed_angle_deg", summary_to_json(report.fixed_angle, deg)}};
  if (report.association_accuracy) j["association_accuracy"] = *report.association_accuracy;
  if (report.plane_count) j["plane_count"] = *report.plane_count;
  return j;
}

}  // namespace echomap
