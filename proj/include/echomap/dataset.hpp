#pragma once

// Line-oriented dataset and estimate files.
//
// Dataset (JSONL), one sweep per line:
//   {"t": s, "pose": [x, y, phi], "freqs": [Hz...], "mags": [[mic0...], ...],
//    "gt": {"pose": [x, y, phi], "planes": [[d, theta], ...]}}
// "gt" is absent for recordings without ground truth.
//
// Estimates (CSV): t,d_mean,theta_mean,sigma_d,sigma_theta,n_eff

#include "echomap/acoustics.hpp"
#include "echomap/particle_filter.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace echomap {

class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct GroundTruth {
  Pose2 pose;
  std::vector<PlaneParams> planes;
};

struct DatasetRecord {
  SweepFrame frame;
  std::optional<GroundTruth> gt;
};

std::string record_to_json_line(const DatasetRecord& rec);
/// `line_no` is 1-based and only used for error reporting.
DatasetRecord parse_record(const std::string& line, std::size_t line_no);

void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records);
/// Blank lines are skipped.
std::vector<DatasetRecord> read_dataset(std::istream& in);

struct EstimateRow {
  double t = 0.0;
  WallEstimate estimate;
  double n_eff = 0.0;
};

inline constexpr const char* kEstimatesHeader = "t,d_mean,theta_mean,sigma_d,sigma_theta,n_eff";

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> read_estimates(std::istream& in);

/// Shortest decimal text that is stable across runs.
std::string format_number(double v);

}  // namespace echomap
