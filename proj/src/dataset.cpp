#include "echomap/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace echomap {

using nlohmann::json;

namespace {

json pose_to_json(const Pose2& p) { return json::array({p.x(), p.y(), p.phi()}); }

double finite_number(const json& j, const char* what, std::size_t line) {
  if (!j.is_number()) throw DataError(std::string(what) + " must be a number", line);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw DataError(std::string(what) + " must be finite", line);
  return v;
}

Pose2 parse_pose(const json& j, const char* what, std::size_t line) {
  if (!j.is_array() || j.size() != 3) {
    throw DataError(std::string(what) + " must be [x, y, phi]", line);
  }
  return {finite_number(j[0], what, line), finite_number(j[1], what, line),
          finite_number(j[2], what, line)};
}

const json& require(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'", line);
  return j.at(key);
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string record_to_json_line(const DatasetRecord& rec) {
  json j;
  j["t"] = rec.frame.timestamp;
  j["pose"] = pose_to_json(rec.frame.pose_estimate);
  j["freqs"] = rec.frame.freqs;
  json mags = json::array();
  for (Eigen::Index m = 0; m < rec.frame.mags.rows(); ++m) {
    json row = json::array();
    for (Eigen::Index k = 0; k < rec.frame.mags.cols(); ++k) row.push_back(rec.frame.mags(m, k));
    mags.push_back(std::move(row));
  }
  j["mags"] = std::move(mags);
  if (rec.gt) {
    json planes = json::array();
    for (const auto& p : rec.gt->planes) planes.push_back({p.d, p.theta});
    j["gt"] = {{"pose", pose_to_json(rec.gt->pose)}, {"planes", planes}};
  }
  return j.dump();
}

DatasetRecord parse_record(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw DataError("record must be a JSON object", line_no);

  DatasetRecord rec;
  rec.frame.timestamp = finite_number(require(j, "t", line_no), "t", line_no);
  rec.frame.pose_estimate = parse_pose(require(j, "pose", line_no), "pose", line_no);

  const json& freqs = require(j, "freqs", line_no);
  if (!freqs.is_array() || freqs.size() < 2) {
    throw DataError("freqs must be an array of at least 2 numbers", line_no);
  }
  for (const auto& f : freqs) rec.frame.freqs.push_back(finite_number(f, "freqs", line_no));

  const json& mags = require(j, "mags", line_no);
  if (!mags.is_array() || mags.empty()) {
    throw DataError("mags must be a non-empty array of per-mic arrays", line_no);
  }
  rec.frame.mags.resize(static_cast<Eigen::Index>(mags.size()),
                        static_cast<Eigen::Index>(rec.frame.freqs.size()));
  for (std::size_t m = 0; m < mags.size(); ++m) {
    if (!mags[m].is_array() || mags[m].size() != rec.frame.freqs.size()) {
      throw DataError("mags row " + std::to_string(m) + " does not match freqs", line_no);
    }
    for (std::size_t k = 0; k < mags[m].size(); ++k) {
      const double v = finite_number(mags[m][k], "mags", line_no);
      if (v < 0.0) throw DataError("mags must be non-negative", line_no);
      rec.frame.mags(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = v;
    }
  }

  if (j.contains("gt") && !j.at("gt").is_null()) {
    const json& gt = j.at("gt");
    GroundTruth truth;
    truth.pose = parse_pose(require(gt, "pose", line_no), "gt.pose", line_no);
    const json& planes = require(gt, "planes", line_no);
    if (!planes.is_array()) throw DataError("gt.planes must be an array", line_no);
    for (const auto& p : planes) {
      if (!p.is_array() || p.size() != 2) throw DataError("gt.planes entries must be [d, theta]", line_no);
      truth.planes.push_back(PlaneParams::global(finite_number(p[0], "gt.planes", line_no),
                                                 finite_number(p[1], "gt.planes", line_no)));
    }
    rec.gt = std::move(truth);
  }
  return rec;
}

void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records) {
  for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

std::vector<DatasetRecord> read_dataset(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_record(line, line_no));
    if (out.size() > 1) {
      const auto& first = out.front().frame;
      const auto& last = out.back().frame;
      if (last.freqs != first.freqs || last.mags.rows() != first.mags.rows()) {
        throw DataError("frame layout differs from the first record", line_no);
      }
    }
  }
  return out;
}

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows) {
  out << kEstimatesHeader << '\n';
  for (const auto& r : rows) {
    out << format_number(r.t) << ',' << format_number(r.estimate.d_mean) << ','
        << format_number(r.estimate.theta_mean) << ',' << format_number(r.estimate.sigma_d) << ','
        << format_number(r.estimate.sigma_theta) << ',' << format_number(r.n_eff) << '\n';
  }
}

std::vector<EstimateRow> read_estimates(std::istream& in) {
  std::vector<EstimateRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kEstimatesHeader) throw DataError("unexpected estimates header", line_no);
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError("non-numeric estimate cell '" + cell + "'", line_no);
      }
    }
    if (v.size() != 6) throw DataError("estimate rows need 6 columns", line_no);
    rows.push_back({v[0], {v[1], v[2], v[3], v[4]}, v[5]});
  }
  return rows;
}

}  // namespace echomap
