// echomap: simulate, estimate, map and score sound-based wall localization runs.
//
//   echomap sim      --config cfg.json [--seed S] --out data.jsonl
//   echomap estimate --config cfg.json --dataset data.jsonl [--mics k] --out est.csv
//   echomap slam     --config cfg.json --dataset data.jsonl --estimates est.csv --out map.json
//   echomap eval     --config cfg.json --dataset data.jsonl --estimates est.csv [--map map.json] --out metrics.json
//   echomap matrix   --config cfg.json [--d-min 0.05 --d-max 0.6 --d-step 0.01] --out matrix.csv
//
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include "echomap/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace echomap;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::optional<std::size_t> mics;
};

ExperimentConfig load(const GlobalOptions& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'", 0);
  return read_dataset(in);
}

std::vector<EstimateRow> load_estimates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open estimates '" + path + "'", 0);
  return read_estimates(in);
}

template <typename Writer>
void write_output(const std::string& path, Writer&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output '" + path + "'");
  write(out);
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sound-based wall localization and mapping"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment configuration (JSON)");
  app.add_option("--seed", g.seed, "Overrides the configuration seed");
  app.add_option("--out", g.out, "Output path, '-' for stdout");
  app.add_option("--mics", g.mics, "Use only the first k microphones")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("sim", "Simulate a dataset (JSONL)");
  sim->fallthrough();

  std::string dataset_path, estimates_path, map_path;
  auto* estimate = app.add_subcommand("estimate", "Estimate the nearest wall per frame (CSV)");
  estimate->fallthrough();
  estimate->add_option("--dataset", dataset_path)->required();

  auto* slam = app.add_subcommand("slam", "Build the plane map from estimates (JSON)");
  slam->fallthrough();
  slam->add_option("--dataset", dataset_path)->required();
  slam->add_option("--estimates", estimates_path)->required();

  auto* eval = app.add_subcommand("eval", "Score estimates against ground truth (JSON)");
  eval->fallthrough();
  eval->add_option("--dataset", dataset_path)->required();
  eval->add_option("--estimates", estimates_path)->required();
  eval->add_option("--map", map_path, "Map from 'slam' for association accuracy");

  double d_min = 0.05, d_max = 0.6, d_step = 0.01;
  auto* matrix = app.add_subcommand("matrix", "Noise-free interference matrix (CSV)");
  matrix->fallthrough();
  matrix->add_option("--d-min", d_min);
  matrix->add_option("--d-max", d_max);
  matrix->add_option("--d-step", d_step);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const ExperimentConfig cfg = load(g);

    if (sim->parsed()) {
      const auto records = run_simulation(cfg);
      write_output(g.out, [&](std::ostream& os) { write_dataset(os, records); });
    } else if (estimate->parsed()) {
      const auto records = load_dataset(dataset_path);
      const auto result = run_estimation(records, cfg, g.mics);
      write_output(g.out, [&](std::ostream& os) { write_estimates(os, result.rows); });
      std::fprintf(stderr, "estimate: %zu frames, cycle p95 %.3f ms, %zu degenerate updates\n",
                   result.rows.size(), percentile(result.cycle_ms, 0.95), result.degenerate_updates);
    } else if (slam->parsed()) {
      const auto records = load_dataset(dataset_path);
      const auto estimates = load_estimates(estimates_path);
      const auto result = run_slam(records, estimates, cfg);
      write_output(g.out, [&](std::ostream& os) { os << slam_to_json(result).dump(2) << '\n'; });
      std::fprintf(stderr, "slam: %zu poses, %zu planes, update p95 %.3f ms\n", result.poses.size(),
                   result.planes.size(), percentile(result.update_ms, 0.95));
    } else if (eval->parsed()) {
      const auto records = load_dataset(dataset_path);
      const auto estimates = load_estimates(estimates_path);
      std::optional<nlohmann::json> map;
      if (!map_path.empty()) {
        std::ifstream in(map_path);
        if (!in) throw DataError("cannot open map '" + map_path + "'", 0);
        try {
          map = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw DataError(std::string("invalid map JSON: ") + e.what(), 0);
        }
      }
      const auto report = run_evaluation(records, estimates, cfg, map);
      write_output(g.out, [&](std::ostream& os) { os << report_to_json(report).dump(2) << '\n'; });
      std::fprintf(stderr, "eval: median distance error %.4f m, median angle error %.2f deg\n",
                   report.distance.median, report.angle.median * 180.0 / kPi);
    } else if (matrix->parsed()) {
      if (!(d_step > 0.0) || !(d_max >= d_min) || !(d_min > 0.0)) {
        throw ConfigError("matrix: need 0 < d-min <= d-max and d-step > 0");
      }
      std::vector<double> distances;
      const auto n = static_cast<std::size_t>(std::floor((d_max - d_min) / d_step + 1e-9)) + 1;
      for (std::size_t i = 0; i < n; ++i) distances.push_back(d_min + d_step * static_cast<double>(i));
      const MicGeometry mics = cfg.mic_geometry();
      const auto mats = make_interference_matrix(distances, cfg.sweep, mics, cfg.acoustics);
      write_output(g.out, [&](std::ostream& os) {
        os << "mic,distance,freq,magnitude\n";
        for (std::size_t m = 0; m < mats.size(); ++m) {
          for (Eigen::Index i = 0; i < mats[m].rows(); ++i) {
            for (Eigen::Index k = 0; k < mats[m].cols(); ++k) {
              os << m << ',' << format_number(distances[static_cast<std::size_t>(i)]) << ','
                 << format_number(cfg.sweep.freqs[static_cast<std::size_t>(k)]) << ','
                 << format_number(mats[m](i, k)) << '\n';
            }
          }
        }
      });
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrajectoryError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
