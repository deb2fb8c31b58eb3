#pragma once

// Planar SLAM over SE(2) poses and wall landmarks. Poses carry unary prior
// factors from the state estimator, walls are tied to poses by plane factors,
// and the whole graph is re-solved with batch Gauss-Newton.

#include "echomap/geometry.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace echomap {

inline constexpr double kDefaultAssociationThreshold = 0.30;
inline constexpr double kPlaneCovarianceRegularization = 1e-6;

struct PoseSigma {
  double x = 0.01;
  double y = 0.01;
  double phi = 5.0 * kPi / 180.0;
};

struct PoseFactor {
  std::size_t node = 0;
  Pose2 measured;
  PoseSigma sigma;
};

/// Local wall measurement extracted from the particle filter.
struct PlaneMeasurement {
  double d = 0.0;
  double theta = 0.0;
  double sigma_d = 0.0;
  double sigma_theta = 0.0;
};

struct PlaneFactor {
  std::size_t pose = 0;
  std::size_t plane = 0;
  PlaneMeasurement measured;
};

class FactorGraph {
 public:
  std::size_t add_pose(const Pose2& initial);
  std::size_t add_plane(const PlaneParams& initial);
  void add_pose_factor(const PoseFactor& f);
  void add_plane_factor(const PlaneFactor& f);

  const std::vector<Pose2>& poses() const { return poses_; }
  const std::vector<PlaneParams>& planes() const { return planes_; }
  const std::vector<PoseFactor>& pose_factors() const { return pose_factors_; }
  const std::vector<PlaneFactor>& plane_factors() const { return plane_factors_; }

  void set_estimates(std::vector<Pose2> poses, std::vector<PlaneParams> planes);

  /// Sum of squared whitened residuals over all factors, halved.
  double cost() const;

 private:
  std::vector<Pose2> poses_;
  std::vector<PlaneParams> planes_;
  std::vector<PoseFactor> pose_factors_;
  std::vector<PlaneFactor> plane_factors_;
};

struct PoseResidual {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jacobian;  // w.r.t. a right tangent perturbation of the pose
};

/// Residual log(measured^-1 * xi), unwhitened.
PoseResidual pose_residual(const Pose2& xi, const Pose2& measured);

struct PlaneResidual {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jacobian_pose;
  Eigen::Matrix<double, 3, 2> jacobian_plane;  // columns (d, theta)
};

/// Residual [R^T n(theta_l) - n(theta~); (d_l - x^T n(theta_l)) - d~], unwhitened.
PlaneResidual plane_residual(const Pose2& xi, const PlaneParams& plane, double measured_d,
                             double measured_theta);

/// Block-diagonal covariance of the plane residual. The normal block is the
/// rank-one angle covariance, plus `regularization` on the whole diagonal.
Eigen::Matrix3d plane_covariance(double sigma_theta, double sigma_d, double theta_tilde,
                                 double regularization = kPlaneCovarianceRegularization);

/// Distance between the normal points of two planes.
double association_loss(const PlaneParams& a, const PlaneParams& b);

/// Index of the best matching existing plane, or empty for a new plane.
/// A match requires a loss strictly below the threshold.
std::optional<std::size_t> associate(const PlaneParams& candidate,
                                     std::span<const PlaneParams> existing,
                                     double threshold = kDefaultAssociationThreshold);

struct SolveOptions {
  int max_iters = 50;
  double tol = 1e-9;
  int max_halvings = 30;
};

struct SolveResult {
  std::vector<Pose2> poses;
  std::vector<PlaneParams> planes;
  std::vector<double> cost_history;  // one entry per accepted iterate, starting with the initial cost
  int iterations = 0;
  bool converged = false;

  double final_cost() const { return cost_history.back(); }
};

/// Raised for under-constrained graphs; `block` names the offending variable.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::string block)
      : std::runtime_error(what + ": " + block), block_(std::move(block)) {}
  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

SolveResult solve(const FactorGraph& graph, const SolveOptions& opts = {});

struct AssociationRecord {
  std::size_t frame = 0;
  std::size_t plane = 0;
  bool created = false;
  double loss = 0.0;  // zero for new planes
};

/// Grows the graph one frame at a time and re-solves after every new factor.
class IncrementalMapper {
 public:
  struct Options {
    PoseSigma pose_sigma;
    double association_threshold = kDefaultAssociationThreshold;
    SolveOptions solve;
  };

  IncrementalMapper() = default;
  explicit IncrementalMapper(Options opts) : opts_(opts) {}

  /// Adds the pose of `frame` with its prior and, if given, a wall measurement.
  std::optional<AssociationRecord> add_frame(std::size_t frame, const Pose2& pose_estimate,
                                             const std::optional<PlaneMeasurement>& wall);

  const FactorGraph& graph() const { return graph_; }
  const std::vector<AssociationRecord>& associations() const { return associations_; }
  double last_cost() const { return last_cost_; }

 private:
  Options opts_;
  FactorGraph graph_;
  std::vector<AssociationRecord> associations_;
  double last_cost_ = 0.0;
};

}  // namespace echomap
