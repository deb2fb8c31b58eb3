#include "echomap/slam.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace echomap {

namespace {

struct Linearized {
  Eigen::VectorXd residual;  // whitened
  std::vector<Eigen::Triplet<double>> jacobian;
  double cost = 0.0;
};

Eigen::Matrix3d pose_sqrt_information(const PoseSigma& s) {
  return Eigen::Vector3d(1.0 / s.x, 1.0 / s.y, 1.0 / s.phi).asDiagonal();
}

// Whitening for a plane factor: L^-1 with Sigma = L L^T.
Eigen::Matrix3d plane_whitener(const PlaneMeasurement& m) {
  const Eigen::Matrix3d cov = plane_covariance(m.sigma_theta, m.sigma_d, m.theta);
  const Eigen::LLT<Eigen::Matrix3d> llt(cov);
  return llt.matrixL().solve(Eigen::Matrix3d::Identity());
}

void append_block(std::vector<Eigen::Triplet<double>>& out, Eigen::Index row, Eigen::Index col,
                  const Eigen::MatrixXd& block) {
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      if (block(i, j) != 0.0) out.emplace_back(row + i, col + j, block(i, j));
    }
  }
}

Eigen::Index plane_offset(const FactorGraph& g, std::size_t plane) {
  return static_cast<Eigen::Index>(3 * g.poses().size() + 2 * plane);
}

Linearized linearize(const FactorGraph& g, const std::vector<Pose2>& poses,
                     const std::vector<PlaneParams>& planes, bool with_jacobian) {
  const auto rows =
      static_cast<Eigen::Index>(3 * (g.pose_factors().size() + g.plane_factors().size()));
  Linearized lin;
  lin.residual.resize(rows);
  Eigen::Index row = 0;
  for (const auto& f : g.pose_factors()) {
    const PoseResidual pr = pose_residual(poses[f.node], f.measured);
    const Eigen::Matrix3d w = pose_sqrt_information(f.sigma);
    lin.residual.segment<3>(row) = w * pr.residual;
    if (with_jacobian) {
      append_block(lin.jacobian, row, static_cast<Eigen::Index>(3 * f.node), w * pr.jacobian);
    }
    row += 3;
  }
  for (const auto& f : g.plane_factors()) {
    const PlaneResidual pr =
        plane_residual(poses[f.pose], planes[f.plane], f.measured.d, f.measured.theta);
    const Eigen::Matrix3d w = plane_whitener(f.measured);
    lin.residual.segment<3>(row) = w * pr.residual;
    if (with_jacobian) {
      append_block(lin.jacobian, row, static_cast<Eigen::Index>(3 * f.pose),
                   w * pr.jacobian_pose);
      append_block(lin.jacobian, row, plane_offset(g, f.plane), w * pr.jacobian_plane);
    }
    row += 3;
  }
  lin.cost = 0.5 * lin.residual.squaredNorm();
  return lin;
}

std::string describe_variable(const FactorGraph& g, Eigen::Index index) {
  const auto pose_vars = static_cast<Eigen::Index>(3 * g.poses().size());
  if (index < pose_vars) return "pose " + std::to_string(index / 3);
  return "plane " + std::to_string((index - pose_vars) / 2);
}

PlaneParams retract_plane(const PlaneParams& p, double dd, double dtheta) {
  double d = p.d + dd;
  double theta = p.theta + dtheta;
  if (d < 0.0) {
    d = -d;
    theta += kPi;
  }
  return PlaneParams::global(d, theta);
}

}  // namespace

std::size_t FactorGraph::add_pose(const Pose2& initial) {
  poses_.push_back(initial);
  return poses_.size() - 1;
}

std::size_t FactorGraph::add_plane(const PlaneParams& initial) {
  if (initial.frame != PlaneFrame::Global) {
    throw std::invalid_argument("FactorGraph: plane nodes live in the global frame");
  }
  planes_.push_back(initial);
  return planes_.size() - 1;
}

void FactorGraph::add_pose_factor(const PoseFactor& f) {
  if (f.node >= poses_.size()) throw std::out_of_range("pose factor references a missing pose");
  if (!(f.sigma.x > 0.0 && f.sigma.y > 0.0 && f.sigma.phi > 0.0)) {
    throw std::invalid_argument("pose factor sigmas must be > 0");
  }
  pose_factors_.push_back(f);
}

void FactorGraph::add_plane_factor(const PlaneFactor& f) {
  if (f.pose >= poses_.size() || f.plane >= planes_.size()) {
    throw std::out_of_range("plane factor references a missing node");
  }
  if (!(f.measured.sigma_d > 0.0 && f.measured.sigma_theta > 0.0)) {
    throw std::invalid_argument("plane factor sigmas must be > 0");
  }
  plane_factors_.push_back(f);
}

void FactorGraph::set_estimates(std::vector<Pose2> poses, std::vector<PlaneParams> planes) {
  if (poses.size() != poses_.size() || planes.size() != planes_.size()) {
    throw std::invalid_argument("set_estimates: node count mismatch");
  }
  poses_ = std::move(poses);
  planes_ = std::move(planes);
}

double FactorGraph::cost() const { return linearize(*this, poses_, planes_, false).cost; }

PoseResidual pose_residual(const Pose2& xi, const Pose2& measured) {
  const Pose2 error = measured.inverse().compose(xi);
  return {se2_log(error), se2_log_right_jacobian(error)};
}

PlaneResidual plane_residual(const Pose2& xi, const PlaneParams& plane, double measured_d,
                             double measured_theta) {
  const double local_theta = plane.theta - xi.phi();
  const Eigen::Vector2d n_local = normal_vec(local_theta);
  const Eigen::Vector2d dn_local = normal_vec_derivative(local_theta);
  const Eigen::Vector2d n_global = normal_vec(plane.theta);
  const Eigen::Vector2d dn_global = normal_vec_derivative(plane.theta);
  const Eigen::Vector2d x = xi.translation();

  PlaneResidual out;
  out.residual.head<2>() = n_local - normal_vec(measured_theta);
  out.residual(2) = (plane.d - x.dot(n_global)) - measured_d;

  out.jacobian_pose.setZero();
  out.jacobian_pose.block<2, 1>(0, 2) = -dn_local;
  out.jacobian_pose.block<1, 2>(2, 0) = -n_local.transpose();

  out.jacobian_plane.setZero();
  out.jacobian_plane.block<2, 1>(0, 1) = dn_local;
  out.jacobian_plane(2, 0) = 1.0;
  out.jacobian_plane(2, 1) = -x.dot(dn_global);
  return out;
}

Eigen::Matrix3d plane_covariance(double sigma_theta, double sigma_d, double theta_tilde,
                                 double regularization) {
  if (!(sigma_theta > 0.0 && sigma_d > 0.0)) {
    throw std::invalid_argument("plane_covariance: sigmas must be > 0");
  }
  const Eigen::Vector2d dn = normal_vec_derivative(theta_tilde);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  cov.topLeftCorner<2, 2>() = sigma_theta * sigma_theta * dn * dn.transpose();
  cov(2, 2) = sigma_d * sigma_d;
  cov.diagonal().array() += regularization;
  return cov;
}

double association_loss(const PlaneParams& a, const PlaneParams& b) {
  return (a.normal_point() - b.normal_point()).norm();
}

std::optional<std::size_t> associate(const PlaneParams& candidate,
                                     std::span<const PlaneParams> existing, double threshold) {
  std::optional<std::size_t> best;
  double best_loss = threshold;
  for (std::size_t j = 0; j < existing.size(); ++j) {
    const double loss = association_loss(candidate, existing[j]);
    if (loss < best_loss) {
      best = j;
      best_loss = loss;
    }
  }
  return best;
}

SolveResult solve(const FactorGraph& graph, const SolveOptions& opts) {
  if (graph.pose_factors().empty()) {
    throw SolverError("solve: gauge is not fixed", "no pose factor");
  }
  const auto n_vars = static_cast<Eigen::Index>(3 * graph.poses().size() + 2 * graph.planes().size());

  SolveResult result;
  result.poses = graph.poses();
  result.planes = graph.planes();

  Linearized lin = linearize(graph, result.poses, result.planes, true);
  result.cost_history.push_back(lin.cost);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    Eigen::SparseMatrix<double> jac(lin.residual.size(), n_vars);
    jac.setFromTriplets(lin.jacobian.begin(), lin.jacobian.end());
    const Eigen::SparseMatrix<double> hessian = Eigen::SparseMatrix<double>(jac.transpose() * jac);
    const Eigen::VectorXd gradient = jac.transpose() * lin.residual;

    // The pattern can change between iterates, so analyze every time.
    ldlt.compute(hessian);
    const Eigen::VectorXd pivots = ldlt.vectorD();
    const double scale = std::max(1.0, pivots.cwiseAbs().maxCoeff());
    Eigen::Index bad = -1;
    for (Eigen::Index i = 0; i < pivots.size(); ++i) {
      if (!(pivots(i) > 1e-10 * scale)) {
        bad = i;
        break;
      }
    }
    if (ldlt.info() != Eigen::Success || bad >= 0) {
      Eigen::Index original = 0;
      if (bad >= 0) {
        const auto& perm = ldlt.permutationP().indices();
        for (Eigen::Index j = 0; j < perm.size(); ++j) {
          if (perm(j) == bad) original = j;
        }
      }
      throw SolverError("solve: singular normal equations", describe_variable(graph, original));
    }
    const Eigen::VectorXd step = ldlt.solve(-gradient);

    // Step halving keeps accepted iterates non-increasing in cost.
    double alpha = 1.0;
    bool accepted = false;
    std::vector<Pose2> trial_poses;
    std::vector<PlaneParams> trial_planes;
    Linearized trial;
    for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
      trial_poses = result.poses;
      trial_planes = result.planes;
      for (std::size_t i = 0; i < trial_poses.size(); ++i) {
        trial_poses[i] = pose_oplus(trial_poses[i],
                                    alpha * step.segment<3>(static_cast<Eigen::Index>(3 * i)));
      }
      for (std::size_t j = 0; j < trial_planes.size(); ++j) {
        const Eigen::Index o = plane_offset(graph, j);
        trial_planes[j] = retract_plane(trial_planes[j], alpha * step(o), alpha * step(o + 1));
      }
      trial = linearize(graph, trial_poses, trial_planes, true);
      if (trial.cost <= lin.cost) {
        accepted = true;
        break;
      }
    }
    result.iterations = iter + 1;
    if (!accepted) {
      result.converged = true;
      break;
    }
    result.poses = std::move(trial_poses);
    result.planes = std::move(trial_planes);
    lin = std::move(trial);
    result.cost_history.push_back(lin.cost);
    if (alpha * step.norm() < opts.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::optional<AssociationRecord> IncrementalMapper::add_frame(
    std::size_t frame, const Pose2& pose_estimate, const std::optional<PlaneMeasurement>& wall) {
  const std::size_t pose = graph_.add_pose(pose_estimate);
  graph_.add_pose_factor({pose, pose_estimate, opts_.pose_sigma});

  std::optional<AssociationRecord> record;
  if (wall) {
    const PlaneParams candidate =
        global_plane_params(pose_estimate, PlaneParams::local(wall->d, wall->theta));
    AssociationRecord rec;
    rec.frame = frame;
    if (const auto match = associate(candidate, graph_.planes(), opts_.association_threshold)) {
      rec.plane = *match;
      rec.loss = association_loss(candidate, graph_.planes()[*match]);
    } else {
      rec.plane = graph_.add_plane(candidate);
      rec.created = true;
    }
    graph_.add_plane_factor({pose, rec.plane, *wall});
    associations_.push_back(rec);
    record = rec;
  }

  SolveResult sol = solve(graph_, opts_.solve);
  last_cost_ = sol.final_cost();
  graph_.set_estimates(std::move(sol.poses), std::move(sol.planes));
  return record;
}

}  // namespace echomap
