#pragma once

// Planar geometry shared by the whole pipeline: SE(2) poses, wall planes
// parameterized by (distance, normal angle), and the direct/reflected path
// relations between a sound source at the body origin and its microphones.

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace echomap {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Maps any angle into [0, 2pi).
double normalize_angle(double a);

/// Maps any angle into (-pi, pi].
double wrap_angle(double a);

/// Unit normal (cos t, sin t).
Eigen::Vector2d normal_vec(double theta);

/// Derivative of normal_vec with respect to theta: (-sin t, cos t).
Eigen::Vector2d normal_vec_derivative(double theta);

Eigen::Matrix2d rotation(double phi);

/// Robot pose in the global frame. The heading is kept in [0, 2pi).
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double phi) : x_(x), y_(y), phi_(normalize_angle(phi)) {}
  Pose2(const Eigen::Vector2d& t, double phi) : Pose2(t.x(), t.y(), phi) {}

  static Pose2 identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double phi() const { return phi_; }
  Eigen::Vector2d translation() const { return {x_, y_}; }
  Eigen::Matrix2d rotation() const { return echomap::rotation(phi_); }

  /// this * other
  Pose2 compose(const Pose2& other) const;
  Pose2 inverse() const;
  Eigen::Matrix3d matrix() const;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double phi_ = 0.0;
};

/// Tangent vector ordering is (rho_x, rho_y, omega).
using Tangent2 = Eigen::Vector3d;

Pose2 se2_exp(const Tangent2& tau);
Tangent2 se2_log(const Pose2& pose);

/// pose * exp(tau)
Pose2 pose_oplus(const Pose2& pose, const Tangent2& tau);

/// log(b^-1 * a), so that pose_oplus(b, pose_ominus(a, b)) == a.
Tangent2 pose_ominus(const Pose2& a, const Pose2& b);

/// Jacobian of log(E * exp(tau)) with respect to tau at tau = 0.
Eigen::Matrix3d se2_log_right_jacobian(const Pose2& error);

enum class PlaneFrame { Global, Local };

/// A wall seen either from the global origin or from a robot pose.
struct PlaneParams {
  double d = 0.0;
  double theta = 0.0;
  PlaneFrame frame = PlaneFrame::Global;

  static PlaneParams global(double d, double theta);
  static PlaneParams local(double d, double theta);

  /// Normal point n(theta) * d used by data association.
  Eigen::Vector2d normal_point() const { return d * normal_vec(theta); }
};

/// Local view of a global plane. `behind` is set when the pose has crossed
/// the plane, in which case `signed_d` is negative and `plane.d` is clamped
/// to zero.
struct LocalPlane {
  PlaneParams plane;
  double signed_d = 0.0;
  bool behind = false;
};

LocalPlane local_plane_params(const Pose2& pose, const PlaneParams& global_plane);

/// Inverse of local_plane_params for a plane observed in front of the pose.
PlaneParams global_plane_params(const Pose2& pose, const PlaneParams& local_plane);

struct Microphone {
  Eigen::Vector2d position;
  double ell = 0.0;      // direct path length to the source
  double bearing = 0.0;  // angle of position, in [0, 2pi)
};

/// Microphone positions in the body frame, origin at the sound source.
class MicGeometry {
 public:
  explicit MicGeometry(const std::vector<Eigen::Vector2d>& positions);

  std::size_t size() const { return mics_.size(); }
  const Microphone& operator[](std::size_t i) const { return mics_[i]; }
  auto begin() const { return mics_.begin(); }
  auto end() const { return mics_.end(); }

  double max_ell() const;

  /// Geometry restricted to the first `k` microphones.
  MicGeometry first(std::size_t k) const;

 private:
  std::vector<Microphone> mics_;
};

/// Reflected path length r = sqrt(l^2 + 4d^2 - 4 d l cos(bearing - theta)).
double reflected_path_length(double mic_ell, double mic_bearing, const PlaneParams& local_plane);

/// Wall distance that produces reflected path `r` at the given local angle.
/// Empty when the discriminant is negative.
std::optional<double> distance_from_path(double r, double local_angle, double mic_ell,
                                         double mic_bearing);

}  // namespace echomap
