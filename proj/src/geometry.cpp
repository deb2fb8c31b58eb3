#include "echomap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace echomap {

namespace {

constexpr double kSmallAngle = 1e-6;

// V(w) = a(w) I + b(w) J with J the 90 degree rotation generator.
void v_coefficients(double w, double& a, double& b) {
  if (std::abs(w) < kSmallAngle) {
    a = 1.0 - w * w / 6.0;
    b = w / 2.0 - w * w * w / 24.0;
  } else {
    const double h = std::sin(0.5 * w);
    a = std::sin(w) / w;
    b = 2.0 * h * h / w;
  }
}

// V(w)^-1 = c(w) I - (w/2) J, c(w) = (w/2) cot(w/2).
double v_inverse_coefficient(double w) {
  if (std::abs(w) < kSmallAngle) {
    return 1.0 - w * w / 12.0;
  }
  return 0.5 * w / std::tan(0.5 * w);
}

double v_inverse_coefficient_derivative(double w) {
  // The closed form cancels to O(eps / w), so switch to the series much earlier.
  if (std::abs(w) < 1e-3) {
    return -w / 6.0 - w * w * w / 180.0;
  }
  const double s = std::sin(0.5 * w);
  return 0.5 * std::cos(0.5 * w) / s - 0.25 * w / (s * s);
}

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

}  // namespace

double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double wrap_angle(double a) {
  double r = normalize_angle(a);
  if (r > kPi) r -= kTwoPi;
  return r;
}

Eigen::Vector2d normal_vec(double theta) { return {std::cos(theta), std::sin(theta)}; }

Eigen::Vector2d normal_vec_derivative(double theta) { return {-std::sin(theta), std::cos(theta)}; }

Eigen::Matrix2d rotation(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Pose2 Pose2::compose(const Pose2& other) const {
  const Eigen::Vector2d t = translation() + rotation() * other.translation();
  return {t, phi_ + other.phi_};
}

Pose2 Pose2::inverse() const {
  const Eigen::Vector2d t = -(rotation().transpose() * translation());
  return {t, -phi_};
}

Eigen::Matrix3d Pose2::matrix() const {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.topLeftCorner<2, 2>() = rotation();
  m.topRightCorner<2, 1>() = translation();
  return m;
}

Pose2 se2_exp(const Tangent2& tau) {
  const double w = tau.z();
  double a = 0.0;
  double b = 0.0;
  v_coefficients(w, a, b);
  const Eigen::Vector2d rho = tau.head<2>();
  const Eigen::Vector2d t = a * rho + b * perp(rho);
  return {t, w};
}

Tangent2 se2_log(const Pose2& pose) {
  const double w = wrap_angle(pose.phi());
  const Eigen::Vector2d t = pose.translation();
  const Eigen::Vector2d rho = v_inverse_coefficient(w) * t - 0.5 * w * perp(t);
  return {rho.x(), rho.y(), w};
}

Pose2 pose_oplus(const Pose2& pose, const Tangent2& tau) { return pose.compose(se2_exp(tau)); }

Tangent2 pose_ominus(const Pose2& a, const Pose2& b) { return se2_log(b.inverse().compose(a)); }

Eigen::Matrix3d se2_log_right_jacobian(const Pose2& error) {
  const double w = wrap_angle(error.phi());
  const Eigen::Vector2d t = error.translation();
  const double c = v_inverse_coefficient(w);
  Eigen::Matrix2d v_inv;
  v_inv << c, 0.5 * w, -0.5 * w, c;

  Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
  jac.topLeftCorner<2, 2>() = v_inv * rotation(w);
  jac.topRightCorner<2, 1>() = v_inverse_coefficient_derivative(w) * t - 0.5 * perp(t);
  jac(2, 2) = 1.0;
  return jac;
}

PlaneParams PlaneParams::global(double d, double theta) {
  return {d, normalize_angle(theta), PlaneFrame::Global};
}

PlaneParams PlaneParams::local(double d, double theta) {
  return {d, normalize_angle(theta), PlaneFrame::Local};
}

LocalPlane local_plane_params(const Pose2& pose, const PlaneParams& global_plane) {
  if (global_plane.frame != PlaneFrame::Global) {
    throw std::invalid_argument("local_plane_params: plane must be in the global frame");
  }
  const double d = global_plane.d - pose.translation().dot(normal_vec(global_plane.theta));
  LocalPlane out;
  out.signed_d = d;
  out.behind = d < 0.0;
  out.plane = PlaneParams::local(std::max(d, 0.0), global_plane.theta - pose.phi());
  return out;
}

PlaneParams global_plane_params(const Pose2& pose, const PlaneParams& local_plane) {
  const double theta = normalize_angle(local_plane.theta + pose.phi());
  double d = local_plane.d + pose.translation().dot(normal_vec(theta));
  double t = theta;
  if (d < 0.0) {
    d = -d;
    t = normalize_angle(theta + kPi);
  }
  return PlaneParams::global(d, t);
}

MicGeometry::MicGeometry(const std::vector<Eigen::Vector2d>& positions) {
  if (positions.empty()) {
    throw std::invalid_argument("MicGeometry: at least one microphone is required");
  }
  mics_.reserve(positions.size());
  for (const auto& p : positions) {
    Microphone m;
    m.position = p;
    m.ell = p.norm();
    m.bearing = m.ell > 0.0 ? normalize_angle(std::atan2(p.y(), p.x())) : 0.0;
    mics_.push_back(m);
  }
}

double MicGeometry::max_ell() const {
  double m = 0.0;
  for (const auto& mic : mics_) m = std::max(m, mic.ell);
  return m;
}

MicGeometry MicGeometry::first(std::size_t k) const {
  if (k == 0 || k > mics_.size()) {
    throw std::invalid_argument("MicGeometry::first: k must be in [1, size]");
  }
  std::vector<Eigen::Vector2d> positions;
  for (std::size_t i = 0; i < k; ++i) positions.push_back(mics_[i].position);
  return MicGeometry(positions);
}

double reflected_path_length(double mic_ell, double mic_bearing, const PlaneParams& local_plane) {
  const double d = local_plane.d;
  const double sq = mic_ell * mic_ell + 4.0 * d * d -
                    4.0 * d * mic_ell * std::cos(mic_bearing - local_plane.theta);
  return std::sqrt(std::max(sq, 0.0));
}

std::optional<double> distance_from_path(double r, double local_angle, double mic_ell,
                                         double mic_bearing) {
  const double c = std::cos(mic_bearing - local_angle);
  const double disc = mic_ell * mic_ell * (c * c - 1.0) + r * r;
  if (disc < 0.0) return std::nullopt;
  return 0.5 * (mic_ell * c + std::sqrt(disc));
}

}  // namespace echomap
