#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace lifi {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into [0, 360).
inline double wrap_360(double deg) {
  double w = deg - 360.0 * std::floor(deg / 360.0);
  if (w >= 360.0) w = 0.0;
  return w;
}

/// Wraps an angle into [-180, 180).
inline double wrap_180(double deg) { return wrap_360(deg + 180.0) - 180.0; }

/// Absolute angular difference on the circle, in [0, 180].
inline double angle_distance(double a_deg, double b_deg) {
  return std::abs(wrap_180(a_deg - b_deg));
}

/// Position in metres (room frame) plus yaw/pitch/roll in degrees.
///   alpha (yaw) in [0, 360), beta (pitch) in [-180, 180), gamma (roll) in [-90, 90).
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  Vec3 position() const { return {x, y, z}; }
  bool operator==(const Pose&) const = default;
};

inline bool angles_in_range(const Pose& p) {
  return p.alpha >= 0.0 && p.alpha < 360.0 && p.beta >= -180.0 && p.beta < 180.0 &&
         p.gamma >= -90.0 && p.gamma < 90.0;
}

inline Mat3 rot_z(double deg) {
  const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

inline Mat3 rot_x(double deg) {
  const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double deg) {
  const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

/// Device-to-room rotation R = Rz(yaw) * Rx(pitch) * Ry(roll).
inline Mat3 rotation_matrix(double alpha, double beta, double gamma) {
  return rot_z(alpha) * rot_x(beta) * rot_y(gamma);
}

inline Mat3 rotation_matrix(const Pose& p) { return rotation_matrix(p.alpha, p.beta, p.gamma); }

/// Screen normal of the UE in room coordinates. At rest the screen faces the ceiling.
inline Vec3 ue_normal(const Pose& p) { return rotation_matrix(p) * Vec3::UnitZ(); }

}  // namespace lifi
