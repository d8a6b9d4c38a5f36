#pragma once

// Orientation-based random waypoint mobility: a random-waypoint walk on the floor
// plane with a fresh random handset orientation drawn at every time slot.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lifi/channel.hpp"
#include "lifi/error.hpp"
#include "lifi/geometry.hpp"
#include "lifi/rng.hpp"

namespace lifi {

struct MobilityConfig {
  double speed = 1.0;          // m/s; 0 freezes the user in place
  double slot_duration = 0.5;  // s
  double ue_height = 1.2;      // m
  double wall_margin = 0.1;    // m
  double yaw_jitter_std = 10.0;
  double pitch_mean = 40.0;
  double pitch_std = 7.0;
  double roll_mean = 0.0;
  double roll_std = 4.0;
  double pause_probability = 0.0;

  double step_length() const { return speed * slot_duration; }
};

using Trajectory = std::vector<Pose>;

inline void validate(const MobilityConfig& c, const RoomLayout& room) {
  if (!(c.speed >= 0)) throw ConfigError("mobility.speed must be >= 0");
  if (!(c.slot_duration > 0)) throw ConfigError("mobility.slot_duration must be positive");
  if (!(c.ue_height >= 0 && c.ue_height <= room.height))
    throw ConfigError("mobility.ue_height must lie within the room height");
  if (!(c.pause_probability >= 0 && c.pause_probability < 1))
    throw ConfigError("mobility.pause_probability must lie in [0, 1)");
  if (!(c.wall_margin >= 0 && 2 * c.wall_margin < std::min(room.length, room.width)))
    throw ConfigError("mobility.wall_margin leaves no walkable floor");
  if (c.yaw_jitter_std < 0 || c.pitch_std < 0 || c.roll_std < 0)
    throw ConfigError("mobility standard deviations must be >= 0");
}

struct Orientation {
  double alpha, beta, gamma;
};

namespace detail {

inline double gaussian(Rng& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  std::normal_distribution<double> dist(mean, stddev);
  return dist(rng);
}

// Clamp into the half-open interval [lo, hi).
inline double clamp_half_open(double v, double lo, double hi) {
  return std::clamp(v, lo, std::nextafter(hi, lo));
}

inline double heading_deg(const Vec3& from, const Vec3& to) {
  const double dx = to.x() - from.x(), dy = to.y() - from.y();
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return wrap_360(rad2deg(std::atan2(dy, dx)));
}

}  // namespace detail

/// Orientation for one slot: yaw follows the walking heading with Gaussian jitter,
/// pitch and roll are clamped Gaussians.
inline Orientation step_orientation(Rng& rng, double heading, const MobilityConfig& c) {
  const double a = wrap_360(detail::gaussian(rng, heading, c.yaw_jitter_std));
  const double b = detail::clamp_half_open(detail::gaussian(rng, c.pitch_mean, c.pitch_std),
                                           -180.0, 180.0);
  const double g =
      detail::clamp_half_open(detail::gaussian(rng, c.roll_mean, c.roll_std), -90.0, 90.0);
  return {a, b, g};
}

inline Trajectory sample_trajectory(std::uint64_t seed, std::size_t n_steps,
                                    const MobilityConfig& c, const RoomLayout& room) {
  if (n_steps == 0) throw ConfigError("trajectory needs at least one step");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(c.wall_margin, room.length - c.wall_margin);
  std::uniform_real_distribution<double> uy(c.wall_margin, room.width - c.wall_margin);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Vec3 pos(ux(rng), uy(rng), c.ue_height);
  Vec3 waypoint(ux(rng), uy(rng), c.ue_height);
  double heading = detail::heading_deg(pos, waypoint);
  const double step = c.step_length();

  Trajectory out;
  out.reserve(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Orientation o = step_orientation(rng, heading, c);
    out.push_back({pos.x(), pos.y(), pos.z(), o.alpha, o.beta, o.gamma});
    if (i + 1 == n_steps) break;

    if (c.pause_probability > 0.0 && u01(rng) < c.pause_probability) continue;
    if (step == 0.0) continue;
    const Vec3 to_go = waypoint - pos;
    const double dist = to_go.norm();
    if (dist <= step) {
      pos = waypoint;
      do {
        waypoint = Vec3(ux(rng), uy(rng), c.ue_height);
      } while ((waypoint - pos).norm() < 1e-9);
      heading = detail::heading_deg(pos, waypoint);
    } else {
      pos += to_go * (step / dist);
    }
  }
  return out;
}

}  // namespace lifi
