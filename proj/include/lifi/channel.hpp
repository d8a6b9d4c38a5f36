#pragma once

// Indoor optical channel: Lambertian line-of-sight gains, a single-bounce wall
// reflection term, and the uplink reference-signal SNR.

#include <cmath>
#include <string>
#include <vector>

#include "lifi/error.hpp"
#include "lifi/geometry.hpp"

namespace lifi {

/// Optical front-end of one link direction (emitter + detector).
struct LinkParams {
  double half_power_angle_deg = 60.0;  // emitter semi-angle at half power
  double pd_area = 1e-4;               // m^2
  double fov_deg = 85.0;               // detector field of view (half-angle)
  double responsivity = 1.0;           // A/W
  double filter_gain = 1.0;
  double concentrator_gain = 1.0;
};

struct RoomLayout {
  double length = 5.0;
  double width = 5.0;
  double height = 3.0;
  std::vector<Vec3> ap_positions;
  std::vector<Vec3> ap_normals;
  LinkParams downlink;  // AP LED -> UE PD
  LinkParams uplink;    // UE IR-LED -> AP PD
  double noise_psd = 1e-21;  // N0, A^2/Hz
  double bandwidth = 20e6;   // B, Hz
  double dc_bias = 0.5;      // I_DC, A
  double wall_reflectance = 0.8;
  bool nlos_enabled = false;
  double nlos_patch_size = 0.25;  // m

  std::size_t num_aps() const { return ap_positions.size(); }
  double noise_term() const { return noise_psd * bandwidth; }
};

/// LED/PD placement on the handset, in device coordinates relative to the hand point.
struct DeviceGeometry {
  Vec3 offset{0.0, 0.06, 0.0};
};

/// Places rows x cols ceiling APs at the centres of a regular grid, facing down.
inline void place_ap_grid(RoomLayout& room, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("AP grid needs at least one row and column");
  room.ap_positions.clear();
  room.ap_normals.clear();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      room.ap_positions.emplace_back((c + 0.5) * room.length / cols, (r + 0.5) * room.width / rows,
                                     room.height);
      room.ap_normals.emplace_back(0.0, 0.0, -1.0);
    }
  }
}

/// 5 x 5 x 3 m room with a 4 x 4 AP lattice.
inline RoomLayout default_room() {
  RoomLayout room;
  place_ap_grid(room, 4, 4);
  return room;
}

inline void validate(const RoomLayout& room) {
  if (room.length <= 0 || room.width <= 0 || room.height <= 0)
    throw ConfigError("room dimensions must be positive");
  if (room.ap_positions.empty()) throw ConfigError("room needs at least one AP");
  if (room.ap_positions.size() != room.ap_normals.size())
    throw ConfigError("AP position/normal count mismatch");
  for (const auto& p : room.ap_positions)
    if (std::abs(p.z() - room.height) > 1e-12) throw ConfigError("APs must sit on the ceiling");
  for (const LinkParams* lp : {&room.downlink, &room.uplink}) {
    if (!(lp->half_power_angle_deg > 0 && lp->half_power_angle_deg < 90))
      throw ConfigError("half_power_angle must lie in (0, 90) deg");
    if (!(lp->fov_deg > 0 && lp->fov_deg <= 90)) throw ConfigError("fov must lie in (0, 90] deg");
    if (!(lp->pd_area > 0)) throw ConfigError("pd_area must be positive");
  }
  if (!(room.wall_reflectance >= 0 && room.wall_reflectance < 1))
    throw ConfigError("wall_reflectance must lie in [0, 1)");
  if (!(room.noise_psd > 0 && room.bandwidth > 0)) throw ConfigError("N0 and B must be positive");
  if (room.nlos_enabled && !(room.nlos_patch_size > 0))
    throw ConfigError("nlos_patch_size must be positive");
}

/// Lambertian order m = -ln 2 / ln cos(half-power angle).
inline double lambertian_order(double half_power_angle_deg) {
  return -std::log(2.0) / std::log(std::cos(deg2rad(half_power_angle_deg)));
}

inline constexpr double kMinDistance = 1e-3;

/// Line-of-sight DC gain between an emitter and a detector. Zero when the detector
/// lies behind the emitter, the emitter lies behind the detector, or the incidence
/// angle exceeds the field of view.
inline double los_gain(const Vec3& tx_pos, const Vec3& tx_normal, const Vec3& rx_pos,
                       const Vec3& rx_normal, double half_power_angle_deg, double pd_area,
                       double fov_deg, double responsivity, double filter_gain,
                       double conc_gain) {
  const Vec3 v = rx_pos - tx_pos;
  const double d = v.norm();
  if (d < kMinDistance) throw GeometryError("emitter and detector coincide (d < 1 mm)");
  const double cos_phi = tx_normal.dot(v) / d;
  const double cos_psi = -rx_normal.dot(v) / d;
  if (cos_phi <= 0.0 || cos_psi <= 0.0) return 0.0;
  // Compare in angle space so that fov = 90 deg admits every forward ray.
  if (std::acos(std::min(cos_psi, 1.0)) > deg2rad(fov_deg)) return 0.0;
  const double m = lambertian_order(half_power_angle_deg);
  return responsivity * filter_gain * conc_gain * (m + 1.0) * pd_area / (2.0 * kPi * d * d) *
         std::pow(cos_phi, m) * cos_psi;
}

inline double los_gain(const Vec3& tx_pos, const Vec3& tx_normal, const Vec3& rx_pos,
                       const Vec3& rx_normal, const LinkParams& lp) {
  return los_gain(tx_pos, tx_normal, rx_pos, rx_normal, lp.half_power_angle_deg, lp.pd_area,
                  lp.fov_deg, lp.responsivity, lp.filter_gain, lp.concentrator_gain);
}

/// First-reflection gain off the four vertical walls. Each wall is cut into square
/// patches of side nlos_patch_size; a patch collects power as a bare 90-degree-FOV
/// detector and re-emits it as an order-1 Lambertian source scaled by the reflectance.
inline double nlos_first_reflection_gain(const Vec3& tx_pos, const Vec3& tx_normal,
                                         const Vec3& rx_pos, const Vec3& rx_normal,
                                         const LinkParams& lp, const RoomLayout& room) {
  const double rho = room.wall_reflectance;
  if (rho == 0.0) return 0.0;
  const double step = room.nlos_patch_size;
  const double m_tx = lambertian_order(lp.half_power_angle_deg);
  const double m_wall = 1.0;

  struct Wall {
    Vec3 origin, u, v, normal;
    double u_len, v_len;
  };
  const double L = room.length, W = room.width, H = room.height;
  const Wall walls[] = {
      {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {0, 1, 0}, L, H},
      {{0, W, 0}, {1, 0, 0}, {0, 0, 1}, {0, -1, 0}, L, H},
      {{0, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}, W, H},
      {{L, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, W, H},
  };

  double total = 0.0;
  for (const auto& wall : walls) {
    const int nu = std::max(1, static_cast<int>(std::lround(wall.u_len / step)));
    const int nv = std::max(1, static_cast<int>(std::lround(wall.v_len / step)));
    const double du = wall.u_len / nu, dv = wall.v_len / nv;
    const double area = du * dv;
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        const Vec3 c = wall.origin + (i + 0.5) * du * wall.u + (j + 0.5) * dv * wall.v;
        const Vec3 a = c - tx_pos;
        const Vec3 b = rx_pos - c;
        const double d1 = a.norm(), d2 = b.norm();
        if (d1 < kMinDistance || d2 < kMinDistance) continue;
        const double cos_phi = tx_normal.dot(a) / d1;
        const double cos_in = -wall.normal.dot(a) / d1;
        const double cos_out = wall.normal.dot(b) / d2;
        const double cos_psi = -rx_normal.dot(b) / d2;
        if (cos_phi <= 0 || cos_in <= 0 || cos_out <= 0 || cos_psi <= 0) continue;
        if (std::acos(std::min(cos_psi, 1.0)) > deg2rad(lp.fov_deg)) continue;
        const double to_patch =
            (m_tx + 1.0) * area / (2.0 * kPi * d1 * d1) * std::pow(cos_phi, m_tx) * cos_in;
        const double to_rx = lp.responsivity * lp.filter_gain * lp.concentrator_gain *
                             (m_wall + 1.0) * lp.pd_area / (2.0 * kPi * d2 * d2) * cos_out *
                             cos_psi;
        total += to_patch * rho * to_rx;
      }
    }
  }
  return total;
}

/// Detector position and normal of the handset for a given pose.
struct UeFrontEnd {
  Vec3 position;
  Vec3 normal;
};

inline void check_inside(const Pose& p, const RoomLayout& room) {
  if (p.x < 0 || p.x > room.length || p.y < 0 || p.y > room.width || p.z < 0 ||
      p.z > room.height)
    throw GeometryError("pose outside the room");
}

inline UeFrontEnd ue_front_end(const Pose& pose, const DeviceGeometry& geom) {
  const Mat3 r = rotation_matrix(pose);
  return {pose.position() + r * geom.offset, r * Vec3::UnitZ()};
}

using ChannelVector = Eigen::VectorXd;

/// h_k: gain from every AP LED to the UE photodiode.
inline ChannelVector downlink_channel(const Pose& pose, const RoomLayout& room,
                                      const DeviceGeometry& geom) {
  check_inside(pose, room);
  const UeFrontEnd ue = ue_front_end(pose, geom);
  ChannelVector h(room.num_aps());
  for (std::size_t i = 0; i < room.num_aps(); ++i) {
    const Vec3& ap = room.ap_positions[i];
    const Vec3& n = room.ap_normals[i];
    double g = los_gain(ap, n, ue.position, ue.normal, room.downlink);
    if (room.nlos_enabled)
      g += nlos_first_reflection_gain(ap, n, ue.position, ue.normal, room.downlink, room);
    h[i] = g;
  }
  return h;
}

/// g_k: gain from the UE IR-LED (co-located with its PD) to every AP photodiode.
inline ChannelVector uplink_channel(const Pose& pose, const RoomLayout& room,
                                    const DeviceGeometry& geom) {
  check_inside(pose, room);
  const UeFrontEnd ue = ue_front_end(pose, geom);
  ChannelVector g(room.num_aps());
  for (std::size_t i = 0; i < room.num_aps(); ++i) {
    const Vec3& ap = room.ap_positions[i];
    const Vec3& n = room.ap_normals[i];
    double v = los_gain(ue.position, ue.normal, ap, n, room.uplink);
    if (room.nlos_enabled)
      v += nlos_first_reflection_gain(ue.position, ue.normal, ap, n, room.uplink, room);
    g[i] = v;
  }
  return g;
}

/// Linear uplink SNR of the DC reference signal when the band is split over `users` UEs:
/// g^2 I_DC^2 / (N0 B / K).
inline double uplink_snr(double gain, double dc_bias, int users, double noise_psd,
                         double bandwidth) {
  return gain * gain * dc_bias * dc_bias * users / (noise_psd * bandwidth);
}

inline Eigen::VectorXd uplink_snr(const ChannelVector& g, const RoomLayout& room, int users) {
  Eigen::VectorXd r(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    r[i] = uplink_snr(g[i], room.dc_bias, users, room.noise_psd, room.bandwidth);
  return r;
}

}  // namespace lifi
