#include <gtest/gtest.h>

#include "lifi/channel.hpp"

using namespace lifi;

namespace {

const Vec3 kDown(0, 0, -1);
const Vec3 kUp(0, 0, 1);

LinkParams unit_link() {
  LinkParams lp;
  lp.half_power_angle_deg = 60;
  lp.pd_area = 1e-4;
  lp.fov_deg = 85;
  return lp;
}

// Hand evaluation of the Lambertian closed form.
double lambertian_reference(double m, double area, double d, double cos_phi, double cos_psi) {
  return (m + 1) * area / (2 * kPi * d * d) * std::pow(cos_phi, m) * cos_psi;
}

}  // namespace

TEST(Lambertian, OrderOneAtSixtyDegrees) { EXPECT_NEAR(lambertian_order(60), 1.0, 1e-12); }

TEST(LosGain, FacingPairAtTwoMetres) {
  const double g = los_gain({0, 0, 3}, kDown, {0, 0, 1}, kUp, unit_link());
  EXPECT_NEAR(g, 7.9577e-6, 1e-9);
  EXPECT_NEAR(g, 2e-4 / (2 * kPi * 4), 1e-18);
}

TEST(LosGain, OffAxisMatchesClosedForm) {
  const Vec3 tx(1, 2, 3), rx(2.5, 1, 1.2);
  const Vec3 v = rx - tx;
  const double d = v.norm();
  const double expected = lambertian_reference(1.0, 1e-4, d, kDown.dot(v) / d, -kUp.dot(v) / d);
  EXPECT_NEAR(los_gain(tx, kDown, rx, kUp, unit_link()), expected, 1e-18);
}

TEST(LosGain, ZeroJustOutsideFov) {
  LinkParams lp = unit_link();
  lp.fov_deg = 30;
  // Receiver normal tilted 31 deg away from the emitter direction.
  const double t = deg2rad(31);
  const Vec3 n(std::sin(t), 0, std::cos(t));
  EXPECT_EQ(los_gain({0, 0, 3}, kDown, {0, 0, 1}, n, lp), 0.0);
  const double t2 = deg2rad(29);
  EXPECT_GT(los_gain({0, 0, 3}, kDown, {0, 0, 1}, Vec3(std::sin(t2), 0, std::cos(t2)), lp), 0.0);
}

TEST(LosGain, HalvingCosPsiHalvesGain) {
  const double full = los_gain({0, 0, 3}, kDown, {0, 0, 1}, kUp, unit_link());
  const Vec3 tilted(std::sin(deg2rad(60)), 0, 0.5);
  EXPECT_NEAR(los_gain({0, 0, 3}, kDown, {0, 0, 1}, tilted, unit_link()), full / 2, 1e-18);
}

TEST(LosGain, ZeroBehindEitherDevice) {
  EXPECT_EQ(los_gain({0, 0, 3}, kDown, {0, 0, 1}, kDown, unit_link()), 0.0);
  EXPECT_EQ(los_gain({0, 0, 3}, kUp, {0, 0, 1}, kUp, unit_link()), 0.0);
}

TEST(LosGain, CoincidentPositionsAreAnError) {
  EXPECT_THROW(los_gain({1, 1, 1}, kDown, {1, 1, 1.0005}, kUp, unit_link()), GeometryError);
}

TEST(LosGain, DecreasesWithDistanceAtFixedAngles) {
  double prev = 1e9;
  for (double d = 0.5; d < 5; d += 0.25) {
    const double g = los_gain({0, 0, 3}, kDown, {0, 0, 3 - d}, kUp, unit_link());
    EXPECT_LT(g, prev);
    prev = g;
  }
}

TEST(LosGain, ScalesWithFrontEndGains) {
  LinkParams lp = unit_link();
  const double base = los_gain({0, 0, 3}, kDown, {0.5, 0, 1}, kUp, lp);
  lp.responsivity = 0.5;
  lp.filter_gain = 2;
  lp.concentrator_gain = 3;
  EXPECT_NEAR(los_gain({0, 0, 3}, kDown, {0.5, 0, 1}, kUp, lp), 3 * base, 1e-18);
}

namespace {

RoomLayout nlos_room() {
  RoomLayout room = default_room();
  room.nlos_enabled = true;
  return room;
}

}  // namespace

TEST(Nlos, ZeroReflectanceGivesZero) {
  RoomLayout room = nlos_room();
  room.wall_reflectance = 0;
  EXPECT_EQ(nlos_first_reflection_gain({1, 1, 3}, kDown, {2, 3, 1.2}, kUp, room.downlink, room), 0.0);
}

TEST(Nlos, LinearInReflectance) {
  RoomLayout room = nlos_room();
  room.wall_reflectance = 0.3;
  const double a = nlos_first_reflection_gain({1, 1, 3}, kDown, {2, 3, 1.2}, kUp, room.downlink, room);
  room.wall_reflectance = 0.6;
  const double b = nlos_first_reflection_gain({1, 1, 3}, kDown, {2, 3, 1.2}, kUp, room.downlink, room);
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(b, 2 * a, 1e-12 * b);
}

TEST(Nlos, PatchRefinementConverges) {
  RoomLayout room = nlos_room();
  const Vec3 rx_n = Vec3(0.3, -0.4, 0.8).normalized();
  room.nlos_patch_size = 0.5;
  const double coarse = nlos_first_reflection_gain({1.25, 1.25, 3}, kDown, {3, 2, 1.2}, rx_n, room.downlink, room);
  room.nlos_patch_size = 0.25;
  const double fine = nlos_first_reflection_gain({1.25, 1.25, 3}, kDown, {3, 2, 1.2}, rx_n, room.downlink, room);
  EXPECT_LT(std::abs(coarse - fine) / fine, 0.05);
}

TEST(Downlink, UeFacingFloorSeesNothing) {
  const RoomLayout room = default_room();
  const auto h = downlink_channel(Pose{2.5, 2.5, 1.2, 0, 180, 0}, room, DeviceGeometry{});
  EXPECT_EQ(h.size(), 16);
  EXPECT_EQ(h.maxCoeff(), 0.0);
  EXPECT_EQ(uplink_channel(Pose{2.5, 2.5, 1.2, 0, 180, 0}, room, DeviceGeometry{}).maxCoeff(), 0.0);
}

TEST(Downlink, FacingUpUnderApIsBestOrientation) {
  const RoomLayout room = default_room();
  DeviceGeometry geom;
  geom.offset = Vec3::Zero();  // orientation must not move the detector for this sweep
  const Vec3 ap = room.ap_positions[5];
  const double best = downlink_channel(Pose{ap.x(), ap.y(), 1.2, 0, 0, 0}, room, geom)[5];
  for (double a = 0; a < 360; a += 30)
    for (double b = -180; b < 180; b += 10)
      for (double g = -90; g < 90; g += 10)
        EXPECT_LE(downlink_channel(Pose{ap.x(), ap.y(), 1.2, a, b, g}, room, geom)[5], best + 1e-18);
}

TEST(Downlink, NlosNeverDecreasesEntries) {
  RoomLayout room = default_room();
  const Pose p{1.7, 3.1, 1.2, 75, 35, -3};
  const auto los = downlink_channel(p, room, DeviceGeometry{});
  room.nlos_enabled = true;
  const auto both = downlink_channel(p, room, DeviceGeometry{});
  EXPECT_TRUE((both.array() >= los.array()).all());
  EXPECT_GT((both - los).sum(), 0.0);
}

TEST(Downlink, PoseOutsideRoomIsAnError) {
  EXPECT_THROW(downlink_channel(Pose{5.5, 1, 1.2, 0, 0, 0}, default_room(), DeviceGeometry{}),
               GeometryError);
}

TEST(Downlink, EntriesMatchHandEvaluation) {
  const RoomLayout room = default_room();
  const Pose p{2.0, 1.0, 1.2, 120, 30, 5};
  const UeFrontEnd ue = ue_front_end(p, DeviceGeometry{});
  const auto h = downlink_channel(p, room, DeviceGeometry{});
  for (std::size_t i = 0; i < room.num_aps(); ++i) {
    const Vec3 v = ue.position - room.ap_positions[i];
    const double d = v.norm();
    const double cos_phi = kDown.dot(v) / d, cos_psi = -ue.normal.dot(v) / d;
    const double expected = (cos_psi > 0 && std::acos(cos_psi) <= deg2rad(85))
                                ? lambertian_reference(1.0, 1e-4, d, cos_phi, cos_psi)
                                : 0.0;
    EXPECT_NEAR(h[static_cast<Eigen::Index>(i)], expected, 1e-18);
  }
}

TEST(Uplink, ReciprocalUnderSymmetricParameters) {
  RoomLayout room = default_room();
  room.downlink.fov_deg = 90;
  room.uplink = room.downlink;
  const Pose p{3.3, 1.4, 1.2, 200, 25, 8};
  const auto h = downlink_channel(p, room, DeviceGeometry{});
  const auto g = uplink_channel(p, room, DeviceGeometry{});
  EXPECT_TRUE(h.isApprox(g, 1e-12));
}

TEST(UplinkSnr, HandArithmetic) {
  EXPECT_NEAR(uplink_snr(1e-6, 0.5, 1, 1e-21, 2e7), 12.5, 1e-12);
  EXPECT_EQ(uplink_snr(0.0, 0.5, 1, 1e-21, 2e7), 0.0);
}

TEST(UplinkSnr, QuadraticInBiasAndGainLinearInUsers) {
  const double base = uplink_snr(3e-6, 0.5, 2, 1e-21, 2e7);
  EXPECT_NEAR(uplink_snr(3e-6, 1.0, 2, 1e-21, 2e7), 4 * base, 1e-12 * base);
  EXPECT_NEAR(uplink_snr(6e-6, 0.5, 2, 1e-21, 2e7), 4 * base, 1e-12 * base);
  EXPECT_NEAR(uplink_snr(3e-6, 0.5, 6, 1e-21, 2e7), 3 * base, 1e-12 * base);
}

TEST(Layout, ValidationRejectsBadParameters) {
  RoomLayout room = default_room();
  EXPECT_NO_THROW(validate(room));
  room.downlink.fov_deg = 95;
  EXPECT_THROW(validate(room), ConfigError);
  room = default_room();
  room.wall_reflectance = 1.0;
  EXPECT_THROW(validate(room), ConfigError);
}

TEST(Layout, GridPlacesApsAtCellCentres) {
  const RoomLayout room = default_room();
  ASSERT_EQ(room.num_aps(), 16u);
  EXPECT_NEAR(room.ap_positions[0].x(), 0.625, 1e-15);
  EXPECT_NEAR(room.ap_positions[15].y(), 4.375, 1e-15);
}
