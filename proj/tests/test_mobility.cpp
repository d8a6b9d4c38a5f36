#include <gtest/gtest.h>

#include "lifi/mobility.hpp"

using namespace lifi;

TEST(StepOrientation, DegenerateDistributionsReturnMeans) {
  MobilityConfig c;
  c.yaw_jitter_std = c.pitch_std = c.roll_std = 0;
  Rng rng(1);
  const auto o = step_orientation(rng, 123.0, c);
  EXPECT_EQ(o.alpha, 123.0);
  EXPECT_EQ(o.beta, c.pitch_mean);
  EXPECT_EQ(o.gamma, c.roll_mean);
}

TEST(StepOrientation, PitchSampleMeanWithinThreeSigma) {
  MobilityConfig c;
  Rng rng(3);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += step_orientation(rng, 10.0, c).beta;
  EXPECT_NEAR(sum / n, c.pitch_mean, 3 * c.pitch_std / std::sqrt(double(n)));
}

TEST(StepOrientation, OutputsStayInAngleRanges) {
  MobilityConfig c;
  c.yaw_jitter_std = 400;
  c.pitch_std = 500;
  c.roll_std = 300;
  Rng rng(5);
  for (int i = 0; i < 20000; ++i) {
    const auto o = step_orientation(rng, 359.9, c);
    EXPECT_TRUE(angles_in_range(Pose{0, 0, 0, o.alpha, o.beta, o.gamma}));
  }
}

TEST(Trajectory, StepsBoundedBySpeedTimesSlot) {
  const MobilityConfig c;
  const auto room = default_room();
  const auto t = sample_trajectory(9, 5000, c, room);
  ASSERT_EQ(t.size(), 5000u);
  for (std::size_t i = 1; i < t.size(); ++i)
    EXPECT_LE((t[i].position() - t[i - 1].position()).norm(), 0.5 + 1e-9);
}

TEST(Trajectory, StaysInsideInsetFloorAtConstantHeight) {
  const MobilityConfig c;
  const auto room = default_room();
  for (const auto& p : sample_trajectory(10, 5000, c, room)) {
    EXPECT_GE(p.x, c.wall_margin - 1e-12);
    EXPECT_LE(p.x, room.length - c.wall_margin + 1e-12);
    EXPECT_GE(p.y, c.wall_margin - 1e-12);
    EXPECT_LE(p.y, room.width - c.wall_margin + 1e-12);
    EXPECT_EQ(p.z, c.ue_height);
    EXPECT_TRUE(angles_in_range(p));
  }
}

TEST(Trajectory, SameSeedSameTrajectory) {
  const auto room = default_room();
  EXPECT_EQ(sample_trajectory(42, 300, {}, room), sample_trajectory(42, 300, {}, room));
  EXPECT_NE(sample_trajectory(42, 300, {}, room), sample_trajectory(43, 300, {}, room));
}

TEST(Trajectory, CoversAllFourQuadrants) {
  const auto room = default_room();
  int counts[4] = {0, 0, 0, 0};
  for (const auto& p : sample_trajectory(17, 10000, {}, room))
    ++counts[(p.x > room.length / 2) + 2 * (p.y > room.width / 2)];
  for (int c : counts) EXPECT_GT(c, 1000);
}

TEST(Trajectory, WalksAtFullSpeedAwayFromWaypoints) {
  const auto t = sample_trajectory(21, 2000, {}, default_room());
  int full = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    full += std::abs((t[i].position() - t[i - 1].position()).norm() - 0.5) < 1e-9;
  EXPECT_GT(full, 1000);
}

TEST(Trajectory, ZeroSpeedFreezesPosition) {
  MobilityConfig c;
  c.speed = 0;
  const auto t = sample_trajectory(4, 50, c, default_room());
  for (const auto& p : t) EXPECT_EQ(p.position(), t.front().position());
}

TEST(Trajectory, ZeroStepsIsAnError) {
  EXPECT_THROW(sample_trajectory(1, 0, {}, default_room()), ConfigError);
}

TEST(MobilityConfig, ValidationRejectsBadValues) {
  const auto room = default_room();
  MobilityConfig c;
  EXPECT_NO_THROW(validate(c, room));
  c.pause_probability = 1.0;
  EXPECT_THROW(validate(c, room), ConfigError);
  c = {};
  c.ue_height = 4;
  EXPECT_THROW(validate(c, room), ConfigError);
  c = {};
  c.slot_duration = 0;
  EXPECT_THROW(validate(c, room), ConfigError);
}
