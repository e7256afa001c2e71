#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "srpt/config.hpp"
#include "srpt/geometry.hpp"

using namespace srpt;

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(-3 * kPi / 2), kPi / 2, 1e-12);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(0.3), 0.3);
}

TEST(RelativePose, IdenticalPosesGiveZero) {
  const Pose a{3.0, -2.0, 1.1};
  const RelativePose r = relative_pose(a, a);
  EXPECT_DOUBLE_EQ(r.dx, 0.0);
  EXPECT_DOUBLE_EQ(r.dy, 0.0);
  EXPECT_DOUBLE_EQ(r.dpsi, 0.0);
}

TEST(RelativePose, HandComputedExamples) {
  RelativePose r = relative_pose({0, 0, kPi / 2}, {0, 1, kPi / 2});
  EXPECT_NEAR(r.dx, 1.0, 1e-12);
  EXPECT_NEAR(r.dy, 0.0, 1e-12);
  EXPECT_NEAR(r.dpsi, 0.0, 1e-12);

  r = relative_pose({1, 0, 0}, {2, 1, kPi / 4});
  EXPECT_NEAR(r.dx, 1.0, 1e-12);
  EXPECT_NEAR(r.dy, 1.0, 1e-12);
  EXPECT_NEAR(r.dpsi, kPi / 4, 1e-12);
}

TEST(RelativePose, ComposeInvertsRelativePose) {
  const Pose a{2.0, -1.0, 2.9};
  const Pose b{-4.0, 5.0, -3.0};
  const Pose c = compose(a, relative_pose(a, b));
  EXPECT_NEAR(c.x, b.x, 1e-12);
  EXPECT_NEAR(c.y, b.y, 1e-12);
  EXPECT_NEAR(wrap_angle(c.psi - b.psi), 0.0, 1e-12);
}

TEST(InterpolateHeading, TakesShortestArcAcrossWrap) {
  const double mid = interpolate_heading(deg_to_rad(170), deg_to_rad(-170), 0.5);
  EXPECT_NEAR(std::abs(mid), kPi, 1e-12);
  EXPECT_NEAR(interpolate_heading(0.0, 1.0, 0.25), 0.25, 1e-12);
}

TEST(KeyValueConfig, ParsesCommentsAndValues) {
  const auto cfg = KeyValueConfig::from_string("# header\nvehicle.m = 1500\n\n  nmpc.w_pos=2.5  # trailing\n");
  EXPECT_EQ(cfg.get("vehicle.m"), 1500.0);
  EXPECT_EQ(cfg.get("nmpc.w_pos"), 2.5);
  EXPECT_FALSE(cfg.get("missing").has_value());
  double target = 1.0;
  cfg.assign("missing", &target);
  EXPECT_EQ(target, 1.0);
  cfg.assign("vehicle.m", &target);
  EXPECT_EQ(target, 1500.0);
}

TEST(KeyValueConfig, RejectsMalformedLines) {
  EXPECT_THROW(KeyValueConfig::from_string("no equals sign\n"), std::invalid_argument);
  EXPECT_THROW(KeyValueConfig::from_string("a = not-a-number\n"), std::invalid_argument);
}

TEST(KeyValueConfig, RoundTripsThroughFile) {
  KeyValueConfig cfg;
  cfg.set("delay.xi", 0.29);
  cfg.set("delay.mu", 0.2);
  const auto path = std::filesystem::temp_directory_path() / "srpt_cfg_roundtrip.cfg";
  cfg.write(path);
  const auto back = KeyValueConfig::from_file(path);
  EXPECT_EQ(back.values(), cfg.values());
  std::filesystem::remove(path);
}
