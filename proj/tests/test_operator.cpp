#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "srpt/operator.hpp"

using namespace srpt;

namespace {

const TrackModel& track() {
  static const TrackModel t = build_track();
  return t;
}

// Straight out, half turn of radius 1 to the left, straight back: two parallel lanes 2 m apart.
TrackModel hairpin() {
  std::vector<TrackSegment> segs;
  segs.push_back({0.0, 10.0, 0.0, {0.0, 0.0, 0.0}});
  segs.push_back({10.0, kPi, 1.0, {10.0, 0.0, 0.0}});
  segs.push_back({10.0 + kPi, 10.0, 0.0, {10.0, 2.0, kPi}});
  return TrackModel(segs, {});
}

}  // namespace

TEST(LookaheadDistance, Examples) {
  const LookaheadConfig cfg;
  EXPECT_DOUBLE_EQ(lookahead_distance(0.0, 0.3, cfg), 1.3);
  EXPECT_NEAR(lookahead_distance(6.11, 0.3, cfg), 7.943, 1e-12);
  EXPECT_NEAR(lookahead_distance(1.0, 0.26, cfg), 1.56, 1e-12);
}

TEST(LookaheadDistance, NeverBelowFrontAxleDistance) {
  const LookaheadConfig cfg;
  for (double v = 0.0; v < 10.0; v += 0.37)
    for (double tau = 0.0; tau < 0.5; tau += 0.05) EXPECT_GE(lookahead_distance(v, tau, cfg), cfg.l_front);
}

TEST(ClosestPoint, OnTheCenterline) {
  const Pose p = track().pose_at(100.0);
  EXPECT_NEAR(closest_point(track(), p.x, p.y), 100.0, 1e-6);
  EXPECT_NEAR(closest_point(track(), p.x, p.y, 95.0), 100.0, 1e-6);
}

TEST(ClosestPoint, PerpendicularFootOnAStraight) {
  const Pose p = track().pose_at(20.0);  // first straight
  EXPECT_NEAR(closest_point(track(), p.x, p.y + 1.0), 20.0, 1e-9);
}

TEST(ClosestPoint, TiesGoToTheSmallerArclength) {
  const TrackModel t = hairpin();
  EXPECT_NEAR(closest_point(t, 5.0, 1.0), 5.0, 1e-9);
}

TEST(ClosestPoint, TrackerNeverJumpsBackwardAlongTheLap) {
  ClosestPointTracker tracker(track());
  double prev = 0.0;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  for (double s = 0.0; s < track().total_length(); s += 0.2) {
    const Pose c = track().pose_at(s);
    const double d = off(rng);
    const double found = tracker.locate({c.x - d * std::sin(c.psi), c.y + d * std::cos(c.psi), c.psi});
    EXPECT_GT(found, prev - 0.5) << s;
    EXPECT_NEAR(found, s, 0.5) << s;
    prev = found;
  }
}

TEST(ReferencePose, EstimateEqualsActualOnCenterline) {
  ClosestPointTracker tracker(track(), 100.0);
  const Pose p = track().pose_at(100.0);
  const ReferencePoseMessage msg = make_reference_pose(p, p, 6.11, track(), tracker, LookaheadConfig{}, 0.3, 4.2);
  const Pose expected = track().pose_at(100.0 + 7.943);
  EXPECT_NEAR(msg.pose.x, expected.x, 1e-6);
  EXPECT_NEAR(msg.pose.y, expected.y, 1e-6);
  EXPECT_NEAR(wrap_angle(msg.pose.psi - expected.psi), 0.0, 1e-6);
  EXPECT_EQ(msg.created_at, 4.2);
}

TEST(ReferencePose, EstimateOffsetCarriesOver) {
  ClosestPointTracker tracker(track(), 10.0);
  const Pose actual = track().pose_at(10.0);  // heading 0
  const Pose estimate{actual.x + 1.0, actual.y, actual.psi};
  const ReferencePoseMessage msg =
      make_reference_pose(estimate, actual, 6.11, track(), tracker, LookaheadConfig{}, 0.3, 0.0);
  const Pose ahead = track().pose_at(10.0 + 7.943);
  EXPECT_NEAR(msg.pose.x, ahead.x + 1.0, 1e-9);
  EXPECT_NEAR(msg.pose.y, ahead.y, 1e-9);
}

TEST(ReferencePose, ArbitraryEstimateOffsetComposes) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Pose actual = track().pose_at(150.0);
  for (int trial = 0; trial < 20; ++trial) {
    const RelativePose e{u(rng), u(rng), 0.2 * u(rng)};
    const Pose estimate = compose(actual, e);
    ClosestPointTracker t1(track(), 150.0), t2(track(), 150.0);
    const Pose clean = make_reference_pose(actual, actual, 6.0, track(), t1, LookaheadConfig{}, 0.25, 0.0).pose;
    const Pose shifted = make_reference_pose(estimate, actual, 6.0, track(), t2, LookaheadConfig{}, 0.25, 0.0).pose;
    // Oracle: the same composition done by hand on the clean reference.
    const Pose expected = compose(estimate, relative_pose(actual, clean));
    EXPECT_NEAR(shifted.x, expected.x, 1e-9);
    EXPECT_NEAR(shifted.y, expected.y, 1e-9);
    EXPECT_NEAR(wrap_angle(shifted.psi - expected.psi), 0.0, 1e-9);
  }
}

TEST(ReferencePose, OffsetVehicleIsPulledBackToTheCenterline) {
  ClosestPointTracker tracker(track(), 10.0);
  const Pose c = track().pose_at(10.0);
  const Pose left{c.x, c.y + 0.5, c.psi};
  const Pose ref = make_reference_pose(left, left, 6.11, track(), tracker, LookaheadConfig{}, 0.3, 0.0).pose;
  EXPECT_NEAR(ref.y, 0.0, 1e-9);
  EXPECT_NEAR(ref.x, c.x + 7.943, 1e-9);
}

TEST(ReferencePose, LookaheadClampsAtTheTrackEnd) {
  const double end = track().total_length();
  ClosestPointTracker tracker(track(), end - 1.0);
  const Pose p = track().pose_at(end - 1.0);
  const Pose ref = make_reference_pose(p, p, 6.11, track(), tracker, LookaheadConfig{}, 0.3, 0.0).pose;
  const Pose last = track().pose_at(end);
  EXPECT_NEAR(ref.x, last.x, 1e-6);
  EXPECT_NEAR(ref.y, last.y, 1e-6);
}

TEST(DriverSteer, ZeroErrorGivesZeroSteer) {
  ClosestPointTracker tracker(track(), 10.0);
  const DriverSteer d = lookahead_driver_steer(track().pose_at(10.0), 6.11, track(), tracker, DriverConfig{});
  EXPECT_NEAR(d.steer, 0.0, 1e-12);
}

TEST(DriverSteer, ProportionalToLookaheadOffset) {
  ClosestPointTracker tracker(track(), 10.0);
  const Pose c = track().pose_at(10.0);
  const DriverSteer d = lookahead_driver_steer({c.x, c.y + 0.1, 0.0}, 6.11, track(), tracker, DriverConfig{});
  EXPECT_NEAR(d.lateral_error, 0.1, 1e-9);
  EXPECT_NEAR(d.steer, -0.0213, 1e-9);
}

TEST(DriverSteer, LooksAheadAlongTheHeading) {
  // Heading 0.1 rad on the first straight: the look-ahead point sits 0.9 * 6.11 m along it.
  ClosestPointTracker tracker(track(), 5.0);
  const DriverSteer d = lookahead_driver_steer({5.0, 0.0, 0.1}, 6.11, track(), tracker, DriverConfig{});
  EXPECT_NEAR(d.lateral_error, 5.499 * std::sin(0.1), 1e-9);
}

TEST(DriverSteer, SignOpposesOffsetOnStraights) {
  ClosestPointTracker tracker(track(), 10.0);
  for (double off = -1.0; off <= 1.0; off += 0.25) {
    if (off == 0.0) continue;
    const DriverSteer d = lookahead_driver_steer({10.0, off, 0.0}, 6.11, track(), tracker, DriverConfig{});
    EXPECT_EQ(std::signbit(d.steer), !std::signbit(off));
  }
}

TEST(DriverSpeed, SlowsAheadOfTightCurves) {
  DriverConfig cfg;
  cfg.lateral_accel_cap = 1.5;
  EXPECT_DOUBLE_EQ(driver_speed_target(track(), 5.0, 6.11, 6.11, cfg), 6.11);
  const TrackRegion& g = track().region('G');
  EXPECT_NEAR(driver_speed_target(track(), g.begin - 5.0, 6.11, 6.11, cfg), std::sqrt(1.5 * 10.0), 1e-9);
  cfg.lateral_accel_cap = 1.75;
  EXPECT_NEAR(driver_speed_target(track(), g.begin - 5.0, 6.11, 6.11, cfg), std::sqrt(1.75 * 10.0), 1e-9);
}

TEST(DriverConfig, RejectsNonPositiveGains) {
  DriverConfig cfg;
  cfg.k1 = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(K1Grid, SixtySixCandidates) {
  const auto grid = k1_grid();
  ASSERT_EQ(grid.size(), 66u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.17);
  EXPECT_NEAR(grid.back(), 0.30, 1e-12);
}

TEST(SelectK1, LexicographicAndSkipsDiverged) {
  const std::vector<double> grid{0.1, 0.2, 0.3, 0.4};
  const K1Sweep sweep = select_k1(grid, [](double k1) {
    if (k1 == 0.1) return DriverScore{0.01, 0.02, true};
    if (k1 == 0.2) return DriverScore{0.05, 0.30, false};
    if (k1 == 0.3) return DriverScore{0.05, 0.20, false};
    return DriverScore{0.06, 0.10, false};
  });
  EXPECT_EQ(sweep.k1, 0.3);
  EXPECT_EQ(sweep.scores.size(), 4u);
}

TEST(SelectK1, AllDivergedIsAnError) {
  const std::vector<double> grid{0.1, 0.2};
  EXPECT_THROW(select_k1(grid, [](double) { return DriverScore{0, 0, true}; }), std::runtime_error);
}
