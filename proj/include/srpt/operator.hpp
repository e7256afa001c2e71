#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "srpt/config.hpp"
#include "srpt/messages.hpp"
#include "srpt/track.hpp"

namespace srpt {

struct LookaheadConfig {
  double horizon = 1.0;  // s
  double l_front = 1.3;  // m, lower bound of the look-ahead distance
};

/// L = Vx * tau + max(Vx * horizon, l_front).
double lookahead_distance(double vx, double tau, const LookaheadConfig& cfg);

/// Arclength of the centerline point closest to (x, y). With a hint, only
/// [hint - window, hint + window] is searched. Ties go to the smallest arclength.
double closest_point(const TrackModel& track, double x, double y, std::optional<double> hint = {},
                     double window = 10.0);

/// Closest-point search warm-started from the previous result.
class ClosestPointTracker {
 public:
  static constexpr double kWindow = 10.0;

  explicit ClosestPointTracker(const TrackModel& track, double initial_s = 0.0)
      : track_(&track), cursor_(initial_s) {}

  double locate(const Pose& pose);
  double cursor() const { return cursor_; }

 private:
  const TrackModel* track_;
  double cursor_;
};

/// Human-model reference pose: the look-ahead correction is measured on the delayed actual
/// pose and applied on top of the delayed estimated pose, so estimate drift carries over.
ReferencePoseMessage make_reference_pose(const Pose& estimated_delayed, const Pose& actual_delayed,
                                         double actual_vx, const TrackModel& track,
                                         ClosestPointTracker& tracker, const LookaheadConfig& cfg,
                                         double tau, double now);

struct DriverConfig {
  double k1 = 0.213;  // rad/m
  double k2 = 0.90;   // s
  /// The driver slows for curves it sees ahead so the lateral acceleration stays below this.
  double lateral_accel_cap = 1.75;  // m/s^2
  double preview_time = 2.0;       // s

  void validate() const;
};

struct DriverSteer {
  double steer = 0.0;        // rad
  double lateral_error = 0.0;  // m, look-ahead point offset (positive left)
};

/// Look-ahead driver: steer = -k1 * (lateral offset of the point k2 * Vx ahead).
DriverSteer lookahead_driver_steer(const Pose& pose, double vx, const TrackModel& track,
                                   ClosestPointTracker& tracker, const DriverConfig& cfg);

/// Speed the driver aims for: VRef, reduced ahead of curves it cannot take comfortably.
double driver_speed_target(const TrackModel& track, double s, double vx, double v_ref, const DriverConfig& cfg);

/// k1 candidates lo, lo+step, ..., hi.
std::vector<double> k1_grid(double lo = 0.17, double hi = 0.30, double step = 0.002);

struct DriverScore {
  double rms_lateral = 0.0;
  double max_lateral = 0.0;
  bool diverged = false;
};

struct K1Sweep {
  double k1 = 0.0;
  std::vector<std::pair<double, DriverScore>> scores;
};

/// Picks the non-diverged k1 with the lowest RMS lateral error, then the lowest maximum.
K1Sweep select_k1(std::span<const double> grid, const std::function<DriverScore(double)>& evaluate);

}  // namespace srpt
