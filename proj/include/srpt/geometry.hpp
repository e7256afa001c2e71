#pragma once

#include <numbers>

namespace srpt {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Planar pose in the global frame.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
};

/// Pose of one frame expressed in another. dx/dy are in the base frame's axes.
struct RelativePose {
  double dx = 0.0;
  double dy = 0.0;
  double dpsi = 0.0;
};

/// Expresses `b` in the frame of `a`.
RelativePose relative_pose(const Pose& a, const Pose& b);

/// Applies `r` on top of `a`; inverse of relative_pose: compose(a, relative_pose(a, b)) == b.
Pose compose(const Pose& a, const RelativePose& r);

/// Heading at fraction `t` along the shortest arc from `from` to `to`.
double interpolate_heading(double from, double to, double t);

}  // namespace srpt
