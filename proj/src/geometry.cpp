#include "srpt/geometry.hpp"

#include <cmath>

namespace srpt {

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

RelativePose relative_pose(const Pose& a, const Pose& b) {
  const double c = std::cos(a.psi);
  const double s = std::sin(a.psi);
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  return {c * ex + s * ey, -s * ex + c * ey, wrap_angle(b.psi - a.psi)};
}

Pose compose(const Pose& a, const RelativePose& r) {
  const double c = std::cos(a.psi);
  const double s = std::sin(a.psi);
  return {a.x + c * r.dx - s * r.dy, a.y + s * r.dx + c * r.dy, wrap_angle(a.psi + r.dpsi)};
}

double interpolate_heading(double from, double to, double t) {
  return wrap_angle(from + t * wrap_angle(to - from));
}

}  // namespace srpt
