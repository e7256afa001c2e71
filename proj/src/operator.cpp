#include "srpt/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srpt {

double lookahead_distance(double vx, double tau, const LookaheadConfig& cfg) {
  return vx * tau + std::max(vx * cfg.horizon, cfg.l_front);
}

double closest_point(const TrackModel& track, double x, double y, std::optional<double> hint,
                     double window) {
  const auto& samples = track.samples();
  std::size_t lo = 0;
  std::size_t hi = samples.size() - 1;
  if (hint) {
    const double spacing = TrackModel::kSampleSpacing;
    lo = static_cast<std::size_t>(std::max(0.0, std::floor((*hint - window) / spacing)));
    hi = static_cast<std::size_t>(std::max(0.0, std::ceil((*hint + window) / spacing)));
    lo = std::min(lo, samples.size() - 1);
    hi = std::min(hi, samples.size() - 1);
  }

  // Project onto every polyline segment in range; keep the first strict minimum.
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_s = samples[lo].s;
  for (std::size_t i = lo; i <= hi; ++i) {
    double s = samples[i].s;
    double px = samples[i].x;
    double py = samples[i].y;
    if (i < hi) {
      const auto& a = samples[i];
      const auto& b = samples[i + 1];
      const double vx = b.x - a.x;
      const double vy = b.y - a.y;
      const double len2 = vx * vx + vy * vy;
      const double t = len2 > 0 ? std::clamp(((x - a.x) * vx + (y - a.y) * vy) / len2, 0.0, 1.0) : 0.0;
      px = a.x + t * vx;
      py = a.y + t * vy;
      s = a.s + t * (b.s - a.s);
    }
    const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
    if (d2 < best_d2 - 1e-12) {
      best_d2 = d2;
      best_s = s;
    }
  }
  return best_s;
}

double ClosestPointTracker::locate(const Pose& pose) {
  cursor_ = closest_point(*track_, pose.x, pose.y, cursor_, kWindow);
  return cursor_;
}

ReferencePoseMessage make_reference_pose(const Pose& estimated_delayed, const Pose& actual_delayed,
                                         double actual_vx, const TrackModel& track,
                                         ClosestPointTracker& tracker, const LookaheadConfig& cfg,
                                         double tau, double now) {
  const double s_closest = tracker.locate(actual_delayed);
  const double s_target = std::min(track.total_length(),
                                   s_closest + lookahead_distance(actual_vx, tau, cfg));
  const Pose target = track.pose_at(s_target);
  const RelativePose correction = relative_pose(actual_delayed, target);
  return {compose(estimated_delayed, correction), now};
}

void DriverConfig::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("DriverConfig: k1 and k2 must be positive");
  if (!(lateral_accel_cap > 0.0) || !(preview_time >= 0.0)) {
    throw std::invalid_argument("DriverConfig: invalid speed preview settings");
  }
}

DriverSteer lookahead_driver_steer(const Pose& pose, double vx, const TrackModel& track,
                                   ClosestPointTracker& tracker, const DriverConfig& cfg) {
  const double s_vehicle = tracker.locate(pose);
  const double ahead = cfg.k2 * vx;
  const double px = pose.x + ahead * std::cos(pose.psi);
  const double py = pose.y + ahead * std::sin(pose.psi);
  const double s_point = closest_point(track, px, py, s_vehicle + ahead, ClosestPointTracker::kWindow);
  const double dy = track.lateral_offset(s_point, px, py);
  return {-cfg.k1 * dy, dy};
}

double driver_speed_target(const TrackModel& track, double s, double vx, double v_ref, const DriverConfig& cfg) {
  constexpr double kPreviewStep = 0.5;
  double v = v_ref;
  const double preview = cfg.preview_time * std::max(vx, 1.0);
  for (double ds = 0.0; ds <= preview; ds += kPreviewStep) {
    const double curvature = std::abs(track.curvature_at(s + ds));
    if (curvature > 0.0) v = std::min(v, std::sqrt(cfg.lateral_accel_cap / curvature));
  }
  return v;
}

std::vector<double> k1_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("k1_grid: empty range");
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(n);
  for (int i = 0; i < n; ++i) grid.push_back(lo + step * i);
  return grid;
}

K1Sweep select_k1(std::span<const double> grid, const std::function<DriverScore(double)>& evaluate) {
  K1Sweep sweep;
  const DriverScore* best = nullptr;
  for (double k1 : grid) {
    sweep.scores.emplace_back(k1, evaluate(k1));
  }
  for (const auto& [k1, score] : sweep.scores) {
    if (score.diverged) continue;
    if (best == nullptr || score.rms_lateral < best->rms_lateral ||
        (score.rms_lateral == best->rms_lateral && score.max_lateral < best->max_lateral)) {
      best = &score;
      sweep.k1 = k1;
    }
  }
  if (best == nullptr) throw std::runtime_error("select_k1: every candidate diverged");
  return sweep;
}

}  // namespace srpt
