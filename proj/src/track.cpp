#include "srpt/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace srpt {

namespace {

Pose advance(const Pose& start, double curvature, double ds) {
  if (std::abs(curvature) < 1e-12) {
    return {start.x + ds * std::cos(start.psi), start.y + ds * std::sin(start.psi), start.psi};
  }
  const double r = 1.0 / curvature;
  const double psi = start.psi + curvature * ds;
  return {start.x + r * (std::sin(psi) - std::sin(start.psi)),
          start.y - r * (std::cos(psi) - std::cos(start.psi)), wrap_angle(psi)};
}

class TrackBuilder {
 public:
  void straight(double length) { add(length, 0.0); }

  /// Positive angle turns left.
  void arc(double radius, double angle) {
    add(radius * std::abs(angle), (angle >= 0 ? 1.0 : -1.0) / radius);
  }

  /// Two opposite arcs shifting the path sideways by `offset` over `advance` metres.
  void lateral_shift(double offset, double advance_length) {
    const double phi = 2.0 * std::atan(std::abs(offset) / advance_length);
    const double radius = advance_length / (2.0 * std::sin(phi));
    const double sign = offset >= 0 ? 1.0 : -1.0;
    arc(radius, sign * phi);
    arc(radius, -sign * phi);
  }

  void begin_region(char label, double mu = 1.0, bool wind = false) {
    open_ = TrackRegion{label, s_, s_, mu, wind};
  }
  void end_region() {
    open_.end = s_;
    regions_.push_back(open_);
  }

  double length() const { return s_; }

  TrackModel finish() { return TrackModel(segments_, regions_); }

 private:
  void add(double length, double curvature) {
    segments_.push_back({s_, length, curvature, pose_});
    pose_ = advance(pose_, curvature, length);
    s_ += length;
  }

  std::vector<TrackSegment> segments_;
  std::vector<TrackRegion> regions_;
  TrackRegion open_;
  Pose pose_;
  double s_ = 0.0;
};

constexpr double kNominalLength = 438.0;

// Slalom: gates 15 m apart alternating +-2 m, built from equal-radius arcs.
void slalom(TrackBuilder& b) {
  constexpr double gate_spacing = 15.0;
  constexpr double amplitude = 2.0;
  const double theta = 2.0 * std::atan(2.0 * amplitude / gate_spacing);
  const double radius = gate_spacing / (2.0 * std::sin(theta));
  const double phi = std::acos(1.0 - amplitude / (2.0 * radius));  // lead-in to the first gate
  b.arc(radius, phi);
  b.arc(radius, -(phi + theta));
  b.arc(radius, 2.0 * theta);
  b.arc(radius, -2.0 * theta);
  b.arc(radius, 2.0 * theta);
  b.arc(radius, -(theta + phi));
  b.arc(radius, phi);
}

}  // namespace

TrackModel::TrackModel(std::vector<TrackSegment> segments, std::vector<TrackRegion> regions)
    : segments_(std::move(segments)), regions_(std::move(regions)) {
  if (segments_.empty()) throw std::invalid_argument("TrackModel: no segments");
  total_length_ = segments_.back().s_begin + segments_.back().length;
  const auto n = static_cast<std::size_t>(std::ceil(total_length_ / kSampleSpacing));
  samples_.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = std::min(total_length_, static_cast<double>(i) * kSampleSpacing);
    const Pose p = pose_at(s);
    samples_.push_back({s, p.x, p.y, p.psi});
  }
}

Pose TrackModel::pose_at(double s) const {
  s = std::clamp(s, 0.0, total_length_);
  auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                             [](double v, const TrackSegment& seg) { return v < seg.s_begin; });
  const TrackSegment& seg = *std::prev(it);
  return advance(seg.start, seg.curvature, s - seg.s_begin);
}

double TrackModel::curvature_at(double s) const {
  s = std::clamp(s, 0.0, total_length_);
  auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                             [](double v, const TrackSegment& seg) { return v < seg.s_begin; });
  return std::prev(it)->curvature;
}

const TrackRegion* TrackModel::region_at(double s) const {
  for (const auto& r : regions_) {
    if (r.contains(s)) return &r;
  }
  return nullptr;
}

const TrackRegion& TrackModel::region(char label) const {
  for (const auto& r : regions_) {
    if (r.label == label) return r;
  }
  throw std::out_of_range(std::string("no track region ") + label);
}

double TrackModel::lateral_offset(double s, double x, double y) const {
  const Pose c = pose_at(s);
  return -std::sin(c.psi) * (x - c.x) + std::cos(c.psi) * (y - c.y);
}

void TrackModel::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write track file: " + path.string());
  out << "s,x,y,psi,mu,wind_peak_flag\n" << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < samples_.size(); i += 2) {  // 0.1 m spacing
    const auto& p = samples_[i];
    const TrackRegion* r = region_at(p.s);
    out << p.s << ',' << p.x << ',' << p.y << ',' << p.psi << ',' << (r ? r->mu : 1.0) << ','
        << (r && r->wind ? 1 : 0) << '\n';
  }
}

TrackModel build_track() {
  TrackBuilder b;
  b.straight(30.0);
  b.begin_region('A');
  b.arc(15.0, deg_to_rad(90.0));
  b.end_region();
  b.straight(20.0);
  b.begin_region('B', 0.7);
  b.arc(8.0, deg_to_rad(120.0));
  b.end_region();
  b.straight(15.0);
  b.begin_region('C');
  b.lateral_shift(3.5, 13.5);
  b.straight(11.0);
  b.lateral_shift(-3.5, 12.5);
  b.end_region();
  b.straight(15.0);
  b.begin_region('D', 0.5);
  b.arc(12.0, deg_to_rad(-90.0));
  b.end_region();
  b.begin_region('E', 1.0, true);
  b.straight(40.0);
  b.end_region();
  b.begin_region('F', 1.0, true);
  b.straight(40.0);
  b.end_region();
  b.begin_region('G', 0.33);
  b.arc(10.0, deg_to_rad(180.0));
  b.end_region();
  b.straight(15.0);
  b.begin_region('H');
  slalom(b);
  b.end_region();
  b.straight(kNominalLength - b.length());
  return b.finish();
}

EnvironmentSample environment_at(const TrackModel& track, double s) {
  EnvironmentSample env;
  const TrackRegion* r = track.region_at(s);
  if (r == nullptr) return env;
  env.mu = r->mu;
  if (r->wind) {
    // Chinese-hat gust: 30% ramp up, 40% plateau, 30% ramp down.
    const double f = (s - r->begin) / r->length();
    double shape = 1.0;
    if (f < 0.3) {
      shape = f / 0.3;
    } else if (f > 0.7) {
      shape = (1.0 - f) / 0.3;
    }
    env.wind_speed_lateral = TrackModel::kPeakWind * std::clamp(shape, 0.0, 1.0);
  }
  return env;
}

}  // namespace srpt
