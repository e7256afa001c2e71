#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "srpt/geometry.hpp"
#include "srpt/vehicle_dynamics.hpp"

namespace srpt {

struct TrackRegion {
  char label = '?';
  double begin = 0.0;  // arclength, inclusive
  double end = 0.0;    // arclength, exclusive
  double mu = 1.0;
  bool wind = false;

  bool contains(double s) const { return s >= begin && s < end; }
  double length() const { return end - begin; }
};

/// One primitive of the centerline: a straight (curvature 0) or a circular arc.
struct TrackSegment {
  double s_begin = 0.0;
  double length = 0.0;
  double curvature = 0.0;  // 1/m, positive turns left
  Pose start;
};

struct TrackSample {
  double s = 0.0;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
};

/// Arclength-parameterised centerline with the labelled test regions A-H.
class TrackModel {
 public:
  static constexpr double kSampleSpacing = 0.05;
  static constexpr double kPeakWind = 22.22;  // m/s (80 km/h)

  TrackModel(std::vector<TrackSegment> segments, std::vector<TrackRegion> regions);

  double total_length() const { return total_length_; }
  const std::vector<TrackSegment>& segments() const { return segments_; }
  const std::vector<TrackRegion>& regions() const { return regions_; }
  const std::vector<TrackSample>& samples() const { return samples_; }

  /// Exact centerline pose; s is clamped to [0, total_length].
  Pose pose_at(double s) const;
  double curvature_at(double s) const;
  const TrackRegion* region_at(double s) const;
  const TrackRegion& region(char label) const;

  /// Signed lateral offset of `point` from the centerline pose at arclength `s` (positive left).
  double lateral_offset(double s, double x, double y) const;

  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<TrackSegment> segments_;
  std::vector<TrackRegion> regions_;
  std::vector<TrackSample> samples_;
  double total_length_ = 0.0;
};

/// The 438 m test track: R15 corner, R8 corner on mu=0.7, double lane change, R12 corner on
/// mu=0.5, two crosswind straights, R10 U-turn on mu=0.33, five-gate slalom.
TrackModel build_track();

EnvironmentSample environment_at(const TrackModel& track, double s);

}  // namespace srpt
