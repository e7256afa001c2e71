#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "srpt/analysis.hpp"

namespace srpt {

struct ArtifactPaths {
  std::filesystem::path metrics;
  std::vector<std::filesystem::path> traces;
  std::vector<std::filesystem::path> plots;
};

/// metrics.csv header; one row per run and region follows.
inline constexpr const char* kMetricsHeader =
    "region,mode,noiseSet,delay,maxDY,rmsDY,minSpeed,steerReversals,minCommandedSpeed,maxBetaErrorDeg,valid";

/// Writes the metrics table to a string with fixed precision (stable across runs).
std::string metrics_csv(const std::vector<RunLog>& logs, const TrackModel& track);

/// Writes metrics.csv, traces/<run>.csv and SVG plots (trajectory.svg, region_bars.svg,
/// divergence.svg) under `out_dir`. Throws std::runtime_error naming the unwritable path.
ArtifactPaths export_artifacts(const std::vector<RunLog>& logs, const TrackModel& track,
                               const std::filesystem::path& out_dir);

}  // namespace srpt
