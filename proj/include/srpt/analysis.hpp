#pragma once

#include <span>
#include <string>
#include <vector>

#include "srpt/harness.hpp"

namespace srpt {

struct RegionMetrics {
  char region = '?';
  bool valid = true;  // false for diverged runs
  int samples = 0;
  double max_abs_dy = 0.0;
  double rms_dy = 0.0;
  double min_speed = 0.0;
  double min_commanded_speed = 0.0;
  int steer_reversals = 0;  // sign changes of the steer rate while saturated
  double max_beta_error = 0.0;  // rad
};

/// Sign changes between consecutive saturated samples (|rate| >= bound - tol).
int count_saturated_reversals(std::span<const double> steer_rates, double bound, double tol = 1e-6);

/// Cross-track, speed, steer-oscillation and sideslip-estimation metrics per region A-H.
std::vector<RegionMetrics> region_metrics(const RunLog& log, const TrackModel& track);

struct DivergenceSample {
  double t = 0.0;
  double ex = 0.0;
  double ey = 0.0;
  double epsi = 0.0;
};

/// Estimated minus true relative pose over [t - window, t]; samples before `window` are skipped.
std::vector<DivergenceSample> divergence_window(std::span<const double> t, std::span<const Pose> estimated,
                                                std::span<const Pose> truth, double window = 0.3);
std::vector<DivergenceSample> divergence_window(const RunLog& log, double window = 0.3);

struct ComparisonRow {
  char region = '?';
  std::string mode;
  std::string noise_set;
  bool delay = false;
  double max_abs_dy = 0.0;
  double rms_dy = 0.0;
};

struct DelayRatio {
  char region = '?';
  std::string mode;
  std::string noise_set;
  double rms_ratio = 1.0;  // delay / no delay
  double max_ratio = 1.0;
};

struct ModeComparison {
  std::vector<ComparisonRow> rows;
  std::vector<DelayRatio> ratios;
};

/// Region x run table plus delay/no-delay ratios. Throws std::invalid_argument when runs of one
/// delay condition were made with different seeds.
ModeComparison compare_modes(const std::vector<RunLog>& logs, const TrackModel& track);

}  // namespace srpt
