#include "srpt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace srpt {

int count_saturated_reversals(std::span<const double> steer_rates, double bound, double tol) {
  int reversals = 0;
  int last_sign = 0;
  for (double rate : steer_rates) {
    if (std::abs(rate) < bound - tol) continue;
    const int sign = rate > 0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++reversals;
    last_sign = sign;
  }
  return reversals;
}

std::vector<RegionMetrics> region_metrics(const RunLog& log, const TrackModel& track) {
  std::vector<RegionMetrics> out;
  const double bound = CommandLimits{}.steer_rate_max;
  for (const TrackRegion& region : track.regions()) {
    RegionMetrics m;
    m.region = region.label;
    if (log.diverged) {
      m.valid = false;
      out.push_back(m);
      continue;
    }
    double sum = 0.0;
    m.min_speed = std::numeric_limits<double>::infinity();
    m.min_commanded_speed = std::numeric_limits<double>::infinity();
    std::vector<double> rates;
    for (const RunSample& row : log.samples) {
      if (!region.contains(row.s)) continue;
      ++m.samples;
      sum += row.dy * row.dy;
      m.max_abs_dy = std::max(m.max_abs_dy, std::abs(row.dy));
      m.min_speed = std::min(m.min_speed, row.truth.vx);
      m.min_commanded_speed = std::min(m.min_commanded_speed, row.commanded_speed);
      m.max_beta_error = std::max(m.max_beta_error, std::abs(row.estimate.beta - row.truth.beta));
      rates.push_back(row.command.steer_rate);
    }
    if (m.samples == 0) {
      m.valid = false;
      m.min_speed = 0.0;
      m.min_commanded_speed = 0.0;
    } else {
      m.rms_dy = std::sqrt(sum / m.samples);
      m.steer_reversals = count_saturated_reversals(rates, bound);
    }
    out.push_back(m);
  }
  return out;
}

std::vector<DivergenceSample> divergence_window(std::span<const double> t, std::span<const Pose> estimated,
                                                std::span<const Pose> truth, double window) {
  if (t.size() != estimated.size() || t.size() != truth.size()) {
    throw std::invalid_argument("divergence_window: series lengths differ");
  }
  std::vector<DivergenceSample> out;
  if (t.size() < 2) return out;
  const double period = t[1] - t[0];
  const auto lag = static_cast<std::size_t>(std::llround(window / period));
  for (std::size_t i = lag; i < t.size(); ++i) {
    const RelativePose e = relative_pose(estimated[i - lag], estimated[i]);
    const RelativePose g = relative_pose(truth[i - lag], truth[i]);
    out.push_back({t[i], e.dx - g.dx, e.dy - g.dy, wrap_angle(e.dpsi - g.dpsi)});
  }
  return out;
}

std::vector<DivergenceSample> divergence_window(const RunLog& log, double window) {
  std::vector<double> t;
  std::vector<Pose> est;
  std::vector<Pose> truth;
  for (const RunSample& row : log.samples) {
    t.push_back(row.t);
    est.push_back(row.estimate.pose());
    truth.push_back(row.truth.pose());
  }
  return divergence_window(t, est, truth, window);
}

namespace {

double ratio(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace

ModeComparison compare_modes(const std::vector<RunLog>& logs, const TrackModel& track) {
  std::map<bool, std::uint64_t> seeds;
  for (const RunLog& log : logs) {
    auto [it, inserted] = seeds.emplace(log.spec.delay, log.spec.seed);
    if (!inserted && it->second != log.spec.seed) {
      throw std::invalid_argument("compare_modes: runs of one delay condition use different seeds");
    }
  }

  ModeComparison cmp;
  // (mode, noise set) -> per-delay metrics, for the ratios.
  std::map<std::pair<std::string, std::string>, std::map<bool, std::vector<RegionMetrics>>> by_run;
  for (const RunLog& log : logs) {
    const std::string mode = to_string(log.spec.mode);
    const std::string set = log.spec.noise_label();
    const auto metrics = region_metrics(log, track);
    for (const RegionMetrics& m : metrics) {
      cmp.rows.push_back({m.region, mode, set, log.spec.delay, m.max_abs_dy, m.rms_dy});
    }
    by_run[{mode, set}][log.spec.delay] = metrics;
  }
  for (const auto& [key, runs] : by_run) {
    const auto with = runs.find(true);
    const auto without = runs.find(false);
    if (with == runs.end() || without == runs.end()) continue;
    for (std::size_t i = 0; i < with->second.size(); ++i) {
      const RegionMetrics& d = with->second[i];
      const RegionMetrics& n = without->second[i];
      cmp.ratios.push_back({d.region, key.first, key.second, ratio(d.rms_dy, n.rms_dy),
                            ratio(d.max_abs_dy, n.max_abs_dy)});
    }
  }
  return cmp;
}

}  // namespace srpt
