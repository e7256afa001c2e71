#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include "srpt/estimation.hpp"

namespace srpt {

double LapLog::sample_period() const {
  if (samples.size() < 2) return 0.0;
  return (samples.back().t - samples.front().t) / static_cast<double>(samples.size() - 1);
}

void LapLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write lap log: " + path.string());
  out << "t,beta,yaw_rate,heading,fy_front,fy_rear,vx,x,y,delta,"
         "ay_meas,yaw_rate_meas,vx_meas,delta_meas,steer_rate,accel\n";
  out << std::setprecision(17);
  for (const auto& s : samples) {
    out << s.t;
    for (int i = 0; i < kStateSize; ++i) out << ',' << s.truth[i];
    out << ',' << s.z.ay << ',' << s.z.yaw_rate << ',' << s.z.vx << ',' << s.z.delta;
    out << ',' << s.command.steer_rate << ',' << s.command.accel << '\n';
  }
}

LapLog LapLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lap log: " + path.string());
  LapLog log;
  std::string line;
  std::getline(in, line);  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() != 16) {
      throw std::runtime_error("lap log line " + std::to_string(line_no) + ": expected 16 columns");
    }
    LapSample s;
    s.t = values[0];
    for (int i = 0; i < kStateSize; ++i) s.truth[i] = values[1 + i];
    s.z = {values[10], values[11], values[12], values[13]};
    s.command = {values[14], values[15]};
    log.samples.push_back(s);
  }
  return log;
}

double relative_pose_cost(std::span<const Pose> estimated, std::span<const Pose> truth,
                          int window_samples, double w_position, double w_heading) {
  if (estimated.size() != truth.size()) {
    throw std::invalid_argument("relative_pose_cost: estimated and true series differ in length");
  }
  if (window_samples <= 0 || truth.size() <= static_cast<std::size_t>(window_samples)) {
    throw std::invalid_argument("relative_pose_cost: series shorter than the window");
  }
  double sum_pos = 0.0;
  double sum_head = 0.0;
  std::size_t n = 0;
  for (std::size_t i = window_samples; i < truth.size(); ++i) {
    const RelativePose est = relative_pose(estimated[i - window_samples], estimated[i]);
    const RelativePose act = relative_pose(truth[i - window_samples], truth[i]);
    const double ex = est.dx - act.dx;
    const double ey = est.dy - act.dy;
    const double epsi = wrap_angle(est.dpsi - act.dpsi);
    sum_pos += ex * ex + ey * ey;
    sum_head += epsi * epsi;
    ++n;
  }
  return w_position * std::sqrt(sum_pos / n) + w_heading * std::sqrt(sum_head / n);
}

std::vector<Pose> replay_lap(const LapLog& log, const ProcessCovariance& q,
                             const MeasurementCovariance& r, const VehicleParams& p) {
  std::vector<Pose> poses;
  if (log.samples.empty()) return poses;
  poses.reserve(log.samples.size());
  ExtendedKalmanFilter ekf(p, q, r, log.samples.front().truth);
  poses.push_back(ekf.estimate().pose());
  for (std::size_t k = 1; k < log.samples.size(); ++k) {
    const double dt = log.samples[k].t - log.samples[k - 1].t;
    const int steps = static_cast<int>(std::lround(dt / ExtendedKalmanFilter::kPredictionStep));
    for (int i = 0; i < steps; ++i) ekf.predict(log.samples[k - 1].command);
    ekf.update(log.samples[k].z);
    poses.push_back(ekf.estimate().pose());
  }
  return poses;
}

namespace {

int window_rows(const LapLog& log, double window_seconds) {
  const double period = log.sample_period();
  if (period <= 0.0) throw std::invalid_argument("lap log needs at least two rows");
  return static_cast<int>(std::lround(window_seconds / period));
}

std::vector<Pose> true_poses(const LapLog& log) {
  std::vector<Pose> out;
  out.reserve(log.samples.size());
  for (const auto& s : log.samples) out.push_back({s.truth[kPosX], s.truth[kPosY], s.truth[kHeading]});
  return out;
}

struct TuningProblem {
  const LapLog* log;
  const TuningConfig* cfg;
  const MeasurementCovariance* r;
  const VehicleParams* p;
  ProcessCovariance base;
  std::vector<Pose> truth;
  int window;
  int evaluations = 0;

  ProcessCovariance candidate(const gsl_vector* log_var) const {
    ProcessCovariance q = base;
    for (std::size_t i = 0; i < kTunableStates.size(); ++i) {
      q.variances[kTunableStates[i]] = std::exp(gsl_vector_get(log_var, i));
    }
    return q;
  }

  double cost(const ProcessCovariance& q) {
    ++evaluations;
    try {
      const auto est = replay_lap(*log, q, *r, *p);
      return relative_pose_cost(est, truth, window, cfg->w_position, cfg->w_heading);
    } catch (const EstimationError&) {
      return std::numeric_limits<double>::max();
    }
  }
};

double tuning_objective(const gsl_vector* x, void* params) {
  auto* problem = static_cast<TuningProblem*>(params);
  return problem->cost(problem->candidate(x));
}

}  // namespace

double lap_cost(const LapLog& log, const ProcessCovariance& q, const MeasurementCovariance& r,
                const VehicleParams& p, const TuningConfig& cfg) {
  const int window = window_rows(log, cfg.window_seconds);
  if (log.samples.size() <= static_cast<std::size_t>(window)) {
    throw std::invalid_argument("lap log is shorter than the tuning window");
  }
  return relative_pose_cost(replay_lap(log, q, r, p), true_poses(log), window, cfg.w_position,
                            cfg.w_heading);
}

TuningResult tune_process_covariance(const LapLog& log, const TuningConfig& cfg,
                                     const MeasurementCovariance& r, const VehicleParams& p,
                                     const ProcessCovariance& initial) {
  if (cfg.window_seconds <= 0.0 || cfg.w_position < 0.0 || cfg.w_heading < 0.0) {
    throw std::invalid_argument("TuningConfig: window must be positive and weights non-negative");
  }
  const int window = window_rows(log, cfg.window_seconds);
  if (log.samples.size() <= static_cast<std::size_t>(window)) {
    throw std::invalid_argument("lap log is shorter than the tuning window");
  }
  for (int i : kTunableStates) {
    if (!(initial.variances[i] > 0.0)) {
      throw std::invalid_argument("initial tunable variances must be positive");
    }
  }

  TuningProblem problem{&log, &cfg, &r, &p, initial, true_poses(log), window};
  for (int i : {kHeading, kPosX, kPosY}) problem.base.variances[i] = cfg.pose_variance;

  const std::size_t n = kTunableStates.size();
  using VectorPtr = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  VectorPtr x(gsl_vector_alloc(n), &gsl_vector_free);
  VectorPtr step(gsl_vector_alloc(n), &gsl_vector_free);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x.get(), i, std::log(initial.variances[kTunableStates[i]]));
  }
  gsl_vector_set_all(step.get(), cfg.initial_simplex_step);

  TuningResult result;
  result.initial_cost = problem.cost(problem.candidate(x.get()));

  gsl_multimin_function fn{&tuning_objective, n, &problem};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), step.get());

  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(solver.get());
    if (gsl_multimin_test_size(size, cfg.simplex_tolerance) == GSL_SUCCESS) {
      ++iter;
      break;
    }
  }

  result.q = problem.candidate(gsl_multimin_fminimizer_x(solver.get()));
  result.cost = gsl_multimin_fminimizer_minimum(solver.get());
  if (result.cost > result.initial_cost) {
    result.q = problem.candidate(x.get());
    result.cost = result.initial_cost;
  }
  result.iterations = iter;
  result.evaluations = problem.evaluations;
  return result;
}

}  // namespace srpt
