#include "srpt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <stdexcept>

namespace srpt {

Mode parse_mode(const std::string& text) {
  if (text == "srpt-true") return Mode::SrptTrue;
  if (text == "srpt-ekf") return Mode::SrptEkf;
  if (text == "driver") return Mode::Driver;
  throw std::invalid_argument("unknown mode '" + text + "' (expected srpt-true, srpt-ekf or driver)");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::SrptTrue: return "srpt-true";
    case Mode::SrptEkf: return "srpt-ekf";
    case Mode::Driver: return "driver";
  }
  return "?";
}

ExperimentSpec ExperimentSpec::normalized() const {
  ExperimentSpec out = *this;
  if (mode != Mode::SrptEkf) out.noise_set = NoiseSet::I;
  if (mode == Mode::SrptEkf && noise_set == NoiseSet::I) {
    throw std::invalid_argument("srpt-ekf needs a noisy sensor set (ii..vi)");
  }
  return out;
}

std::string ExperimentSpec::noise_label() const {
  return mode == Mode::Driver ? "-" : to_string(normalized().noise_set);
}

std::string ExperimentSpec::name() const {
  const std::string set = mode == Mode::Driver ? "" : "_" + to_string(normalized().noise_set);
  return to_string(mode) + set + (delay ? "_delay" : "_nodelay") + "_seed" + std::to_string(seed);
}

void SimulationConfig::validate() const {
  vehicle.validate();
  nmpc.validate();
  delay.validate();
  driver.validate();
  if (!(lookahead.horizon > 0.0)) throw std::invalid_argument("lookahead horizon must be positive");
  if (!(max_sim_time > 0.0) || !(corridor > 0.0) || !(finish_margin >= 0.0)) {
    throw std::invalid_argument("invalid simulation limits");
  }
  if (!(ekf_initial_variance >= 0.0)) throw std::invalid_argument("ekf initial variance must be >= 0");
  // A time constant below one base step would overshoot the steer target.
  if (!(steer_servo_time >= kBaseStep) || !(driver_speed_gain >= 0.0)) {
    throw std::invalid_argument("invalid driver actuator settings");
  }
}

void SimulationConfig::apply(const KeyValueConfig& cfg) {
  vehicle.apply(cfg);
  nmpc.apply(cfg);
  delay.apply(cfg);
  q.apply(cfg);
  cfg.assign("ekf.initial_variance", &ekf_initial_variance);
  cfg.assign("driver.k1", &driver.k1);
  cfg.assign("driver.k2", &driver.k2);
  cfg.assign("driver.lateral_accel_cap", &driver.lateral_accel_cap);
  cfg.assign("driver.preview_time", &driver.preview_time);
  cfg.assign("lookahead.horizon", &lookahead.horizon);
  cfg.assign("lookahead.l_front", &lookahead.l_front);
  cfg.assign("sim.max_time", &max_sim_time);
  cfg.assign("sim.corridor", &corridor);
  cfg.assign("sim.finish_margin", &finish_margin);
  cfg.assign("sim.driver_speed_gain", &driver_speed_gain);
  cfg.assign("sim.steer_servo_time", &steer_servo_time);
  validate();
}

namespace {

// Independent random streams per purpose, so delays are identical across modes for one seed.
constexpr std::uint64_t kDelayStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kSensorStream = 0xD1B54A32D192ED03ull;

class Simulation {
 public:
  Simulation(const ExperimentSpec& spec, const SimulationConfig& cfg, const TrackModel& track)
      : spec_(spec.normalized()),
        cfg_(cfg),
        track_(track),
        noise_(NoiseSetConfig::for_set(spec_.noise_set)),
        rig_(noise_, cfg.r, spec_.seed ^ kSensorStream),
        delay_rng_(spec_.seed ^ kDelayStream),
        truth_tracker_(track),
        operator_tracker_(track),
        nmpc_(cfg.nmpc, cfg.vehicle) {
    cfg_.validate();
    truth_.pose = track.pose_at(0.0);
    truth_.vx = cfg.nmpc.v_ref;
    speed_target_ = cfg.nmpc.v_ref;
    estimate_ = truth_.as_vehicle_state();
    if (spec_.mode == Mode::SrptEkf) {
      ekf_ = std::make_unique<ExtendedKalmanFilter>(estimator_params_for(spec_.noise_set, cfg.vehicle),
                                                    cfg.q, cfg.r, estimate_.to_vector(),
                                                    cfg.ekf_initial_variance);
    }
    log_.spec = spec_;
    log_.v_ref = cfg.nmpc.v_ref;
  }

  RunLog run() {
    Scheduler sched;
    const RateSchedule rates;
    sched.add("plant", rates.plant, [this](double) { step_plant(); });
    sched.add("sensors", rates.sensors, [this](double) { z_ = rig_.sense(truth_); });
    sched.add("ekf", rates.plant, [this](double now) { step_estimator(now); });
    sched.add("downlink", rates.operator_side, [this](double now) { step_downlink(now); });
    sched.add("operator", rates.operator_side, [this](double now) { step_operator(now); });
    sched.add("uplink", rates.plant, [this](double now) { step_uplink(now); });
    if (spec_.mode != Mode::Driver) {
      sched.add("nmpc", rates.nmpc, [this](double now) { step_nmpc(now); });
    }
    sched.add("log", rates.sensors, [this](double now) { record(now); });

    try {
      sched.run(cfg_.max_sim_time, [this] { return finished_ || log_.diverged; });
    } catch (const SimulationError& e) {
      flag_diverged(e.what());
    }
    if (!finished_ && !log_.diverged) flag_diverged("lap not completed within the time limit");
    log_.completed = finished_ && !log_.diverged;
    log_.downlink_dropped = downlink_.dropped();
    log_.uplink_dropped = spec_.mode == Mode::Driver ? steer_uplink_.dropped() : uplink_.dropped();
    return std::move(log_);
  }

 private:
  double uplink_delay() const { return spec_.delay ? cfg_.delay.uplink : 0.0; }

  void flag_diverged(const std::string& reason) {
    if (log_.diverged) return;
    log_.diverged = true;
    log_.divergence_reason = reason;
  }

  void step_plant() {
    if (spec_.mode == Mode::Driver) {
      const CommandLimits& lim = cfg_.nmpc.limits;
      command_.steer_rate = std::clamp((steer_target_ - truth_.delta) / cfg_.steer_servo_time,
                                       -lim.steer_rate_max, lim.steer_rate_max);
      command_.accel = std::clamp(cfg_.driver_speed_gain * (speed_target_ - truth_.vx), lim.accel_min,
                                  lim.accel_max);
    }
    ++log_.commands_applied;
    if (!cfg_.nmpc.limits.contains(command_)) ++log_.commands_out_of_bounds;

    truth_ = plant_step(truth_, command_, environment_at(track_, s_), kBaseStep, cfg_.vehicle,
                        cfg_.nmpc.limits);
    s_ = truth_tracker_.locate(truth_.pose);
    dy_ = track_.lateral_offset(s_, truth_.pose.x, truth_.pose.y);
    if (!std::isfinite(truth_.pose.x) || !std::isfinite(truth_.pose.y) || !std::isfinite(truth_.vx)) {
      flag_diverged("plant state became non-finite");
    } else if (std::abs(dy_) > cfg_.corridor) {
      flag_diverged("vehicle left the corridor around the track");
    }
    const double finish = cfg_.stop_at_arclength.value_or(track_.total_length() - cfg_.finish_margin);
    if (s_ >= finish) finished_ = true;
  }

  void step_estimator(double now) {
    if (!ekf_) {
      estimate_ = truth_.as_vehicle_state();
      return;
    }
    ekf_->predict(command_);
    if (sensor_rate_.fires(std::llround(now * kBaseRateHz))) {
      const StateVector before = ekf_->belief().mean;
      ekf_->update(z_);
      const StateVector after = ekf_->belief().mean;
      for (int i : {kPosX, kPosY, kHeading}) {
        log_.max_update_pose_correction = std::max(log_.max_update_pose_correction, std::abs(after[i] - before[i]));
      }
      ++log_.ekf_updates;
    }
    estimate_ = ekf_->estimate();
  }

  void step_downlink(double now) {
    const double delay = spec_.delay ? sample_downlink_delay(cfg_.delay, delay_rng_) : 0.0;
    downlink_.send(VehicleSnapshot{now, estimate_, truth_}, now, delay);
    for (VehicleSnapshot& snap : downlink_.poll(now)) snapshot_ = snap;
  }

  void step_operator(double now) {
    if (!snapshot_) return;
    const VehicleSnapshot& snap = *snapshot_;
    if (spec_.mode == Mode::Driver) {
      const DriverSteer steer = lookahead_driver_steer(snap.actual.pose, snap.actual.vx, track_, operator_tracker_,
                                                       cfg_.driver);
      const double speed = driver_speed_target(track_, operator_tracker_.cursor(), snap.actual.vx,
                                               cfg_.nmpc.v_ref, cfg_.driver);
      steer_uplink_.send(SteerMessage{steer.steer, speed, now}, now, uplink_delay());
      return;
    }
    const double tau = (now - snap.created_at) + uplink_delay();
    const ReferencePoseMessage ref = make_reference_pose(snap.estimate.pose(), snap.actual.pose, snap.actual.vx,
                                                         track_, operator_tracker_, cfg_.lookahead, tau, now);
    uplink_.send(ref, now, uplink_delay());
  }

  void step_uplink(double now) {
    if (spec_.mode == Mode::Driver) {
      for (const SteerMessage& msg : steer_uplink_.poll(now)) {
        steer_target_ = msg.steer_target;
        speed_target_ = msg.speed_target;
      }
      return;
    }
    for (const ReferencePoseMessage& msg : uplink_.poll(now)) buffer_.push(msg);
  }

  void step_nmpc(double now) {
    buffer_.evict(now);
    const NmpcSolution sol = nmpc_.solve(now, estimate_, buffer_);
    if (sol.degraded) ++log_.degraded_solves;
    command_ = cfg_.nmpc.limits.clamp(sol.first());
    commanded_speed_ = sol.trajectory.size() > 1 ? sol.trajectory[1].vx : estimate_.vx;
    speed_target_ = sol.v_target;
    iterations_ = sol.iterations;
    cost_ = sol.cost;
  }

  void record(double now) {
    RunSample row;
    row.t = now;
    row.truth = truth_.as_vehicle_state();
    row.estimate = estimate_;
    row.command = command_;
    row.commanded_speed = spec_.mode == Mode::Driver ? speed_target_ : commanded_speed_;
    row.speed_target = speed_target_;
    row.reference = buffer_.empty() ? estimate_.pose() : buffer_.newest().pose;
    row.s = s_;
    row.dy = dy_;
    row.z = z_;
    row.nmpc_iterations = iterations_;
    row.nmpc_cost = cost_;
    log_.samples.push_back(row);
    log_.lap.samples.push_back({now, row.truth.to_vector(), z_, command_});
  }

  ExperimentSpec spec_;
  SimulationConfig cfg_;
  const TrackModel& track_;
  NoiseSetConfig noise_;
  SensorRig rig_;
  std::mt19937_64 delay_rng_;
  ClosestPointTracker truth_tracker_;
  ClosestPointTracker operator_tracker_;
  NmpcController nmpc_;
  std::unique_ptr<ExtendedKalmanFilter> ekf_;
  Rate sensor_rate_ = RateSchedule{}.sensors;

  PlantState truth_;
  VehicleState estimate_;
  MeasurementVector z_;
  ControlCommand command_;
  double steer_target_ = 0.0;
  double s_ = 0.0;
  double dy_ = 0.0;
  bool finished_ = false;

  Channel<VehicleSnapshot> downlink_;
  Channel<ReferencePoseMessage> uplink_;
  Channel<SteerMessage> steer_uplink_;
  std::optional<VehicleSnapshot> snapshot_;
  ReferenceBuffer buffer_;

  double commanded_speed_ = 0.0;
  double speed_target_ = 0.0;
  int iterations_ = 0;
  double cost_ = 0.0;

  RunLog log_;
};

}  // namespace

RunLog run_experiment(const ExperimentSpec& spec, const SimulationConfig& cfg, const TrackModel& track) {
  return Simulation(spec, cfg, track).run();
}

std::vector<ExperimentSpec> full_grid(std::uint64_t seed) {
  std::vector<ExperimentSpec> specs;
  for (bool delay : {true, false}) {
    specs.push_back({Mode::SrptTrue, NoiseSet::I, delay, seed});
    for (NoiseSet set : {NoiseSet::II, NoiseSet::III, NoiseSet::IV, NoiseSet::V, NoiseSet::VI}) {
      specs.push_back({Mode::SrptEkf, set, delay, seed});
    }
    specs.push_back({Mode::Driver, NoiseSet::I, delay, seed});
  }
  return specs;
}

std::vector<RunLog> run_grid(const std::vector<ExperimentSpec>& specs, const SimulationConfig& cfg,
                             const TrackModel& track) {
  std::vector<RunLog> logs;
  logs.reserve(specs.size());
  for (const auto& spec : specs) logs.push_back(run_experiment(spec, cfg, track));
  return logs;
}

DriverScore evaluate_driver_gain(double k1, const SimulationConfig& cfg, const TrackModel& track, bool delay,
                                 std::uint64_t seed) {
  SimulationConfig c = cfg;
  c.driver.k1 = k1;
  if (!c.stop_at_arclength) c.stop_at_arclength = track.region('C').end;
  const RunLog log = run_experiment({Mode::Driver, NoiseSet::I, delay, seed}, c, track);
  DriverScore score;
  score.diverged = log.diverged;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : log.samples) {
    const TrackRegion* region = track.region_at(row.s);
    if (region == nullptr || region->label > 'C') continue;
    sum += row.dy * row.dy;
    ++n;
    score.max_lateral = std::max(score.max_lateral, std::abs(row.dy));
  }
  score.rms_lateral = n == 0 ? 0.0 : std::sqrt(sum / n);
  return score;
}

void RunLog::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write run log: " + path);
  static const char* kState[] = {"beta", "yaw_rate", "psi", "fy_front", "fy_rear", "vx", "x", "y", "delta"};
  out << "t";
  for (const char* n : kState) out << ",true_" << n;
  for (const char* n : kState) out << ",est_" << n;
  out << ",steer_rate,accel,commanded_speed,speed_target,ref_x,ref_y,ref_psi,s,dy,z_ay,z_yaw_rate,z_vx,z_delta,"
         "nmpc_iterations,nmpc_cost\n";
  out << std::setprecision(9);
  for (const RunSample& r : samples) {
    out << std::fixed << std::setprecision(3) << r.t << std::defaultfloat << std::setprecision(9);
    const StateVector t = r.truth.to_vector();
    const StateVector e = r.estimate.to_vector();
    for (int i = 0; i < kStateSize; ++i) out << ',' << t[i];
    for (int i = 0; i < kStateSize; ++i) out << ',' << e[i];
    out << ',' << r.command.steer_rate << ',' << r.command.accel << ',' << r.commanded_speed << ','
        << r.speed_target << ',' << r.reference.x << ',' << r.reference.y << ',' << r.reference.psi << ','
        << r.s << ',' << r.dy << ',' << r.z.ay << ',' << r.z.yaw_rate << ',' << r.z.vx << ',' << r.z.delta
        << ',' << r.nmpc_iterations << ',' << r.nmpc_cost << '\n';
  }
}

}  // namespace srpt
