#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srpt/controller.hpp"
#include "srpt/estimation.hpp"
#include "srpt/operator.hpp"
#include "srpt/sensors.hpp"
#include "srpt/teleop_link.hpp"
#include "srpt/track.hpp"

namespace srpt {

enum class Mode { SrptTrue, SrptEkf, Driver };

Mode parse_mode(const std::string& text);
std::string to_string(Mode mode);

struct ExperimentSpec {
  Mode mode = Mode::SrptEkf;
  NoiseSet noise_set = NoiseSet::II;
  bool delay = true;
  std::uint64_t seed = 1;

  /// SRPT-true always runs on noise set i; the driver is independent of sensor noise.
  ExperimentSpec normalized() const;
  /// Noise-set label: "-" for the driver.
  std::string noise_label() const;
  /// File-name friendly identifier, e.g. "srpt-ekf_iii_delay_seed7".
  std::string name() const;
};

/// Everything a run needs besides the spec. Defaults reproduce the reference experiments.
struct SimulationConfig {
  VehicleParams vehicle;
  NmpcConfig nmpc;
  DelayModel delay;
  LookaheadConfig lookahead;
  DriverConfig driver;
  ProcessCovariance q = ProcessCovariance::lap_tuned();
  MeasurementCovariance r;
  /// Initial EKF variance on every state. The filter starts from the true state, so this is
  /// near zero; a loose prior lets constant sensor biases leak into the steer and speed states.
  double ekf_initial_variance = 1e-12;

  double max_sim_time = 200.0;    // s; exceeding it flags the run as diverged
  double corridor = 10.0;         // m; leaving it flags the run as diverged
  double finish_margin = 1.0;     // m before the end of the track
  /// Stop early once the vehicle passes this arclength (used by the k1 sweep).
  std::optional<double> stop_at_arclength;

  double driver_speed_gain = 1.0;     // 1/s, proportional speed controller
  double steer_servo_time = 0.005;    // s, steer actuator time constant in driver mode

  void validate() const;
  /// Applies `vehicle.*`, `nmpc.*`, `delay.*`, `q.*`, `ekf.*`, `driver.*`, `lookahead.*` and `sim.*` overrides.
  void apply(const KeyValueConfig& cfg);
};

/// One 100 Hz row of a run.
struct RunSample {
  double t = 0.0;
  VehicleState truth;
  VehicleState estimate;
  ControlCommand command;        // command applied to the plant at this instant
  double commanded_speed = 0.0;  // NMPC-predicted speed one node ahead (driver: VRef)
  double speed_target = 0.0;
  Pose reference;                // newest reference pose held by the vehicle
  double s = 0.0;                // arclength of the closest centerline point
  double dy = 0.0;               // signed cross-track error, positive left
  MeasurementVector z;
  int nmpc_iterations = 0;
  double nmpc_cost = 0.0;
};

struct RunLog {
  ExperimentSpec spec;
  double v_ref = 0.0;
  std::vector<RunSample> samples;
  bool diverged = false;
  std::string divergence_reason;
  bool completed = false;

  // End-to-end audits, evaluated on every 1 ms plant step.
  std::int64_t commands_applied = 0;
  std::int64_t commands_out_of_bounds = 0;
  /// Largest |change| of x, y or heading made by any EKF measurement update.
  double max_update_pose_correction = 0.0;
  std::int64_t ekf_updates = 0;

  std::size_t downlink_dropped = 0;
  std::size_t uplink_dropped = 0;
  std::int64_t degraded_solves = 0;

  /// Truth, measurements and commands at 100 Hz, for process-noise tuning.
  LapLog lap;

  void write_csv(const std::string& path) const;
};

RunLog run_experiment(const ExperimentSpec& spec, const SimulationConfig& cfg = {},
                      const TrackModel& track = build_track());

/// The 14-run grid: {SRPT-true(i), SRPT-EKF(ii..vi), driver} x {delay, no delay}.
std::vector<ExperimentSpec> full_grid(std::uint64_t seed);

/// Runs every spec; results are in spec order.
std::vector<RunLog> run_grid(const std::vector<ExperimentSpec>& specs, const SimulationConfig& cfg = {},
                             const TrackModel& track = build_track());

/// Scores one driver gain: RMS and max cross-track error over the simulated stretch.
DriverScore evaluate_driver_gain(double k1, const SimulationConfig& cfg, const TrackModel& track,
                                 bool delay, std::uint64_t seed);

}  // namespace srpt
