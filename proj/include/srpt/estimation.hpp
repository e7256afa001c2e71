#pragma once

#include <Eigen/Core>
#include <array>
#include <stdexcept>
#include <filesystem>
#include <span>
#include <vector>

#include "srpt/config.hpp"
#include "srpt/vehicle_dynamics.hpp"

namespace srpt {

using MeasurementVectorXd = Eigen::Vector4d;
using MeasurementJacobian = Eigen::Matrix<double, 4, kStateSize>;

/// IMU lateral acceleration, IMU yaw rate, encoder speed, encoder steer angle.
struct MeasurementVector {
  double ay = 0.0;
  double yaw_rate = 0.0;
  double vx = 0.0;
  double delta = 0.0;

  MeasurementVectorXd to_vector() const { return {ay, yaw_rate, vx, delta}; }
  static MeasurementVector from_vector(const MeasurementVectorXd& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct MeasurementCovariance {
  MeasurementVectorXd variances{0.112 * 0.112, 0.005 * 0.005, 0.083 * 0.083, 0.003 * 0.003};

  Eigen::Matrix4d matrix() const { return variances.asDiagonal(); }
  MeasurementVectorXd std_devs() const { return variances.cwiseSqrt(); }
};

/// Diagonal process noise added at every 1 ms prediction step.
struct ProcessCovariance {
  StateVector variances = StateVector::Zero();

  /// Hand-picked starting values: diag(std)^2 / 10.
  static ProcessCovariance baseline();
  /// Values obtained by tuning from `baseline()` on a recorded noise-set II lap.
  static ProcessCovariance lap_tuned();
  /// All variances equal to `variance`.
  static ProcessCovariance uniform(double variance);

  StateMatrix matrix() const { return variances.asDiagonal(); }

  void write(const std::filesystem::path& path) const;
  static ProcessCovariance read(const std::filesystem::path& path);
  /// Overrides variances from `q.<state>` keys.
  void apply(const KeyValueConfig& cfg);
};

struct EkfBelief {
  StateVector mean = StateVector::Zero();
  StateMatrix cov = StateMatrix::Identity() * 1e-4;
};

/// Raised when the filter hits a numerically unusable covariance.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

MeasurementVector measurement_model(const StateVector& x, const VehicleParams& p);

/// Central-difference Jacobian of the one-step prediction map.
StateMatrix transition_jacobian(const StateVector& x, const ControlCommand& u, double dt,
                                const VehicleParams& p);

/// Central-difference Jacobian of the measurement model.
MeasurementJacobian measurement_jacobian(const StateVector& x, const VehicleParams& p);

EkfBelief ekf_predict(const EkfBelief& b, const ControlCommand& u, double dt,
                      const ProcessCovariance& q, const VehicleParams& p);

/// Measurement update. States whose measurement-Jacobian column is identically zero
/// (the pose) receive no correction.
EkfBelief ekf_update(const EkfBelief& b, const MeasurementVector& z, const MeasurementCovariance& r,
                     const VehicleParams& p);

/// Prediction at 1 kHz, correction at 100 Hz; owned by the simulation loop.
class ExtendedKalmanFilter {
 public:
  static constexpr double kPredictionStep = 0.001;
  static constexpr int kPredictionsPerUpdate = 10;

  ExtendedKalmanFilter(const VehicleParams& params, const ProcessCovariance& q,
                       const MeasurementCovariance& r, const StateVector& initial_state,
                       double initial_variance = 1e-4);

  void predict(const ControlCommand& u);
  void update(const MeasurementVector& z);

  const EkfBelief& belief() const { return belief_; }
  VehicleState estimate() const { return VehicleState::from_vector(belief_.mean); }

 private:
  VehicleParams params_;
  ProcessCovariance q_;
  MeasurementCovariance r_;
  EkfBelief belief_;
};

// --- offline process-noise tuning ---------------------------------------------------------

/// One 100 Hz row of a recorded lap. `command` is applied until the next row.
struct LapSample {
  double t = 0.0;
  StateVector truth = StateVector::Zero();
  MeasurementVector z;
  ControlCommand command;
};

struct LapLog {
  std::vector<LapSample> samples;
  double sample_period() const;

  void write_csv(const std::filesystem::path& path) const;
  static LapLog read_csv(const std::filesystem::path& path);
};

struct TuningConfig {
  double window_seconds = 0.3;
  double w_position = 1.0;
  double w_heading = 1e-2;
  /// Variance pinned for the unobservable pose states.
  double pose_variance = 1.0 / 10.0;
  int max_iterations = 600;
  /// Stop once the simplex characteristic size (in log-variance units) drops below this.
  double simplex_tolerance = 1e-2;
  double initial_simplex_step = 1.0;
};

/// Indices whose variances are optimised: beta, yaw rate, both axle forces, speed, steer.
inline constexpr std::array<int, 6> kTunableStates = {kBeta, kYawRate, kFyFront, kFyRear, kVx, kSteer};

/// Relative-pose prediction cost over a sliding window of `window_samples` rows.
/// J = w_pos * RMS(|dp_est - dp_true|) + w_head * RMS(|dpsi_est - dpsi_true|).
double relative_pose_cost(std::span<const Pose> estimated, std::span<const Pose> truth,
                          int window_samples, double w_position, double w_heading);

/// Runs the EKF over the recorded lap and returns the estimated pose at every row.
std::vector<Pose> replay_lap(const LapLog& log, const ProcessCovariance& q,
                             const MeasurementCovariance& r, const VehicleParams& p);

double lap_cost(const LapLog& log, const ProcessCovariance& q, const MeasurementCovariance& r,
                const VehicleParams& p, const TuningConfig& cfg);

struct TuningResult {
  ProcessCovariance q;
  double initial_cost = 0.0;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Nelder-Mead over the log-variances of kTunableStates; pose variances stay pinned.
TuningResult tune_process_covariance(const LapLog& log, const TuningConfig& cfg,
                                     const MeasurementCovariance& r, const VehicleParams& p,
                                     const ProcessCovariance& initial);

}  // namespace srpt
