#pragma once

#include <Eigen/Core>

#include "srpt/config.hpp"
#include "srpt/geometry.hpp"

namespace srpt {

inline constexpr int kStateSize = 9;
using StateVector = Eigen::Matrix<double, kStateSize, 1>;
using StateMatrix = Eigen::Matrix<double, kStateSize, kStateSize>;
using InputMatrix = Eigen::Matrix<double, kStateSize, 2>;

/// Index of each entry in the estimator state vector.
enum StateIndex : int {
  kBeta = 0,
  kYawRate = 1,
  kHeading = 2,
  kFyFront = 3,
  kFyRear = 4,
  kVx = 5,
  kPosX = 6,
  kPosY = 7,
  kSteer = 8,
};

/// Denominator guard for the longitudinal speed.
inline constexpr double kMinSpeedForDivision = 0.01;
inline constexpr double kGravity = 9.81;

/// Single-track vehicle parameters (FWD passenger car).
struct VehicleParams {
  double m = 1681.0;                 // kg
  double iz = 2600.0;                // kg m^2
  double m_front = 871.6;            // kg
  double m_rear = 809.4;             // kg
  double l_front = 1.3;              // m
  double l_rear = 1.4;               // m
  double c_sigma_front = 1.057e5;    // N
  double c_sigma_rear = 1.050e5;     // N
  double relaxation_length = 0.3;    // m
  double braking_bias = 0.6;

  double wheelbase() const { return l_front + l_rear; }

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;

  /// Overrides fields from `vehicle.*` keys.
  void apply(const KeyValueConfig& cfg);
};

VehicleParams load_vehicle_params(const std::filesystem::path& path);

struct VehicleState {
  double beta = 0.0;       // rad
  double yaw_rate = 0.0;   // rad/s
  double heading = 0.0;    // rad
  double fy_front = 0.0;   // N
  double fy_rear = 0.0;    // N
  double vx = 0.0;         // m/s
  double x = 0.0;          // m
  double y = 0.0;          // m
  double delta = 0.0;      // rad

  StateVector to_vector() const;
  static VehicleState from_vector(const StateVector& v);
  Pose pose() const { return {x, y, heading}; }
};

struct ControlCommand {
  double steer_rate = 0.0;  // rad/s
  double accel = 0.0;       // m/s^2
};

struct CommandLimits {
  double steer_rate_max = deg_to_rad(20.0);
  double accel_min = -3.0;
  double accel_max = 1.0;

  ControlCommand clamp(const ControlCommand& u) const;
  bool contains(const ControlCommand& u, double tol = 1e-9) const;
};

struct TireSlips {
  double front = 0.0;
  double rear = 0.0;
};

TireSlips tire_slips(const StateVector& x, const VehicleParams& p);

/// Front-axle longitudinal force; braking is split by the braking bias.
double longitudinal_force(double accel, const VehicleParams& p);

/// Continuous-time estimator model. Throws std::invalid_argument on non-finite input.
StateVector state_derivative(const StateVector& x, const ControlCommand& u, const VehicleParams& p);

/// Analytic partial derivatives of state_derivative.
struct ModelJacobian {
  StateMatrix wrt_state;
  InputMatrix wrt_input;  // columns: steer rate, acceleration
};
ModelJacobian state_derivative_jacobian(const StateVector& x, const ControlCommand& u,
                                        const VehicleParams& p);

/// One explicit Euler step; heading is wrapped to (-pi, pi].
StateVector integrate_estimator_model(const StateVector& x, const ControlCommand& u, double dt,
                                      const VehicleParams& p);

// --- ground-truth plant ------------------------------------------------------------------

struct EnvironmentSample {
  double mu = 1.0;                  // road adhesion, (0, 1]
  double wind_speed_lateral = 0.0;  // m/s, >= 0
};

/// Ground-truth state of the simulated vehicle. Kept separate from any estimate.
struct PlantState {
  Pose pose;
  double vx = 0.0;
  double beta = 0.0;
  double yaw_rate = 0.0;
  double fy_front = 0.0;
  double fy_rear = 0.0;
  double delta = 0.0;
  /// Lateral specific force at the CG during the last step (what an IMU would read).
  double lateral_accel = 0.0;

  VehicleState as_vehicle_state() const;
  static PlantState from_vehicle_state(const VehicleState& s);
};

inline constexpr double kAirDensity = 1.225;  // kg/m^3
inline constexpr double kSideForceArea = 2.0;  // m^2, side-force coefficient times area

double wind_force(double wind_speed_lateral);

/// Axle normal load used by the plant tire law.
double axle_normal_load(double axle_mass);

/// Saturating axle force mu*Fz*tanh(C*slip / (mu*Fz)).
double saturated_axle_force(double cornering_stiffness, double slip, double mu, double normal_load);

/// Advances the plant by `dt`. The command is saturated to `limits` first.
PlantState plant_step(const PlantState& s, const ControlCommand& u, const EnvironmentSample& env,
                      double dt, const VehicleParams& p, const CommandLimits& limits = {});

}  // namespace srpt
