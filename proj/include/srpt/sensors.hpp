#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "srpt/estimation.hpp"
#include "srpt/vehicle_dynamics.hpp"

namespace srpt {

/// Noise sets i-vi. Set i runs on true states without an estimator.
enum class NoiseSet { I = 1, II, III, IV, V, VI };

NoiseSet parse_noise_set(const std::string& text);
std::string to_string(NoiseSet set);

struct NoiseSetConfig {
  NoiseSet id = NoiseSet::I;
  bool ekf_enabled = false;
  bool gaussian = false;
  double speed_gain = 1.0;
  double steer_bias = 0.0;     // rad
  double imu_tilt = 0.0;       // rad
  bool stiffness_overestimate = false;

  static NoiseSetConfig for_set(NoiseSet set);
};

/// Gravity constant used by the IMU tilt model.
inline constexpr double kImuGravity = 9.8;
inline constexpr double kStiffnessOverestimate = 1.2;

/// Virtual IMU + speed encoder + steer encoder sampled at 100 Hz.
class SensorRig {
 public:
  SensorRig(NoiseSetConfig noise, MeasurementCovariance r, std::uint64_t seed);

  MeasurementVector sense(const PlantState& truth);

  const NoiseSetConfig& noise() const { return noise_; }

 private:
  NoiseSetConfig noise_;
  MeasurementCovariance r_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Noise-free measurement of the plant: lateral specific force, yaw rate, speed, steer.
MeasurementVector true_measurement(const PlantState& truth);

/// Applies IMU tilt, speed gain and steer bias, without Gaussian noise.
MeasurementVector apply_systematic_errors(const MeasurementVector& clean, const NoiseSetConfig& noise);

/// Parameters handed to the estimator: stiffness scaled by 1.2 for sets iv and vi.
VehicleParams estimator_params_for(NoiseSet set, const VehicleParams& p);

}  // namespace srpt
