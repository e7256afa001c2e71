#include "srpt/sensors.hpp"

#include <cmath>
#include <stdexcept>

namespace srpt {

NoiseSet parse_noise_set(const std::string& text) {
  if (text == "i" || text == "1") return NoiseSet::I;
  if (text == "ii" || text == "2") return NoiseSet::II;
  if (text == "iii" || text == "3") return NoiseSet::III;
  if (text == "iv" || text == "4") return NoiseSet::IV;
  if (text == "v" || text == "5") return NoiseSet::V;
  if (text == "vi" || text == "6") return NoiseSet::VI;
  throw std::invalid_argument("unknown noise set '" + text + "' (expected i..vi)");
}

std::string to_string(NoiseSet set) {
  switch (set) {
    case NoiseSet::I: return "i";
    case NoiseSet::II: return "ii";
    case NoiseSet::III: return "iii";
    case NoiseSet::IV: return "iv";
    case NoiseSet::V: return "v";
    case NoiseSet::VI: return "vi";
  }
  return "?";
}

NoiseSetConfig NoiseSetConfig::for_set(NoiseSet set) {
  NoiseSetConfig c;
  c.id = set;
  if (set == NoiseSet::I) return c;
  c.ekf_enabled = true;
  c.gaussian = true;
  if (set == NoiseSet::II) return c;
  c.speed_gain = 1.05;
  c.steer_bias = deg_to_rad(0.5);
  c.imu_tilt = (set == NoiseSet::III || set == NoiseSet::IV) ? deg_to_rad(3.0) : deg_to_rad(6.0);
  c.stiffness_overestimate = (set == NoiseSet::IV || set == NoiseSet::VI);
  return c;
}

SensorRig::SensorRig(NoiseSetConfig noise, MeasurementCovariance r, std::uint64_t seed)
    : noise_(noise), r_(r), rng_(seed) {}

MeasurementVector true_measurement(const PlantState& truth) {
  return {truth.lateral_accel, truth.yaw_rate, truth.vx, truth.delta};
}

MeasurementVector apply_systematic_errors(const MeasurementVector& clean, const NoiseSetConfig& noise) {
  MeasurementVector z = clean;
  if (noise.imu_tilt != 0.0) {
    z.ay = clean.ay * std::cos(noise.imu_tilt) - kImuGravity * std::sin(noise.imu_tilt);
    z.yaw_rate = clean.yaw_rate * std::cos(noise.imu_tilt);
  }
  z.vx *= noise.speed_gain;
  z.delta += noise.steer_bias;
  return z;
}

MeasurementVector SensorRig::sense(const PlantState& truth) {
  const MeasurementVector clean = true_measurement(truth);
  if (noise_.id == NoiseSet::I) return clean;
  MeasurementVector z = apply_systematic_errors(clean, noise_);
  if (noise_.gaussian) {
    const MeasurementVectorXd sd = r_.std_devs();
    z.ay += sd[0] * normal_(rng_);
    z.yaw_rate += sd[1] * normal_(rng_);
    z.vx += sd[2] * normal_(rng_);
    z.delta += sd[3] * normal_(rng_);
  }
  return z;
}

VehicleParams estimator_params_for(NoiseSet set, const VehicleParams& p) {
  VehicleParams out = p;
  if (NoiseSetConfig::for_set(set).stiffness_overestimate) {
    out.c_sigma_front *= kStiffnessOverestimate;
    out.c_sigma_rear *= kStiffnessOverestimate;
  }
  return out;
}

}  // namespace srpt
