#include "srpt/vehicle_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace srpt {

void VehicleParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("VehicleParams: ") + what);
  };
  require(m > 0 && iz > 0, "mass and yaw inertia must be positive");
  require(l_front > 0 && l_rear > 0, "axle distances must be positive");
  require(c_sigma_front > 0 && c_sigma_rear > 0, "cornering stiffness must be positive");
  require(relaxation_length > 0, "relaxation length must be positive");
  require(braking_bias > 0 && braking_bias <= 1, "braking bias must lie in (0, 1]");
  require(m_front > 0 && m_rear > 0, "axle mass shares must be positive");
  require(std::abs(m_front + m_rear - m) <= 1e-6 * m, "axle mass shares must sum to the mass");
}

void VehicleParams::apply(const KeyValueConfig& cfg) {
  cfg.assign("vehicle.m", &m);
  cfg.assign("vehicle.iz", &iz);
  cfg.assign("vehicle.m_front", &m_front);
  cfg.assign("vehicle.m_rear", &m_rear);
  cfg.assign("vehicle.l_front", &l_front);
  cfg.assign("vehicle.l_rear", &l_rear);
  cfg.assign("vehicle.c_sigma_front", &c_sigma_front);
  cfg.assign("vehicle.c_sigma_rear", &c_sigma_rear);
  cfg.assign("vehicle.relaxation_length", &relaxation_length);
  cfg.assign("vehicle.braking_bias", &braking_bias);
}

VehicleParams load_vehicle_params(const std::filesystem::path& path) {
  VehicleParams p;
  p.apply(KeyValueConfig::from_file(path));
  p.validate();
  return p;
}

StateVector VehicleState::to_vector() const {
  StateVector v;
  v << beta, yaw_rate, heading, fy_front, fy_rear, vx, x, y, delta;
  return v;
}

VehicleState VehicleState::from_vector(const StateVector& v) {
  return {v[kBeta], v[kYawRate], v[kHeading], v[kFyFront], v[kFyRear],
          v[kVx],   v[kPosX],    v[kPosY],    v[kSteer]};
}

ControlCommand CommandLimits::clamp(const ControlCommand& u) const {
  return {std::clamp(u.steer_rate, -steer_rate_max, steer_rate_max),
          std::clamp(u.accel, accel_min, accel_max)};
}

bool CommandLimits::contains(const ControlCommand& u, double tol) const {
  return std::abs(u.steer_rate) <= steer_rate_max + tol && u.accel >= accel_min - tol &&
         u.accel <= accel_max + tol;
}

namespace {

double guarded_speed(double vx) { return std::max(kMinSpeedForDivision, vx); }

}  // namespace

TireSlips tire_slips(const StateVector& x, const VehicleParams& p) {
  const double v = guarded_speed(x[kVx]);
  return {std::tan(x[kSteer]) - x[kBeta] - x[kYawRate] * p.l_front / v,
          -x[kBeta] + x[kYawRate] * p.l_rear / v};
}

double longitudinal_force(double accel, const VehicleParams& p) {
  return accel >= 0.0 ? p.m * accel : p.braking_bias * p.m * accel;
}

StateVector state_derivative(const StateVector& x, const ControlCommand& u, const VehicleParams& p) {
  if (!x.allFinite() || !std::isfinite(u.steer_rate) || !std::isfinite(u.accel)) {
    throw std::invalid_argument("state_derivative: non-finite state or command");
  }
  const double beta = x[kBeta];
  const double yaw_rate = x[kYawRate];
  const double psi = x[kHeading];
  const double fyf = x[kFyFront];
  const double fyr = x[kFyRear];
  const double vx = x[kVx];
  const double delta = x[kSteer];
  const double v = guarded_speed(vx);

  const double fxf = longitudinal_force(u.accel, p);
  const double front_lateral = fyf * std::cos(delta) + fxf * std::sin(delta);
  const TireSlips slip = tire_slips(x, p);
  const double tan_beta = std::tan(beta);
  const double c = std::cos(psi);
  const double s = std::sin(psi);

  StateVector xd;
  xd[kBeta] = (front_lateral + fyr) / (p.m * v) - beta * u.accel / v - yaw_rate;
  xd[kYawRate] = (front_lateral * p.l_front - fyr * p.l_rear) / p.iz;
  xd[kHeading] = yaw_rate;
  xd[kFyFront] = vx / p.relaxation_length * (p.c_sigma_front * slip.front - fyf);
  xd[kFyRear] = vx / p.relaxation_length * (p.c_sigma_rear * slip.rear - fyr);
  xd[kVx] = u.accel;
  xd[kPosX] = vx * (c - s * tan_beta);
  xd[kPosY] = vx * (s + c * tan_beta);
  xd[kSteer] = u.steer_rate;
  return xd;
}

ModelJacobian state_derivative_jacobian(const StateVector& x, const ControlCommand& u,
                                        const VehicleParams& p) {
  const double beta = x[kBeta];
  const double yaw_rate = x[kYawRate];
  const double psi = x[kHeading];
  const double fyf = x[kFyFront];
  const double fyr = x[kFyRear];
  const double vx = x[kVx];
  const double delta = x[kSteer];
  const double v = guarded_speed(vx);
  const double dv = vx > kMinSpeedForDivision ? 1.0 : 0.0;  // d(guarded speed)/d(vx)

  const double fxf = longitudinal_force(u.accel, p);
  const double dfxf_da = u.accel >= 0.0 ? p.m : p.braking_bias * p.m;
  const double cd = std::cos(delta);
  const double sd = std::sin(delta);
  const double front_lateral = fyf * cd + fxf * sd;
  const double dfront_ddelta = -fyf * sd + fxf * cd;
  const double tan_beta = std::tan(beta);
  const double sec2_beta = 1.0 + tan_beta * tan_beta;
  const double tan_delta = std::tan(delta);
  const double sec2_delta = 1.0 + tan_delta * tan_delta;
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  const TireSlips slip = tire_slips(x, p);
  const double k = vx / p.relaxation_length;

  ModelJacobian j;
  j.wrt_state.setZero();
  j.wrt_input.setZero();
  auto& a = j.wrt_state;
  auto& b = j.wrt_input;

  const double mv = p.m * v;
  a(kBeta, kBeta) = -u.accel / v;
  a(kBeta, kYawRate) = -1.0;
  a(kBeta, kFyFront) = cd / mv;
  a(kBeta, kFyRear) = 1.0 / mv;
  a(kBeta, kVx) = dv * (-(front_lateral + fyr) / (mv * v) + beta * u.accel / (v * v));
  a(kBeta, kSteer) = dfront_ddelta / mv;
  b(kBeta, 1) = dfxf_da * sd / mv - beta / v;

  a(kYawRate, kFyFront) = cd * p.l_front / p.iz;
  a(kYawRate, kFyRear) = -p.l_rear / p.iz;
  a(kYawRate, kSteer) = dfront_ddelta * p.l_front / p.iz;
  b(kYawRate, 1) = dfxf_da * sd * p.l_front / p.iz;

  a(kHeading, kYawRate) = 1.0;

  a(kFyFront, kBeta) = -k * p.c_sigma_front;
  a(kFyFront, kYawRate) = -k * p.c_sigma_front * p.l_front / v;
  a(kFyFront, kFyFront) = -k;
  a(kFyFront, kVx) = (p.c_sigma_front * slip.front - fyf) / p.relaxation_length +
                     k * p.c_sigma_front * yaw_rate * p.l_front / (v * v) * dv;
  a(kFyFront, kSteer) = k * p.c_sigma_front * sec2_delta;

  a(kFyRear, kBeta) = -k * p.c_sigma_rear;
  a(kFyRear, kYawRate) = k * p.c_sigma_rear * p.l_rear / v;
  a(kFyRear, kFyRear) = -k;
  a(kFyRear, kVx) = (p.c_sigma_rear * slip.rear - fyr) / p.relaxation_length -
                    k * p.c_sigma_rear * yaw_rate * p.l_rear / (v * v) * dv;

  b(kVx, 1) = 1.0;

  a(kPosX, kBeta) = -vx * s * sec2_beta;
  a(kPosX, kHeading) = -vx * (s + c * tan_beta);
  a(kPosX, kVx) = c - s * tan_beta;

  a(kPosY, kBeta) = vx * c * sec2_beta;
  a(kPosY, kHeading) = vx * (c - s * tan_beta);
  a(kPosY, kVx) = s + c * tan_beta;

  b(kSteer, 0) = 1.0;
  return j;
}

StateVector integrate_estimator_model(const StateVector& x, const ControlCommand& u, double dt,
                                      const VehicleParams& p) {
  StateVector next = x + state_derivative(x, u, p) * dt;
  next[kHeading] = wrap_angle(next[kHeading]);
  return next;
}

// --- plant ----------------------------------------------------------------------------------

VehicleState PlantState::as_vehicle_state() const {
  return {beta, yaw_rate, pose.psi, fy_front, fy_rear, vx, pose.x, pose.y, delta};
}

PlantState PlantState::from_vehicle_state(const VehicleState& s) {
  PlantState p;
  p.pose = s.pose();
  p.vx = s.vx;
  p.beta = s.beta;
  p.yaw_rate = s.yaw_rate;
  p.fy_front = s.fy_front;
  p.fy_rear = s.fy_rear;
  p.delta = s.delta;
  return p;
}

double wind_force(double wind_speed_lateral) {
  return 0.5 * kAirDensity * kSideForceArea * wind_speed_lateral * wind_speed_lateral;
}

double axle_normal_load(double axle_mass) { return axle_mass * kGravity; }

double saturated_axle_force(double cornering_stiffness, double slip, double mu, double normal_load) {
  const double cap = mu * normal_load;
  return cap * std::tanh(cornering_stiffness * slip / cap);
}

PlantState plant_step(const PlantState& s, const ControlCommand& u_raw,
                      const EnvironmentSample& env, double dt, const VehicleParams& p,
                      const CommandLimits& limits) {
  const ControlCommand u = limits.clamp(u_raw);
  const double v = guarded_speed(s.vx);
  const double fz_front = axle_normal_load(p.m_front);
  const double fz_rear = axle_normal_load(p.m_rear);
  const double cap_front = env.mu * fz_front;
  const double cap_rear = env.mu * fz_rear;

  const double slip_front = std::tan(s.delta) - s.beta - s.yaw_rate * p.l_front / v;
  const double slip_rear = -s.beta + s.yaw_rate * p.l_rear / v;
  const double target_front = saturated_axle_force(p.c_sigma_front, slip_front, env.mu, fz_front);
  const double target_rear = saturated_axle_force(p.c_sigma_rear, slip_rear, env.mu, fz_rear);

  const double fxf = longitudinal_force(u.accel, p);
  const double front_lateral = s.fy_front * std::cos(s.delta) + fxf * std::sin(s.delta);
  const double f_wind = wind_force(env.wind_speed_lateral);
  const double lateral_total = front_lateral + s.fy_rear + f_wind;

  const double beta_dot = lateral_total / (p.m * v) - s.beta * u.accel / v - s.yaw_rate;
  const double yaw_acc = (front_lateral * p.l_front - s.fy_rear * p.l_rear) / p.iz;
  const double k = s.vx / p.relaxation_length;
  const double tan_beta = std::tan(s.beta);
  const double c = std::cos(s.pose.psi);
  const double sn = std::sin(s.pose.psi);

  PlantState next = s;
  next.beta = s.beta + beta_dot * dt;
  next.yaw_rate = s.yaw_rate + yaw_acc * dt;
  next.pose.psi = wrap_angle(s.pose.psi + s.yaw_rate * dt);
  next.fy_front = std::clamp(s.fy_front + k * (target_front - s.fy_front) * dt, -cap_front, cap_front);
  next.fy_rear = std::clamp(s.fy_rear + k * (target_rear - s.fy_rear) * dt, -cap_rear, cap_rear);
  next.vx = std::max(0.0, s.vx + u.accel * dt);
  next.pose.x = s.pose.x + s.vx * (c - sn * tan_beta) * dt;
  next.pose.y = s.pose.y + s.vx * (sn + c * tan_beta) * dt;
  next.delta = s.delta + u.steer_rate * dt;
  next.lateral_accel = lateral_total / p.m;
  return next;
}

}  // namespace srpt
