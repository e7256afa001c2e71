#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "srpt/vehicle_dynamics.hpp"

using namespace srpt;

namespace {

StateVector random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateVector x;
  x << 0.05 * u(rng), 0.4 * u(rng), 3.0 * u(rng), 3000 * u(rng), 3000 * u(rng), 6.0 + 2.0 * u(rng),
      50 * u(rng), 50 * u(rng), 0.2 * u(rng);
  return x;
}

}  // namespace

TEST(VehicleParams, DefaultsAreValidAndConsistent) {
  const VehicleParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_NEAR(p.m_front + p.m_rear, p.m, 1e-9);
  EXPECT_NEAR(p.wheelbase(), 2.7, 1e-12);
}

TEST(VehicleParams, RejectsInvalidValues) {
  VehicleParams p;
  p.m = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.braking_bias = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(VehicleParams, AppliesConfigOverrides) {
  VehicleParams p;
  p.apply(KeyValueConfig::from_string("vehicle.iz = 2500\n"));
  EXPECT_EQ(p.iz, 2500.0);
}

TEST(CommandLimits, ClampsToBounds) {
  const CommandLimits lim;
  const ControlCommand c = lim.clamp({1.0, -10.0});
  EXPECT_DOUBLE_EQ(c.steer_rate, deg_to_rad(20.0));
  EXPECT_DOUBLE_EQ(c.accel, -3.0);
  EXPECT_TRUE(lim.contains(c));
  EXPECT_FALSE(lim.contains({0.0, 1.0 + 1e-6}));
}

TEST(LongitudinalForce, BrakingIsScaledByBias) {
  const VehicleParams p;
  EXPECT_DOUBLE_EQ(longitudinal_force(1.0, p), p.m);
  EXPECT_DOUBLE_EQ(longitudinal_force(-2.0, p), -2.0 * p.braking_bias * p.m);
}

TEST(StateDerivative, StraightRunHasNoLateralDynamics) {
  VehicleState s;
  s.vx = 6.11;
  const StateVector xd = state_derivative(s.to_vector(), {}, VehicleParams{});
  EXPECT_DOUBLE_EQ(xd[kPosX], 6.11);
  for (int i : {kBeta, kYawRate, kHeading, kFyFront, kFyRear, kVx, kPosY, kSteer}) EXPECT_DOUBLE_EQ(xd[i], 0.0);
}

TEST(StateDerivative, GuardsTheSpeedDenominator) {
  VehicleState s;
  s.vx = 0.0;
  s.yaw_rate = 0.1;
  const StateVector xd = state_derivative(s.to_vector(), {0.0, 0.0}, VehicleParams{});
  EXPECT_TRUE(xd.allFinite());
}

TEST(StateDerivative, RejectsNonFiniteInput) {
  StateVector x = StateVector::Zero();
  x[kBeta] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(state_derivative(x, {}, VehicleParams{}), std::invalid_argument);
  EXPECT_THROW(state_derivative(StateVector::Zero(), {std::numeric_limits<double>::infinity(), 0.0}, VehicleParams{}),
               std::invalid_argument);
}

// Oracle: central differences of state_derivative.
TEST(StateDerivativeJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const VehicleParams p;
  for (int trial = 0; trial < 20; ++trial) {
    const StateVector x = random_state(rng);
    const ControlCommand u{0.1, trial % 2 ? 0.5 : -1.5};
    const ModelJacobian jac = state_derivative_jacobian(x, u, p);
    for (int j = 0; j < kStateSize; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      StateVector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const StateVector col = (state_derivative(xp, u, p) - state_derivative(xm, u, p)) / (2 * h);
      for (int i = 0; i < kStateSize; ++i) {
        EXPECT_NEAR(jac.wrt_state(i, j), col[i], 1e-5 * std::max(1.0, std::abs(col[i]))) << i << "," << j;
      }
    }
    for (int j = 0; j < 2; ++j) {
      const double h = 1e-6;
      ControlCommand up = u, um = u;
      (j == 0 ? up.steer_rate : up.accel) += h;
      (j == 0 ? um.steer_rate : um.accel) -= h;
      const StateVector col = (state_derivative(x, up, p) - state_derivative(x, um, p)) / (2 * h);
      for (int i = 0; i < kStateSize; ++i) {
        EXPECT_NEAR(jac.wrt_input(i, j), col[i], 1e-5 * std::max(1.0, std::abs(col[i])));
      }
    }
  }
}

TEST(StateDerivativeJacobian, HeadingPartialOfPositionRow) {
  std::mt19937_64 rng(5);
  const StateVector x = random_state(rng);
  const ModelJacobian jac = state_derivative_jacobian(x, {}, VehicleParams{});
  const double expected = -x[kVx] * (std::sin(x[kHeading]) + std::cos(x[kHeading]) * std::tan(x[kBeta]));
  EXPECT_NEAR(jac.wrt_state(kPosX, kHeading), expected, 1e-12);
}

TEST(IntegrateEstimatorModel, WrapsHeading) {
  VehicleState s;
  s.heading = kPi - 1e-4;
  s.yaw_rate = 1.0;
  s.vx = 5.0;
  const StateVector next = integrate_estimator_model(s.to_vector(), {}, 0.001, VehicleParams{});
  EXPECT_LT(next[kHeading], 0.0);
  EXPECT_NEAR(next[kHeading], -kPi + 9e-4, 1e-9);
}

TEST(Plant, WindForceMatchesDynamicPressure) {
  EXPECT_NEAR(wind_force(22.22), 0.5 * 1.225 * 2.0 * 22.22 * 22.22, 1e-9);
  EXPECT_EQ(wind_force(0.0), 0.0);
}

TEST(Plant, TireForceSaturatesAtFrictionLimit) {
  const double fz = axle_normal_load(871.6);
  EXPECT_NEAR(fz, 871.6 * 9.81, 1e-9);
  EXPECT_NEAR(saturated_axle_force(1.057e5, 1.0, 0.33, fz), 0.33 * fz, 1e-6);
  // Small slips stay on the linear branch.
  EXPECT_NEAR(saturated_axle_force(1.057e5, 1e-4, 1.0, fz), 1.057e5 * 1e-4, 1e-2);
}

TEST(Plant, ClampsCommandsAndKeepsSpeedNonNegative) {
  PlantState s;
  s.vx = 0.001;
  const PlantState next = plant_step(s, {5.0, -10.0}, {}, 0.001, VehicleParams{});
  EXPECT_GE(next.vx, 0.0);
  EXPECT_NEAR(next.delta, deg_to_rad(20.0) * 0.001, 1e-12);
}

TEST(Plant, StraightCoastKeepsSpeedAndHeading) {
  PlantState s;
  s.vx = 6.11;
  for (int i = 0; i < 1000; ++i) s = plant_step(s, {}, {}, 0.001, VehicleParams{});
  EXPECT_NEAR(s.pose.x, 6.11, 1e-9);
  EXPECT_NEAR(s.pose.y, 0.0, 1e-12);
  EXPECT_NEAR(s.vx, 6.11, 1e-12);
}

TEST(Plant, CrosswindPushesVehicleSideways) {
  PlantState s;
  s.vx = 6.11;
  EnvironmentSample env;
  env.wind_speed_lateral = 22.22;
  for (int i = 0; i < 500; ++i) s = plant_step(s, {}, env, 0.001, VehicleParams{});
  EXPECT_GT(std::abs(s.pose.y), 1e-4);
  EXPECT_GT(std::abs(s.lateral_accel), 0.0);
}
