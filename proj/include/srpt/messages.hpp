#pragma once

#include "srpt/geometry.hpp"
#include "srpt/vehicle_dynamics.hpp"

namespace srpt {

/// Operator -> vehicle: a global reference pose, stamped with the operator clock.
struct ReferencePoseMessage {
  Pose pose;
  double created_at = 0.0;
};

/// Vehicle -> operator: estimated and actual state captured at the same instant.
struct VehicleSnapshot {
  double created_at = 0.0;
  VehicleState estimate;
  PlantState actual;
};

/// Operator -> vehicle in look-ahead-driver mode: steer angle and speed targets.
struct SteerMessage {
  double steer_target = 0.0;
  double speed_target = 0.0;
  double created_at = 0.0;
};

}  // namespace srpt
