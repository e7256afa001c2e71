#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "srpt/config.hpp"
#include "srpt/messages.hpp"
#include "srpt/vehicle_dynamics.hpp"

namespace srpt {

/// Most recent reference poses, oldest first. Creation timestamps are strictly increasing.
class ReferenceBuffer {
 public:
  static constexpr std::size_t kCapacity = 64;
  static constexpr double kMaxAge = 3.0;  // s

  /// Throws std::invalid_argument when `msg` is not newer than the newest entry.
  void push(const ReferencePoseMessage& msg);
  /// Drops entries created more than kMaxAge before `now`.
  void evict(double now);

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  const ReferencePoseMessage& newest() const { return items_.back(); }
  const std::deque<ReferencePoseMessage>& items() const { return items_; }

 private:
  std::deque<ReferencePoseMessage> items_;
};

struct NmpcWeights {
  double position = 1.0;
  double heading = 2.0;
  double speed = 0.5;
  double input_steer = 0.1;
  double input_accel = 0.05;
  double terminal_scale = 10.0;
};

struct NmpcConfig {
  double horizon_seconds = 1.0;
  int steps = 20;
  double substep = 0.001;
  CommandLimits limits;
  NmpcWeights weights;
  double v_ref = 22.0 / 3.6;  // m/s

  int max_iterations = 30;
  /// Stop when the projected-gradient step changes no variable by more than this.
  double step_tolerance = 1e-5;
  /// Stop when an accepted step lowers the cost by less than this fraction...
  double relative_tolerance = 1e-4;
  /// ...but only after this many iterations, once the step length has adapted.
  int min_iterations = 5;

  // Speed-target shaping.
  double speed_recovery_gain = 1.25;
  double lateral_accel_cap = 2.0;     // m/s^2
  double steer_lead_distance = 2.0;   // m
  double min_knot_spacing = 1.0;      // m

  double node_dt() const { return horizon_seconds / steps; }
  int substeps_per_node() const;

  void validate() const;
  /// Overrides fields from `nmpc.*` keys.
  void apply(const KeyValueConfig& cfg);
};

/// Per-node reference for the horizon: poses at nodes 0..N and the speed target.
struct HorizonReference {
  std::vector<Pose> poses;
  std::vector<double> speed;
  double v_target = 0.0;
};

/// Builds the reference polyline current pose -> interior received poses -> newest pose and
/// samples it at arclength v_target * t_k. Throws std::invalid_argument on an empty buffer.
HorizonReference build_horizon_reference(const ReferenceBuffer& buf, const VehicleState& xhat,
                                         const NmpcConfig& cfg, const VehicleParams& p);

/// Node states 0..N: piecewise-constant commands integrated at `cfg.substep`.
std::vector<VehicleState> rollout(const VehicleState& x0, const std::vector<ControlCommand>& commands,
                                  const NmpcConfig& cfg, const VehicleParams& p);

/// Tracking + input cost of a command sequence.
double horizon_cost(const VehicleState& x0, const std::vector<ControlCommand>& commands,
                    const HorizonReference& ref, const NmpcConfig& cfg, const VehicleParams& p);

/// Exact gradient of horizon_cost with respect to (steer rate, accel) of every node,
/// by reverse-mode differentiation through the discrete rollout.
std::vector<ControlCommand> horizon_cost_gradient(const VehicleState& x0,
                                                  const std::vector<ControlCommand>& commands,
                                                  const HorizonReference& ref, const NmpcConfig& cfg,
                                                  const VehicleParams& p, double* cost = nullptr);

/// Central finite-difference gradient of horizon_cost.
std::vector<ControlCommand> horizon_cost_gradient_fd(const VehicleState& x0,
                                                     const std::vector<ControlCommand>& commands,
                                                     const HorizonReference& ref,
                                                     const NmpcConfig& cfg, const VehicleParams& p,
                                                     double h = 1e-6);

struct NmpcSolution {
  std::vector<ControlCommand> commands;
  std::vector<VehicleState> trajectory;
  double cost = 0.0;
  double initial_cost = 0.0;
  int iterations = 0;
  double v_target = 0.0;
  bool degraded = false;  // no reference available: last command held
  bool fallback = false;  // non-finite cost: braking fallback

  ControlCommand first() const { return commands.front(); }
};

/// Shooting NMPC solved by projected gradient descent (Barzilai-Borwein step, Armijo
/// backtracking), warm-started from the previous solution.
class NmpcController {
 public:
  NmpcController(NmpcConfig cfg, VehicleParams p);

  NmpcSolution solve(double now, const VehicleState& xhat, const ReferenceBuffer& buf);
  /// Optimises from an explicit initial sequence (no warm-start bookkeeping).
  NmpcSolution optimize(const VehicleState& xhat, const HorizonReference& ref,
                        std::vector<ControlCommand> initial) const;

  const NmpcConfig& config() const { return cfg_; }
  ControlCommand last_command() const { return last_command_; }

 private:
  std::vector<ControlCommand> warm_start(double now) const;

  NmpcConfig cfg_;
  VehicleParams p_;
  std::vector<ControlCommand> previous_;
  std::optional<double> previous_time_;
  ControlCommand last_command_;
};

}  // namespace srpt
