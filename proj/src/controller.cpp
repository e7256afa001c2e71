#include "srpt/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srpt {

// --- reference buffer ---------------------------------------------------------------------

void ReferenceBuffer::push(const ReferencePoseMessage& msg) {
  if (!items_.empty() && !(msg.created_at > items_.back().created_at)) {
    throw std::invalid_argument("ReferenceBuffer::push: timestamps must be strictly increasing");
  }
  items_.push_back(msg);
  while (items_.size() > kCapacity) items_.pop_front();
}

void ReferenceBuffer::evict(double now) {
  while (!items_.empty() && items_.front().created_at < now - kMaxAge) items_.pop_front();
}

// --- configuration ------------------------------------------------------------------------

int NmpcConfig::substeps_per_node() const {
  return static_cast<int>(std::lround(node_dt() / substep));
}

void NmpcConfig::validate() const {
  if (steps < 2) throw std::invalid_argument("NmpcConfig: steps must be >= 2");
  if (!(horizon_seconds > 0.0) || !(substep > 0.0)) {
    throw std::invalid_argument("NmpcConfig: horizon and substep must be positive");
  }
  if (node_dt() < substep - 1e-12) throw std::invalid_argument("NmpcConfig: node shorter than substep");
  if (std::abs(substeps_per_node() * substep - node_dt()) > 1e-9) {
    throw std::invalid_argument("NmpcConfig: node duration must be a multiple of the substep");
  }
  const NmpcWeights& w = weights;
  for (double v : {w.position, w.heading, w.speed, w.input_steer, w.input_accel, w.terminal_scale}) {
    if (!(v >= 0.0)) throw std::invalid_argument("NmpcConfig: weights must be >= 0");
  }
  if (!(v_ref > 0.0)) throw std::invalid_argument("NmpcConfig: v_ref must be positive");
  if (!(step_tolerance > 0.0) || !(relative_tolerance >= 0.0)) {
    throw std::invalid_argument("NmpcConfig: tolerances must be positive");
  }
  if (max_iterations < 1) throw std::invalid_argument("NmpcConfig: max_iterations must be >= 1");
  if (min_iterations < 0) throw std::invalid_argument("NmpcConfig: min_iterations must be >= 0");
  if (!(limits.steer_rate_max > 0.0) || !(limits.accel_min < limits.accel_max)) {
    throw std::invalid_argument("NmpcConfig: invalid command limits");
  }
  if (!(speed_recovery_gain >= 1.0) || !(lateral_accel_cap > 0.0) || !(steer_lead_distance >= 0.0) ||
      !(min_knot_spacing > 0.0)) {
    throw std::invalid_argument("NmpcConfig: invalid speed-target shaping parameters");
  }
}

void NmpcConfig::apply(const KeyValueConfig& cfg) {
  cfg.assign("nmpc.horizon_seconds", &horizon_seconds);
  if (auto v = cfg.get("nmpc.steps")) steps = static_cast<int>(std::lround(*v));
  cfg.assign("nmpc.substep", &substep);
  cfg.assign("nmpc.w_pos", &weights.position);
  cfg.assign("nmpc.w_head", &weights.heading);
  cfg.assign("nmpc.w_speed", &weights.speed);
  cfg.assign("nmpc.w_input_steer", &weights.input_steer);
  cfg.assign("nmpc.w_input_accel", &weights.input_accel);
  cfg.assign("nmpc.terminal_scale", &weights.terminal_scale);
  cfg.assign("nmpc.v_ref", &v_ref);
  if (auto v = cfg.get("nmpc.max_iterations")) max_iterations = static_cast<int>(std::lround(*v));
  cfg.assign("nmpc.step_tolerance", &step_tolerance);
  cfg.assign("nmpc.relative_tolerance", &relative_tolerance);
  if (auto v = cfg.get("nmpc.min_iterations")) min_iterations = static_cast<int>(std::lround(*v));
  if (auto v = cfg.get("nmpc.steer_rate_max_deg")) limits.steer_rate_max = deg_to_rad(*v);
  cfg.assign("nmpc.accel_min", &limits.accel_min);
  cfg.assign("nmpc.accel_max", &limits.accel_max);
  cfg.assign("nmpc.speed_recovery_gain", &speed_recovery_gain);
  cfg.assign("nmpc.lateral_accel_cap", &lateral_accel_cap);
  cfg.assign("nmpc.steer_lead_distance", &steer_lead_distance);
  cfg.assign("nmpc.min_knot_spacing", &min_knot_spacing);
  validate();
}

// --- horizon reference --------------------------------------------------------------------

namespace {

struct Polyline {
  std::vector<Pose> points;
  std::vector<double> s;  // cumulative arclength

  double length() const { return s.back(); }

  Pose at(double arclength) const {
    if (arclength >= length()) {
      const Pose& end = points.back();
      const double extra = arclength - length();
      return {end.x + extra * std::cos(end.psi), end.y + extra * std::sin(end.psi), end.psi};
    }
    const auto it = std::upper_bound(s.begin(), s.end(), arclength);
    const std::size_t i = std::max<std::size_t>(1, static_cast<std::size_t>(it - s.begin())) - 1;
    const double seg = s[i + 1] - s[i];
    const double t = seg > 0.0 ? (arclength - s[i]) / seg : 1.0;
    const Pose& a = points[i];
    const Pose& b = points[i + 1];
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), interpolate_heading(a.psi, b.psi, t)};
  }
};

Polyline reference_polyline(const ReferenceBuffer& buf, const Pose& current, const NmpcConfig& cfg) {
  const ReferencePoseMessage& newest = buf.newest();
  const double newest_ahead = relative_pose(current, newest.pose).dx;
  Polyline line;
  line.points.push_back(current);
  double last_ahead = 0.0;
  for (const auto& msg : buf.items()) {
    if (&msg == &newest || msg.created_at < newest.created_at - cfg.horizon_seconds) continue;
    const double ahead = relative_pose(current, msg.pose).dx;
    if (ahead >= last_ahead + cfg.min_knot_spacing && ahead <= newest_ahead - cfg.min_knot_spacing) {
      line.points.push_back(msg.pose);
      last_ahead = ahead;
    }
  }
  line.points.push_back(newest.pose);
  line.s.push_back(0.0);
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    const double dx = line.points[i].x - line.points[i - 1].x;
    const double dy = line.points[i].y - line.points[i - 1].y;
    line.s.push_back(line.s.back() + std::hypot(dx, dy));
  }
  return line;
}

// Speed the vehicle can follow the received poses at: the lateral acceleration along the
// reference stays within the comfort cap, and the steer change each piece demands can be
// reached at the steer-rate bound before the vehicle gets there.
double feasible_speed(const Polyline& line, const VehicleState& xhat, const NmpcConfig& cfg,
                      const VehicleParams& p) {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < line.points.size(); ++i) {
    const double seg = std::max(line.s[i + 1] - line.s[i], cfg.min_knot_spacing);
    const double curvature = wrap_angle(line.points[i + 1].psi - line.points[i].psi) / seg;
    if (curvature == 0.0) continue;
    v = std::min(v, std::sqrt(cfg.lateral_accel_cap / std::abs(curvature)));
    const double needed = std::abs(p.wheelbase() * curvature - xhat.delta);
    if (needed > 1e-9) {
      v = std::min(v, cfg.limits.steer_rate_max * (line.s[i] + cfg.steer_lead_distance) / needed);
    }
  }
  return v;
}

}  // namespace

HorizonReference build_horizon_reference(const ReferenceBuffer& buf, const VehicleState& xhat,
                                         const NmpcConfig& cfg, const VehicleParams& p) {
  if (buf.empty()) throw std::invalid_argument("build_horizon_reference: empty reference buffer");
  const Polyline line = reference_polyline(buf, xhat.pose(), cfg);

  HorizonReference ref;
  const double recovery = cfg.speed_recovery_gain * line.length() / cfg.horizon_seconds;
  ref.v_target = std::min({cfg.v_ref, recovery, feasible_speed(line, xhat, cfg, p)});
  const double dt = cfg.node_dt();
  for (int k = 0; k <= cfg.steps; ++k) {
    ref.poses.push_back(k == 0 ? xhat.pose() : line.at(ref.v_target * dt * k));
    ref.speed.push_back(ref.v_target);
  }
  return ref;
}

// --- rollout, cost and gradient -----------------------------------------------------------

namespace {

// Forward pass storing every substep state, shared by the cost and its reverse sweep.
class ShootingProblem {
 public:
  ShootingProblem(const VehicleState& x0, const HorizonReference& ref, const NmpcConfig& cfg,
                  const VehicleParams& p)
      : x0_(x0.to_vector()), ref_(ref), cfg_(cfg), p_(p), substeps_(cfg.substeps_per_node()) {
    if (static_cast<int>(ref.poses.size()) != cfg.steps + 1 ||
        static_cast<int>(ref.speed.size()) != cfg.steps + 1) {
      throw std::invalid_argument("horizon reference must have steps + 1 nodes");
    }
  }

  double forward(const std::vector<ControlCommand>& u) {
    if (static_cast<int>(u.size()) != cfg_.steps) {
      throw std::invalid_argument("command sequence must have one entry per node");
    }
    u_ = u;
    states_.resize(static_cast<std::size_t>(cfg_.steps * substeps_ + 1));
    states_[0] = x0_;
    double cost = 0.0;
    std::size_t j = 0;
    for (int k = 0; k < cfg_.steps; ++k) {
      cost += cfg_.weights.input_steer * u[k].steer_rate * u[k].steer_rate +
              cfg_.weights.input_accel * u[k].accel * u[k].accel;
      for (int i = 0; i < substeps_; ++i, ++j) {
        states_[j + 1] = integrate_estimator_model(states_[j], u[k], cfg_.substep, p_);
      }
      cost += node_cost(k + 1, states_[j], nullptr);
    }
    return cost;
  }

  std::vector<ControlCommand> backward() const {
    std::vector<ControlCommand> grad(cfg_.steps);
    StateVector lambda = StateVector::Zero();
    std::size_t j = states_.size() - 1;
    for (int k = cfg_.steps - 1; k >= 0; --k) {
      StateVector node_grad;
      node_cost(k + 1, states_[j], &node_grad);
      lambda += node_grad;
      Eigen::Vector2d gu = Eigen::Vector2d::Zero();
      for (int i = 0; i < substeps_; ++i) {
        --j;
        const ModelJacobian jac = state_derivative_jacobian(states_[j], u_[k], p_);
        gu += cfg_.substep * jac.wrt_input.transpose() * lambda;
        lambda += cfg_.substep * jac.wrt_state.transpose() * lambda;
      }
      grad[k].steer_rate = gu[0] + 2.0 * cfg_.weights.input_steer * u_[k].steer_rate;
      grad[k].accel = gu[1] + 2.0 * cfg_.weights.input_accel * u_[k].accel;
    }
    return grad;
  }

  std::vector<VehicleState> node_states() const {
    std::vector<VehicleState> out;
    for (std::size_t j = 0; j < states_.size(); j += substeps_) out.push_back(VehicleState::from_vector(states_[j]));
    return out;
  }

 private:
  double node_cost(int k, const StateVector& x, StateVector* grad) const {
    const NmpcWeights& w = cfg_.weights;
    const double scale = (k == cfg_.steps) ? w.terminal_scale : 1.0;
    const Pose& r = ref_.poses[k];
    const double ex = x[kPosX] - r.x;
    const double ey = x[kPosY] - r.y;
    const double epsi = wrap_angle(x[kHeading] - r.psi);
    const double ev = x[kVx] - ref_.speed[k];
    if (grad) {
      grad->setZero();
      (*grad)[kPosX] = 2.0 * scale * w.position * ex;
      (*grad)[kPosY] = 2.0 * scale * w.position * ey;
      (*grad)[kHeading] = 2.0 * scale * w.heading * epsi;
      (*grad)[kVx] = 2.0 * scale * w.speed * ev;
    }
    return scale * (w.position * (ex * ex + ey * ey) + w.heading * epsi * epsi + w.speed * ev * ev);
  }

  StateVector x0_;
  const HorizonReference& ref_;
  const NmpcConfig& cfg_;
  const VehicleParams& p_;
  int substeps_;
  std::vector<ControlCommand> u_;
  std::vector<StateVector> states_;
};

}  // namespace

std::vector<VehicleState> rollout(const VehicleState& x0, const std::vector<ControlCommand>& commands,
                                  const NmpcConfig& cfg, const VehicleParams& p) {
  std::vector<VehicleState> out{x0};
  StateVector x = x0.to_vector();
  const int substeps = cfg.substeps_per_node();
  for (const ControlCommand& u : commands) {
    for (int i = 0; i < substeps; ++i) x = integrate_estimator_model(x, u, cfg.substep, p);
    out.push_back(VehicleState::from_vector(x));
  }
  return out;
}

double horizon_cost(const VehicleState& x0, const std::vector<ControlCommand>& commands,
                    const HorizonReference& ref, const NmpcConfig& cfg, const VehicleParams& p) {
  ShootingProblem problem(x0, ref, cfg, p);
  return problem.forward(commands);
}

std::vector<ControlCommand> horizon_cost_gradient(const VehicleState& x0,
                                                  const std::vector<ControlCommand>& commands,
                                                  const HorizonReference& ref, const NmpcConfig& cfg,
                                                  const VehicleParams& p, double* cost) {
  ShootingProblem problem(x0, ref, cfg, p);
  const double j = problem.forward(commands);
  if (cost) *cost = j;
  return problem.backward();
}

std::vector<ControlCommand> horizon_cost_gradient_fd(const VehicleState& x0,
                                                     const std::vector<ControlCommand>& commands,
                                                     const HorizonReference& ref,
                                                     const NmpcConfig& cfg, const VehicleParams& p,
                                                     double h) {
  std::vector<ControlCommand> grad(commands.size());
  std::vector<ControlCommand> u = commands;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    for (double ControlCommand::*field : {&ControlCommand::steer_rate, &ControlCommand::accel}) {
      const double base = u[k].*field;
      u[k].*field = base + h;
      const double plus = horizon_cost(x0, u, ref, cfg, p);
      u[k].*field = base - h;
      const double minus = horizon_cost(x0, u, ref, cfg, p);
      u[k].*field = base;
      grad[k].*field = (plus - minus) / (2.0 * h);
    }
  }
  return grad;
}

// --- solver -------------------------------------------------------------------------------

NmpcController::NmpcController(NmpcConfig cfg, VehicleParams p) : cfg_(cfg), p_(p) {
  cfg_.validate();
  p_.validate();
}

namespace {

// Decision variables: steer rate scaled by its bound, acceleration unscaled.
using Variables = Eigen::VectorXd;

Variables to_variables(const std::vector<ControlCommand>& u, const CommandLimits& lim) {
  Variables z(2 * u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    z[2 * k] = u[k].steer_rate / lim.steer_rate_max;
    z[2 * k + 1] = u[k].accel;
  }
  return z;
}

std::vector<ControlCommand> to_commands(const Variables& z, const CommandLimits& lim) {
  std::vector<ControlCommand> u(z.size() / 2);
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k].steer_rate = z[2 * k] * lim.steer_rate_max;
    u[k].accel = z[2 * k + 1];
  }
  return u;
}

Variables project(Variables z, const CommandLimits& lim) {
  for (Eigen::Index i = 0; i < z.size(); i += 2) {
    z[i] = std::clamp(z[i], -1.0, 1.0);
    z[i + 1] = std::clamp(z[i + 1], lim.accel_min, lim.accel_max);
  }
  return z;
}

Variables variable_gradient(const std::vector<ControlCommand>& g, const CommandLimits& lim) {
  Variables out(2 * g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[2 * k] = g[k].steer_rate * lim.steer_rate_max;
    out[2 * k + 1] = g[k].accel;
  }
  return out;
}

}  // namespace

NmpcSolution NmpcController::optimize(const VehicleState& xhat, const HorizonReference& ref,
                                      std::vector<ControlCommand> initial) const {
  const CommandLimits& lim = cfg_.limits;
  initial.resize(cfg_.steps);
  for (auto& u : initial) u = lim.clamp(u);

  ShootingProblem problem(xhat, ref, cfg_, p_);
  auto evaluate = [&](const Variables& z) {
    try {
      const double j = problem.forward(to_commands(z, lim));
      return std::isfinite(j) ? j : std::numeric_limits<double>::infinity();
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NmpcSolution sol;
  sol.v_target = ref.v_target;
  Variables z = project(to_variables(initial, lim), lim);
  double cost = evaluate(z);
  sol.initial_cost = cost;

  if (!std::isfinite(cost)) {
    sol.fallback = true;
    sol.commands.assign(cfg_.steps, ControlCommand{0.0, lim.accel_min});
    sol.cost = cost;
    try {
      sol.trajectory = rollout(xhat, sol.commands, cfg_, p_);
    } catch (const std::invalid_argument&) {
      sol.trajectory = {xhat};
    }
    return sol;
  }

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 12;
  Variables g = variable_gradient(problem.backward(), lim);
  double alpha = 0.1 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-12);
  std::vector<StateVector> accepted_states;
  for (int it = 0; it < cfg_.max_iterations; ++it) {
    bool accepted = false;
    Variables z_new;
    double cost_new = cost;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      z_new = project(z - alpha * g, lim);
      const Variables step = z_new - z;
      if (step.lpNorm<Eigen::Infinity>() < cfg_.step_tolerance) break;
      cost_new = evaluate(z_new);
      if (cost_new <= cost + kArmijo * g.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    ++sol.iterations;
    const Variables g_new = variable_gradient(problem.backward(), lim);
    const Variables s = z_new - z;
    const Variables y = g_new - g;
    const double sy = s.dot(y);
    alpha = sy > 1e-14 ? std::clamp(s.squaredNorm() / sy, 1e-8, 1e3) : std::min(alpha * 2.0, 1e3);
    z = z_new;
    g = g_new;
    const double improvement = cost - cost_new;
    cost = cost_new;
    if (sol.iterations >= cfg_.min_iterations &&
        improvement <= cfg_.relative_tolerance * std::max(cost, 1e-12)) {
      break;
    }
  }

  sol.commands = to_commands(z, lim);
  for (auto& u : sol.commands) u = lim.clamp(u);
  sol.cost = cost;
  sol.trajectory = rollout(xhat, sol.commands, cfg_, p_);
  return sol;
}

std::vector<ControlCommand> NmpcController::warm_start(double now) const {
  std::vector<ControlCommand> out(cfg_.steps);
  if (previous_.empty() || !previous_time_) return out;
  const double shift = std::max(0.0, (now - *previous_time_) / cfg_.node_dt());
  const int last = cfg_.steps - 1;
  for (int k = 0; k < cfg_.steps; ++k) {
    const double pos = std::min(k + shift, static_cast<double>(last));
    const int i = static_cast<int>(std::floor(pos));
    const int i1 = std::min(i + 1, last);
    const double t = pos - i;
    out[k].steer_rate = (1.0 - t) * previous_[i].steer_rate + t * previous_[i1].steer_rate;
    out[k].accel = (1.0 - t) * previous_[i].accel + t * previous_[i1].accel;
  }
  return out;
}

NmpcSolution NmpcController::solve(double now, const VehicleState& xhat, const ReferenceBuffer& buf) {
  NmpcSolution sol;
  if (buf.empty()) {
    sol.degraded = true;
    sol.commands.assign(cfg_.steps, last_command_);
    sol.trajectory = rollout(xhat, sol.commands, cfg_, p_);
    return sol;
  }
  const HorizonReference ref = build_horizon_reference(buf, xhat, cfg_, p_);
  sol = optimize(xhat, ref, warm_start(now));
  previous_ = sol.commands;
  previous_time_ = now;
  last_command_ = sol.first();
  return sol;
}

}  // namespace srpt
