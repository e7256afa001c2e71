#include "srpt/teleop_link.hpp"

#include <algorithm>
#include <cmath>

namespace srpt {

double DelayModel::quantile(double u) const {
  return mu + sigma * (std::pow(-std::log(u), -xi) - 1.0) / xi;
}

void DelayModel::validate() const {
  if (!(xi > 0.0)) throw std::invalid_argument("DelayModel: xi must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("DelayModel: sigma must be positive");
  if (!(lower_bound() > 0.0)) throw std::invalid_argument("DelayModel: lower bound must be positive");
  if (clamp_max < lower_bound()) throw std::invalid_argument("DelayModel: clamp below lower bound");
  if (uplink < 0.0) throw std::invalid_argument("DelayModel: uplink delay must be >= 0");
}

void DelayModel::apply(const KeyValueConfig& cfg) {
  cfg.assign("delay.xi", &xi);
  cfg.assign("delay.mu", &mu);
  cfg.assign("delay.sigma", &sigma);
  cfg.assign("delay.clamp_max", &clamp_max);
  cfg.assign("delay.uplink", &uplink);
}

double sample_downlink_delay(const DelayModel& model, std::mt19937_64& rng) {
  // Open interval keeps -log(u) finite and positive.
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  while (u <= 0.0) u = uniform(rng);
  return std::clamp(model.quantile(u), model.lower_bound(), model.clamp_max);
}

Rate::Rate(int hz) : hz_(hz) {
  if (hz <= 0 || hz > kBaseRateHz) throw std::invalid_argument("Rate: hz must lie in (0, 1000]");
}

bool Rate::fires(std::int64_t tick) const {
  if (tick < 0) return false;
  const std::int64_t k = (tick * hz_ + kBaseRateHz - 1) / kBaseRateHz;  // ceil
  return (k * kBaseRateHz) / hz_ == tick;
}

SimulationError::SimulationError(const std::string& what, double sim_time)
    : std::runtime_error(what + " (t=" + std::to_string(sim_time) + " s)"), sim_time_(sim_time) {}

void Scheduler::add(std::string name, Rate rate, Callback callback) {
  tasks_.push_back({std::move(name), rate, std::move(callback), 0});
}

void Scheduler::run(double duration, const std::function<bool()>& stop) {
  const std::int64_t ticks = std::llround(duration / kBaseStep);
  for (std::int64_t i = 0; i < ticks; ++i) {
    ++tick_;
    const double t = now();
    for (auto& task : tasks_) {
      if (!task.rate.fires(tick_)) continue;
      try {
        task.callback(t);
      } catch (const SimulationError&) {
        throw;
      } catch (const std::exception& e) {
        throw SimulationError("task '" + task.name + "' failed: " + e.what(), t);
      }
      ++task.fired;
    }
    if (stop && stop()) break;
  }
}

std::int64_t Scheduler::fire_count(const std::string& name) const {
  for (const auto& task : tasks_) {
    if (task.name == name) return task.fired;
  }
  return 0;
}

}  // namespace srpt
