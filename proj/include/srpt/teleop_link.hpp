#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srpt/config.hpp"

namespace srpt {

/// Downlink delay ~ GEV(xi, mu, sigma) clamped to [mu - sigma/xi, clamp_max]; uplink constant.
struct DelayModel {
  double xi = 0.29;
  double mu = 0.200;      // s
  double sigma = 0.009;   // s
  double clamp_max = 0.300;
  double uplink = 0.060;

  double lower_bound() const { return mu - sigma / xi; }
  /// GEV quantile for u in (0, 1), before clamping.
  double quantile(double u) const;
  /// Closed-form median, used as the delay prior before any message has arrived.
  double median() const { return quantile(0.5); }

  void validate() const;
  void apply(const KeyValueConfig& cfg);
};

double sample_downlink_delay(const DelayModel& model, std::mt19937_64& rng);

template <class T>
struct TimestampedMessage {
  T payload;
  double created_at = 0.0;
  double deliver_at = 0.0;
};

struct LatencyRecord {
  double created_at = 0.0;
  double deliver_at = 0.0;
  bool dropped = false;
};

/// Delivers messages at their arrival time, in creation order. A message that arrives after a
/// newer one has already been delivered is dropped.
template <class T>
class Channel {
 public:
  /// Time comparisons tolerate accumulated round-off on the 1 ms grid.
  static constexpr double kTimeEpsilon = 1e-9;

  explicit Channel(bool record_trace = false) : record_trace_(record_trace) {}

  void send(T payload, double now, double delay) {
    if (!(delay >= 0.0)) throw std::invalid_argument("Channel::send: delay must be >= 0");
    pending_.emplace(std::make_pair(now + delay, next_seq_++),
                     TimestampedMessage<T>{std::move(payload), now, now + delay});
  }

  std::vector<T> poll(double now) {
    std::vector<T> out;
    while (!pending_.empty() && pending_.begin()->second.deliver_at <= now + kTimeEpsilon) {
      auto node = pending_.extract(pending_.begin());
      TimestampedMessage<T>& msg = node.mapped();
      const bool stale = has_delivered_ && msg.created_at <= last_created_at_;
      if (record_trace_) trace_.push_back({msg.created_at, msg.deliver_at, stale});
      if (stale) {
        ++dropped_;
        continue;
      }
      has_delivered_ = true;
      last_created_at_ = msg.created_at;
      out.push_back(std::move(msg.payload));
    }
    return out;
  }

  std::size_t pending() const { return pending_.size(); }
  std::size_t dropped() const { return dropped_; }
  const std::vector<LatencyRecord>& trace() const { return trace_; }

 private:
  std::map<std::pair<double, std::uint64_t>, TimestampedMessage<T>> pending_;
  std::uint64_t next_seq_ = 0;
  bool has_delivered_ = false;
  double last_created_at_ = 0.0;
  std::size_t dropped_ = 0;
  bool record_trace_ = false;
  std::vector<LatencyRecord> trace_;
};

/// Base clock of the simulation: 1 kHz.
inline constexpr int kBaseRateHz = 1000;
inline constexpr double kBaseStep = 1.0 / kBaseRateHz;

/// A task rate realised on the 1 ms grid: fires at ticks floor(k * 1000 / hz).
/// 30 Hz therefore follows a 33/33/34 ms cycle.
class Rate {
 public:
  explicit Rate(int hz);
  bool fires(std::int64_t tick) const;
  int hz() const { return hz_; }

 private:
  int hz_;
};

struct RateSchedule {
  Rate plant{1000};
  Rate sensors{100};
  Rate nmpc{50};
  Rate operator_side{30};
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double sim_time);
  double sim_time() const { return sim_time_; }

 private:
  double sim_time_;
};

/// Fixed-step scheduler. On every 1 ms tick, due tasks fire in registration order.
/// Tick n covers (n-1, n] ms; callbacks receive now = n ms.
class Scheduler {
 public:
  using Callback = std::function<void(double now)>;

  void add(std::string name, Rate rate, Callback callback);

  /// Runs ticks 1..round(duration/1 ms), or until `stop` returns true after a tick.
  void run(double duration, const std::function<bool()>& stop = {});

  double now() const { return static_cast<double>(tick_) * kBaseStep; }
  std::int64_t tick() const { return tick_; }
  std::int64_t fire_count(const std::string& name) const;

 private:
  struct Task {
    std::string name;
    Rate rate;
    Callback callback;
    std::int64_t fired = 0;
  };
  std::vector<Task> tasks_;
  std::int64_t tick_ = 0;
};

}  // namespace srpt
