#pragma once

// Minute-tick discrete-event simulator of cooking, batching, dispatch,
// driving and delivery for one restaurant.
//
// Two modes:
//   baseline   replays the dataset's historical trips verbatim
//   optimized  batches and routes come from the latest dispatch-loop decision
//
// Every state change is appended to a RunLog as
// {tick, entity_kind, entity_id, transition, detail}.

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <numeric>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cloudkitchen/dataset.hpp"
#include "cloudkitchen/dispatch.hpp"
#include "cloudkitchen/order.hpp"
#include "cloudkitchen/plan.hpp"
#include "cloudkitchen/time.hpp"
#include "cloudkitchen/travel.hpp"

namespace ck {

inline constexpr Seconds kTickSeconds = 60;
inline constexpr Seconds kDefaultLoadSeconds = 120;
/// Orders ready within, and vehicles returning within, this many seconds are
/// handed to the dispatch loop.
inline constexpr Seconds kDefaultLookahead = 300;

enum class RunMode { Baseline, Optimized };

inline const char* to_string(RunMode m) { return m == RunMode::Baseline ? "baseline" : "optimized"; }

inline RunMode parse_run_mode(std::string_view s) {
  if (s == "baseline") return RunMode::Baseline;
  if (s == "optimized") return RunMode::Optimized;
  throw InputError("unknown mode '" + std::string(s) + "' (expected baseline or optimized)");
}

struct RunConfig {
  RunMode mode = RunMode::Optimized;
  double calibration_factor = 1.6666;
  std::uint64_t rng_seed = 0;
  LoopConfig loop;
  Seconds load_seconds = kDefaultLoadSeconds;
  /// Off in interactive service mode, where staff issue dispatch commands.
  bool auto_dispatch = true;
  /// Step multiplier for the retry after a failed episode.
  int failure_delta_multiplier = 5;

  void check() const {
    if (!(calibration_factor > 0.0)) throw InputError("calibration factor must be positive");
    if (load_seconds < 0) throw InputError("load time must be non-negative");
    if (failure_delta_multiplier < 1) throw InputError("failure delta multiplier must be at least 1");
    loop.check();
  }
};

class SimulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Run log

struct LogEntry {
  Seconds tick = 0;
  std::string entity_kind;
  std::string entity_id;
  std::string transition;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct RunLog {
  std::vector<LogEntry> entries;

  std::string to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
      nlohmann::ordered_json j;
      j["tick"] = e.tick;
      j["entity_kind"] = e.entity_kind;
      j["entity_id"] = e.entity_id;
      j["transition"] = e.transition;
      j["detail"] = e.detail;
      out += j.dump();
      out += '\n';
    }
    return out;
  }

  static RunLog from_jsonl(std::istream& in) {
    RunLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::ordered_json::parse(line);
        log.entries.push_back(LogEntry{j.at("tick").get<Seconds>(), j.at("entity_kind").get<std::string>(),
                                       j.at("entity_id").get<std::string>(), j.at("transition").get<std::string>(),
                                       j.value("detail", nlohmann::ordered_json::object())});
      } catch (const nlohmann::json::exception& e) {
        throw LoadError("run log line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return log;
  }

  static RunLog from_jsonl(const std::string& text) {
    std::istringstream in(text);
    return from_jsonl(in);
  }
};

/// Wall-clock measurements kept out of the log so logs stay reproducible.
struct RunStats {
  std::vector<double> decide_wall_ms;
  std::vector<std::size_t> decide_active_orders;
  std::size_t episodes = 0;
  std::size_t failed_episodes = 0;
  std::size_t dispatches = 0;
};

// ---------------------------------------------------------------------------
// Leg timing

/// Simulated driving seconds of a leg: the provider estimate scaled by the
/// calibration factor, rounded to the nearest second.
inline Seconds simulated_leg_seconds(Seconds provider_seconds, double factor) {
  return historical_leg_seconds(provider_seconds, factor);
}

/// Whole ticks a leg occupies (rounded up).
inline Seconds leg_ticks(Seconds leg_seconds) { return ceil_div(leg_seconds, kTickSeconds); }

// ---------------------------------------------------------------------------
// Auto dispatch

struct Batch {
  std::string vehicle_id;
  /// Orders in stop order.
  std::vector<std::string> order_ids;
  Seconds deadline = 0;
};

struct AutoDispatchInput {
  std::vector<Batch> batches;
  std::set<std::string> cooked_orders;
  /// Vehicles waiting at the restaurant.
  std::set<std::string> ready_vehicles;
};

struct AutoDispatchCommand {
  std::size_t batch = 0;
  std::string vehicle_id;

  friend bool operator==(const AutoDispatchCommand&, const AutoDispatchCommand&) = default;
};

/// A batch goes out when all its orders are cooked and a vehicle is waiting.
/// Batches are taken earliest deadline first; each gets its planned vehicle
/// if that one is waiting, otherwise the lowest-id waiting vehicle.
inline std::vector<AutoDispatchCommand> auto_dispatch_check(const AutoDispatchInput& input) {
  std::vector<std::size_t> order(input.batches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return input.batches[a].deadline < input.batches[b].deadline;
  });
  std::set<std::string> ready = input.ready_vehicles;
  std::vector<AutoDispatchCommand> out;
  for (std::size_t b : order) {
    if (ready.empty()) break;
    const auto& batch = input.batches[b];
    if (batch.order_ids.empty()) continue;
    const bool cooked = std::all_of(batch.order_ids.begin(), batch.order_ids.end(),
                                    [&](const std::string& id) { return input.cooked_orders.contains(id); });
    if (!cooked) continue;
    auto it = ready.find(batch.vehicle_id);
    if (it == ready.end()) it = ready.begin();
    out.push_back(AutoDispatchCommand{b, *it});
    ready.erase(it);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CalibrationResult {
  double factor = 0.0;
  std::size_t legs_used = 0;
  /// Legs whose provider estimate is zero.
  std::size_t legs_excluded = 0;
  Seconds historical_seconds = 0;
  Seconds provider_seconds = 0;
};

/// factor = sum of historical leg seconds / sum of provider estimates over the
/// same legs (restaurant to first stop, then stop to stop).
inline CalibrationResult calibrate(const Dataset& ds, const TravelTimeProvider& provider) {
  CalibrationResult r;
  for (const auto& [key, idx] : historical_trips(ds)) {
    GeoPoint at = ds.restaurant.location;
    for (std::size_t i : idx) {
      const auto& h = ds.orders[i];
      const Seconds est = provider.estimate(at, h.order.location).seconds;
      at = h.order.location;
      if (est <= 0) {
        ++r.legs_excluded;
        continue;
      }
      ++r.legs_used;
      r.historical_seconds += h.hist_leg_seconds;
      r.provider_seconds += est;
    }
  }
  if (r.legs_used == 0 || r.provider_seconds <= 0) throw CalibrationError("dataset has no usable historical legs");
  r.factor = static_cast<double>(r.historical_seconds) / static_cast<double>(r.provider_seconds);
  return r;
}

// ---------------------------------------------------------------------------
// Simulation

enum class OrderPhase { Pending, Received, Cooked, Assigned, Dispatched, EnRoute, Delivered, Undeliverable };
enum class VehiclePhase { Ready, Loading, Delivering, Returning };

inline const char* to_string(OrderPhase s) {
  switch (s) {
    case OrderPhase::Pending: return "pending";
    case OrderPhase::Received: return "received";
    case OrderPhase::Cooked: return "cooked";
    case OrderPhase::Assigned: return "assigned";
    case OrderPhase::Dispatched: return "dispatched";
    case OrderPhase::EnRoute: return "en-route";
    case OrderPhase::Delivered: return "delivered";
    case OrderPhase::Undeliverable: return "undeliverable";
  }
  return "?";
}

inline const char* to_string(VehiclePhase s) {
  switch (s) {
    case VehiclePhase::Ready: return "ready";
    case VehiclePhase::Loading: return "loading";
    case VehiclePhase::Delivering: return "delivering";
    case VehiclePhase::Returning: return "returning";
  }
  return "?";
}

struct OrderView {
  const HistoricalOrder* record = nullptr;
  OrderPhase status = OrderPhase::Pending;
  Seconds cooked_tick = 0;
  std::optional<Seconds> delivered_tick;
  std::string vehicle;
};

struct VehicleView {
  std::string id;
  VehiclePhase status = VehiclePhase::Ready;
  /// Remaining stops of the current trip.
  std::vector<std::string> stops;
  std::optional<Seconds> return_tick;
  /// Last known node: "depot" or an order id.
  std::string position = "depot";
};

/// Staff or automatic dispatch request against the latest decision.
struct DispatchCommand {
  std::string vehicle_id;
  std::string delivery_id;
  std::string issued_by = "auto";
  Seconds issued_at = 0;
  std::optional<std::size_t> plan_episode;
};

struct DispatchResult {
  bool accepted = false;
  std::string code;
  std::string message;
};

namespace dispatch_code {
inline constexpr std::string_view kBatchNotReady = "BATCH_NOT_READY";
inline constexpr std::string_view kVehicleNotReady = "VEHICLE_NOT_READY";
inline constexpr std::string_view kUnknownDelivery = "UNKNOWN_DELIVERY";
inline constexpr std::string_view kAlreadyDispatched = "DELIVERY_ALREADY_DISPATCHED";
inline constexpr std::string_view kStalePlan = "STALE_PLAN";
inline constexpr std::string_view kUnknownObject = "UNKNOWN_OBJECT";
}  // namespace dispatch_code

class Simulation {
public:
  Simulation(const Dataset& ds, const TravelTimeProvider& provider, RunConfig config)
      : ds_(ds), provider_(provider), config_(std::move(config)), scaled_(provider, config_.calibration_factor) {
    config_.check();
    check_dataset(ds_);
    origin_ = ds_.orders.empty() ? 0 : day_start(std::min_element(ds_.orders.begin(), ds_.orders.end(),
                                                                  [](const auto& a, const auto& b) {
                                                                    return a.order.placed_at < b.order.placed_at;
                                                                  })->order.placed_at);
    dm_.depot = ds_.restaurant.location;
    orders_.resize(ds_.orders.size());
    for (std::size_t i = 0; i < ds_.orders.size(); ++i) {
      orders_[i].record = &ds_.orders[i];
      order_index_.emplace(ds_.orders[i].order.id, i);
    }
    for (const auto& v : ds_.vehicles) {
      vehicle_index_.emplace(v.id, vehicles_.size());
      vehicles_.push_back(VehicleView{v.id, VehiclePhase::Ready, {}, std::nullopt, "depot"});
    }

    nlohmann::ordered_json head;
    head["origin"] = format_timestamp(origin_);
    head["tick_seconds"] = kTickSeconds;
    head["mode"] = to_string(config_.mode);
    head["calibration_factor"] = config_.calibration_factor;
    head["seed"] = config_.rng_seed;
    head["load_seconds"] = config_.load_seconds;
    head["orders"] = ds_.orders.size();
    head["vehicles"] = ds_.vehicles.size();
    emit(0, "run", "run", "start", std::move(head));

    for (std::size_t i = 0; i < ds_.orders.size(); ++i) {
      const auto& o = ds_.orders[i].order;
      const Seconds received = tick_of(o.placed_at);
      const Seconds cooked = std::max(received, tick_of(o.ready_at));
      orders_[i].cooked_tick = cooked;
      push(received, Event{EventKind::OrderReceived, i});
      push(cooked, Event{EventKind::OrderCooked, i});
      if (config_.mode == RunMode::Optimized) {
        const Seconds soon = std::max(received, ceil_div(o.ready_at - origin_ - config_.loop.lookahead, kTickSeconds));
        push(soon, Event{EventKind::OrderReadySoon, i});
      }
    }
    if (config_.mode == RunMode::Baseline) {
      setup_baseline();
    } else {
      for (const auto& v : ds_.vehicles) note(DispatchEvents{{}, {}, {Vehicle{v.id, v.capacity}}});
    }
    now_ = queue_.empty() ? 0 : queue_.top().tick;
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  Seconds origin() const noexcept { return origin_; }
  Seconds now_tick() const noexcept { return now_; }
  Seconds now_seconds() const noexcept { return origin_ + now_ * kTickSeconds; }
  const RunLog& log() const noexcept { return log_; }
  const RunStats& stats() const noexcept { return stats_; }
  const RunConfig& config() const noexcept { return config_; }
  const Dataset& dataset() const noexcept { return ds_; }
  const std::vector<OrderView>& orders() const noexcept { return orders_; }
  const std::vector<VehicleView>& vehicles() const noexcept { return vehicles_; }
  const std::optional<LoopDecision>& decision() const noexcept { return decision_; }
  const std::vector<Batch>& batches() const noexcept { return batches_; }
  std::size_t episode() const noexcept { return episode_; }
  /// True when the most recent decide call ran out of budget.
  bool last_episode_failed() const noexcept { return retry_; }
  bool finished() const noexcept { return finished_; }

  /// True while events remain or an order is still undelivered.
  bool has_pending_work() const noexcept { return !queue_.empty() || delivered_ < orders_.size(); }

  /// Processes every tick with events up to and including `target`, then
  /// leaves the clock at `target`.
  void advance_to(Seconds target) {
    if (finished_) return;
    while (!queue_.empty() && queue_.top().tick <= target) {
      now_ = std::max(now_, queue_.top().tick);
      while (!queue_.empty() && queue_.top().tick <= now_) {
        const auto ev = queue_.top();
        queue_.pop();
        handle(ev);
      }
      after_events();
    }
    now_ = std::max(now_, target);
  }

  /// Processes the next tick that has events; closes the run when none remain.
  void step() {
    if (finished_) return;
    if (queue_.empty()) {
      finish();
      return;
    }
    advance_to(queue_.top().tick);
  }

  /// Runs to completion (headless).
  void run() {
    if (!config_.auto_dispatch) throw SimulationError("run() requires auto dispatch");
    while (!finished_) step();
  }

  /// Closes the run: undelivered orders are logged as undeliverable.
  void finish() {
    if (finished_) return;
    finished_ = true;
    Seconds last = now_;
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      auto& o = orders_[i];
      if (o.status == OrderPhase::Delivered) continue;
      nlohmann::ordered_json d;
      d["reason"] = failed_days_.empty() ? "not dispatched before the run ended" : "no decision available";
      d["last_status"] = to_string(o.status);
      o.status = OrderPhase::Undeliverable;
      emit(last, "order", o.record->order.id, "undeliverable", std::move(d));
    }
    emit(last, "run", "run", "end", nlohmann::ordered_json{{"delivered", delivered_}});
  }

  /// Executes a dispatch command for delivery dN of the latest decision.
  DispatchResult dispatch(const DispatchCommand& cmd) {
    using namespace dispatch_code;
    if (cmd.plan_episode && *cmd.plan_episode != episode_) {
      return {false, std::string(kStalePlan), "plan episode " + std::to_string(*cmd.plan_episode) +
                                                  " is not the latest (" + std::to_string(episode_) + ")"};
    }
    std::size_t b = batches_.size();
    for (std::size_t i = 0; i < batches_.size(); ++i) {
      if (delivery_name(i) == cmd.delivery_id) b = i;
    }
    if (b == batches_.size()) return {false, std::string(kUnknownDelivery), "no delivery '" + cmd.delivery_id + "'"};
    auto vit = vehicle_index_.find(cmd.vehicle_id);
    if (vit == vehicle_index_.end()) return {false, std::string(kUnknownObject), "no vehicle '" + cmd.vehicle_id + "'"};
    if (vehicles_[vit->second].status != VehiclePhase::Ready) {
      return {false, std::string(kVehicleNotReady),
              "vehicle '" + cmd.vehicle_id + "' is " + to_string(vehicles_[vit->second].status)};
    }
    for (const auto& oid : batches_[b].order_ids) {
      const auto& o = orders_[order_index_.at(oid)];
      if (o.status >= OrderPhase::Assigned) {
        return {false, std::string(kAlreadyDispatched), "order '" + oid + "' is already " + to_string(o.status)};
      }
      if (o.status != OrderPhase::Cooked) {
        return {false, std::string(kBatchNotReady), "order '" + oid + "' is not cooked"};
      }
    }
    execute_dispatch(vit->second, batches_[b].order_ids, cmd.issued_by);
    batches_.erase(batches_.begin() + static_cast<std::ptrdiff_t>(b));
    redecide();
    return {true, "", ""};
  }

  Seconds tick_of(Seconds t) const { return ceil_div(t - origin_, kTickSeconds); }

private:
  enum class EventKind { OrderReceived, OrderCooked, OrderReadySoon, Depart, Arrive, ReturnSoon, Return, Wake };

  struct Event {
    EventKind kind;
    std::size_t subject = 0;  // order or vehicle index
    std::size_t stop = 0;     // Arrive: stop position
  };

  struct Queued {
    Seconds tick;
    std::uint64_t seq;
    Event event;
    bool operator>(const Queued& o) const { return tick != o.tick ? tick > o.tick : seq > o.seq; }
  };

  struct Trip {
    std::vector<std::string> orders;
    std::vector<Seconds> arrive;  // ticks
    Seconds depart = 0;
    Seconds back = 0;
  };

  struct BaselineTrip {
    std::vector<std::size_t> orders;
    Seconds due = 0;
  };

  void push(Seconds tick, Event e) { queue_.push(Queued{tick, seq_++, e}); }

  void emit(Seconds tick, std::string kind, std::string id, std::string transition,
            nlohmann::ordered_json detail = nlohmann::ordered_json::object()) {
    log_.entries.push_back(LogEntry{tick, std::move(kind), std::move(id), std::move(transition), std::move(detail)});
  }

  void note(const DispatchEvents& ev) {
    dm_ = ingest_events(std::move(dm_), ev);
    dirty_ = true;
  }

  void setup_baseline() {
    std::map<std::string, std::vector<BaselineTrip>> per_vehicle;
    for (const auto& [key, idx] : historical_trips(ds_)) {
      const auto& first = ds_.orders[idx.front()];
      const Seconds depart = tick_of(first.hist_delivered_at) - leg_ticks(first.hist_leg_seconds);
      BaselineTrip t{idx, depart - leg_ticks(config_.load_seconds)};
      push(std::max<Seconds>(0, t.due), Event{EventKind::Wake, 0});
      per_vehicle[key.vehicle].push_back(std::move(t));
    }
    for (auto& [vid, trips] : per_vehicle) {
      baseline_[vehicle_index_.at(vid)] = std::deque<BaselineTrip>(trips.begin(), trips.end());
    }
  }

  void handle(const Queued& q) {
    const Event& e = q.event;
    switch (e.kind) {
      case EventKind::OrderReceived: {
        auto& o = orders_[e.subject];
        o.status = OrderPhase::Received;
        const auto& r = o.record->order;
        nlohmann::ordered_json d;
        d["placed_at"] = format_timestamp(r.placed_at);
        d["ready_at"] = format_timestamp(r.ready_at);
        d["deadline"] = format_timestamp(r.deadline);
        d["lat"] = r.location.lat;
        d["lon"] = r.location.lon;
        d["demand"] = r.demand;
        emit(q.tick, "order", r.id, "received", std::move(d));
        break;
      }
      case EventKind::OrderCooked:
        orders_[e.subject].status = OrderPhase::Cooked;
        emit(q.tick, "order", orders_[e.subject].record->order.id, "cooked");
        break;
      case EventKind::OrderReadySoon:
        note(DispatchEvents{{orders_[e.subject].record->order}, {}, {}});
        break;
      case EventKind::Depart: {
        auto& v = vehicles_[e.subject];
        const auto& trip = trips_.at(e.subject);
        v.status = VehiclePhase::Delivering;
        emit(q.tick, "vehicle", v.id, "delivering", nlohmann::ordered_json{{"stops", trip.orders}});
        for (const auto& oid : trip.orders) {
          orders_[order_index_.at(oid)].status = OrderPhase::Dispatched;
          emit(q.tick, "order", oid, "dispatched", nlohmann::ordered_json{{"vehicle", v.id}});
        }
        start_leg(e.subject, 0, q.tick);
        break;
      }
      case EventKind::Arrive: {
        auto& v = vehicles_[e.subject];
        const auto& trip = trips_.at(e.subject);
        const auto& oid = trip.orders[e.stop];
        auto& o = orders_[order_index_.at(oid)];
        o.status = OrderPhase::Delivered;
        o.delivered_tick = q.tick;
        ++delivered_;
        v.position = oid;
        v.stops.erase(v.stops.begin());
        emit(q.tick, "order", oid, "delivered", nlohmann::ordered_json{{"vehicle", v.id}});
        if (e.stop + 1 == trip.orders.size()) {
          v.status = VehiclePhase::Returning;
          emit(q.tick, "vehicle", v.id, "returning", nlohmann::ordered_json{{"return_tick", trip.back}});
        }
        start_leg(e.subject, e.stop + 1, q.tick);
        break;
      }
      case EventKind::ReturnSoon:
        if (config_.mode == RunMode::Optimized) {
          const auto& v = vehicles_[e.subject];
          note(DispatchEvents{{}, {}, {Vehicle{v.id, ds_.vehicles[e.subject].capacity}}});
        }
        break;
      case EventKind::Return: {
        auto& v = vehicles_[e.subject];
        v.status = VehiclePhase::Ready;
        v.position = "depot";
        v.return_tick.reset();
        trips_.erase(e.subject);
        emit(q.tick, "vehicle", v.id, "ready");
        break;
      }
      case EventKind::Wake:
        break;
    }
  }

  /// Logs the leg that starts at stop position `next` (the return leg when
  /// next == number of stops).
  void start_leg(std::size_t vi, std::size_t next, Seconds tick) {
    const auto& trip = trips_.at(vi);
    const std::string from = next == 0 ? "depot" : trip.orders[next - 1];
    const std::string to = next == trip.orders.size() ? "depot" : trip.orders[next];
    const auto est = provider_.estimate(location_of(from), location_of(to));
    const Seconds secs = simulated_leg_seconds(est.seconds, config_.calibration_factor);
    nlohmann::ordered_json d;
    d["from"] = from;
    d["to"] = to;
    d["ticks"] = leg_ticks(secs);
    d["seconds"] = secs;
    d["meters"] = est.meters;
    emit(tick, "leg", vehicles_[vi].id, "drive", std::move(d));
    if (to != "depot") {
      orders_[order_index_.at(to)].status = OrderPhase::EnRoute;
      emit(tick, "order", to, "en-route", nlohmann::ordered_json{{"vehicle", vehicles_[vi].id}});
    }
  }

  GeoPoint location_of(const std::string& node) const {
    if (node == "depot") return ds_.restaurant.location;
    return ds_.orders[order_index_.at(node)].order.location;
  }

  /// Commits a vehicle to a trip at the current tick and schedules its events.
  void execute_dispatch(std::size_t vi, const std::vector<std::string>& order_ids, const std::string& issued_by) {
    auto& v = vehicles_[vi];
    if (v.status != VehiclePhase::Ready) throw SimulationError("vehicle '" + v.id + "' is not ready");
    Trip trip;
    trip.orders = order_ids;
    trip.depart = now_ + leg_ticks(config_.load_seconds);
    Seconds t = trip.depart;
    GeoPoint at = ds_.restaurant.location;
    for (const auto& oid : order_ids) {
      auto& o = orders_[order_index_.at(oid)];
      if (o.status != OrderPhase::Cooked) throw SimulationError("order '" + oid + "' is not cooked");
      const auto& loc = o.record->order.location;
      t += leg_ticks(simulated_leg_seconds(provider_.estimate(at, loc).seconds, config_.calibration_factor));
      trip.arrive.push_back(t);
      at = loc;
    }
    t += leg_ticks(
        simulated_leg_seconds(provider_.estimate(at, ds_.restaurant.location).seconds, config_.calibration_factor));
    trip.back = t;

    v.status = VehiclePhase::Loading;
    v.stops = order_ids;
    v.return_tick = trip.back;
    nlohmann::ordered_json d;
    d["orders"] = order_ids;
    d["issued_by"] = issued_by;
    d["depart_tick"] = trip.depart;
    emit(now_, "vehicle", v.id, "loading", std::move(d));
    for (const auto& oid : order_ids) {
      auto& o = orders_[order_index_.at(oid)];
      o.status = OrderPhase::Assigned;
      o.vehicle = v.id;
      emit(now_, "order", oid, "assigned", nlohmann::ordered_json{{"vehicle", v.id}});
    }
    ++stats_.dispatches;

    push(trip.depart, Event{EventKind::Depart, vi});
    for (std::size_t s = 0; s < trip.arrive.size(); ++s) push(trip.arrive[s], Event{EventKind::Arrive, vi, s});
    const Seconds last_stop = trip.arrive.empty() ? trip.depart : trip.arrive.back();
    const Seconds soon = std::max(last_stop, trip.back - ceil_div(config_.loop.lookahead, kTickSeconds));
    push(soon, Event{EventKind::ReturnSoon, vi});
    push(trip.back, Event{EventKind::Return, vi});
    trips_[vi] = std::move(trip);

    if (config_.mode == RunMode::Optimized) note(DispatchEvents{{}, {DispatchedVehicle{v.id, order_ids}}, {}});
  }

  void after_events() {
    if (config_.mode == RunMode::Baseline) {
      baseline_dispatch();
      return;
    }
    if (dirty_ || retry_) redecide();
    if (!config_.auto_dispatch) return;
    // Dispatching changes the eligible sets, so decide again until quiet.
    while (true) {
      AutoDispatchInput in;
      in.batches = batches_;
      for (const auto& o : orders_) {
        if (o.status == OrderPhase::Cooked) in.cooked_orders.insert(o.record->order.id);
      }
      for (const auto& v : vehicles_) {
        if (v.status == VehiclePhase::Ready) in.ready_vehicles.insert(v.id);
      }
      const auto commands = auto_dispatch_check(in);
      if (commands.empty()) break;
      for (const auto& c : commands) execute_dispatch(vehicle_index_.at(c.vehicle_id), batches_[c.batch].order_ids, "auto");
      batches_.clear();
      redecide();
    }
  }

  void baseline_dispatch() {
    for (auto& [vi, trips] : baseline_) {
      if (trips.empty() || vehicles_[vi].status != VehiclePhase::Ready) continue;
      const auto& next = trips.front();
      if (now_ < next.due) continue;
      const bool cooked = std::all_of(next.orders.begin(), next.orders.end(),
                                      [&](std::size_t i) { return orders_[i].status == OrderPhase::Cooked; });
      if (!cooked) continue;
      std::vector<std::string> ids;
      for (std::size_t i : next.orders) ids.push_back(ds_.orders[i].order.id);
      trips.pop_front();
      execute_dispatch(vi, ids, "historical");
    }
  }

  void redecide() {
    if (config_.mode != RunMode::Optimized) return;
    dirty_ = false;
    dm_.clock = now_seconds();
    if (dm_.available_vehicles.empty()) {
      // Nothing can leave; decide again once a vehicle becomes eligible.
      batches_.clear();
      decision_.reset();
      retry_ = false;
      return;
    }
    LoopConfig lc = config_.loop;
    lc.rng_seed = config_.rng_seed;
    if (retry_) lc.delta *= config_.failure_delta_multiplier;
    const auto result = decide(dm_, scaled_, lc);
    ++episode_;
    ++stats_.episodes;
    if (const auto* d = std::get_if<LoopDecision>(&result)) {
      stats_.decide_wall_ms.push_back(d->wall_ms);
      stats_.decide_active_orders.push_back(dm_.active_customers.size());
      retry_ = false;
      dm_.last_solution = d->solution;
      dm_.applied_delay = d->applied_delay;
      batches_.clear();
      nlohmann::ordered_json routes = nlohmann::ordered_json::array();
      for (const auto& r : d->solution.routes) {
        if (r.empty()) continue;
        Batch b{r.vehicle_id, {}, std::numeric_limits<Seconds>::max()};
        for (NodeIndex n : r.stops()) {
          const auto& oid = d->task.customer_at(n).id;
          b.order_ids.push_back(oid);
          b.deadline = std::min(b.deadline, dm_.active_customers.at(oid).deadline);
        }
        routes.push_back(nlohmann::ordered_json{{"vehicle", b.vehicle_id}, {"orders", b.order_ids}});
        batches_.push_back(std::move(b));
      }
      nlohmann::ordered_json detail;
      detail["applied_delay"] = d->applied_delay;
      detail["routes"] = std::move(routes);
      emit(now_, "episode", std::to_string(episode_), "decided", std::move(detail));
      decision_ = *d;
    } else {
      const auto& f = std::get<EpisodeFailed>(result);
      stats_.decide_wall_ms.push_back(f.wall_ms);
      stats_.decide_active_orders.push_back(dm_.active_customers.size());
      ++stats_.failed_episodes;
      batches_.clear();
      decision_.reset();
      emit(now_, "episode", std::to_string(episode_), "failed",
           nlohmann::ordered_json{{"active_orders", dm_.active_customers.size()},
                                  {"available_vehicles", dm_.available_vehicles.size()}});
      const std::string day = format_date(day_start(now_seconds()));
      if (failed_days_.insert(day).second) emit(now_, "day", day, "failed");
      retry_ = true;
      push(now_ + 1, Event{EventKind::Wake, 0});
    }
  }

  const Dataset& ds_;
  const TravelTimeProvider& provider_;
  RunConfig config_;
  ScaledProvider scaled_;
  Seconds origin_ = 0;
  Seconds now_ = 0;
  bool finished_ = false;
  std::uint64_t seq_ = 0;
  std::priority_queue<Queued, std::vector<Queued>, std::greater<>> queue_;
  std::vector<OrderView> orders_;
  std::vector<VehicleView> vehicles_;
  std::map<std::string, std::size_t> order_index_;
  std::map<std::string, std::size_t> vehicle_index_;
  std::map<std::size_t, Trip> trips_;
  std::map<std::size_t, std::deque<BaselineTrip>> baseline_;
  std::size_t delivered_ = 0;
  RunLog log_;
  RunStats stats_;

  DispatchState dm_;
  bool dirty_ = false;
  bool retry_ = false;
  std::size_t episode_ = 0;
  std::optional<LoopDecision> decision_;
  std::vector<Batch> batches_;
  std::set<std::string> failed_days_;
};

struct RunResult {
  RunLog log;
  RunStats stats;
};

/// Headless run to completion.
inline RunResult run(const Dataset& ds, const TravelTimeProvider& provider, RunConfig config) {
  config.auto_dispatch = true;
  Simulation sim(ds, provider, std::move(config));
  sim.run();
  return RunResult{sim.log(), sim.stats()};
}

// ---------------------------------------------------------------------------
// Log auditor

struct AuditReport {
  std::vector<std::string> problems;
  std::size_t orders = 0;
  std::size_t delivered = 0;
  std::size_t undeliverable = 0;
  std::size_t legs_checked = 0;

  bool clean() const noexcept { return problems.empty(); }
};

/// Re-reads a log and checks lifecycle orderings, conservation and every leg
/// against the provider.
inline AuditReport audit_log(const RunLog& log, const Dataset& ds, const TravelTimeProvider& provider,
                             double factor) {
  AuditReport rep;
  static const std::vector<std::string> order_seq = {"received", "cooked",  "assigned",
                                                     "dispatched", "en-route", "delivered"};
  static const std::map<std::string, std::vector<std::string>> vehicle_next = {
      {"ready", {"loading"}},
      {"loading", {"delivering"}},
      {"delivering", {"returning"}},
      {"returning", {"ready"}}};
  std::map<std::string, GeoPoint> where;
  where["depot"] = ds.restaurant.location;
  for (const auto& h : ds.orders) where[h.order.id] = h.order.location;

  std::map<std::string, std::size_t> order_pos;  // index into order_seq of the last transition
  std::map<std::string, bool> order_closed;
  std::map<std::string, std::string> vehicle_state;
  for (const auto& v : ds.vehicles) vehicle_state[v.id] = "ready";
  Seconds last_tick = std::numeric_limits<Seconds>::min();
  auto problem = [&](std::size_t line, const std::string& msg) {
    rep.problems.push_back("entry " + std::to_string(line + 1) + ": " + msg);
  };

  for (std::size_t i = 0; i < log.entries.size(); ++i) {
    const auto& e = log.entries[i];
    if (e.tick < last_tick) problem(i, "tick goes backwards");
    last_tick = std::max(last_tick, e.tick);
    if (e.entity_kind == "order") {
      if (!where.contains(e.entity_id)) {
        problem(i, "unknown order '" + e.entity_id + "'");
        continue;
      }
      if (order_closed[e.entity_id]) {
        problem(i, "order '" + e.entity_id + "' changes after it was closed");
        continue;
      }
      if (e.transition == "undeliverable") {
        order_closed[e.entity_id] = true;
        ++rep.undeliverable;
        continue;
      }
      auto it = std::find(order_seq.begin(), order_seq.end(), e.transition);
      if (it == order_seq.end()) {
        problem(i, "unknown order transition '" + e.transition + "'");
        continue;
      }
      const std::size_t pos = static_cast<std::size_t>(it - order_seq.begin());
      const bool first = !order_pos.contains(e.entity_id);
      if ((first && pos != 0) || (!first && pos != order_pos[e.entity_id] + 1)) {
        problem(i, "order '" + e.entity_id + "' moves to " + e.transition + " out of sequence");
      }
      order_pos[e.entity_id] = pos;
      if (e.transition == "delivered") {
        order_closed[e.entity_id] = true;
        ++rep.delivered;
      }
    } else if (e.entity_kind == "vehicle") {
      auto vs = vehicle_state.find(e.entity_id);
      if (vs == vehicle_state.end()) {
        problem(i, "unknown vehicle '" + e.entity_id + "'");
        continue;
      }
      const auto& allowed = vehicle_next.at(vs->second);
      if (std::find(allowed.begin(), allowed.end(), e.transition) == allowed.end()) {
        problem(i, "vehicle '" + e.entity_id + "' moves from " + vs->second + " to " + e.transition);
      }
      vs->second = e.transition;
    } else if (e.entity_kind == "leg") {
      const auto from = e.detail.value("from", std::string());
      const auto to = e.detail.value("to", std::string());
      if (!where.contains(from) || !where.contains(to)) {
        problem(i, "leg between unknown nodes");
        continue;
      }
      const auto est = provider.estimate(where[from], where[to]);
      const Seconds secs = simulated_leg_seconds(est.seconds, factor);
      if (e.detail.value("seconds", Seconds{-1}) != secs || e.detail.value("ticks", Seconds{-1}) != leg_ticks(secs) ||
          e.detail.value("meters", Meters{-1}) != est.meters) {
        problem(i, "leg " + from + " -> " + to + " does not match the provider");
      }
      ++rep.legs_checked;
    }
  }
  rep.orders = ds.orders.size();
  for (const auto& h : ds.orders) {
    if (!order_closed[h.order.id]) problem(log.entries.size(), "order '" + h.order.id + "' is never closed");
  }
  if (rep.delivered + rep.undeliverable != rep.orders) {
    rep.problems.push_back("conservation: " + std::to_string(rep.delivered) + " delivered + " +
                           std::to_string(rep.undeliverable) + " undeliverable != " + std::to_string(rep.orders));
  }
  return rep;
}

}  // namespace ck
