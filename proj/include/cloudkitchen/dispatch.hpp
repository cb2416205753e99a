#pragma once

// Decision-making routine. Keeps the sets of active orders and available
// vehicles up to date from events, and builds a VRPTW task whose windows are
// [0, deadline - now + delay]. The delay starts at zero and grows in steps of
// delta until the solver returns a valid solution or the loop budget runs out.

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cloudkitchen/order.hpp"
#include "cloudkitchen/plan.hpp"
#include "cloudkitchen/routing.hpp"
#include "cloudkitchen/solver.hpp"
#include "cloudkitchen/travel.hpp"

namespace ck {

class ConsistencyError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class TaskConstructionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DispatchState {
  GeoPoint depot;
  /// Orders waiting for a delivery, keyed by id.
  std::map<std::string, Order> active_customers;
  /// Vehicles at (or about to return to) the restaurant, keyed by id.
  std::map<std::string, Vehicle> available_vehicles;
  Seconds clock = 0;
  std::optional<RouteSolution> last_solution;
  Seconds applied_delay = 0;
};

struct DispatchedVehicle {
  std::string vehicle_id;
  std::vector<std::string> order_ids;
};

struct DispatchEvents {
  std::vector<Order> new_orders;
  std::vector<DispatchedVehicle> dispatched;
  std::vector<Vehicle> returned;

  bool empty() const noexcept { return new_orders.empty() && dispatched.empty() && returned.empty(); }
};

/// V <- (V \ V_disp) u V_new and C <- (C \ orders carried by V_disp) u C_new.
inline DispatchState ingest_events(DispatchState state, const DispatchEvents& events) {
  std::set<std::string> returned_ids;
  for (const auto& v : events.returned) returned_ids.insert(v.id);

  for (const auto& d : events.dispatched) {
    if (!state.available_vehicles.contains(d.vehicle_id)) {
      throw ConsistencyError("dispatched vehicle '" + d.vehicle_id + "' is not available");
    }
    if (returned_ids.contains(d.vehicle_id)) {
      throw ConsistencyError("vehicle '" + d.vehicle_id + "' is both dispatched and returned");
    }
    for (const auto& oid : d.order_ids) {
      if (!state.active_customers.contains(oid)) {
        throw ConsistencyError("vehicle '" + d.vehicle_id + "' carries unknown order '" + oid + "'");
      }
    }
  }
  for (const auto& d : events.dispatched) {
    state.available_vehicles.erase(d.vehicle_id);
    for (const auto& oid : d.order_ids) state.active_customers.erase(oid);
  }
  for (const auto& v : events.returned) state.available_vehicles.insert_or_assign(v.id, v);
  for (const auto& o : events.new_orders) state.active_customers.insert_or_assign(o.id, o);
  return state;
}

/// Active orders in customer-node order: earliest deadline first, then id.
inline std::vector<const Order*> ordered_customers(const DispatchState& state) {
  std::vector<const Order*> out;
  out.reserve(state.active_customers.size());
  for (const auto& [id, o] : state.active_customers) out.push_back(&o);
  std::stable_sort(out.begin(), out.end(),
                   [](const Order* a, const Order* b) { return a->deadline < b->deadline; });
  return out;
}

inline constexpr Seconds kDispatchHorizon = kSecondsPerDay;

/// Depot plus one node per active order; times relative to state.clock.
inline VrptwTask build_task(const DispatchState& state, const TravelTimeProvider& travel, Seconds delay) {
  if (state.available_vehicles.empty()) throw TaskConstructionError("no available vehicle");
  const auto customers = ordered_customers(state);
  const std::size_t k = customers.size();

  VrptwTask task;
  for (const auto& [id, v] : state.available_vehicles) task.vehicles.push_back(Vehicle{v.id, std::nullopt});
  std::vector<GeoPoint> where;
  where.reserve(k + 2);
  where.push_back(state.depot);
  for (std::size_t i = 0; i < k; ++i) {
    const Order& o = *customers[i];
    task.customers.push_back(Customer{o.id, i + 1, o.demand, 0, o.deadline - state.clock + delay});
    where.push_back(o.location);
  }
  where.push_back(state.depot);

  task.graph = TravelGraph(k + 2);
  try {
    for (std::size_t i = 0; i < k + 2; ++i) {
      for (std::size_t j = 0; j < k + 2; ++j) {
        if (i == j) continue;
        if ((i == 0 || i == k + 1) && (j == 0 || j == k + 1)) continue;
        const auto e = travel.estimate(where[i], where[j]);
        task.graph.set(i, j, e.seconds, e.meters);
      }
    }
  } catch (const ProviderError& e) {
    throw TaskConstructionError(std::string("travel provider failed: ") + e.what());
  }
  task.horizon_open = 0;
  task.horizon_close = std::max<Seconds>(kDispatchHorizon, delay + kDispatchHorizon);
  return task;
}

struct LoopConfig {
  Seconds delta = 120;
  std::chrono::milliseconds solver_timeout{50};
  std::chrono::milliseconds loop_budget{1000};
  Seconds lookahead = 300;
  std::uint64_t rng_seed = 0;

  void check() const {
    if (delta <= 0) throw InputError("delta must be positive");
    if (solver_timeout.count() <= 0) throw InputError("solver timeout must be positive");
    if (loop_budget < solver_timeout) throw InputError("loop budget must be at least the solver timeout");
    if (lookahead < 0) throw InputError("lookahead must be non-negative");
  }
};

struct LoopDecision {
  RouteSolution solution;
  /// The task the solution answers (windows include applied_delay).
  VrptwTask task;
  Seconds applied_delay = 0;
  std::size_t attempts = 0;
  Plan plan;
  Seconds timestamp = 0;
  double wall_ms = 0.0;
};

struct EpisodeFailed {
  std::size_t attempts = 0;
  Seconds last_delay = 0;
  Seconds timestamp = 0;
  double wall_ms = 0.0;
};

using DecideResult = std::variant<LoopDecision, EpisodeFailed>;

/// Default solver hook: the heuristic with the given per-attempt budget.
struct HeuristicSolver {
  SolveOutcome operator()(const VrptwTask& task, const SolverConfig& config) const { return solve(task, config); }
};

/// Solves with delay = 0, delta, 2*delta, ... until a solution is found or
/// loop_budget is spent. Each attempt gets min(solver_timeout, remaining).
/// The state is only read.
template <class SolveFn = HeuristicSolver>
DecideResult decide(const DispatchState& state, const TravelTimeProvider& travel, const LoopConfig& config,
                    SolveFn&& solver = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  config.check();
  auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - start).count(); };

  if (state.available_vehicles.empty()) {
    if (state.active_customers.empty()) {
      LoopDecision empty;
      empty.timestamp = state.clock;
      empty.wall_ms = elapsed_ms();
      return empty;
    }
    return EpisodeFailed{0, 0, state.clock, elapsed_ms()};
  }

  VrptwTask task = build_task(state, travel, 0);
  std::vector<Seconds> base_close;
  base_close.reserve(task.customers.size());
  for (const auto& c : task.customers) base_close.push_back(c.window_close);
  const Seconds base_horizon = task.horizon_close;

  Seconds delay = 0;
  std::size_t attempts = 0;
  Seconds last_tried = 0;
  while (true) {
    const auto remaining =
        config.loop_budget - std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    if (remaining.count() <= 0) break;
    for (std::size_t i = 0; i < task.customers.size(); ++i) task.customers[i].window_close = base_close[i] + delay;
    task.horizon_close = base_horizon + delay;
    // An order already later than the current extension has an empty window.
    const bool empty_window = std::any_of(task.customers.begin(), task.customers.end(),
                                          [](const Customer& c) { return c.window_close < c.window_open; });
    if (empty_window) {
      ++attempts;
      last_tried = delay;
      delay += config.delta;
      continue;
    }

    SolverConfig sc;
    sc.time_budget = std::min(config.solver_timeout, remaining);
    sc.rng_seed = config.rng_seed;
    ++attempts;
    last_tried = delay;
    SolveOutcome outcome = solver(task, sc);
    if (outcome.solved() && outcome.solution && validate_solution(task, *outcome.solution).valid()) {
      std::vector<Order> orders;
      orders.reserve(state.active_customers.size());
      for (const auto& [id, o] : state.active_customers) orders.push_back(o);
      std::vector<Vehicle> vehicles;
      for (const auto& [id, v] : state.available_vehicles) vehicles.push_back(v);

      LoopDecision decision;
      decision.plan = translate(task, *outcome.solution, orders, vehicles);
      decision.solution = std::move(*outcome.solution);
      decision.task = std::move(task);
      decision.applied_delay = delay;
      decision.attempts = attempts;
      decision.timestamp = state.clock;
      decision.wall_ms = elapsed_ms();
      return decision;
    }
    delay += config.delta;
  }
  return EpisodeFailed{attempts, last_tried, state.clock, elapsed_ms()};
}

}  // namespace ck
