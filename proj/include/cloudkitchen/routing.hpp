#pragma once

// VRPTW data model, earliest-arrival scheduling, solution validation and
// objective functions.
//
// Node convention: node 0 is the depot a vehicle leaves from, nodes 1..k are
// the k customers, node k+1 is the depot the vehicle returns to.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cloudkitchen/time.hpp"

namespace ck {

using Meters = std::int64_t;
using NodeIndex = std::size_t;

/// Malformed input to a routing operation (as opposed to an infeasible one).
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Vehicle {
  std::string id;
  /// Load units; nullopt means unlimited.
  std::optional<std::int64_t> capacity;

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

struct Customer {
  std::string id;
  NodeIndex node = 0;
  std::int64_t demand = 0;
  Seconds window_open = 0;
  Seconds window_close = 0;

  friend bool operator==(const Customer&, const Customer&) = default;
};

/// Dense travel matrices over all nodes. time(i, j) already includes the
/// service time spent at j.
class TravelGraph {
public:
  TravelGraph() = default;

  explicit TravelGraph(std::size_t node_count)
      : node_count_(node_count), dist_(node_count * node_count, 0), time_(node_count * node_count, 0) {}

  TravelGraph(std::size_t node_count, std::vector<Meters> dist, std::vector<Seconds> time)
      : node_count_(node_count), dist_(std::move(dist)), time_(std::move(time)) {
    if (dist_.size() != node_count_ * node_count_ || time_.size() != node_count_ * node_count_) {
      throw InputError("travel matrices must have node_count^2 entries");
    }
    for (std::size_t i = 0; i < node_count_; ++i) {
      for (std::size_t j = 0; j < node_count_; ++j) {
        const auto k = i * node_count_ + j;
        if (dist_[k] < 0 || time_[k] < 0) throw InputError("travel matrices must be non-negative");
        if (i == j && (dist_[k] != 0 || time_[k] != 0)) {
          throw InputError("travel matrices must have a zero diagonal");
        }
      }
    }
  }

  std::size_t node_count() const noexcept { return node_count_; }

  Meters dist(NodeIndex from, NodeIndex to) const noexcept { return dist_[from * node_count_ + to]; }
  Seconds time(NodeIndex from, NodeIndex to) const noexcept { return time_[from * node_count_ + to]; }

  void set(NodeIndex from, NodeIndex to, Seconds seconds, Meters meters) {
    if (from >= node_count_ || to >= node_count_) throw InputError("node index out of range");
    if (seconds < 0 || meters < 0) throw InputError("travel values must be non-negative");
    if (from == to && (seconds != 0 || meters != 0)) throw InputError("diagonal must be zero");
    time_[from * node_count_ + to] = seconds;
    dist_[from * node_count_ + to] = meters;
  }

  const std::vector<Meters>& dist_matrix() const noexcept { return dist_; }
  const std::vector<Seconds>& time_matrix() const noexcept { return time_; }

  friend bool operator==(const TravelGraph&, const TravelGraph&) = default;

private:
  std::size_t node_count_ = 0;
  std::vector<Meters> dist_;
  std::vector<Seconds> time_;
};

struct VrptwTask {
  std::vector<Vehicle> vehicles;
  /// customers[i] sits at node i + 1.
  std::vector<Customer> customers;
  TravelGraph graph;
  Seconds horizon_open = 0;
  Seconds horizon_close = 0;

  std::size_t customer_count() const noexcept { return customers.size(); }
  NodeIndex start_depot() const noexcept { return 0; }
  NodeIndex return_depot() const noexcept { return customers.size() + 1; }
  bool is_customer_node(NodeIndex n) const noexcept { return n >= 1 && n <= customers.size(); }
  const Customer& customer_at(NodeIndex node) const { return customers.at(node - 1); }

  const Vehicle* find_vehicle(std::string_view id) const {
    for (const auto& v : vehicles) {
      if (v.id == id) return &v;
    }
    return nullptr;
  }

  /// Throws InputError when the structural invariants do not hold.
  void check() const {
    if (graph.node_count() != customers.size() + 2) {
      throw InputError("graph must have customers + 2 nodes");
    }
    if (horizon_open > horizon_close) throw InputError("horizon_open > horizon_close");
    for (std::size_t i = 0; i < customers.size(); ++i) {
      const auto& c = customers[i];
      if (c.node != i + 1) throw InputError("customer '" + c.id + "' must sit at node " + std::to_string(i + 1));
      if (c.window_open > c.window_close) throw InputError("customer '" + c.id + "' has an empty window");
      if (c.demand < 0) throw InputError("customer '" + c.id + "' has negative demand");
    }
    for (const auto& v : vehicles) {
      if (v.capacity && *v.capacity <= 0) throw InputError("vehicle '" + v.id + "' capacity must be positive");
    }
  }

  friend bool operator==(const VrptwTask&, const VrptwTask&) = default;
};

struct Route {
  std::string vehicle_id;
  /// 0, customer nodes..., k+1
  std::vector<NodeIndex> path;
  /// delivery_times[i] is the time at path[i].
  std::vector<Seconds> delivery_times;

  bool empty() const noexcept { return path.size() <= 2; }

  std::span<const NodeIndex> stops() const noexcept {
    if (path.size() < 2) return {};
    return std::span<const NodeIndex>(path).subspan(1, path.size() - 2);
  }

  Seconds return_time() const { return delivery_times.empty() ? 0 : delivery_times.back(); }

  friend bool operator==(const Route&, const Route&) = default;
};

struct RouteSolution {
  std::vector<Route> routes;
  Meters objective_distance = 0;
  Seconds objective_time = 0;

  const Route* find_route(std::string_view vehicle_id) const {
    for (const auto& r : routes) {
      if (r.vehicle_id == vehicle_id) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const RouteSolution&, const RouteSolution&) = default;
};

// ---------------------------------------------------------------------------
// Scheduling

struct ScheduleResult {
  /// Set when every window and the horizon are respected.
  std::optional<Route> route;
  /// Index into the path of the first node whose window (or the horizon, for
  /// the return depot) is missed. Meaningful only when route is empty.
  std::size_t failed_position = 0;

  bool feasible() const noexcept { return route.has_value(); }
};

inline void check_path_shape(const VrptwTask& task, std::span<const NodeIndex> path) {
  const NodeIndex last = task.return_depot();
  if (path.size() < 2 || path.front() != 0 || path.back() != last) {
    throw InputError("path must start at node 0 and end at node " + std::to_string(last));
  }
  std::vector<bool> seen(task.customer_count() + 2, false);
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const NodeIndex n = path[i];
    if (!task.is_customer_node(n)) throw InputError("unknown customer node " + std::to_string(n));
    if (seen[n]) throw InputError("node " + std::to_string(n) + " repeats in path");
    seen[n] = true;
  }
}

/// Earliest-arrival forward schedule: the vehicle leaves node 0 at
/// horizon_open and every stop is served at max(window_open, arrival).
inline ScheduleResult schedule_route(const VrptwTask& task, std::string_view vehicle_id,
                                     std::span<const NodeIndex> path) {
  if (task.graph.node_count() != task.customer_count() + 2) {
    throw InputError("graph must have customers + 2 nodes");
  }
  check_path_shape(task, path);

  Route route;
  route.vehicle_id = std::string(vehicle_id);
  route.path.assign(path.begin(), path.end());
  route.delivery_times.reserve(path.size());
  route.delivery_times.push_back(task.horizon_open);

  Seconds t = task.horizon_open;
  for (std::size_t i = 1; i < path.size(); ++i) {
    t += task.graph.time(path[i - 1], path[i]);
    if (i + 1 < path.size()) {
      const auto& c = task.customer_at(path[i]);
      t = std::max(t, c.window_open);
      if (t > c.window_close) return ScheduleResult{std::nullopt, i};
    } else if (t > task.horizon_close) {
      return ScheduleResult{std::nullopt, i};
    }
    route.delivery_times.push_back(t);
  }
  return ScheduleResult{std::move(route), 0};
}

inline ScheduleResult schedule_route(const VrptwTask& task, std::string_view vehicle_id,
                                     std::initializer_list<NodeIndex> path) {
  return schedule_route(task, vehicle_id, std::span<const NodeIndex>(path.begin(), path.size()));
}

// ---------------------------------------------------------------------------
// Objectives

enum class ObjectiveKind { Distance, Time };

inline std::int64_t objective(const RouteSolution& solution, const VrptwTask& task, ObjectiveKind kind) {
  std::int64_t total = 0;
  for (const auto& r : solution.routes) {
    if (kind == ObjectiveKind::Distance) {
      for (std::size_t i = 1; i < r.path.size(); ++i) total += task.graph.dist(r.path[i - 1], r.path[i]);
    } else {
      total += r.return_time();
    }
  }
  return total;
}

/// Fills objective_distance and objective_time from the routes.
inline void update_objectives(RouteSolution& solution, const VrptwTask& task) {
  solution.objective_distance = objective(solution, task, ObjectiveKind::Distance);
  solution.objective_time = objective(solution, task, ObjectiveKind::Time);
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode { Partition, Capacity, Window, Horizon, Shape };

inline const char* to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::Partition: return "PARTITION";
    case ViolationCode::Capacity: return "CAPACITY";
    case ViolationCode::Window: return "WINDOW";
    case ViolationCode::Horizon: return "HORIZON";
    case ViolationCode::Shape: return "SHAPE";
  }
  return "UNKNOWN";
}

struct Violation {
  ViolationCode code;
  std::string vehicle_id;
  std::optional<NodeIndex> node;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }

  bool has(ViolationCode code) const noexcept {
    return std::any_of(violations.begin(), violations.end(), [code](const Violation& v) { return v.code == code; });
  }

  std::string summary() const {
    std::ostringstream out;
    for (const auto& v : violations) out << to_string(v.code) << ": " << v.message << '\n';
    return out.str();
  }
};

/// Checks partition, capacity, path shape, the scheduling inequality with
/// windows, and the horizon. Reports every violation found.
inline ValidationReport validate_solution(const VrptwTask& task, const RouteSolution& solution) {
  ValidationReport report;
  auto add = [&](ViolationCode code, const std::string& vehicle, std::optional<NodeIndex> node, std::string msg) {
    report.violations.push_back(Violation{code, vehicle, node, std::move(msg)});
  };

  const std::size_t k = task.customer_count();
  const NodeIndex last = task.return_depot();
  std::vector<int> visits(k + 2, 0);
  std::vector<int> routes_per_vehicle(task.vehicles.size(), 0);

  for (const auto& route : solution.routes) {
    const std::string& vid = route.vehicle_id;
    const Vehicle* vehicle = nullptr;
    for (std::size_t i = 0; i < task.vehicles.size(); ++i) {
      if (task.vehicles[i].id == vid) {
        vehicle = &task.vehicles[i];
        ++routes_per_vehicle[i];
      }
    }
    if (!vehicle) add(ViolationCode::Shape, vid, std::nullopt, "route for unknown vehicle '" + vid + "'");

    // Shape.
    bool shape_ok = true;
    if (route.path.size() < 2 || route.path.front() != 0 || route.path.back() != last) {
      add(ViolationCode::Shape, vid, std::nullopt, "path of '" + vid + "' must run from node 0 to node " +
                                                       std::to_string(last));
      shape_ok = false;
    }
    if (route.delivery_times.size() != route.path.size()) {
      add(ViolationCode::Shape, vid, std::nullopt, "delivery times of '" + vid + "' do not cover the path");
      shape_ok = false;
    }
    std::vector<bool> seen_here(k + 2, false);
    for (std::size_t i = 0; i < route.path.size(); ++i) {
      const NodeIndex n = route.path[i];
      const bool endpoint = (i == 0 || i + 1 == route.path.size());
      if (n >= k + 2 || (!endpoint && !task.is_customer_node(n))) {
        add(ViolationCode::Shape, vid, n, "invalid node " + std::to_string(n) + " in path of '" + vid + "'");
        shape_ok = false;
        continue;
      }
      if (endpoint) continue;
      if (seen_here[n]) {
        add(ViolationCode::Shape, vid, n, "node " + std::to_string(n) + " repeats in path of '" + vid + "'");
        shape_ok = false;
      }
      seen_here[n] = true;
      ++visits[n];
    }

    // Capacity.
    if (vehicle && vehicle->capacity) {
      std::int64_t load = 0;
      for (std::size_t i = 1; i + 1 < route.path.size(); ++i) {
        if (task.is_customer_node(route.path[i])) load += task.customer_at(route.path[i]).demand;
      }
      if (load > *vehicle->capacity) {
        add(ViolationCode::Capacity, vid, std::nullopt,
            "load " + std::to_string(load) + " exceeds capacity of '" + vid + "'");
      }
    }

    if (!shape_ok) continue;

    // Times.
    const auto& t = route.delivery_times;
    if (t.front() < task.horizon_open) {
      add(ViolationCode::Horizon, vid, NodeIndex{0}, "'" + vid + "' leaves before the horizon opens");
    }
    for (std::size_t i = 1; i < route.path.size(); ++i) {
      const NodeIndex prev = route.path[i - 1];
      const NodeIndex n = route.path[i];
      const Seconds earliest_arrival = t[i - 1] + task.graph.time(prev, n);
      if (i + 1 < route.path.size()) {
        const auto& c = task.customer_at(n);
        if (t[i] < std::max(c.window_open, earliest_arrival) || t[i] > c.window_close) {
          add(ViolationCode::Window, vid, n,
              "time " + std::to_string(t[i]) + " at node " + std::to_string(n) + " of '" + vid +
                  "' violates max(window_open, arrival) <= t <= window_close");
        }
      } else if (t[i] < earliest_arrival || t[i] > task.horizon_close) {
        add(ViolationCode::Horizon, vid, n,
            "return time " + std::to_string(t[i]) + " of '" + vid + "' violates the horizon");
      }
    }
  }

  for (std::size_t i = 0; i < task.vehicles.size(); ++i) {
    if (routes_per_vehicle[i] != 1) {
      add(ViolationCode::Shape, task.vehicles[i].id, std::nullopt,
          "vehicle '" + task.vehicles[i].id + "' has " + std::to_string(routes_per_vehicle[i]) + " routes");
    }
  }
  for (NodeIndex n = 1; n <= k; ++n) {
    if (visits[n] != 1) {
      add(ViolationCode::Partition, "", n,
          "customer node " + std::to_string(n) + " is served " + std::to_string(visits[n]) + " times");
    }
  }
  return report;
}

}  // namespace ck
