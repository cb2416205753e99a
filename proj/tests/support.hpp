#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// The oracles deliberately avoid calling into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cloudkitchen/dataset.hpp"
#include "cloudkitchen/plan.hpp"
#include "cloudkitchen/routing.hpp"

namespace cktest {

using ck::NodeIndex;
using ck::Seconds;

struct TaskShape {
  std::size_t customers = 5;
  std::size_t vehicles = 2;
  /// Coordinates on a [0, extent]^2 grid; travel time is the rounded
  /// Euclidean distance.
  double extent = 600.0;
  Seconds window_min_width = 200;
  Seconds window_max_open = 1500;
  Seconds window_max_width = 2500;
  Seconds horizon = 6000;
  std::optional<std::int64_t> capacity;
};

inline ck::VrptwTask random_task(std::mt19937_64& rng, const TaskShape& shape) {
  ck::VrptwTask task;
  for (std::size_t v = 0; v < shape.vehicles; ++v) {
    task.vehicles.push_back(ck::Vehicle{"v" + std::to_string(v + 1), shape.capacity});
  }
  const std::size_t n = shape.customers + 2;
  std::uniform_real_distribution<double> coord(0.0, shape.extent);
  std::vector<std::pair<double, double>> xy(n);
  for (std::size_t i = 0; i + 1 < n; ++i) xy[i] = {coord(rng), coord(rng)};
  xy[n - 1] = xy[0];
  task.graph = ck::TravelGraph(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::hypot(xy[i].first - xy[j].first, xy[i].second - xy[j].second);
      const auto t = static_cast<Seconds>(std::llround(d));
      task.graph.set(i, j, t, t * 7);
    }
  }
  std::uniform_int_distribution<Seconds> open(0, shape.window_max_open);
  std::uniform_int_distribution<Seconds> width(shape.window_min_width, shape.window_max_width);
  std::uniform_int_distribution<std::int64_t> demand(1, 3);
  for (std::size_t c = 0; c < shape.customers; ++c) {
    const Seconds a = open(rng);
    task.customers.push_back(ck::Customer{"c" + std::to_string(c + 1), c + 1, demand(rng), a, a + width(rng)});
  }
  task.horizon_open = 0;
  task.horizon_close = shape.horizon;
  return task;
}

/// Checks the scheduling inequality of a route written out arithmetically:
/// t_0 >= horizon_open, and for each later node
/// max(a_i, t_{i-1} + time(n_{i-1}, n_i)) <= t_i <= b_i, with the horizon
/// bound standing in for the window at the return depot.
inline bool inequality_holds(const ck::VrptwTask& task, const std::vector<NodeIndex>& path,
                             const std::vector<Seconds>& times) {
  if (path.size() != times.size() || path.size() < 2) return false;
  if (times[0] < task.horizon_open) return false;
  const std::size_t last = task.customers.size() + 1;
  for (std::size_t i = 1; i < path.size(); ++i) {
    Seconds lo = times[i - 1] + task.graph.time_matrix()[path[i - 1] * (last + 1) + path[i]];
    Seconds hi;
    if (path[i] == last) {
      hi = task.horizon_close;
    } else {
      const auto& c = task.customers[path[i] - 1];
      lo = lo > c.window_open ? lo : c.window_open;
      hi = c.window_close;
    }
    if (times[i] < lo || times[i] > hi) return false;
  }
  return true;
}

/// Earliest feasible return time of visiting `order` in sequence from the
/// depot, or nullopt. Written independently of the library's scheduler.
inline std::optional<Seconds> sequence_return(const ck::VrptwTask& task, const std::vector<NodeIndex>& order) {
  const std::size_t n = task.customers.size() + 2;
  const auto& tm = task.graph.time_matrix();
  Seconds clock = task.horizon_open;
  NodeIndex at = 0;
  for (NodeIndex c : order) {
    clock += tm[at * n + c];
    const auto& cu = task.customers[c - 1];
    if (clock < cu.window_open) clock = cu.window_open;
    if (clock > cu.window_close) return std::nullopt;
    at = c;
  }
  clock += tm[at * n + (n - 1)];
  if (clock > task.horizon_close) return std::nullopt;
  return clock;
}

/// Brute-force optimum of the time objective (sum of return times): best
/// permutation for every customer subset, then every assignment of subsets
/// to vehicles. Returns nullopt when no feasible solution exists.
inline std::optional<Seconds> brute_force_optimum(const ck::VrptwTask& task) {
  const std::size_t k = task.customers.size();
  const std::size_t v = task.vehicles.size();
  const std::size_t subsets = std::size_t{1} << k;
  constexpr Seconds kNone = std::numeric_limits<Seconds>::max();
  std::vector<Seconds> best(subsets, kNone);
  std::vector<std::int64_t> load(subsets, 0);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::vector<NodeIndex> members;
    for (std::size_t c = 0; c < k; ++c) {
      if (mask & (std::size_t{1} << c)) {
        members.push_back(c + 1);
        load[mask] += task.customers[c].demand;
      }
    }
    do {
      if (auto r = sequence_return(task, members)) best[mask] = std::min(best[mask], *r);
    } while (std::next_permutation(members.begin(), members.end()));
  }
  if (v == 0) return k == 0 ? std::optional<Seconds>(0) : std::nullopt;
  // Enumerate assignments as base-v digits.
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= v;
  Seconds optimum = kNone;
  std::vector<std::size_t> masks(v);
  for (std::size_t code = 0; code < total; ++code) {
    std::fill(masks.begin(), masks.end(), 0);
    std::size_t x = code;
    for (std::size_t c = 0; c < k; ++c) {
      masks[x % v] |= std::size_t{1} << c;
      x /= v;
    }
    Seconds sum = 0;
    bool ok = true;
    for (std::size_t r = 0; r < v && ok; ++r) {
      const auto& cap = task.vehicles[r].capacity;
      if (best[masks[r]] == kNone || (cap && load[masks[r]] > *cap)) {
        ok = false;
      } else {
        sum += best[masks[r]];
      }
    }
    if (ok) optimum = std::min(optimum, sum);
  }
  if (optimum == kNone) return std::nullopt;
  return optimum;
}

/// Feasibility of a whole solution per the task conditions, computed without
/// the library validator: exact partition, capacity, shape, inequality.
inline bool solution_feasible(const ck::VrptwTask& task, const ck::RouteSolution& s) {
  const std::size_t k = task.customers.size();
  std::vector<int> seen(k + 2, 0);
  std::map<std::string, int> per_vehicle;
  for (const auto& r : s.routes) {
    const ck::Vehicle* veh = nullptr;
    for (const auto& v : task.vehicles) {
      if (v.id == r.vehicle_id) veh = &v;
    }
    if (!veh) return false;
    ++per_vehicle[r.vehicle_id];
    if (r.path.size() < 2 || r.path.front() != 0 || r.path.back() != k + 1) return false;
    std::int64_t load = 0;
    for (std::size_t i = 1; i + 1 < r.path.size(); ++i) {
      if (r.path[i] < 1 || r.path[i] > k) return false;
      ++seen[r.path[i]];
      load += task.customers[r.path[i] - 1].demand;
    }
    if (veh->capacity && load > *veh->capacity) return false;
    if (!inequality_holds(task, r.path, r.delivery_times)) return false;
  }
  for (const auto& v : task.vehicles) {
    if (per_vehicle[v.id] != 1) return false;
  }
  for (std::size_t c = 1; c <= k; ++c) {
    if (seen[c] != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Plan oracle: a ground-atom interpreter of the six-action domain, written
// from the PDDL text rather than from the library's state machine.

struct AtomState {
  std::set<std::string> atoms;

  bool has(const std::string& a) const { return atoms.count(a) > 0; }
};

inline std::string atom(std::initializer_list<std::string> parts) {
  std::string s = "(";
  bool first = true;
  for (const auto& p : parts) {
    if (!first) s += ' ';
    s += p;
    first = false;
  }
  return s + ")";
}

/// Returns true when the plan is applicable from the initial state and ends
/// with every order delivered and no delivery still dispatched.
inline bool oracle_plan_valid(const ck::Plan& plan) {
  std::vector<std::string> orders, deliveries, vehicles, locations;
  for (const auto& [name, type] : plan.objects.types) {
    switch (type) {
      case ck::ObjectType::Order: orders.push_back(name); break;
      case ck::ObjectType::Delivery: deliveries.push_back(name); break;
      case ck::ObjectType::Vehicle: vehicles.push_back(name); break;
      case ck::ObjectType::Location: locations.push_back(name); break;
    }
  }
  auto typed = [&](const std::string& name, ck::ObjectType t) {
    auto it = plan.objects.types.find(name);
    return it != plan.objects.types.end() && it->second == t;
  };
  AtomState s;
  for (const auto& o : orders) s.atoms.insert(atom({"pending", o}));
  for (const auto& d : deliveries) {
    s.atoms.insert(atom({"unassigned", d}));
    s.atoms.insert(atom({"staged", d}));
  }
  for (const auto& v : vehicles) {
    s.atoms.insert(atom({"idle", v}));
    s.atoms.insert(atom({"at", v, plan.objects.depot}));
  }
  for (const auto& [o, l] : plan.objects.destination) s.atoms.insert(atom({"destination", o, l}));
  const std::string depot = plan.objects.depot;
  auto at_depot = [&](const std::string& v) { return s.has(atom({"at", v, depot})); };

  for (const auto& a : plan.actions) {
    const auto& x = a.args;
    using K = ck::ActionKind;
    using T = ck::ObjectType;
    switch (a.kind) {
      case K::AssignOrder:
        if (x.size() != 2 || !typed(x[0], T::Order) || !typed(x[1], T::Delivery)) return false;
        if (!s.has(atom({"pending", x[0]})) || !s.has(atom({"staged", x[1]}))) return false;
        s.atoms.erase(atom({"pending", x[0]}));
        s.atoms.insert(atom({"grouped", x[0]}));
        s.atoms.insert(atom({"in-delivery", x[0], x[1]}));
        break;
      case K::AssignDelivery:
        if (x.size() != 2 || !typed(x[0], T::Delivery) || !typed(x[1], T::Vehicle)) return false;
        if (!s.has(atom({"unassigned", x[0]})) || !s.has(atom({"idle", x[1]})) || !at_depot(x[1])) return false;
        s.atoms.erase(atom({"unassigned", x[0]}));
        s.atoms.erase(atom({"idle", x[1]}));
        s.atoms.insert(atom({"assigned", x[0], x[1]}));
        break;
      case K::DispatchDelivery: {
        if (x.size() != 2 || !typed(x[0], T::Delivery) || !typed(x[1], T::Vehicle)) return false;
        if (!s.has(atom({"assigned", x[0], x[1]})) || !at_depot(x[1])) return false;
        bool any = false;
        for (const auto& o : orders) {
          if (s.has(atom({"in-delivery", o, x[0]}))) {
            any = true;
            if (!s.has(atom({"grouped", o}))) return false;
          }
        }
        if (!any) return false;
        s.atoms.erase(atom({"assigned", x[0], x[1]}));
        s.atoms.erase(atom({"staged", x[0]}));
        s.atoms.insert(atom({"dispatched", x[0], x[1]}));
        for (const auto& o : orders) {
          if (s.has(atom({"in-delivery", o, x[0]}))) {
            s.atoms.erase(atom({"grouped", o}));
            s.atoms.insert(atom({"loaded", o}));
          }
        }
        break;
      }
      case K::Drive: {
        if (x.size() != 3 || !typed(x[0], T::Vehicle) || !typed(x[1], T::Location) || !typed(x[2], T::Location)) {
          return false;
        }
        if (!s.has(atom({"at", x[0], x[1]}))) return false;
        bool out = false;
        for (const auto& d : deliveries) out = out || s.has(atom({"dispatched", d, x[0]}));
        if (!out) return false;
        s.atoms.erase(atom({"at", x[0], x[1]}));
        s.atoms.insert(atom({"at", x[0], x[2]}));
        break;
      }
      case K::DeliverOrder: {
        if (x.size() != 3 || !typed(x[0], T::Order) || !typed(x[1], T::Vehicle) || !typed(x[2], T::Location)) {
          return false;
        }
        if (!s.has(atom({"loaded", x[0]})) || !s.has(atom({"at", x[1], x[2]})) ||
            !s.has(atom({"destination", x[0], x[2]}))) {
          return false;
        }
        bool carried = false;
        for (const auto& d : deliveries) {
          carried = carried || (s.has(atom({"in-delivery", x[0], d})) && s.has(atom({"dispatched", d, x[1]})));
        }
        if (!carried) return false;
        s.atoms.erase(atom({"loaded", x[0]}));
        s.atoms.insert(atom({"delivered", x[0]}));
        break;
      }
      case K::FinishDelivery: {
        if (x.size() != 2 || !typed(x[0], T::Delivery) || !typed(x[1], T::Vehicle)) return false;
        if (!s.has(atom({"dispatched", x[0], x[1]})) || !at_depot(x[1])) return false;
        for (const auto& o : orders) {
          if (s.has(atom({"in-delivery", o, x[0]})) && !s.has(atom({"delivered", o}))) return false;
        }
        s.atoms.erase(atom({"dispatched", x[0], x[1]}));
        s.atoms.insert(atom({"completed", x[0]}));
        s.atoms.insert(atom({"idle", x[1]}));
        break;
      }
    }
  }
  for (const auto& o : orders) {
    if (!s.has(atom({"delivered", o}))) return false;
  }
  for (const auto& d : deliveries) {
    for (const auto& v : vehicles) {
      if (s.has(atom({"dispatched", d, v}))) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Random valid solutions and mutations

/// Random customer partition over the vehicles with random visiting order,
/// scheduled by the library scheduler. Retries until every route fits in
/// time and capacity.
inline std::optional<ck::RouteSolution> random_partition_solution(std::mt19937_64& rng, const ck::VrptwTask& task,
                                                                  int tries = 200) {
  const std::size_t k = task.customers.size();
  std::uniform_int_distribution<std::size_t> pick(0, task.vehicles.size() - 1);
  for (int attempt = 0; attempt < tries; ++attempt) {
    std::vector<std::vector<NodeIndex>> stops(task.vehicles.size());
    std::vector<NodeIndex> nodes(k);
    for (std::size_t c = 0; c < k; ++c) nodes[c] = c + 1;
    std::shuffle(nodes.begin(), nodes.end(), rng);
    for (NodeIndex n : nodes) stops[pick(rng)].push_back(n);
    ck::RouteSolution s;
    bool ok = true;
    for (std::size_t v = 0; v < task.vehicles.size() && ok; ++v) {
      std::vector<NodeIndex> path{0};
      path.insert(path.end(), stops[v].begin(), stops[v].end());
      path.push_back(k + 1);
      std::int64_t load = 0;
      for (NodeIndex n : stops[v]) load += task.customers[n - 1].demand;
      const auto& cap = task.vehicles[v].capacity;
      auto r = ck::schedule_route(task, task.vehicles[v].id, path);
      if (!r.feasible() || (cap && load > *cap)) {
        ok = false;
      } else {
        s.routes.push_back(*r.route);
      }
    }
    if (ok) {
      ck::update_objectives(s, task);
      return s;
    }
  }
  return std::nullopt;
}

/// Single random edit: swap two nodes, perturb one time, drop a customer,
/// duplicate a customer, move a customer, drop a route or rename a vehicle.
inline ck::RouteSolution mutate_solution(std::mt19937_64& rng, const ck::VrptwTask& task, ck::RouteSolution s) {
  auto uni = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::vector<std::pair<std::size_t, std::size_t>> interior;
  for (std::size_t r = 0; r < s.routes.size(); ++r) {
    for (std::size_t i = 1; i + 1 < s.routes[r].path.size(); ++i) interior.push_back({r, i});
  }
  for (int guard = 0; guard < 50; ++guard) {
    switch (uni(7)) {
      case 0: {  // swap two customer nodes (times kept)
        if (interior.size() < 2) break;
        auto a = interior[uni(interior.size())];
        auto b = interior[uni(interior.size())];
        if (a == b) break;
        std::swap(s.routes[a.first].path[a.second], s.routes[b.first].path[b.second]);
        return s;
      }
      case 1: {  // perturb one time
        auto& r = s.routes[uni(s.routes.size())];
        const std::size_t i = uni(r.delivery_times.size());
        std::uniform_int_distribution<Seconds> d(-900, 900);
        Seconds delta = d(rng);
        if (delta == 0) delta = 1;
        r.delivery_times[i] += delta;
        return s;
      }
      case 2: {  // drop a customer
        if (interior.empty()) break;
        auto [r, i] = interior[uni(interior.size())];
        s.routes[r].path.erase(s.routes[r].path.begin() + static_cast<std::ptrdiff_t>(i));
        s.routes[r].delivery_times.erase(s.routes[r].delivery_times.begin() + static_cast<std::ptrdiff_t>(i));
        return s;
      }
      case 3: {  // duplicate a customer into another route
        if (interior.empty()) break;
        auto [r, i] = interior[uni(interior.size())];
        auto& dst = s.routes[uni(s.routes.size())];
        const std::size_t at = 1 + uni(dst.path.size() - 1);
        const NodeIndex n = s.routes[r].path[i];
        const Seconds t = s.routes[r].delivery_times[i];
        dst.path.insert(dst.path.begin() + static_cast<std::ptrdiff_t>(at), n);
        dst.delivery_times.insert(dst.delivery_times.begin() + static_cast<std::ptrdiff_t>(at), t);
        return s;
      }
      case 4: {  // move a customer and reschedule the target route
        if (interior.empty() || s.routes.size() < 2) break;
        auto [r, i] = interior[uni(interior.size())];
        const std::size_t dst = uni(s.routes.size());
        if (dst == r) break;
        const NodeIndex n = s.routes[r].path[i];
        s.routes[r].path.erase(s.routes[r].path.begin() + static_cast<std::ptrdiff_t>(i));
        s.routes[dst].path.insert(s.routes[dst].path.end() - 1, n);
        for (std::size_t x : {r, dst}) {
          auto sched = ck::schedule_route(task, s.routes[x].vehicle_id, s.routes[x].path);
          if (sched.feasible()) {
            s.routes[x].delivery_times = sched.route->delivery_times;
          } else {
            // Keep a time vector of the right length with plain arrival times.
            std::vector<Seconds> t{task.horizon_open};
            for (std::size_t j = 1; j < s.routes[x].path.size(); ++j) {
              t.push_back(t.back() + task.graph.time(s.routes[x].path[j - 1], s.routes[x].path[j]));
            }
            s.routes[x].delivery_times = t;
          }
        }
        return s;
      }
      case 5: {  // drop a whole route
        s.routes.erase(s.routes.begin() + static_cast<std::ptrdiff_t>(uni(s.routes.size())));
        return s;
      }
      case 6: {  // rename a vehicle
        s.routes[uni(s.routes.size())].vehicle_id += "x";
        return s;
      }
    }
  }
  s.routes.front().delivery_times.back() += 1;
  return s;
}

/// Single random edit of a plan: delete, swap, duplicate, or replace one
/// argument with another object of the same type.
inline ck::Plan mutate_plan(std::mt19937_64& rng, ck::Plan p) {
  auto uni = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  if (p.actions.empty()) return p;
  switch (uni(4)) {
    case 0:
      p.actions.erase(p.actions.begin() + static_cast<std::ptrdiff_t>(uni(p.actions.size())));
      break;
    case 1: {
      const std::size_t a = uni(p.actions.size());
      const std::size_t b = uni(p.actions.size());
      std::swap(p.actions[a], p.actions[b]);
      break;
    }
    case 2: {
      const std::size_t a = uni(p.actions.size());
      p.actions.insert(p.actions.begin() + static_cast<std::ptrdiff_t>(uni(p.actions.size() + 1)), p.actions[a]);
      break;
    }
    case 3: {
      auto& act = p.actions[uni(p.actions.size())];
      const std::size_t i = uni(act.args.size());
      const ck::ObjectType t = p.objects.types.at(act.args[i]);
      std::vector<std::string> same;
      for (const auto& [name, type] : p.objects.types) {
        if (type == t) same.push_back(name);
      }
      act.args[i] = same[uni(same.size())];
      break;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Small datasets

/// Every leg between distinct points takes the same time.
class FixedProvider final : public ck::TravelTimeProvider {
public:
  explicit FixedProvider(Seconds seconds, ck::Meters meters = 1000) : seconds_(seconds), meters_(meters) {}
  ck::TravelEstimate estimate(const ck::GeoPoint& a, const ck::GeoPoint& b) const override {
    if (a == b) return {};
    return {seconds_, meters_};
  }
  std::string describe() const override { return "fixed"; }

private:
  Seconds seconds_;
  ck::Meters meters_;
};

inline Seconds at(const char* iso) { return ck::parse_timestamp(iso); }

/// One historical order; each order is its own single-stop trip on `vehicle`.
inline ck::HistoricalOrder hist_order(std::string id, Seconds placed, Seconds ready, Seconds deadline,
                                      ck::GeoPoint where, std::string vehicle = "v1", int trip = 1,
                                      int stop = 1, Seconds leg = 600, Seconds delivered = 0) {
  ck::HistoricalOrder h;
  h.order = ck::Order{std::move(id), placed, ready, deadline, where, 1};
  h.hist_vehicle = std::move(vehicle);
  h.hist_trip = trip;
  h.hist_stop_index = stop;
  h.hist_leg_seconds = leg;
  h.hist_delivered_at = delivered ? delivered : ready + leg;
  return h;
}

inline ck::Dataset small_dataset(std::size_t vehicles) {
  ck::Dataset ds;
  ds.restaurant.location = {50.0755, 14.4378};
  for (std::size_t v = 0; v < vehicles; ++v) ds.vehicles.push_back({"v" + std::to_string(v + 1), std::nullopt});
  return ds;
}

}  // namespace cktest
