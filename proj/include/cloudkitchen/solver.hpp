#pragma once

// VRPTW heuristic: cheapest-arc construction (with bounded backtracking when
// the greedy pass strands a customer) followed by first-improvement
// local search (relocate + intra-route 2-opt) under a wall-clock budget.
// solve_exact enumerates small instances exhaustively and serves as the
// reference optimum for tests.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cloudkitchen/routing.hpp"

namespace ck {

enum class ConstructionStrategy { CheapestArc };

inline const char* to_string(ConstructionStrategy s) {
  switch (s) {
    case ConstructionStrategy::CheapestArc: return "cheapest-arc";
  }
  return "unknown";
}

inline ConstructionStrategy parse_construction_strategy(std::string_view name) {
  if (name == "cheapest-arc" || name == "path_cheapest_arc") return ConstructionStrategy::CheapestArc;
  throw InputError("unknown construction strategy '" + std::string(name) + "'");
}

struct SolverConfig {
  std::chrono::milliseconds time_budget{50};
  ConstructionStrategy construction = ConstructionStrategy::CheapestArc;
  bool improvement_enabled = true;
  /// Extra arcs the construction may try after a dead end; 0 is plain greedy.
  std::size_t backtrack_limit = 1000;
  std::uint64_t rng_seed = 0;

  void check() const {
    if (time_budget.count() <= 0) throw InputError("solver time budget must be positive");
  }
};

enum class SolveStatus { Solved, NoSolutionWithinBudget };

inline const char* to_string(SolveStatus s) {
  return s == SolveStatus::Solved ? "solved" : "no-solution-within-budget";
}

struct SolveStats {
  std::size_t nodes_inserted = 0;
  std::size_t improvement_passes = 0;
  std::size_t moves_applied = 0;
  std::vector<NodeIndex> unrouted;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::NoSolutionWithinBudget;
  std::optional<RouteSolution> solution;
  double elapsed_ms = 0.0;
  SolveStats stats;

  bool solved() const noexcept { return status == SolveStatus::Solved; }
};

class InstanceTooLarge : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ConstructionResult {
  /// Scheduled routes over the customers that could be placed.
  RouteSolution solution;
  std::vector<NodeIndex> unrouted;
  std::size_t nodes_inserted = 0;

  bool complete() const noexcept { return unrouted.empty(); }
};

namespace detail {

using Clock = std::chrono::steady_clock;
inline constexpr Seconds kInfeasible = std::numeric_limits<Seconds>::max();

/// Return time of the route visiting node_at(0..count-1), or kInfeasible.
template <class NodeAt>
Seconds route_return_time(const VrptwTask& task, std::size_t count, NodeAt&& node_at) {
  Seconds t = task.horizon_open;
  NodeIndex prev = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const NodeIndex n = node_at(i);
    const Customer& c = task.customers[n - 1];
    t = std::max(c.window_open, t + task.graph.time(prev, n));
    if (t > c.window_close) return kInfeasible;
    prev = n;
  }
  t += task.graph.time(prev, task.return_depot());
  return t > task.horizon_close ? kInfeasible : t;
}

inline Seconds route_return_time(const VrptwTask& task, const std::vector<NodeIndex>& stops) {
  return route_return_time(task, stops.size(), [&](std::size_t i) { return stops[i]; });
}

struct WorkRoute {
  std::vector<NodeIndex> stops;
  std::int64_t load = 0;
  Seconds return_time = 0;
};

inline std::vector<NodeIndex> full_path(const VrptwTask& task, const std::vector<NodeIndex>& stops) {
  std::vector<NodeIndex> path;
  path.reserve(stops.size() + 2);
  path.push_back(0);
  path.insert(path.end(), stops.begin(), stops.end());
  path.push_back(task.return_depot());
  return path;
}

inline RouteSolution assemble(const VrptwTask& task, const std::vector<WorkRoute>& work) {
  RouteSolution solution;
  for (std::size_t v = 0; v < work.size(); ++v) {
    const auto path = full_path(task, work[v].stops);
    auto scheduled = schedule_route(task, task.vehicles[v].id, path);
    if (!scheduled.feasible()) {
      // Only feasible partial routes are ever built; report the path as-is.
      Route r{task.vehicles[v].id, path, std::vector<Seconds>(path.size(), 0)};
      solution.routes.push_back(std::move(r));
    } else {
      solution.routes.push_back(std::move(*scheduled.route));
    }
  }
  update_objectives(solution, task);
  return solution;
}

inline bool fits(const Vehicle& v, std::int64_t load) { return !v.capacity || load <= *v.capacity; }

/// Cheapest-arc extension with chronological backtracking. The first descent
/// is the plain greedy; when it strands a customer, earlier choices are
/// revisited in cost order until `backtrack_limit` extra arcs have been tried.
/// The count limit keeps the result independent of machine speed; the deadline
/// is only a safety net.
inline ConstructionResult construct_cheapest_arc(const VrptwTask& task, std::optional<Clock::time_point> deadline,
                                                 std::size_t backtrack_limit) {
  const std::size_t k = task.customer_count();
  const std::size_t vehicle_count = task.vehicles.size();
  const NodeIndex end = task.return_depot();
  std::vector<WorkRoute> work(vehicle_count);
  std::vector<NodeIndex> tail(vehicle_count, 0);
  std::vector<Seconds> tail_time(vehicle_count, task.horizon_open);
  std::vector<bool> routed(k + 1, false);
  std::size_t backtracks = 0;
  bool stop = false;
  std::optional<std::vector<WorkRoute>> greedy;  // state at the first dead end

  struct Candidate {
    Seconds arc;
    NodeIndex customer;
    std::size_t vehicle;
    Seconds at;
  };

  auto candidates = [&] {
    std::vector<Candidate> out;
    for (NodeIndex c = 1; c <= k; ++c) {
      if (routed[c]) continue;
      const Customer& cust = task.customers[c - 1];
      for (std::size_t v = 0; v < vehicle_count; ++v) {
        if (!fits(task.vehicles[v], work[v].load + cust.demand)) continue;
        const Seconds arc = task.graph.time(tail[v], c);
        const Seconds at = std::max(cust.window_open, tail_time[v] + arc);
        if (at > cust.window_close) continue;
        if (at + task.graph.time(c, end) > task.horizon_close) continue;
        out.push_back(Candidate{arc, c, v, at});
      }
    }
    // Ties resolve to the lowest customer node, then the lowest vehicle.
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.arc < b.arc; });
    return out;
  };

  auto extend = [&](auto&& self, std::size_t remaining) -> bool {
    if (remaining == 0) return true;
    if (deadline && Clock::now() > *deadline) {
      stop = true;
      return false;
    }
    const auto options = candidates();
    // A customer no route can reach now stays unreachable: tails only move
    // later and loads only grow.
    std::vector<bool> reachable(k + 1, false);
    for (const auto& o : options) reachable[o.customer] = true;
    bool dead = false;
    for (NodeIndex c = 1; c <= k && !dead; ++c) dead = !routed[c] && !reachable[c];
    if (dead || options.empty()) {
      if (!greedy) greedy = work;
      return false;
    }
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (i > 0 && ++backtracks > backtrack_limit) {
        stop = true;
        return false;
      }
      const auto& o = options[i];
      auto& r = work[o.vehicle];
      const NodeIndex old_tail = tail[o.vehicle];
      const Seconds old_time = tail_time[o.vehicle];
      r.stops.push_back(o.customer);
      r.load += task.customers[o.customer - 1].demand;
      tail[o.vehicle] = o.customer;
      tail_time[o.vehicle] = o.at;
      routed[o.customer] = true;
      if (self(self, remaining - 1)) return true;
      routed[o.customer] = false;
      tail_time[o.vehicle] = old_time;
      tail[o.vehicle] = old_tail;
      r.load -= task.customers[o.customer - 1].demand;
      r.stops.pop_back();
      if (stop) return false;
    }
    return false;
  };

  ConstructionResult result;
  if (!extend(extend, k) && greedy) work = std::move(*greedy);
  result.solution = assemble(task, work);
  std::vector<bool> placed(k + 1, false);
  for (const auto& r : work) {
    for (NodeIndex n : r.stops) placed[n] = true;
  }
  for (NodeIndex c = 1; c <= k; ++c) {
    if (!placed[c]) result.unrouted.push_back(c);
  }
  result.nodes_inserted = k - result.unrouted.size();
  return result;
}

struct ImproveResult {
  RouteSolution solution;
  std::size_t passes = 0;
  std::size_t moves = 0;
};

inline ImproveResult improve(const VrptwTask& task, const RouteSolution& input, Clock::time_point deadline,
                             std::uint64_t rng_seed) {
  const std::size_t vehicle_count = task.vehicles.size();
  std::vector<WorkRoute> work(vehicle_count);
  for (const auto& route : input.routes) {
    std::size_t v = 0;
    while (v < vehicle_count && task.vehicles[v].id != route.vehicle_id) ++v;
    if (v == vehicle_count) throw InputError("solution references unknown vehicle '" + route.vehicle_id + "'");
    auto stops = route.stops();
    work[v].stops.assign(stops.begin(), stops.end());
  }
  for (auto& r : work) {
    r.load = 0;
    for (NodeIndex n : r.stops) r.load += task.customers[n - 1].demand;
    r.return_time = route_return_time(task, r.stops);
    if (r.return_time == kInfeasible) throw InputError("improve() requires a feasible input solution");
  }

  std::vector<NodeIndex> scan(task.customer_count());
  std::iota(scan.begin(), scan.end(), NodeIndex{1});
  std::mt19937_64 rng(rng_seed);
  ImproveResult out;
  bool timed_out = false;

  auto locate = [&](NodeIndex c, std::size_t& route, std::size_t& pos) {
    for (std::size_t v = 0; v < vehicle_count; ++v) {
      const auto& s = work[v].stops;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == c) {
          route = v;
          pos = i;
          return;
        }
      }
    }
  };

  // Relocate c out of its route and into the first position that lowers the
  // time objective.
  auto try_relocate = [&](NodeIndex c) -> bool {
    std::size_t a = 0, p = 0;
    locate(c, a, p);
    const auto& sa = work[a].stops;
    const std::size_t na = sa.size();
    const std::int64_t demand = task.customers[c - 1].demand;
    auto removed_at = [&](std::size_t i) { return sa[i < p ? i : i + 1]; };
    const Seconds ret_a_removed = route_return_time(task, na - 1, removed_at);

    for (std::size_t b = 0; b < vehicle_count; ++b) {
      if (b == a) {
        // Within the same route: sequence is "removed" with c inserted at q.
        for (std::size_t q = 0; q < na; ++q) {
          if (q == p) continue;
          auto node_at = [&](std::size_t i) {
            if (i == q) return c;
            return removed_at(i < q ? i : i - 1);
          };
          const Seconds ret = route_return_time(task, na, node_at);
          if (ret < work[a].return_time) {
            auto& s = work[a].stops;
            s.erase(s.begin() + static_cast<std::ptrdiff_t>(p));
            s.insert(s.begin() + static_cast<std::ptrdiff_t>(q), c);
            work[a].return_time = ret;
            return true;
          }
        }
        continue;
      }
      if (ret_a_removed == kInfeasible) continue;
      if (!fits(task.vehicles[b], work[b].load + demand)) continue;
      const auto& sb = work[b].stops;
      const std::size_t nb = sb.size();
      const Seconds before = work[a].return_time + work[b].return_time;
      for (std::size_t q = 0; q <= nb; ++q) {
        auto node_at = [&](std::size_t i) {
          if (i == q) return c;
          return sb[i < q ? i : i - 1];
        };
        const Seconds ret_b = route_return_time(task, nb + 1, node_at);
        if (ret_b == kInfeasible) continue;
        if (ret_a_removed + ret_b < before) {
          work[a].stops.erase(work[a].stops.begin() + static_cast<std::ptrdiff_t>(p));
          work[a].load -= demand;
          work[a].return_time = ret_a_removed;
          work[b].stops.insert(work[b].stops.begin() + static_cast<std::ptrdiff_t>(q), c);
          work[b].load += demand;
          work[b].return_time = ret_b;
          return true;
        }
      }
    }
    return false;
  };

  // Reverse stops[i..j] when that lowers the route's return time.
  auto try_two_opt = [&](std::size_t v) -> bool {
    auto& s = work[v].stops;
    const std::size_t n = s.size();
    bool any = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        auto node_at = [&](std::size_t x) { return (x >= i && x <= j) ? s[i + j - x] : s[x]; };
        const Seconds ret = route_return_time(task, n, node_at);
        if (ret < work[v].return_time) {
          std::reverse(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          work[v].return_time = ret;
          any = true;
          ++out.moves;
        }
      }
    }
    return any;
  };

  bool improved = true;
  while (improved && !timed_out) {
    improved = false;
    ++out.passes;
    std::shuffle(scan.begin(), scan.end(), rng);
    for (NodeIndex c : scan) {
      if (Clock::now() > deadline) {
        timed_out = true;
        break;
      }
      if (try_relocate(c)) {
        improved = true;
        ++out.moves;
      }
    }
    for (std::size_t v = 0; v < vehicle_count && !timed_out; ++v) {
      if (Clock::now() > deadline) {
        timed_out = true;
        break;
      }
      if (try_two_opt(v)) improved = true;
    }
  }

  out.solution = assemble(task, work);
  return out;
}

}  // namespace detail

/// Greedy route extension: repeatedly appends the unrouted customer reachable
/// by the cheapest feasible arc (travel time) from any route's last stop.
/// With a positive backtrack_limit, stranded customers trigger a search over
/// earlier choices.
inline ConstructionResult construct_cheapest_arc(const VrptwTask& task, std::size_t backtrack_limit = 0) {
  task.check();
  return detail::construct_cheapest_arc(task, std::nullopt, backtrack_limit);
}

/// First-improvement relocate and 2-opt on the time objective until a local
/// optimum or the deadline. The input must be feasible.
inline RouteSolution improve(const VrptwTask& task, const RouteSolution& solution,
                             std::chrono::steady_clock::time_point deadline, std::uint64_t rng_seed) {
  task.check();
  return detail::improve(task, solution, deadline, rng_seed).solution;
}

inline SolveOutcome solve(const VrptwTask& task, const SolverConfig& config = {}) {
  const auto start = detail::Clock::now();
  config.check();
  task.check();
  const auto deadline = start + config.time_budget;

  SolveOutcome outcome;
  auto construction = detail::construct_cheapest_arc(task, deadline, config.backtrack_limit);
  outcome.stats.nodes_inserted = construction.nodes_inserted;
  if (!construction.complete()) {
    outcome.stats.unrouted = std::move(construction.unrouted);
    outcome.status = SolveStatus::NoSolutionWithinBudget;
  } else {
    outcome.status = SolveStatus::Solved;
    if (config.improvement_enabled && task.customer_count() > 0) {
      auto improved = detail::improve(task, construction.solution, deadline, config.rng_seed);
      outcome.stats.improvement_passes = improved.passes;
      outcome.stats.moves_applied = improved.moves;
      outcome.solution = std::move(improved.solution);
    } else {
      outcome.solution = std::move(construction.solution);
    }
  }
  outcome.elapsed_ms = std::chrono::duration<double, std::milli>(detail::Clock::now() - start).count();
  return outcome;
}

inline constexpr std::size_t kExactMaxCustomers = 8;
inline constexpr std::size_t kExactMaxVehicles = 3;

/// Exhaustive optimum of the time objective over every customer-to-vehicle
/// assignment and every visiting order.
inline SolveOutcome solve_exact(const VrptwTask& task) {
  const auto start = detail::Clock::now();
  task.check();
  const std::size_t k = task.customer_count();
  const std::size_t vehicle_count = task.vehicles.size();
  if (k > kExactMaxCustomers || vehicle_count > kExactMaxVehicles) {
    throw InstanceTooLarge("solve_exact supports at most " + std::to_string(kExactMaxCustomers) + " customers and " +
                           std::to_string(kExactMaxVehicles) + " vehicles");
  }

  // Best visiting order for every customer subset.
  const std::size_t subsets = std::size_t{1} << k;
  std::vector<Seconds> best_time(subsets, detail::kInfeasible);
  std::vector<std::vector<NodeIndex>> best_order(subsets);
  std::vector<std::int64_t> demand(subsets, 0);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::vector<NodeIndex> perm;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (std::size_t{1} << i)) {
        perm.push_back(i + 1);
        demand[mask] += task.customers[i].demand;
      }
    }
    do {
      const Seconds t = detail::route_return_time(task, perm);
      if (t < best_time[mask]) {
        best_time[mask] = t;
        best_order[mask] = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  SolveOutcome outcome;
  Seconds best_total = detail::kInfeasible;
  std::vector<std::size_t> best_masks;

  if (vehicle_count > 0) {
    std::vector<std::size_t> assign(k, 0);
    std::vector<std::size_t> masks(vehicle_count);
    while (true) {
      std::fill(masks.begin(), masks.end(), 0);
      for (std::size_t i = 0; i < k; ++i) masks[assign[i]] |= std::size_t{1} << i;
      Seconds total = 0;
      bool ok = true;
      for (std::size_t v = 0; v < vehicle_count && ok; ++v) {
        if (best_time[masks[v]] == detail::kInfeasible || !detail::fits(task.vehicles[v], demand[masks[v]])) {
          ok = false;
        } else {
          total += best_time[masks[v]];
        }
      }
      if (ok && total < best_total) {
        best_total = total;
        best_masks = masks;
      }
      std::size_t pos = 0;
      while (pos < k && ++assign[pos] == vehicle_count) assign[pos++] = 0;
      if (pos == k) break;
    }
  }

  if (best_masks.empty() && !(vehicle_count == 0 && k == 0)) {
    outcome.status = SolveStatus::NoSolutionWithinBudget;
  } else {
    std::vector<detail::WorkRoute> work(vehicle_count);
    for (std::size_t v = 0; v < vehicle_count; ++v) work[v].stops = best_order[best_masks[v]];
    outcome.status = SolveStatus::Solved;
    outcome.solution = detail::assemble(task, work);
  }
  outcome.elapsed_ms = std::chrono::duration<double, std::milli>(detail::Clock::now() - start).count();
  return outcome;
}

}  // namespace ck
