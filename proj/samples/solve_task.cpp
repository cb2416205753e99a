// Builds a three-order task by hand, solves it, validates the routes and
// prints the six-action plan.

#include <iostream>

#include "cloudkitchen/plan.hpp"
#include "cloudkitchen/solver.hpp"

int main() {
  ck::VrptwTask task;
  task.vehicles = {{"v1", std::nullopt}, {"v2", std::nullopt}};
  task.customers = {{"o1", 1, 1, 0, 1200}, {"o2", 2, 1, 0, 1500}, {"o3", 3, 1, 0, 2400}};
  task.graph = ck::TravelGraph(5);
  const ck::Seconds t[5][5] = {{0, 300, 420, 600, 0},
                               {300, 0, 200, 500, 300},
                               {420, 200, 0, 360, 420},
                               {600, 500, 360, 0, 600},
                               {0, 300, 420, 600, 0}};
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) task.graph.set(i, j, t[i][j], t[i][j] * 8);
  }
  task.horizon_open = 0;
  task.horizon_close = 3600;

  const auto outcome = ck::solve(task);
  if (!outcome.solved()) {
    std::cerr << "no solution within budget\n";
    return 1;
  }
  std::cout << "valid: " << ck::validate_solution(task, *outcome.solution).valid()
            << "  time objective: " << outcome.solution->objective_time << " s\n";
  for (const auto& r : outcome.solution->routes) {
    std::cout << r.vehicle_id << ":";
    for (std::size_t i = 0; i < r.path.size(); ++i) std::cout << ' ' << r.path[i] << '@' << r.delivery_times[i];
    std::cout << '\n';
  }

  std::vector<ck::Order> orders;
  for (const auto& c : task.customers) orders.push_back(ck::Order{c.id, 0, 0, c.window_close, {}, c.demand});
  const auto plan = ck::translate(task, *outcome.solution, orders, task.vehicles);
  std::cout << ck::emit_plan_text(plan);
  std::cout << "plan valid: " << ck::validate_plan(plan).valid << '\n';
  return 0;
}
