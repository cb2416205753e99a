#pragma once

// JSON shape for VRPTW tasks and solutions:
//
//   {"schema_version": 1, "node_count": N, "horizon": [open, close],
//    "vehicles": [{"id": "v1", "capacity": null}],
//    "customers": [{"id": "o1", "node": 1, "demand": 1, "window": [a, b]}],
//    "time": [N*N seconds, row-major], "dist": [N*N meters, row-major]}

#include <fstream>
#include <string>

#include <json.hpp>

#include "cloudkitchen/routing.hpp"

namespace ck {

inline constexpr int kTaskSchemaVersion = 1;

inline nlohmann::json to_json(const VrptwTask& task) {
  nlohmann::json j;
  j["schema_version"] = kTaskSchemaVersion;
  j["node_count"] = task.graph.node_count();
  j["horizon"] = {task.horizon_open, task.horizon_close};
  j["vehicles"] = nlohmann::json::array();
  for (const auto& v : task.vehicles) {
    j["vehicles"].push_back({{"id", v.id}, {"capacity", v.capacity ? nlohmann::json(*v.capacity) : nullptr}});
  }
  j["customers"] = nlohmann::json::array();
  for (const auto& c : task.customers) {
    j["customers"].push_back(
        {{"id", c.id}, {"node", c.node}, {"demand", c.demand}, {"window", {c.window_open, c.window_close}}});
  }
  j["time"] = task.graph.time_matrix();
  j["dist"] = task.graph.dist_matrix();
  return j;
}

inline VrptwTask task_from_json(const nlohmann::json& j) {
  try {
    VrptwTask task;
    const auto n = j.at("node_count").get<std::size_t>();
    task.horizon_open = j.at("horizon").at(0).get<Seconds>();
    task.horizon_close = j.at("horizon").at(1).get<Seconds>();
    for (const auto& v : j.at("vehicles")) {
      Vehicle vehicle{v.at("id").get<std::string>(), std::nullopt};
      if (v.contains("capacity") && !v["capacity"].is_null()) vehicle.capacity = v["capacity"].get<std::int64_t>();
      task.vehicles.push_back(std::move(vehicle));
    }
    for (const auto& c : j.at("customers")) {
      task.customers.push_back(Customer{c.at("id").get<std::string>(), c.at("node").get<NodeIndex>(),
                                        c.value("demand", std::int64_t{0}), c.at("window").at(0).get<Seconds>(),
                                        c.at("window").at(1).get<Seconds>()});
    }
    task.graph = TravelGraph(n, j.at("dist").get<std::vector<Meters>>(), j.at("time").get<std::vector<Seconds>>());
    task.check();
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed task JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const Route& r) {
  return {{"vehicle", r.vehicle_id}, {"path", r.path}, {"delivery_times", r.delivery_times}};
}

inline nlohmann::json to_json(const RouteSolution& s) {
  nlohmann::json routes = nlohmann::json::array();
  for (const auto& r : s.routes) routes.push_back(to_json(r));
  return {{"routes", routes}, {"objective_distance", s.objective_distance}, {"objective_time", s.objective_time}};
}

inline RouteSolution solution_from_json(const nlohmann::json& j) {
  try {
    RouteSolution s;
    for (const auto& r : j.at("routes")) {
      s.routes.push_back(Route{r.at("vehicle").get<std::string>(), r.at("path").get<std::vector<NodeIndex>>(),
                               r.at("delivery_times").get<std::vector<Seconds>>()});
    }
    s.objective_distance = j.value("objective_distance", Meters{0});
    s.objective_time = j.value("objective_time", Seconds{0});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed solution JSON: ") + e.what());
  }
}

inline VrptwTask load_task(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open task file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("task file '" + path + "' is not valid JSON: " + e.what());
  }
  return task_from_json(j);
}

inline void save_task(const VrptwTask& task, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write task file '" + path + "'");
  out << to_json(task).dump(2) << '\n';
}

}  // namespace ck
