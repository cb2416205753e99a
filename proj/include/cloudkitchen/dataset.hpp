#pragma once

// Restaurant delivery dataset: one restaurant, a fleet, and orders annotated
// with how they were historically batched and driven.
//
// Directory layout:
//   restaurant.json     {"schema_version", "id", "lat", "lon", "travel": {...}}
//   vehicles.json       {"schema_version", "vehicles": [{"id", "capacity"}]}
//   orders.jsonl        one order per line (see docs/formats.md)
//   travel-matrix.bin   optional; node 0 = restaurant, node i = i-th order line

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudkitchen/order.hpp"
#include "cloudkitchen/routing.hpp"
#include "cloudkitchen/time.hpp"
#include "cloudkitchen/travel.hpp"

namespace ck {

inline constexpr int kDatasetSchemaVersion = 1;

class LoadError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TravelSpec {
  std::string kind = "haversine-speed";  // or "matrix-file"
  double speed_mps = kDefaultUrbanSpeedMps;
  std::string matrix_file = "travel-matrix.bin";

  friend bool operator==(const TravelSpec&, const TravelSpec&) = default;
};

struct Restaurant {
  std::string id = "restaurant";
  GeoPoint location;
  TravelSpec travel;

  friend bool operator==(const Restaurant&, const Restaurant&) = default;
};

struct HistoricalOrder {
  Order order;
  std::string hist_vehicle;
  int hist_trip = 0;
  /// 1-based position within the trip.
  int hist_stop_index = 0;
  /// Driving time of the leg that ends at this order.
  Seconds hist_leg_seconds = 0;
  Seconds hist_delivered_at = 0;

  friend bool operator==(const HistoricalOrder&, const HistoricalOrder&) = default;
};

struct DayOrders {
  Seconds day_start = 0;
  std::vector<std::size_t> orders;
};

struct Dataset {
  Restaurant restaurant;
  std::vector<Vehicle> vehicles;
  std::vector<HistoricalOrder> orders;
  std::optional<TravelMatrix> matrix;

  /// Orders grouped by the calendar day they were placed on, in day order.
  std::vector<DayOrders> days() const {
    std::map<Seconds, std::vector<std::size_t>> by_day;
    for (std::size_t i = 0; i < orders.size(); ++i) by_day[day_start(orders[i].order.placed_at)].push_back(i);
    std::vector<DayOrders> out;
    for (auto& [d, idx] : by_day) out.push_back(DayOrders{d, std::move(idx)});
    return out;
  }

  const Vehicle* find_vehicle(std::string_view id) const {
    for (const auto& v : vehicles) {
      if (v.id == id) return &v;
    }
    return nullptr;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Key of a historical trip: (day start, vehicle, trip number).
struct TripKey {
  Seconds day = 0;
  std::string vehicle;
  int trip = 0;

  friend auto operator<=>(const TripKey&, const TripKey&) = default;
};

/// Historical trips with their orders sorted by stop index.
inline std::map<TripKey, std::vector<std::size_t>> historical_trips(const Dataset& ds) {
  std::map<TripKey, std::vector<std::size_t>> trips;
  for (std::size_t i = 0; i < ds.orders.size(); ++i) {
    const auto& h = ds.orders[i];
    trips[TripKey{day_start(h.order.placed_at), h.hist_vehicle, h.hist_trip}].push_back(i);
  }
  for (auto& [key, idx] : trips) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return ds.orders[a].hist_stop_index < ds.orders[b].hist_stop_index;
    });
  }
  return trips;
}

inline std::vector<GeoPoint> matrix_locations(const Dataset& ds) {
  std::vector<GeoPoint> where;
  where.reserve(ds.orders.size() + 1);
  where.push_back(ds.restaurant.location);
  for (const auto& h : ds.orders) where.push_back(h.order.location);
  return where;
}

inline std::unique_ptr<TravelTimeProvider> make_provider(const Dataset& ds) {
  if (ds.restaurant.travel.kind == "matrix-file") {
    if (!ds.matrix) throw LoadError("restaurant.json selects a travel matrix but none was loaded");
    return std::make_unique<MatrixProvider>(*ds.matrix, matrix_locations(ds));
  }
  return std::make_unique<HaversineProvider>(ds.restaurant.travel.speed_mps);
}

/// Throws LoadError naming the offending record when an invariant fails.
inline void check_dataset(const Dataset& ds) {
  if (ds.vehicles.empty()) throw LoadError("vehicles.json: at least one vehicle is required");
  std::set<std::string> vids;
  for (const auto& v : ds.vehicles) {
    if (!vids.insert(v.id).second) throw LoadError("vehicles.json: duplicate vehicle id '" + v.id + "'");
    if (v.capacity && *v.capacity <= 0) throw LoadError("vehicles.json: vehicle '" + v.id + "' capacity must be positive");
  }
  std::set<std::string> oids;
  for (std::size_t i = 0; i < ds.orders.size(); ++i) {
    const auto& h = ds.orders[i];
    const auto where = "orders.jsonl:" + std::to_string(i + 1) + ": ";
    if (!oids.insert(h.order.id).second) throw LoadError(where + "field 'order_id': duplicate id '" + h.order.id + "'");
    if (h.order.ready_at < h.order.placed_at) throw LoadError(where + "field 'ready_at': before placed_at");
    if (h.order.deadline < h.order.ready_at) throw LoadError(where + "field 'deadline': before ready_at");
    if (h.order.demand < 0) throw LoadError(where + "field 'demand': negative");
    if (!vids.contains(h.hist_vehicle)) {
      throw LoadError(where + "field 'hist_vehicle': unknown vehicle '" + h.hist_vehicle + "'");
    }
    if (h.hist_leg_seconds < 0) throw LoadError(where + "field 'hist_leg_seconds': negative");
    if (h.hist_delivered_at < h.order.ready_at) throw LoadError(where + "field 'hist_delivered_at': before ready_at");
  }
  for (const auto& [key, idx] : historical_trips(ds)) {
    for (std::size_t s = 0; s < idx.size(); ++s) {
      if (ds.orders[idx[s]].hist_stop_index != static_cast<int>(s + 1)) {
        throw LoadError("orders.jsonl:" + std::to_string(idx[s] + 1) +
                        ": field 'hist_stop_index': stops of trip " + std::to_string(key.trip) + " of vehicle '" +
                        key.vehicle + "' on " + format_date(key.day) + " are not 1.." + std::to_string(idx.size()));
      }
    }
  }
  if (ds.matrix && ds.matrix->node_count != ds.orders.size() + 1) {
    throw LoadError("travel-matrix.bin: expected " + std::to_string(ds.orders.size() + 1) + " nodes, found " +
                    std::to_string(ds.matrix->node_count));
  }
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json order_record(const HistoricalOrder& h) {
  nlohmann::ordered_json j;
  j["order_id"] = h.order.id;
  j["placed_at"] = format_timestamp(h.order.placed_at);
  j["ready_at"] = format_timestamp(h.order.ready_at);
  j["deadline"] = format_timestamp(h.order.deadline);
  j["lat"] = h.order.location.lat;
  j["lon"] = h.order.location.lon;
  j["demand"] = h.order.demand;
  j["hist_vehicle"] = h.hist_vehicle;
  j["hist_trip"] = h.hist_trip;
  j["hist_stop_index"] = h.hist_stop_index;
  j["hist_leg_seconds"] = h.hist_leg_seconds;
  j["hist_delivered_at"] = format_timestamp(h.hist_delivered_at);
  return j;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    nlohmann::ordered_json r;
    r["schema_version"] = kDatasetSchemaVersion;
    r["id"] = ds.restaurant.id;
    r["lat"] = ds.restaurant.location.lat;
    r["lon"] = ds.restaurant.location.lon;
    if (ds.restaurant.travel.kind == "matrix-file") {
      r["travel"] = {{"kind", "matrix-file"}, {"file", ds.restaurant.travel.matrix_file}};
    } else {
      r["travel"] = {{"kind", "haversine-speed"}, {"speed_mps", ds.restaurant.travel.speed_mps}};
    }
    std::ofstream(dir / "restaurant.json") << r.dump(2) << '\n';
  }
  {
    nlohmann::ordered_json v;
    v["schema_version"] = kDatasetSchemaVersion;
    v["vehicles"] = nlohmann::ordered_json::array();
    for (const auto& veh : ds.vehicles) {
      nlohmann::ordered_json e;
      e["id"] = veh.id;
      e["capacity"] = veh.capacity ? nlohmann::ordered_json(*veh.capacity) : nlohmann::ordered_json(nullptr);
      v["vehicles"].push_back(e);
    }
    std::ofstream(dir / "vehicles.json") << v.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "orders.jsonl");
    for (const auto& h : ds.orders) out << order_record(h).dump() << '\n';
    if (!out) throw LoadError("cannot write " + (dir / "orders.jsonl").string());
  }
  if (ds.matrix) write_travel_matrix(*ds.matrix, (dir / ds.restaurant.travel.matrix_file).string());
}

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.filename().string() + ": cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.filename().string() + ": invalid JSON: " + e.what());
  }
}

template <class T>
T field(const nlohmann::json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw LoadError(where + "missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw LoadError(where + "field '" + name + "' has the wrong type");
  }
}

inline Seconds time_field(const nlohmann::json& j, const char* name, const std::string& where) {
  const auto text = field<std::string>(j, name, where);
  try {
    return parse_timestamp(text);
  } catch (const TimeFormatError& e) {
    throw LoadError(where + "field '" + name + "': " + e.what());
  }
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  {
    const auto j = detail::read_json_file(dir / "restaurant.json");
    const std::string where = "restaurant.json: ";
    ds.restaurant.id = j.value("id", std::string("restaurant"));
    ds.restaurant.location = GeoPoint{detail::field<double>(j, "lat", where), detail::field<double>(j, "lon", where)};
    if (j.contains("travel")) {
      const auto& t = j["travel"];
      ds.restaurant.travel.kind = detail::field<std::string>(t, "kind", where + "travel: ");
      if (ds.restaurant.travel.kind == "haversine-speed") {
        ds.restaurant.travel.speed_mps = t.value("speed_mps", kDefaultUrbanSpeedMps);
        if (!(ds.restaurant.travel.speed_mps > 0)) throw LoadError(where + "field 'speed_mps' must be positive");
      } else if (ds.restaurant.travel.kind == "matrix-file") {
        ds.restaurant.travel.matrix_file = t.value("file", std::string("travel-matrix.bin"));
      } else {
        throw LoadError(where + "field 'kind': unknown travel provider '" + ds.restaurant.travel.kind + "'");
      }
    }
  }
  {
    const auto j = detail::read_json_file(dir / "vehicles.json");
    const std::string where = "vehicles.json: ";
    const auto& list = j.is_array() ? j : j.at("vehicles");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto w = where + "vehicle " + std::to_string(i + 1) + ": ";
      Vehicle v{detail::field<std::string>(list[i], "id", w), std::nullopt};
      if (list[i].contains("capacity") && !list[i]["capacity"].is_null()) {
        v.capacity = detail::field<std::int64_t>(list[i], "capacity", w);
      }
      ds.vehicles.push_back(std::move(v));
    }
  }
  {
    const auto path = dir / "orders.jsonl";
    std::ifstream in(path);
    if (!in) throw LoadError("orders.jsonl: cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = "orders.jsonl:" + std::to_string(lineno) + ": ";
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(where + "invalid JSON: " + e.what());
      }
      HistoricalOrder h;
      h.order.id = detail::field<std::string>(j, "order_id", where);
      h.order.placed_at = detail::time_field(j, "placed_at", where);
      h.order.ready_at = detail::time_field(j, "ready_at", where);
      h.order.deadline = detail::time_field(j, "deadline", where);
      h.order.location = GeoPoint{detail::field<double>(j, "lat", where), detail::field<double>(j, "lon", where)};
      h.order.demand = j.contains("demand") ? detail::field<std::int64_t>(j, "demand", where) : 1;
      h.hist_vehicle = detail::field<std::string>(j, "hist_vehicle", where);
      h.hist_trip = detail::field<int>(j, "hist_trip", where);
      h.hist_stop_index = detail::field<int>(j, "hist_stop_index", where);
      h.hist_leg_seconds = detail::field<Seconds>(j, "hist_leg_seconds", where);
      h.hist_delivered_at = detail::time_field(j, "hist_delivered_at", where);
      // Per-record invariants get the physical line number.
      if (h.order.ready_at < h.order.placed_at) throw LoadError(where + "field 'ready_at': before placed_at");
      if (h.order.deadline < h.order.ready_at) throw LoadError(where + "field 'deadline': before ready_at");
      if (h.hist_delivered_at < h.order.ready_at) throw LoadError(where + "field 'hist_delivered_at': before ready_at");
      ds.orders.push_back(std::move(h));
    }
  }
  const auto matrix_path = dir / ds.restaurant.travel.matrix_file;
  if (std::filesystem::exists(matrix_path)) {
    try {
      ds.matrix = read_travel_matrix(matrix_path.string());
    } catch (const ProviderError& e) {
      throw LoadError(std::string("travel-matrix.bin: ") + e.what());
    }
  } else if (ds.restaurant.travel.kind == "matrix-file") {
    throw LoadError("restaurant.json: travel matrix '" + matrix_path.string() + "' does not exist");
  }
  check_dataset(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic generation

struct GeneratorSpec {
  int days = 61;
  double orders_per_day_mean = 235.0;
  double orders_per_day_sd = 20.0;
  int vehicles = 9;
  double radius_m = 4000.0;
  /// Ground-truth multiplier applied to provider times for historical legs.
  double calibration_factor = 1.6666;
  std::uint64_t seed = 0;
  std::string start_date = "2024-03-01";
  GeoPoint restaurant{50.0755, 14.4378};
  double speed_mps = kDefaultUrbanSpeedMps;
  Seconds cook_min = 8 * 60;
  Seconds cook_max = 25 * 60;
  /// Bounds on deadline - ready_at.
  Seconds slack_min = 20 * 60;
  Seconds slack_max = 40 * 60;
  /// Myopic historical policy.
  int batch_limit = 3;
  Seconds load_seconds = 120;
  bool write_matrix = false;

  void check() const {
    if (days <= 0 || vehicles <= 0 || orders_per_day_mean <= 0 || radius_m <= 0 || calibration_factor <= 0 ||
        speed_mps <= 0 || batch_limit <= 0) {
      throw InputError("generator spec fields must be positive");
    }
    if (cook_min < 0 || cook_max < cook_min || slack_min < 0 || slack_max < slack_min || load_seconds < 0) {
      throw InputError("generator spec has inverted bounds");
    }
  }
};

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  try {
    s.days = j.value("days", s.days);
    s.orders_per_day_mean = j.value("orders_per_day_mean", s.orders_per_day_mean);
    s.orders_per_day_sd = j.value("orders_per_day_sd", s.orders_per_day_sd);
    s.vehicles = j.value("vehicles", s.vehicles);
    s.radius_m = j.value("radius_m", s.radius_m);
    s.calibration_factor = j.value("calibration_factor", s.calibration_factor);
    s.seed = j.value("seed", s.seed);
    s.start_date = j.value("start_date", s.start_date);
    if (j.contains("restaurant")) s.restaurant = GeoPoint{j["restaurant"].at("lat"), j["restaurant"].at("lon")};
    s.speed_mps = j.value("speed_mps", s.speed_mps);
    s.cook_min = j.value("cook_min_seconds", s.cook_min);
    s.cook_max = j.value("cook_max_seconds", s.cook_max);
    s.slack_min = j.value("slack_min_seconds", s.slack_min);
    s.slack_max = j.value("slack_max_seconds", s.slack_max);
    s.batch_limit = j.value("batch_limit", s.batch_limit);
    s.load_seconds = j.value("load_seconds", s.load_seconds);
    s.write_matrix = j.value("write_matrix", s.write_matrix);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed generator spec: ") + e.what());
  }
  s.check();
  return s;
}

namespace detail {

/// Order placement time of day in seconds: lunch and dinner peaks plus a
/// uniform background, clamped to opening hours.
inline Seconds draw_time_of_day(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pick = u(rng);
  double minutes;
  if (pick < 0.42) {
    minutes = std::normal_distribution<double>(12.5 * 60, 50)(rng);
  } else if (pick < 0.88) {
    minutes = std::normal_distribution<double>(19.0 * 60, 70)(rng);
  } else {
    minutes = std::uniform_real_distribution<double>(10.5 * 60, 21.5 * 60)(rng);
  }
  minutes = std::clamp(minutes, 10.0 * 60, 22.0 * 60);
  return static_cast<Seconds>(std::llround(minutes * 60));
}

inline GeoPoint draw_location(std::mt19937_64& rng, const GeoPoint& center, double radius_m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius_m * std::sqrt(u(rng));
  const double theta = 2.0 * std::numbers::pi * u(rng);
  constexpr double kMetersPerDegree = 111320.0;
  const double lat = center.lat + r * std::cos(theta) / kMetersPerDegree;
  const double lon = center.lon + r * std::sin(theta) / (kMetersPerDegree * std::cos(center.lat * std::numbers::pi / 180.0));
  // Six decimals (~0.1 m) keep the JSON text exact on reload.
  return GeoPoint{std::round(lat * 1e6) / 1e6, std::round(lon * 1e6) / 1e6};
}

}  // namespace detail

/// Historical leg duration in ticks for a provider estimate scaled by factor.
inline Seconds historical_leg_seconds(Seconds provider_seconds, double factor) {
  return static_cast<Seconds>(std::llround(static_cast<double>(provider_seconds) * factor));
}

/// Deterministic synthetic dataset. The historical assignment comes from a
/// myopic policy: whenever a vehicle waits at the restaurant it leaves with up
/// to batch_limit of the earliest-cooked orders, visiting them nearest-first.
inline Dataset generate_dataset(const GeneratorSpec& spec) {
  spec.check();
  std::mt19937_64 rng(spec.seed);
  Dataset ds;
  ds.restaurant.id = "restaurant";
  ds.restaurant.location = spec.restaurant;
  ds.restaurant.travel.kind = spec.write_matrix ? "matrix-file" : "haversine-speed";
  ds.restaurant.travel.speed_mps = spec.speed_mps;
  for (int v = 0; v < spec.vehicles; ++v) ds.vehicles.push_back(Vehicle{"v" + std::to_string(v + 1), std::nullopt});
  const HaversineProvider provider(spec.speed_mps);
  const Seconds first_day = parse_timestamp(spec.start_date + "T00:00:00");
  const Seconds tick = kSecondsPerMinute;
  auto leg_ticks = [&](Seconds secs) { return ceil_div(secs, tick); };

  std::size_t next_id = 1;
  for (int day = 0; day < spec.days; ++day) {
    const Seconds base = first_day + day * kSecondsPerDay;
    const int count = std::max(
        1, static_cast<int>(std::lround(
               std::normal_distribution<double>(spec.orders_per_day_mean, spec.orders_per_day_sd)(rng))));
    std::vector<Order> day_orders;
    for (int i = 0; i < count; ++i) {
      Order o;
      o.placed_at = base + detail::draw_time_of_day(rng);
      o.ready_at = o.placed_at + std::uniform_int_distribution<Seconds>(spec.cook_min, spec.cook_max)(rng);
      o.deadline = o.ready_at + std::uniform_int_distribution<Seconds>(spec.slack_min, spec.slack_max)(rng);
      o.location = detail::draw_location(rng, spec.restaurant, spec.radius_m);
      o.demand = 1;
      day_orders.push_back(o);
    }
    std::stable_sort(day_orders.begin(), day_orders.end(),
                     [](const Order& a, const Order& b) { return a.placed_at < b.placed_at; });
    for (auto& o : day_orders) o.id = "o" + std::to_string(next_id++);

    // Replay the myopic policy on minute ticks.
    std::vector<std::size_t> fifo(day_orders.size());
    std::iota(fifo.begin(), fifo.end(), std::size_t{0});
    std::stable_sort(fifo.begin(), fifo.end(),
                     [&](std::size_t a, std::size_t b) { return day_orders[a].ready_at < day_orders[b].ready_at; });
    std::vector<Seconds> free_tick(ds.vehicles.size(), 0);
    std::vector<int> trips(ds.vehicles.size(), 0);
    std::vector<HistoricalOrder> hist(day_orders.size());
    std::size_t head = 0;
    Seconds now = ceil_div(day_orders[fifo[0]].ready_at, tick);
    while (head < fifo.size()) {
      // Vehicles that are waiting, earliest-free first.
      std::vector<std::size_t> waiting;
      for (std::size_t v = 0; v < ds.vehicles.size(); ++v) {
        if (free_tick[v] <= now) waiting.push_back(v);
      }
      std::stable_sort(waiting.begin(), waiting.end(),
                       [&](std::size_t a, std::size_t b) { return free_tick[a] < free_tick[b]; });
      for (std::size_t v : waiting) {
        std::vector<std::size_t> batch;
        while (head < fifo.size() && static_cast<int>(batch.size()) < spec.batch_limit &&
               ceil_div(day_orders[fifo[head]].ready_at, tick) <= now) {
          batch.push_back(fifo[head++]);
        }
        if (batch.empty()) break;
        ++trips[v];
        Seconds t = now + ceil_div(spec.load_seconds, tick);
        GeoPoint at = spec.restaurant;
        int stop = 0;
        while (!batch.empty()) {
          auto nearest = std::min_element(batch.begin(), batch.end(), [&](std::size_t a, std::size_t b) {
            return haversine_meters(at, day_orders[a].location) < haversine_meters(at, day_orders[b].location);
          });
          const std::size_t idx = *nearest;
          batch.erase(nearest);
          const Seconds leg = historical_leg_seconds(provider.estimate(at, day_orders[idx].location).seconds,
                                                     spec.calibration_factor);
          t += leg_ticks(leg);
          hist[idx] = HistoricalOrder{day_orders[idx], ds.vehicles[v].id, trips[v], ++stop, leg, t * tick};
          at = day_orders[idx].location;
        }
        t += leg_ticks(historical_leg_seconds(provider.estimate(at, spec.restaurant).seconds, spec.calibration_factor));
        free_tick[v] = t;
      }
      if (head >= fifo.size()) break;
      Seconds next = ceil_div(day_orders[fifo[head]].ready_at, tick);
      Seconds soonest_free = *std::min_element(free_tick.begin(), free_tick.end());
      now = std::max(now + 1, std::max(next, soonest_free));
    }
    for (auto& h : hist) ds.orders.push_back(std::move(h));
  }
  std::stable_sort(ds.orders.begin(), ds.orders.end(), [](const HistoricalOrder& a, const HistoricalOrder& b) {
    return a.order.placed_at < b.order.placed_at;
  });
  if (spec.write_matrix) ds.matrix = build_travel_matrix(provider, matrix_locations(ds));
  check_dataset(ds);
  return ds;
}

}  // namespace ck
