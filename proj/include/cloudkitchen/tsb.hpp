#pragma once

// Technology-specific bridge: per-restaurant sessions wrapping a simulation
// (or replayed dataset), and the HTTP/JSON API the staff dashboard polls.
//
//   GET  /api/v1/state              orders, vehicles, lifecycle statuses
//   GET  /api/v1/plan               latest decision: batches, routes, PDDL plan
//   POST /api/v1/dispatch           staff dispatch command
//   GET  /api/v1/kpis               running KPI snapshot
//   GET  /api/v1/events?cursor=N    incremental event feed
//
// The same endpoints exist under /api/v1/restaurants/{id}/...

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cloudkitchen/dataset.hpp"
#include "cloudkitchen/kpi.hpp"
#include "cloudkitchen/plan.hpp"
#include "cloudkitchen/simulator.hpp"

namespace ck {

inline constexpr int kApiSchemaVersion = 1;

struct ApiResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

inline ApiResponse api_error(int status, std::string_view code, const std::string& message) {
  nlohmann::ordered_json j;
  j["schema_version"] = kApiSchemaVersion;
  j["error"] = code;
  j["message"] = message;
  return ApiResponse{status, std::move(j)};
}

inline nlohmann::ordered_json log_entry_json(const LogEntry& e, std::size_t seq) {
  nlohmann::ordered_json j;
  j["seq"] = seq;
  j["tick"] = e.tick;
  j["entity_kind"] = e.entity_kind;
  j["entity_id"] = e.entity_id;
  j["transition"] = e.transition;
  j["detail"] = e.detail;
  return j;
}

/// Immutable view published after every command.
struct SessionSnapshot {
  Seconds tick = 0;
  std::size_t episode = 0;
  nlohmann::ordered_json state;
  nlohmann::ordered_json plan;
  nlohmann::ordered_json kpis;
};

class RestaurantSession {
public:
  RestaurantSession(std::string id, Dataset dataset, RunConfig config)
      : id_(std::move(id)),
        dataset_(std::make_unique<Dataset>(std::move(dataset))),
        provider_(make_provider(*dataset_)),
        sim_(std::make_unique<Simulation>(*dataset_, *provider_, std::move(config))),
        kpis_(*dataset_) {
    std::lock_guard lock(mu_);
    publish();
  }

  const std::string& id() const noexcept { return id_; }
  const Dataset& dataset() const noexcept { return *dataset_; }

  std::shared_ptr<const SessionSnapshot> snapshot() const { return std::atomic_load(&snapshot_); }

  /// Advances simulated time to `tick`.
  void advance_to(Seconds tick) {
    std::lock_guard lock(mu_);
    sim_->advance_to(tick);
    publish();
  }

  /// Advances simulated time by `ticks` minutes.
  void advance(Seconds ticks) {
    std::lock_guard lock(mu_);
    sim_->advance_to(sim_->now_tick() + ticks);
    publish();
  }

  bool idle() const {
    std::lock_guard lock(mu_);
    return !sim_->has_pending_work();
  }

  DispatchResult dispatch(DispatchCommand cmd) {
    std::lock_guard lock(mu_);
    cmd.issued_at = sim_->now_seconds();
    auto result = sim_->dispatch(cmd);
    publish();
    return result;
  }

  /// Events [cursor, cursor + limit).
  ApiResponse events(std::size_t cursor, std::size_t limit) const {
    std::lock_guard lock(journal_mu_);
    if (cursor > journal_.size()) {
      return api_error(400, "CURSOR_OUT_OF_RANGE",
                       "cursor " + std::to_string(cursor) + " is past the end (" + std::to_string(journal_.size()) + ")");
    }
    const std::size_t end = std::min(journal_.size(), cursor + limit);
    nlohmann::ordered_json j;
    j["schema_version"] = kApiSchemaVersion;
    j["restaurant"] = id_;
    j["cursor"] = cursor;
    j["next_cursor"] = end;
    j["events"] = nlohmann::ordered_json::array();
    for (std::size_t i = cursor; i < end; ++i) j["events"].push_back(journal_[i]);
    return ApiResponse{200, std::move(j)};
  }

private:
  /// Caller holds mu_.
  void publish() {
    const auto& entries = sim_->log().entries;
    {
      std::lock_guard lock(journal_mu_);
      for (std::size_t i = journal_.size(); i < entries.size(); ++i) {
        journal_.push_back(log_entry_json(entries[i], i));
        kpis_.add(entries[i]);
      }
    }
    auto snap = std::make_shared<SessionSnapshot>();
    snap->tick = sim_->now_tick();
    snap->episode = sim_->episode();
    snap->state = build_state();
    snap->plan = build_plan();
    snap->kpis = to_json(kpis_.report());
    snap->kpis["schema_version"] = kApiSchemaVersion;
    snap->kpis["restaurant"] = id_;
    std::atomic_store(&snapshot_, std::shared_ptr<const SessionSnapshot>(std::move(snap)));
  }

  nlohmann::ordered_json build_state() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kApiSchemaVersion;
    j["restaurant"] = id_;
    j["tick"] = sim_->now_tick();
    j["now"] = format_timestamp(sim_->now_seconds());
    j["orders"] = nlohmann::ordered_json::array();
    for (const auto& o : sim_->orders()) {
      if (o.status == OrderPhase::Pending) continue;
      const auto& r = o.record->order;
      nlohmann::ordered_json e;
      e["id"] = r.id;
      e["status"] = to_string(o.status);
      e["placed_at"] = format_timestamp(r.placed_at);
      e["ready_at"] = format_timestamp(r.ready_at);
      e["deadline"] = format_timestamp(r.deadline);
      e["lat"] = r.location.lat;
      e["lon"] = r.location.lon;
      e["demand"] = r.demand;
      e["vehicle"] = o.vehicle.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(o.vehicle);
      e["delivered_tick"] = o.delivered_tick ? nlohmann::ordered_json(*o.delivered_tick) : nullptr;
      j["orders"].push_back(std::move(e));
    }
    j["vehicles"] = nlohmann::ordered_json::array();
    for (const auto& v : sim_->vehicles()) {
      nlohmann::ordered_json e;
      e["id"] = v.id;
      e["status"] = to_string(v.status);
      e["stops"] = v.stops;
      j["vehicles"].push_back(std::move(e));
    }
    return j;
  }

  nlohmann::ordered_json build_plan() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kApiSchemaVersion;
    j["restaurant"] = id_;
    j["episode"] = sim_->episode();
    const auto& decision = sim_->decision();
    auto empty = [&](const char* status) {
      j["status"] = status;
      j["batches"] = nlohmann::ordered_json::array();
      j["routes"] = nlohmann::ordered_json::array();
      j["applied_delay"] = nullptr;
      j["pddl_plan"] = "";
      return j;
    };
    if (!decision) return empty(sim_->last_episode_failed() ? "failed" : "no-decision");
    if (!validate_plan(decision->plan).valid) return empty("withheld");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < sim_->orders().size(); ++i) index.emplace(sim_->orders()[i].record->order.id, i);
    j["status"] = "ok";
    j["decided_at"] = format_timestamp(decision->timestamp);
    j["applied_delay"] = decision->applied_delay;
    j["batches"] = nlohmann::ordered_json::array();
    j["routes"] = nlohmann::ordered_json::array();
    std::size_t delivery = 0;
    for (const auto& r : decision->solution.routes) {
      if (r.empty()) continue;
      const std::string did = delivery_name(delivery++);
      nlohmann::ordered_json batch;
      batch["delivery_id"] = did;
      batch["vehicle"] = r.vehicle_id;
      batch["orders"] = nlohmann::ordered_json::array();
      bool ready = true;
      nlohmann::ordered_json stops = nlohmann::ordered_json::array();
      for (std::size_t s = 1; s + 1 < r.path.size(); ++s) {
        const auto& oid = decision->task.customer_at(r.path[s]).id;
        const auto& view = sim_->orders()[index.at(oid)];
        const bool cooked = view.status == OrderPhase::Cooked;
        ready = ready && cooked;
        const auto& o = view.record->order;
        batch["orders"].push_back(nlohmann::ordered_json{{"id", oid},
                                                         {"cooked", cooked},
                                                         {"ready_at", format_timestamp(o.ready_at)},
                                                         {"deadline", format_timestamp(o.deadline)}});
        stops.push_back(nlohmann::ordered_json{{"order", oid},
                                               {"lat", o.location.lat},
                                               {"lon", o.location.lon},
                                               {"eta", format_timestamp(decision->timestamp + r.delivery_times[s])}});
      }
      batch["ready"] = ready;
      j["batches"].push_back(std::move(batch));
      nlohmann::ordered_json route;
      route["vehicle"] = r.vehicle_id;
      route["delivery_id"] = did;
      route["stops"] = std::move(stops);
      route["return_eta"] = format_timestamp(decision->timestamp + r.return_time());
      j["routes"].push_back(std::move(route));
    }
    j["pddl_plan"] = emit_plan_text(decision->plan);
    return j;
  }

  std::string id_;
  std::unique_ptr<Dataset> dataset_;
  std::unique_ptr<TravelTimeProvider> provider_;
  std::unique_ptr<Simulation> sim_;
  KpiAccumulator kpis_;
  mutable std::mutex mu_;
  mutable std::mutex journal_mu_;
  std::vector<nlohmann::ordered_json> journal_;
  std::shared_ptr<const SessionSnapshot> snapshot_;
};

// ---------------------------------------------------------------------------
// HTTP service

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Simulated seconds per wall-clock second.
  double replay_speed = 60.0;
  std::string static_dir;
  /// Staff dispatch only; the simulator does not dispatch on its own.
  bool interactive = false;
  std::string restaurant_id = "main";
};

class Service {
public:
  Service() { routes(); }

  void add_session(std::shared_ptr<RestaurantSession> session) {
    if (default_id_.empty()) default_id_ = session->id();
    sessions_.emplace(session->id(), std::move(session));
  }

  RestaurantSession* session(const std::string& id) {
    auto it = sessions_.find(id.empty() ? default_id_ : id);
    return it == sessions_.end() ? nullptr : it->second.get();
  }

  httplib::Server& server() noexcept { return server_; }

  // Endpoint bodies, callable without a socket.

  ApiResponse get_state(const std::string& rid) {
    auto* s = session(rid);
    if (!s) return unknown(rid);
    return ApiResponse{200, s->snapshot()->state};
  }

  ApiResponse get_plan(const std::string& rid) {
    auto* s = session(rid);
    if (!s) return unknown(rid);
    return ApiResponse{200, s->snapshot()->plan};
  }

  ApiResponse get_kpis(const std::string& rid) {
    auto* s = session(rid);
    if (!s) return unknown(rid);
    return ApiResponse{200, s->snapshot()->kpis};
  }

  ApiResponse get_events(const std::string& rid, std::size_t cursor, std::size_t limit) {
    auto* s = session(rid);
    if (!s) return unknown(rid);
    return s->events(cursor, std::clamp<std::size_t>(limit, 1, 10000));
  }

  ApiResponse post_dispatch(const std::string& rid, const std::string& body) {
    auto* s = session(rid);
    if (!s) return unknown(rid);
    DispatchCommand cmd;
    try {
      const auto j = nlohmann::json::parse(body);
      cmd.vehicle_id = j.at("vehicle_id").get<std::string>();
      cmd.delivery_id = j.at("delivery_id").get<std::string>();
      cmd.issued_by = j.value("issued_by", std::string("staff"));
      if (j.contains("plan_episode") && !j["plan_episode"].is_null()) {
        cmd.plan_episode = j["plan_episode"].get<std::size_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      return api_error(400, "BAD_REQUEST", std::string("malformed dispatch command: ") + e.what());
    }
    const auto result = s->dispatch(cmd);
    nlohmann::ordered_json j;
    j["schema_version"] = kApiSchemaVersion;
    j["accepted"] = result.accepted;
    if (!result.accepted) {
      j["code"] = result.code;
      j["message"] = result.message;
      return ApiResponse{409, std::move(j)};
    }
    j["tick"] = s->snapshot()->tick;
    j["episode"] = s->snapshot()->episode;
    return ApiResponse{200, std::move(j)};
  }

private:
  ApiResponse unknown(const std::string& rid) {
    return api_error(404, "UNKNOWN_RESTAURANT", "no restaurant '" + rid + "'");
  }

  static void reply(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  void routes() {
    auto rid_of = [](const httplib::Request& req) {
      return req.matches.size() > 2 ? std::string(req.matches[1]) : std::string();
    };
    auto get = [&](const std::string& name, auto handler) {
      server_.Get("/api/v1/" + name, [this, handler](const httplib::Request& req, httplib::Response& res) {
        reply(res, handler(this, std::string(), req));
      });
      server_.Get("/api/v1/restaurants/([^/]+)/(" + name + ")",
                  [this, handler, rid_of](const httplib::Request& req, httplib::Response& res) {
                    reply(res, handler(this, rid_of(req), req));
                  });
    };
    get("state", [](Service* s, const std::string& rid, const httplib::Request&) { return s->get_state(rid); });
    get("plan", [](Service* s, const std::string& rid, const httplib::Request&) { return s->get_plan(rid); });
    get("kpis", [](Service* s, const std::string& rid, const httplib::Request&) { return s->get_kpis(rid); });
    get("events", [](Service* s, const std::string& rid, const httplib::Request& req) {
      std::size_t cursor = 0, limit = 1000;
      try {
        if (req.has_param("cursor")) cursor = std::stoull(req.get_param_value("cursor"));
        if (req.has_param("limit")) limit = std::stoull(req.get_param_value("limit"));
      } catch (const std::exception&) {
        return api_error(400, "BAD_REQUEST", "cursor and limit must be non-negative integers");
      }
      return s->get_events(rid, cursor, limit);
    });
    server_.Post("/api/v1/dispatch", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, post_dispatch(std::string(), req.body));
    });
    server_.Post("/api/v1/restaurants/([^/]+)/dispatch",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   reply(res, post_dispatch(std::string(req.matches[1]), req.body));
                 });
  }

  httplib::Server server_;
  std::map<std::string, std::shared_ptr<RestaurantSession>> sessions_;
  std::string default_id_;
};

/// Replays a dataset through one session and serves the API until the
/// process is stopped. Returns the process exit status.
inline int serve_dataset(const std::filesystem::path& dir, const ServiceConfig& config) {
  if (!(config.replay_speed > 0.0)) throw InputError("replay speed must be positive");
  auto ds = load_dataset(dir);
  RunConfig rc;
  rc.mode = RunMode::Optimized;
  rc.auto_dispatch = !config.interactive;
  rc.calibration_factor = calibrate(ds, *make_provider(ds)).factor;
  auto session = std::make_shared<RestaurantSession>(config.restaurant_id, std::move(ds), rc);

  Service service;
  service.add_session(session);
  if (!config.static_dir.empty() && !service.server().set_mount_point("/", config.static_dir)) {
    throw InputError("static directory '" + config.static_dir + "' does not exist");
  }

  std::atomic<bool> stop{false};
  std::thread replay([&] {
    const auto period = std::chrono::duration<double>(static_cast<double>(kTickSeconds) / config.replay_speed);
    auto next = std::chrono::steady_clock::now();
    while (!stop) {
      session->advance(1);
      next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
      std::this_thread::sleep_until(next);
    }
  });
  const bool ok = service.server().listen(config.host, config.port);
  stop = true;
  replay.join();
  return ok ? 0 : 1;
}

}  // namespace ck
