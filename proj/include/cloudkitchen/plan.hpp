#pragma once

// Six-action delivery planning domain. Route solutions are translated into
// grounded sequential plans, which are checked by simulating the order,
// delivery and vehicle lifecycles action by action.
//
// Arities:
//   (assign-order ?order ?delivery)
//   (assign-delivery ?delivery ?vehicle)
//   (dispatch-delivery ?delivery ?vehicle)
//   (drive ?vehicle ?from ?to)
//   (deliver-order ?order ?vehicle ?location)
//   (finish-delivery ?delivery ?vehicle)

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cloudkitchen/order.hpp"
#include "cloudkitchen/routing.hpp"

namespace ck {

enum class ActionKind { AssignOrder, AssignDelivery, DispatchDelivery, Drive, DeliverOrder, FinishDelivery };

inline constexpr std::array<ActionKind, 6> kAllActions = {
    ActionKind::AssignOrder, ActionKind::AssignDelivery, ActionKind::DispatchDelivery,
    ActionKind::Drive,       ActionKind::DeliverOrder,   ActionKind::FinishDelivery};

inline std::string_view action_name(ActionKind k) {
  switch (k) {
    case ActionKind::AssignOrder: return "assign-order";
    case ActionKind::AssignDelivery: return "assign-delivery";
    case ActionKind::DispatchDelivery: return "dispatch-delivery";
    case ActionKind::Drive: return "drive";
    case ActionKind::DeliverOrder: return "deliver-order";
    case ActionKind::FinishDelivery: return "finish-delivery";
  }
  return "";
}

inline std::optional<ActionKind> action_from_name(std::string_view name) {
  for (auto k : kAllActions) {
    if (action_name(k) == name) return k;
  }
  return std::nullopt;
}

enum class ObjectType { Order, Delivery, Vehicle, Location };

inline std::string_view type_name(ObjectType t) {
  switch (t) {
    case ObjectType::Order: return "order";
    case ObjectType::Delivery: return "delivery";
    case ObjectType::Vehicle: return "vehicle";
    case ObjectType::Location: return "location";
  }
  return "";
}

inline std::vector<ObjectType> action_signature(ActionKind k) {
  using T = ObjectType;
  switch (k) {
    case ActionKind::AssignOrder: return {T::Order, T::Delivery};
    case ActionKind::AssignDelivery: return {T::Delivery, T::Vehicle};
    case ActionKind::DispatchDelivery: return {T::Delivery, T::Vehicle};
    case ActionKind::Drive: return {T::Vehicle, T::Location, T::Location};
    case ActionKind::DeliverOrder: return {T::Order, T::Vehicle, T::Location};
    case ActionKind::FinishDelivery: return {T::Delivery, T::Vehicle};
  }
  return {};
}

struct PlanAction {
  ActionKind kind;
  std::vector<std::string> args;

  friend bool operator==(const PlanAction&, const PlanAction&) = default;
};

struct PlanObjects {
  std::map<std::string, ObjectType> types;
  /// Static fact: where each order is delivered.
  std::map<std::string, std::string> destination;
  std::string depot = "depot";

  friend bool operator==(const PlanObjects&, const PlanObjects&) = default;
};

struct Plan {
  std::vector<PlanAction> actions;
  PlanObjects objects;

  friend bool operator==(const Plan&, const Plan&) = default;
};

class TranslationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class PlanParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Lowercase PDDL-safe name; characters outside [a-z0-9_-] become '-'.
inline std::string pddl_name(std::string_view id, char prefix) {
  std::string out;
  out.reserve(id.size() + 1);
  for (char ch : id) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '-' || ch == '_') {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      out.push_back('-');
    }
  }
  if (out.empty() || !std::isalpha(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), prefix);
  return out;
}

inline std::string delivery_name(std::size_t index) { return "d" + std::to_string(index + 1); }
inline std::string location_name(const std::string& order_name) { return "loc-" + order_name; }

/// Route-by-route translation. For a route with k orders:
/// assign-order x k, assign-delivery, dispatch-delivery, then drive and
/// deliver-order per stop, a final drive to the depot and finish-delivery.
/// Deliveries are named d1..dn over the non-empty routes in route order.
inline Plan translate(const VrptwTask& task, const RouteSolution& solution, std::span<const Order> orders,
                      std::span<const Vehicle> vehicles) {
  Plan plan;
  auto& objects = plan.objects;
  auto declare = [&](const std::string& name, ObjectType type) {
    auto [it, inserted] = objects.types.emplace(name, type);
    if (!inserted && it->second != type) {
      throw TranslationError("object name '" + name + "' is used for two types");
    }
  };
  declare(objects.depot, ObjectType::Location);

  std::map<std::string, const Order*> order_by_id;
  for (const auto& o : orders) order_by_id.emplace(o.id, &o);
  std::set<std::string> vehicle_ids;
  for (const auto& v : vehicles) vehicle_ids.insert(v.id);

  std::size_t deliveries = 0;
  for (const auto& route : solution.routes) {
    if (!vehicle_ids.contains(route.vehicle_id)) {
      throw TranslationError("solution references unknown vehicle '" + route.vehicle_id + "'");
    }
    const std::string vehicle = pddl_name(route.vehicle_id, 'v');
    declare(vehicle, ObjectType::Vehicle);
    if (route.empty()) continue;

    const std::string delivery = delivery_name(deliveries++);
    declare(delivery, ObjectType::Delivery);
    std::vector<std::string> stop_orders;
    for (NodeIndex node : route.stops()) {
      if (!task.is_customer_node(node)) throw TranslationError("route visits unknown node " + std::to_string(node));
      const auto& cid = task.customer_at(node).id;
      if (!order_by_id.contains(cid)) throw TranslationError("solution references unknown order '" + cid + "'");
      const std::string order = pddl_name(cid, 'o');
      declare(order, ObjectType::Order);
      const std::string loc = location_name(order);
      declare(loc, ObjectType::Location);
      objects.destination[order] = loc;
      stop_orders.push_back(order);
    }

    for (const auto& o : stop_orders) plan.actions.push_back({ActionKind::AssignOrder, {o, delivery}});
    plan.actions.push_back({ActionKind::AssignDelivery, {delivery, vehicle}});
    plan.actions.push_back({ActionKind::DispatchDelivery, {delivery, vehicle}});
    std::string at = objects.depot;
    for (const auto& o : stop_orders) {
      const std::string& loc = objects.destination[o];
      plan.actions.push_back({ActionKind::Drive, {vehicle, at, loc}});
      plan.actions.push_back({ActionKind::DeliverOrder, {o, vehicle, loc}});
      at = loc;
    }
    plan.actions.push_back({ActionKind::Drive, {vehicle, at, objects.depot}});
    plan.actions.push_back({ActionKind::FinishDelivery, {delivery, vehicle}});
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Validation

namespace precondition {
inline constexpr std::string_view kArity = "ARITY_MISMATCH";
inline constexpr std::string_view kUnknownObject = "UNKNOWN_OBJECT";
inline constexpr std::string_view kTypeMismatch = "TYPE_MISMATCH";
inline constexpr std::string_view kOrderNotPending = "ORDER_NOT_PENDING";
inline constexpr std::string_view kDeliveryAlreadyAssigned = "DELIVERY_ALREADY_ASSIGNED";
inline constexpr std::string_view kDeliveryAlreadyDispatched = "DELIVERY_ALREADY_DISPATCHED";
inline constexpr std::string_view kDeliveryNotAssigned = "DELIVERY_NOT_ASSIGNED";
inline constexpr std::string_view kVehicleNotReady = "VEHICLE_NOT_READY";
inline constexpr std::string_view kBatchNotReady = "BATCH_NOT_READY";
inline constexpr std::string_view kVehicleNotDispatched = "VEHICLE_NOT_DISPATCHED";
inline constexpr std::string_view kWrongLocation = "WRONG_LOCATION";
inline constexpr std::string_view kOrderNotLoaded = "ORDER_NOT_LOADED";
inline constexpr std::string_view kOrdersNotDelivered = "ORDERS_NOT_DELIVERED";
inline constexpr std::string_view kVehicleNotAtDepot = "VEHICLE_NOT_AT_DEPOT";
inline constexpr std::string_view kGoalNotReached = "GOAL_NOT_REACHED";
}  // namespace precondition

enum class OrderStatus { Pending, Grouped, Loaded, Delivered };
enum class DeliveryStatus { Open, Assigned, Dispatched, Completed };

struct WorldState {
  struct OrderState {
    OrderStatus status = OrderStatus::Pending;
    std::string delivery;
  };
  struct DeliveryState {
    DeliveryStatus status = DeliveryStatus::Open;
    std::string vehicle;
    std::vector<std::string> orders;
  };
  struct VehicleState {
    std::string location;
    /// Delivery the vehicle is bound to; empty when available.
    std::string delivery;
  };

  std::map<std::string, OrderState> orders;
  std::map<std::string, DeliveryState> deliveries;
  std::map<std::string, VehicleState> vehicles;

  static WorldState initial(const PlanObjects& objects) {
    WorldState s;
    for (const auto& [name, type] : objects.types) {
      switch (type) {
        case ObjectType::Order: s.orders.emplace(name, OrderState{}); break;
        case ObjectType::Delivery: s.deliveries.emplace(name, DeliveryState{}); break;
        case ObjectType::Vehicle: s.vehicles.emplace(name, VehicleState{objects.depot, ""}); break;
        case ObjectType::Location: break;
      }
    }
    return s;
  }
};

struct PlanVerdict {
  bool valid = true;
  /// Index of the first action whose preconditions fail; equals the plan
  /// length when every action applies but the goal is not reached.
  std::size_t failed_index = 0;
  std::string code;
  std::string message;
};

namespace detail {

struct StepResult {
  std::string_view code;
  std::string message;
};

inline std::optional<StepResult> apply_action(WorldState& s, const PlanObjects& objects, const PlanAction& a) {
  namespace pc = precondition;
  const auto signature = action_signature(a.kind);
  if (a.args.size() != signature.size()) {
    return StepResult{pc::kArity, std::string(action_name(a.kind)) + " takes " + std::to_string(signature.size()) +
                                      " arguments"};
  }
  for (std::size_t i = 0; i < signature.size(); ++i) {
    auto it = objects.types.find(a.args[i]);
    if (it == objects.types.end()) return StepResult{pc::kUnknownObject, "unknown object '" + a.args[i] + "'"};
    if (it->second != signature[i]) {
      return StepResult{pc::kTypeMismatch, "'" + a.args[i] + "' is not a " + std::string(type_name(signature[i]))};
    }
  }
  auto fail = [](std::string_view code, std::string msg) { return std::optional<StepResult>(StepResult{code, std::move(msg)}); };

  switch (a.kind) {
    case ActionKind::AssignOrder: {
      auto& o = s.orders[a.args[0]];
      auto& d = s.deliveries[a.args[1]];
      if (o.status != OrderStatus::Pending) return fail(pc::kOrderNotPending, "order '" + a.args[0] + "' is not pending");
      if (d.status == DeliveryStatus::Dispatched || d.status == DeliveryStatus::Completed) {
        return fail(pc::kDeliveryAlreadyDispatched, "delivery '" + a.args[1] + "' already left");
      }
      o.status = OrderStatus::Grouped;
      o.delivery = a.args[1];
      d.orders.push_back(a.args[0]);
      return std::nullopt;
    }
    case ActionKind::AssignDelivery: {
      auto& d = s.deliveries[a.args[0]];
      auto& v = s.vehicles[a.args[1]];
      if (d.status != DeliveryStatus::Open) {
        return fail(pc::kDeliveryAlreadyAssigned, "delivery '" + a.args[0] + "' is already assigned");
      }
      if (v.location != objects.depot || !v.delivery.empty()) {
        return fail(pc::kVehicleNotReady, "vehicle '" + a.args[1] + "' is not waiting at the restaurant");
      }
      d.status = DeliveryStatus::Assigned;
      d.vehicle = a.args[1];
      v.delivery = a.args[0];
      return std::nullopt;
    }
    case ActionKind::DispatchDelivery: {
      auto& d = s.deliveries[a.args[0]];
      auto& v = s.vehicles[a.args[1]];
      if (d.status == DeliveryStatus::Dispatched || d.status == DeliveryStatus::Completed) {
        return fail(pc::kDeliveryAlreadyDispatched, "delivery '" + a.args[0] + "' already left");
      }
      if (d.status != DeliveryStatus::Assigned || d.vehicle != a.args[1]) {
        return fail(pc::kDeliveryNotAssigned, "delivery '" + a.args[0] + "' is not assigned to '" + a.args[1] + "'");
      }
      if (v.location != objects.depot) {
        return fail(pc::kVehicleNotReady, "vehicle '" + a.args[1] + "' is not at the restaurant");
      }
      if (d.orders.empty()) return fail(pc::kBatchNotReady, "delivery '" + a.args[0] + "' has no orders");
      for (const auto& name : d.orders) {
        if (s.orders[name].status != OrderStatus::Grouped) {
          return fail(pc::kBatchNotReady, "order '" + name + "' is not grouped");
        }
      }
      for (const auto& name : d.orders) s.orders[name].status = OrderStatus::Loaded;
      d.status = DeliveryStatus::Dispatched;
      return std::nullopt;
    }
    case ActionKind::Drive: {
      auto& v = s.vehicles[a.args[0]];
      if (v.delivery.empty() || s.deliveries[v.delivery].status != DeliveryStatus::Dispatched) {
        return fail(pc::kVehicleNotDispatched, "vehicle '" + a.args[0] + "' is not out on a delivery");
      }
      if (v.location != a.args[1]) {
        return fail(pc::kWrongLocation, "vehicle '" + a.args[0] + "' is at '" + v.location + "', not '" + a.args[1] + "'");
      }
      v.location = a.args[2];
      return std::nullopt;
    }
    case ActionKind::DeliverOrder: {
      auto& o = s.orders[a.args[0]];
      auto& v = s.vehicles[a.args[1]];
      if (v.delivery.empty() || s.deliveries[v.delivery].status != DeliveryStatus::Dispatched) {
        return fail(pc::kVehicleNotDispatched, "vehicle '" + a.args[1] + "' is not out on a delivery");
      }
      if (o.status != OrderStatus::Loaded || o.delivery != v.delivery) {
        return fail(pc::kOrderNotLoaded, "order '" + a.args[0] + "' is not loaded in '" + a.args[1] + "'");
      }
      auto dest = objects.destination.find(a.args[0]);
      if (dest == objects.destination.end() || dest->second != a.args[2] || v.location != a.args[2]) {
        return fail(pc::kWrongLocation, "vehicle '" + a.args[1] + "' is not at the destination of '" + a.args[0] + "'");
      }
      o.status = OrderStatus::Delivered;
      return std::nullopt;
    }
    case ActionKind::FinishDelivery: {
      auto& d = s.deliveries[a.args[0]];
      auto& v = s.vehicles[a.args[1]];
      if (d.status != DeliveryStatus::Dispatched || d.vehicle != a.args[1]) {
        return fail(pc::kVehicleNotDispatched, "delivery '" + a.args[0] + "' is not out with '" + a.args[1] + "'");
      }
      if (v.location != objects.depot) {
        return fail(pc::kVehicleNotAtDepot, "vehicle '" + a.args[1] + "' has not returned");
      }
      for (const auto& name : d.orders) {
        if (s.orders[name].status != OrderStatus::Delivered) {
          return fail(pc::kOrdersNotDelivered, "order '" + name + "' is still on board");
        }
      }
      d.status = DeliveryStatus::Completed;
      v.delivery.clear();
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Valid iff every action's preconditions hold in sequence, every order ends
/// delivered, and no delivery is left out on the road.
inline PlanVerdict validate_plan(const Plan& plan) {
  WorldState state = WorldState::initial(plan.objects);
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    if (auto err = detail::apply_action(state, plan.objects, plan.actions[i])) {
      return PlanVerdict{false, i, std::string(err->code), std::move(err->message)};
    }
  }
  for (const auto& [name, o] : state.orders) {
    if (o.status != OrderStatus::Delivered) {
      return PlanVerdict{false, plan.actions.size(), std::string(precondition::kGoalNotReached),
                         "order '" + name + "' is never delivered"};
    }
  }
  for (const auto& [name, d] : state.deliveries) {
    if (d.status == DeliveryStatus::Dispatched) {
      return PlanVerdict{false, plan.actions.size(), std::string(precondition::kGoalNotReached),
                         "delivery '" + name + "' never finishes"};
    }
  }
  return PlanVerdict{};
}

// ---------------------------------------------------------------------------
// PDDL text

inline std::string_view pddl_domain() {
  static constexpr std::string_view kDomain = R"PDDL((define (domain cloud-kitchen)
  (:requirements :typing :adl)
  (:types order delivery vehicle location)
  (:predicates
    (pending ?o - order)
    (grouped ?o - order)
    (loaded ?o - order)
    (delivered ?o - order)
    (in-delivery ?o - order ?d - delivery)
    (destination ?o - order ?l - location)
    (unassigned ?d - delivery)
    (staged ?d - delivery)
    (assigned ?d - delivery ?v - vehicle)
    (dispatched ?d - delivery ?v - vehicle)
    (completed ?d - delivery)
    (at ?v - vehicle ?l - location)
    (idle ?v - vehicle)
    (depot ?l - location))

  (:action assign-order
    :parameters (?o - order ?d - delivery)
    :precondition (and (pending ?o) (staged ?d))
    :effect (and (not (pending ?o)) (grouped ?o) (in-delivery ?o ?d)))

  (:action assign-delivery
    :parameters (?d - delivery ?v - vehicle)
    :precondition (and (unassigned ?d) (idle ?v)
                       (exists (?l - location) (and (depot ?l) (at ?v ?l))))
    :effect (and (not (unassigned ?d)) (not (idle ?v)) (assigned ?d ?v)))

  (:action dispatch-delivery
    :parameters (?d - delivery ?v - vehicle)
    :precondition (and (assigned ?d ?v)
                       (exists (?l - location) (and (depot ?l) (at ?v ?l)))
                       (exists (?o - order) (in-delivery ?o ?d))
                       (forall (?o - order) (imply (in-delivery ?o ?d) (grouped ?o))))
    :effect (and (not (assigned ?d ?v)) (not (staged ?d)) (dispatched ?d ?v)
                 (forall (?o - order)
                   (when (in-delivery ?o ?d) (and (not (grouped ?o)) (loaded ?o))))))

  (:action drive
    :parameters (?v - vehicle ?from - location ?to - location)
    :precondition (and (at ?v ?from)
                       (exists (?d - delivery) (dispatched ?d ?v)))
    :effect (and (not (at ?v ?from)) (at ?v ?to)))

  (:action deliver-order
    :parameters (?o - order ?v - vehicle ?l - location)
    :precondition (and (loaded ?o) (at ?v ?l) (destination ?o ?l)
                       (exists (?d - delivery) (and (in-delivery ?o ?d) (dispatched ?d ?v))))
    :effect (and (not (loaded ?o)) (delivered ?o)))

  (:action finish-delivery
    :parameters (?d - delivery ?v - vehicle)
    :precondition (and (dispatched ?d ?v)
                       (exists (?l - location) (and (depot ?l) (at ?v ?l)))
                       (forall (?o - order) (imply (in-delivery ?o ?d) (delivered ?o))))
    :effect (and (not (dispatched ?d ?v)) (completed ?d) (idle ?v)))
)
)PDDL";
  return kDomain;
}

inline std::string emit_pddl_domain() { return std::string(pddl_domain()); }

/// One grounded action per line: `(name arg1 arg2 ...)`.
inline std::string emit_plan_text(const Plan& plan) {
  std::string out;
  for (const auto& a : plan.actions) {
    out += '(';
    out += action_name(a.kind);
    for (const auto& arg : a.args) {
      out += ' ';
      out += arg;
    }
    out += ")\n";
  }
  return out;
}

/// Parses plan text. Tokens may be separated by any whitespace; `;` starts
/// a comment that runs to the end of the line. Names are case-insensitive.
inline std::vector<PlanAction> parse_plan_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t line = 1;
  std::vector<std::size_t> token_lines;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      token_lines.push_back(line);
      current.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch == ';') {
      flush();
      while (i < text.size() && text[i] != '\n') ++i;
      if (i < text.size()) ++line;
      continue;
    }
    if (ch == '(' || ch == ')') {
      flush();
      tokens.emplace_back(1, ch);
      token_lines.push_back(line);
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      flush();
      if (ch == '\n') ++line;
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  flush();

  std::vector<PlanAction> actions;
  std::size_t i = 0;
  auto error = [&](const std::string& what) {
    const std::size_t at = i < token_lines.size() ? token_lines[i] : line;
    return PlanParseError("plan text line " + std::to_string(at) + ": " + what);
  };
  while (i < tokens.size()) {
    if (tokens[i] != "(") throw error("expected '('");
    ++i;
    if (i >= tokens.size() || tokens[i] == "(" || tokens[i] == ")") throw error("expected an action name");
    auto kind = action_from_name(tokens[i]);
    if (!kind) throw error("unknown action '" + tokens[i] + "'");
    ++i;
    PlanAction action{*kind, {}};
    while (i < tokens.size() && tokens[i] != ")") {
      if (tokens[i] == "(") throw error("nested '(' in action");
      action.args.push_back(tokens[i++]);
    }
    if (i >= tokens.size()) throw error("missing ')'");
    ++i;
    actions.push_back(std::move(action));
  }
  return actions;
}

}  // namespace ck
