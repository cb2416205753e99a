#pragma once

#include <cstdint>
#include <string>

#include "cloudkitchen/time.hpp"
#include "cloudkitchen/travel.hpp"

namespace ck {

/// A customer order. Invariant: placed_at <= ready_at <= deadline.
struct Order {
  std::string id;
  Seconds placed_at = 0;
  /// When the kitchen finishes cooking.
  Seconds ready_at = 0;
  /// Promised delivery time.
  Seconds deadline = 0;
  GeoPoint location;
  std::int64_t demand = 1;

  friend bool operator==(const Order&, const Order&) = default;
};

}  // namespace ck
