#pragma once

// Travel-time providers: pairwise (seconds, meters) estimates between
// geographic points, backed by a great-circle speed model or by a
// precomputed matrix file.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cloudkitchen/routing.hpp"

namespace ck {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline constexpr double kEarthRadiusMeters = 6371008.8;

inline double haversine_meters(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * t * t;
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

struct TravelEstimate {
  Seconds seconds = 0;
  Meters meters = 0;

  friend bool operator==(const TravelEstimate&, const TravelEstimate&) = default;
};

class ProviderError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Implementations must be safe for concurrent const calls.
class TravelTimeProvider {
public:
  virtual ~TravelTimeProvider() = default;
  virtual TravelEstimate estimate(const GeoPoint& from, const GeoPoint& to) const = 0;
  virtual std::string describe() const = 0;
};

inline constexpr double kDefaultUrbanSpeedMps = 30.0 / 3.6;

/// Straight-line distance driven at a constant speed. A rough stand-in for
/// street routing that needs no external data.
class HaversineProvider final : public TravelTimeProvider {
public:
  explicit HaversineProvider(double speed_mps = kDefaultUrbanSpeedMps) : speed_mps_(speed_mps) {
    if (!(speed_mps > 0.0)) throw ProviderError("speed must be positive");
  }

  TravelEstimate estimate(const GeoPoint& from, const GeoPoint& to) const override {
    const double m = haversine_meters(from, to);
    return TravelEstimate{static_cast<Seconds>(std::llround(m / speed_mps_)), static_cast<Meters>(std::llround(m))};
  }

  std::string describe() const override { return "haversine-speed(" + std::to_string(speed_mps_) + " m/s)"; }

  double speed_mps() const noexcept { return speed_mps_; }

private:
  double speed_mps_;
};

/// Multiplies another provider's seconds by a calibration factor.
class ScaledProvider final : public TravelTimeProvider {
public:
  ScaledProvider(const TravelTimeProvider& base, double factor) : base_(base), factor_(factor) {
    if (!(factor > 0.0)) throw ProviderError("calibration factor must be positive");
  }

  TravelEstimate estimate(const GeoPoint& from, const GeoPoint& to) const override {
    auto e = base_.estimate(from, to);
    e.seconds = static_cast<Seconds>(std::llround(static_cast<double>(e.seconds) * factor_));
    return e;
  }

  std::string describe() const override { return base_.describe() + " x " + std::to_string(factor_); }

private:
  const TravelTimeProvider& base_;
  double factor_;
};

// ---------------------------------------------------------------------------
// Travel matrix file
//
//   bytes 0..3   magic "CKTM"
//   bytes 4..7   node count n, u32 little-endian
//   then n*n u32 LE seconds (row-major), then n*n u32 LE meters (row-major)

inline constexpr char kTravelMatrixMagic[4] = {'C', 'K', 'T', 'M'};

struct TravelMatrix {
  std::uint32_t node_count = 0;
  std::vector<std::uint32_t> seconds;
  std::vector<std::uint32_t> meters;

  TravelEstimate at(std::size_t from, std::size_t to) const {
    const auto k = from * node_count + to;
    return TravelEstimate{seconds[k], meters[k]};
  }

  friend bool operator==(const TravelMatrix&, const TravelMatrix&) = default;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

}  // namespace detail

inline void write_travel_matrix(const TravelMatrix& m, const std::string& path) {
  const std::size_t cells = static_cast<std::size_t>(m.node_count) * m.node_count;
  if (m.seconds.size() != cells || m.meters.size() != cells) throw ProviderError("travel matrix size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ProviderError("cannot write travel matrix '" + path + "'");
  out.write(kTravelMatrixMagic, 4);
  detail::put_u32(out, m.node_count);
  for (auto v : m.seconds) detail::put_u32(out, v);
  for (auto v : m.meters) detail::put_u32(out, v);
  if (!out) throw ProviderError("failed writing travel matrix '" + path + "'");
}

inline TravelMatrix read_travel_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProviderError("cannot open travel matrix '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTravelMatrixMagic, 4) != 0) {
    throw ProviderError("travel matrix '" + path + "' has a bad magic number");
  }
  TravelMatrix m;
  if (!detail::get_u32(in, m.node_count)) throw ProviderError("travel matrix '" + path + "' is truncated");
  const std::size_t cells = static_cast<std::size_t>(m.node_count) * m.node_count;
  m.seconds.resize(cells);
  m.meters.resize(cells);
  for (auto& v : m.seconds) {
    if (!detail::get_u32(in, v)) throw ProviderError("travel matrix '" + path + "' is truncated");
  }
  for (auto& v : m.meters) {
    if (!detail::get_u32(in, v)) throw ProviderError("travel matrix '" + path + "' is truncated");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ProviderError("travel matrix '" + path + "' has trailing bytes");
  }
  return m;
}

/// Looks locations up by exact coordinates; node i of the matrix sits at
/// locations[i]. When several nodes share coordinates the first one wins.
class MatrixProvider final : public TravelTimeProvider {
public:
  MatrixProvider(TravelMatrix matrix, std::vector<GeoPoint> locations)
      : matrix_(std::move(matrix)), locations_(std::move(locations)) {
    if (locations_.size() != matrix_.node_count) {
      throw ProviderError("travel matrix has " + std::to_string(matrix_.node_count) + " nodes but " +
                          std::to_string(locations_.size()) + " locations were given");
    }
    for (std::size_t i = 0; i < locations_.size(); ++i) index_.try_emplace(key(locations_[i]), i);
  }

  TravelEstimate estimate(const GeoPoint& from, const GeoPoint& to) const override {
    return matrix_.at(node_of(from), node_of(to));
  }

  std::string describe() const override {
    return "matrix-file(" + std::to_string(matrix_.node_count) + " nodes)";
  }

  const TravelMatrix& matrix() const noexcept { return matrix_; }

private:
  static std::uint64_t key(const GeoPoint& p) {
    const auto a = std::bit_cast<std::uint64_t>(p.lat);
    const auto b = std::bit_cast<std::uint64_t>(p.lon);
    return a * 0x9E3779B97F4A7C15ull ^ (b + 0x632BE59BD9B4E019ull + (a << 6) + (a >> 2));
  }

  std::size_t node_of(const GeoPoint& p) const {
    auto it = index_.find(key(p));
    if (it == index_.end() || !(locations_[it->second] == p)) {
      for (std::size_t i = 0; i < locations_.size(); ++i) {
        if (locations_[i] == p) return i;
      }
      throw ProviderError("location (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                          ") is not in the travel matrix");
    }
    return it->second;
  }

  TravelMatrix matrix_;
  std::vector<GeoPoint> locations_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Builds a matrix file's content by querying another provider.
inline TravelMatrix build_travel_matrix(const TravelTimeProvider& provider, const std::vector<GeoPoint>& locations) {
  TravelMatrix m;
  m.node_count = static_cast<std::uint32_t>(locations.size());
  m.seconds.resize(locations.size() * locations.size());
  m.meters.resize(locations.size() * locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = 0; j < locations.size(); ++j) {
      const auto e = i == j ? TravelEstimate{} : provider.estimate(locations[i], locations[j]);
      m.seconds[i * locations.size() + j] = static_cast<std::uint32_t>(e.seconds);
      m.meters[i * locations.size() + j] = static_cast<std::uint32_t>(e.meters);
    }
  }
  return m;
}

}  // namespace ck
