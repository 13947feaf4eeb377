#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "remcd/core.hpp"
#include "remcd/error.hpp"

namespace remcd {

/// Elapsed time since a prior event, or the cap when none was seen.
struct Elapsed {
  double value = 0.0;
  bool never_seen = false;
};

/// Endogenous covariates are reported in hours (cap default 72h);
/// time_scale converts stream timestamps into hours.
struct NetStatsOptions {
  double cap = 72.0;
  double time_scale = 1.0;
};

namespace detail {

inline Elapsed elapsed_from_last(const EventStream& stream, Dyad dyad, double t,
                                 const NetStatsOptions& opts) {
  double last = -1.0;
  for (const Event& e : stream.events) {
    if (e.time >= t) break;  // covariates at t may only see events strictly before t
    if (e.dyad() == dyad) last = e.time;
  }
  if (last < 0.0) return {opts.cap, true};
  double elapsed = (t - last) * opts.time_scale;
  return {std::min(elapsed, opts.cap), false};
}

}  // namespace detail

/// Time since the same dyad last interacted (tendency to repeat a route).
inline Elapsed repetition(const EventStream& stream, Dyad dyad, double t,
                          const NetStatsOptions& opts = {}) {
  return detail::elapsed_from_last(stream, dyad, t, opts);
}

/// Time since the opposite dyad last interacted (return trips).
inline Elapsed reciprocity(const EventStream& stream, Dyad dyad, double t,
                           const NetStatsOptions& opts = {}) {
  return detail::elapsed_from_last(stream, {dyad.receiver, dyad.sender}, t, opts);
}

/// Streaming last-occurrence tables for repetition/reciprocity; O(1) per
/// query instead of a full history scan. Queries must come in event order.
class EndogenousStats {
 public:
  EndogenousStats(const EventStream& stream, NetStatsOptions opts = {})
      : stream_(stream), opts_(opts) {}

  /// Advance the tables so that exactly the events before `event_index` are
  /// inserted; all queries at this index then see history strictly before
  /// the event's time.
  void advance_to(std::size_t event_index) {
    while (cursor_ < event_index && cursor_ < stream_.events.size()) {
      const Event& e = stream_.events[cursor_];
      last_[e.dyad()] = e.time;
      ++cursor_;
    }
  }

  Elapsed repetition(std::size_t event_index, Dyad dyad) {
    advance_to(event_index);
    return lookup(dyad, stream_.events[event_index].time);
  }

  Elapsed reciprocity(std::size_t event_index, Dyad dyad) {
    advance_to(event_index);
    return lookup({dyad.receiver, dyad.sender}, stream_.events[event_index].time);
  }

 private:
  Elapsed lookup(Dyad dyad, double t) const {
    auto it = last_.find(dyad);
    if (it == last_.end()) return {opts_.cap, true};
    double elapsed = (t - it->second) * opts_.time_scale;
    return {std::min(elapsed, opts_.cap), false};
  }

  const EventStream& stream_;
  NetStatsOptions opts_;
  std::size_t cursor_ = 0;
  std::unordered_map<Dyad, double, DyadHash> last_;
};

struct Station {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDeg = M_PI / 180.0;
  double dlat = (lat2 - lat1) * kDeg;
  double dlon = (lon2 - lon1) * kDeg;
  double a = std::sin(dlat / 2.0) * std::sin(dlat / 2.0) +
             std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2.0) *
                 std::sin(dlon / 2.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

inline double station_distance_km(const std::vector<Station>& stations, std::size_t i,
                                  std::size_t j) {
  const Station& a = stations.at(i);
  const Station& b = stations.at(j);
  return haversine_km(a.lat, a.lon, b.lat, b.lon);
}

/// Distance to the nearest other station in biking minutes. Larger values
/// mean less competition nearby.
inline double competition_minutes(const std::vector<Station>& stations, std::size_t idx,
                                  double speed_kmh = 15.0) {
  if (stations.size() < 2) raise(ErrorCode::NoNeighbor, "competition needs >= 2 stations");
  if (idx >= stations.size()) raise(ErrorCode::InvalidConfig, "station index out of range");
  if (!(speed_kmh > 0.0)) raise(ErrorCode::InvalidConfig, "speed must be positive");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < stations.size(); ++j) {
    if (j == idx) continue;
    best = std::min(best, station_distance_km(stations, idx, j));
  }
  return best / speed_kmh * 60.0;
}

}  // namespace remcd
