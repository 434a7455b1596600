#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "fmt/format.h"

#include "probecount/capture.h"
#include "probecount/transit.h"

namespace probecount::test {

inline instant secs(double s) { return from_epoch_ms(static_cast<std::int64_t>(s * 1000.0)); }

// Stops "S0", "S1", ... arriving at the given second offsets from the epoch.
inline stop_timeline timeline(std::initializer_list<double> arrivals,
                              std::string trip_id = "T1", std::string route_id = "R1") {
  stop_timeline tl{std::move(trip_id), std::move(route_id), direction::outbound, {}};
  for (auto const a : arrivals) {
    tl.stops.push_back({fmt::format("S{}", tl.stops.size()), secs(a)});
  }
  return tl;
}

inline device_id dev(unsigned n) {
  device_id d{};
  d[0] = static_cast<std::uint8_t>(n & 0xff);
  d[1] = static_cast<std::uint8_t>((n >> 8) & 0xff);
  d[2] = static_cast<std::uint8_t>((n >> 16) & 0xff);
  return d;
}

inline sighting seen(unsigned device, double at_seconds, int rssi = -50,
                     std::string sensor = "bus01") {
  return sighting{secs(at_seconds), dev(device), false, rssi, std::move(sensor)};
}

}  // namespace probecount::test
