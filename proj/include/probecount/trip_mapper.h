#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probecount/capture.h"
#include "probecount/transit.h"

namespace probecount {

/// Candidate minimum-RSSI thresholds (dBm). -128 keeps every sighting.
inline constexpr std::array<int, 8> kCanonicalRssi{-128, -85, -80, -75, -70, -65, -60, -55};

struct filter_params {
  int min_rssi{kMinRssi};
  bool include_random{true};

  /// True when min_rssi is one of kCanonicalRssi.
  bool canonical() const;

  friend auto operator<=>(filter_params const&, filter_params const&) = default;
};

/// kCanonicalRssi x {include_random: true, false}: 16 cells.
std::vector<filter_params> canonical_grid();

struct device_id_hash {
  std::size_t operator()(device_id const& id) const noexcept;
};

struct device_span {
  device_id device{};
  instant first_seen;
  instant last_seen;
  std::size_t sighting_count{0};
};

/// 0-based stop indices into the trip's timeline; entry <= exit, exit >= 1.
struct stop_mapping {
  device_id device{};
  std::size_t entry{0};
  std::size_t exit{0};
};

inline constexpr auto kDefaultBoundaryMargin = milliseconds{60'000};

struct filter_outcome {
  std::vector<sighting> kept;
  std::size_t dropped_random_devices{0};
};

/// Keeps sightings with rssi >= min_rssi; then, unless include_random, drops
/// every device seen exactly once among the surviving sightings.
filter_outcome filter_sightings(std::span<sighting const> trip_sightings, filter_params);

/// One span per device, ordered by (first_seen, device).
std::vector<device_span> build_spans(std::span<sighting const>);

/// Entry stop is t with first_seen in [arrival_t, arrival_{t+1}); exit stop is
/// t with last_seen in (arrival_{t-1}, arrival_t]. Instants before the first
/// or after the last arrival clamp to the end stops; a span entirely outside
/// [first arrival - margin, last arrival + margin] yields nullopt.
std::optional<stop_mapping> map_to_stops(device_span const&, stop_timeline const&,
                                         milliseconds boundary_margin = kDefaultBoundaryMargin);

/// Sightings inside [first arrival - margin, last arrival + margin].
std::vector<sighting> trim_to_window(std::span<sighting const>, stop_timeline const&,
                                     milliseconds boundary_margin);

struct grouped_sightings {
  std::map<std::string, std::vector<sighting>> by_trip;
  std::size_t unresolved{0};
};

/// Resolves every sighting to the trip its sensor was serving at that instant.
grouped_sightings group_by_trip(std::span<sighting const>, assignment_index const&);

}  // namespace probecount
