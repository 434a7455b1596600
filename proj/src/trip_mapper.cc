#include "probecount/trip_mapper.h"

#include <algorithm>
#include <cstring>
#include <unordered_map>

namespace probecount {

bool filter_params::canonical() const {
  return std::find(begin(kCanonicalRssi), end(kCanonicalRssi), min_rssi) != end(kCanonicalRssi);
}

std::vector<filter_params> canonical_grid() {
  std::vector<filter_params> grid;
  for (auto const include_random : {true, false}) {
    for (auto const rssi : kCanonicalRssi) {
      grid.push_back(filter_params{rssi, include_random});
    }
  }
  return grid;
}

std::size_t device_id_hash::operator()(device_id const& id) const noexcept {
  // The id is already a cryptographic digest.
  std::size_t h = 0;
  std::memcpy(&h, id.data(), sizeof(h));
  return h;
}

filter_outcome filter_sightings(std::span<sighting const> in, filter_params params) {
  filter_outcome out;
  out.kept.reserve(in.size());
  for (auto const& s : in) {
    if (s.rssi_dbm >= params.min_rssi) {
      out.kept.push_back(s);
    }
  }
  if (params.include_random) {
    return out;
  }

  std::unordered_map<device_id, std::size_t, device_id_hash> seen;
  seen.reserve(out.kept.size());
  for (auto const& s : out.kept) {
    ++seen[s.device];
  }
  for (auto const& [_, n] : seen) {
    out.dropped_random_devices += n == 1 ? 1 : 0;
  }
  std::erase_if(out.kept, [&](sighting const& s) { return seen[s.device] == 1; });
  return out;
}

std::vector<device_span> build_spans(std::span<sighting const> in) {
  std::unordered_map<device_id, std::size_t, device_id_hash> index;
  std::vector<device_span> spans;
  for (auto const& s : in) {
    auto const [it, inserted] = index.try_emplace(s.device, spans.size());
    if (inserted) {
      spans.push_back(device_span{s.device, s.at, s.at, 1});
      continue;
    }
    auto& span = spans[it->second];
    span.first_seen = std::min(span.first_seen, s.at);
    span.last_seen = std::max(span.last_seen, s.at);
    ++span.sighting_count;
  }
  std::sort(begin(spans), end(spans), [](device_span const& a, device_span const& b) {
    return std::tie(a.first_seen, a.device) < std::tie(b.first_seen, b.device);
  });
  return spans;
}

std::optional<stop_mapping> map_to_stops(device_span const& span, stop_timeline const& tl,
                                         milliseconds margin) {
  if (span.last_seen < tl.first_arrival() - margin ||
      span.first_seen > tl.last_arrival() + margin) {
    return std::nullopt;
  }
  auto const last = tl.last_index();
  auto const by_arrival = [](stop_time const& s, instant t) { return s.arrival < t; };

  // Largest t with arrival_t <= first_seen; nobody boards at the terminus.
  auto entry = std::size_t{0};
  if (span.first_seen >= tl.first_arrival()) {
    auto const it = std::upper_bound(
        begin(tl.stops), end(tl.stops), span.first_seen,
        [](instant t, stop_time const& s) { return t < s.arrival; });
    entry = static_cast<std::size_t>(std::distance(begin(tl.stops), it)) - 1;
  }
  entry = std::min(entry, last - 1);

  // Smallest t with last_seen <= arrival_t; never stop 0.
  auto exit = last;
  if (span.last_seen <= tl.last_arrival()) {
    auto const it = std::lower_bound(begin(tl.stops), end(tl.stops), span.last_seen, by_arrival);
    exit = static_cast<std::size_t>(std::distance(begin(tl.stops), it));
  }
  exit = std::max({exit, entry, std::size_t{1}});

  return stop_mapping{span.device, entry, exit};
}

std::vector<sighting> trim_to_window(std::span<sighting const> in, stop_timeline const& tl,
                                     milliseconds margin) {
  auto const lo = tl.first_arrival() - margin;
  auto const hi = tl.last_arrival() + margin;
  std::vector<sighting> out;
  out.reserve(in.size());
  for (auto const& s : in) {
    if (s.at >= lo && s.at <= hi) {
      out.push_back(s);
    }
  }
  return out;
}

grouped_sightings group_by_trip(std::span<sighting const> in, assignment_index const& index) {
  grouped_sightings out;
  for (auto const& s : in) {
    if (auto const trip = index.resolve_trip(s.sensor_id, s.at); trip.has_value()) {
      out.by_trip[*trip].push_back(s);
    } else {
      ++out.unresolved;
    }
  }
  return out;
}

}  // namespace probecount
