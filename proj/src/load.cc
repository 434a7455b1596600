#include "probecount/load.h"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "fmt/format.h"
#include "json.hpp"

#include "probecount/csv.h"
#include "probecount/error.h"

namespace probecount {

entries_exits tally_entries_exits(std::span<stop_mapping const> mappings, std::size_t n_stops) {
  entries_exits out{count_vector(n_stops, 0), count_vector(n_stops, 0)};
  for (auto const& m : mappings) {
    if (m.entry >= n_stops || m.exit >= n_stops) {
      throw integrity_error(fmt::format("mapping ({}, {}) outside {} stops", m.entry, m.exit,
                                        n_stops));
    }
    ++out.i[m.entry];
    ++out.o[m.exit];
  }
  return out;
}

count_vector load_series(std::span<std::int64_t const> i, std::span<std::int64_t const> o) {
  if (i.size() != o.size()) {
    throw integrity_error(
        fmt::format("entries/exits length mismatch: {} vs {}", i.size(), o.size()));
  }
  count_vector c(i.size(), 0);
  std::int64_t load = 0;
  for (auto t = std::size_t{0}; t != i.size(); ++t) {
    load += i[t] - o[t];
    if (load < 0) {
      throw integrity_error(fmt::format("negative load {} after stop {}", load, t));
    }
    c[t] = load;
  }
  return c;
}

std::optional<w_indexing> parse_w_indexing(std::string_view s) {
  if (s == "departing") {
    return w_indexing::departing;
  }
  if (s == "arriving") {
    return w_indexing::arriving;
  }
  return std::nullopt;
}

count_vector window_counts(std::span<sighting const> filtered, stop_timeline const& tl,
                           w_indexing indexing, milliseconds margin) {
  auto const n = tl.size();
  std::vector<std::unordered_set<device_id, device_id_hash>> seen(n);
  auto const first = tl.first_arrival();
  auto const last = tl.last_arrival();

  for (auto const& s : filtered) {
    std::optional<std::size_t> t;
    if (indexing == w_indexing::departing) {
      if (s.at >= first && s.at < last) {
        auto const it = std::upper_bound(begin(tl.stops), end(tl.stops), s.at,
                                         [](instant x, stop_time const& st) { return x < st.arrival; });
        t = static_cast<std::size_t>(std::distance(begin(tl.stops), it)) - 1;
      } else if (s.at >= last && s.at <= last + margin) {
        t = n - 1;
      }
    } else {
      if (s.at > first && s.at <= last) {
        auto const it = std::lower_bound(begin(tl.stops), end(tl.stops), s.at,
                                         [](stop_time const& st, instant x) { return st.arrival < x; });
        t = static_cast<std::size_t>(std::distance(begin(tl.stops), it));
      } else if (s.at <= first && s.at >= first - margin) {
        t = 0;
      }
    }
    if (t.has_value()) {
      seen[*t].insert(s.device);
    }
  }

  count_vector w(n, 0);
  for (auto t = std::size_t{0}; t != n; ++t) {
    w[t] = static_cast<std::int64_t>(seen[t].size());
  }
  return w;
}

// ---------------------------------------------------------------------------

od_matrix::od_matrix(std::string scope, std::vector<std::string> stop_ids)
    : scope_{std::move(scope)},
      stop_ids_{std::move(stop_ids)},
      counts_(stop_ids_.size() * stop_ids_.size(), 0) {}

void od_matrix::add(std::size_t entry, std::size_t exit, std::int64_t n) {
  if (entry >= size() || exit >= size()) {
    throw integrity_error(fmt::format("OD cell ({}, {}) outside {} stops", entry, exit, size()));
  }
  counts_[entry * size() + exit] += n;
}

count_vector od_matrix::row_sums() const {
  count_vector r(size(), 0);
  for (auto i = std::size_t{0}; i != size(); ++i) {
    for (auto j = std::size_t{0}; j != size(); ++j) {
      r[i] += at(i, j);
    }
  }
  return r;
}

count_vector od_matrix::col_sums() const {
  count_vector c(size(), 0);
  for (auto i = std::size_t{0}; i != size(); ++i) {
    for (auto j = std::size_t{0}; j != size(); ++j) {
      c[j] += at(i, j);
    }
  }
  return c;
}

std::int64_t od_matrix::total() const {
  std::int64_t t = 0;
  for (auto const v : counts_) {
    t += v;
  }
  return t;
}

std::string od_matrix::to_csv() const {
  std::vector<std::string> header{"stop"};
  header.insert(header.end(), stop_ids_.begin(), stop_ids_.end());
  std::string out;
  csv::append_row(out, header);
  for (auto i = std::size_t{0}; i != size(); ++i) {
    std::vector<std::string> row{stop_ids_[i]};
    for (auto j = std::size_t{0}; j != size(); ++j) {
      row.push_back(std::to_string(at(i, j)));
    }
    csv::append_row(out, row);
  }
  return out;
}

od_matrix trip_od_matrix(stop_timeline const& tl, std::span<stop_mapping const> mappings) {
  od_matrix m{tl.trip_id, tl.stop_ids()};
  for (auto const& sm : mappings) {
    m.add(sm.entry, sm.exit);
  }
  return m;
}

od_matrix aggregate_od(std::string scope, std::span<od_matrix const> parts) {
  if (parts.empty()) {
    return od_matrix{std::move(scope), {}};
  }
  auto const same_sequence = std::all_of(begin(parts), end(parts), [&](od_matrix const& m) {
    return m.stop_ids() == parts.front().stop_ids();
  });
  if (same_sequence) {
    od_matrix out{std::move(scope), parts.front().stop_ids()};
    for (auto const& m : parts) {
      for (auto r = std::size_t{0}; r != m.size(); ++r) {
        for (auto c = std::size_t{0}; c != m.size(); ++c) {
          if (auto const v = m.at(r, c); v != 0) {
            out.add(r, c, v);
          }
        }
      }
    }
    return out;
  }

  std::vector<std::string> ids;
  std::map<std::string, std::size_t> pos;
  for (auto const& m : parts) {
    for (auto const& id : m.stop_ids()) {
      if (pos.emplace(id, ids.size()).second) {
        ids.push_back(id);
      }
    }
  }
  od_matrix out{std::move(scope), ids};
  for (auto const& m : parts) {
    for (auto r = std::size_t{0}; r != m.size(); ++r) {
      for (auto c = std::size_t{0}; c != m.size(); ++c) {
        if (auto const v = m.at(r, c); v != 0) {
          out.add(pos.at(m.stop_ids()[r]), pos.at(m.stop_ids()[c]), v);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

trip_estimate estimate_trip(stop_timeline const& tl, std::span<sighting const> trip_sightings,
                            std::optional<count_vector> const& b, filter_params params,
                            pipeline_options const& opt) {
  auto const windowed = trim_to_window(trip_sightings, tl, opt.boundary_margin);
  auto filtered = filter_sightings(windowed, params);
  auto const spans = build_spans(filtered.kept);

  trip_estimate est;
  est.spans = spans.size();
  est.dropped_random_devices = filtered.dropped_random_devices;
  est.mappings.reserve(spans.size());
  for (auto const& s : spans) {
    if (auto const m = map_to_stops(s, tl, opt.boundary_margin); m.has_value()) {
      est.mappings.push_back(*m);
    } else {
      ++est.rejected_spans;
    }
  }

  auto& obs = est.obs;
  obs.trip_id = tl.trip_id;
  obs.route_id = tl.route_id;
  obs.stops = tl.stop_ids();
  auto [i, o] = tally_entries_exits(est.mappings, tl.size());
  obs.c = load_series(i, o);
  obs.i = std::move(i);
  obs.o = std::move(o);
  obs.w = window_counts(filtered.kept, tl, opt.windexing, opt.boundary_margin);
  obs.has_tickets = b.has_value();
  obs.b = b.value_or(count_vector(tl.size(), 0));
  return est;
}

std::string to_json(trip_observation const& obs) {
  nlohmann::ordered_json j;
  j["trip_id"] = obs.trip_id;
  j["route_id"] = obs.route_id;
  j["stops"] = obs.stops;
  if (obs.has_tickets) {
    j["b"] = obs.b;
  } else {
    j["b"] = nullptr;
  }
  j["i"] = obs.i;
  j["o"] = obs.o;
  j["c"] = obs.c;
  j["w"] = obs.w;
  return j.dump(2) + "\n";
}

}  // namespace probecount
