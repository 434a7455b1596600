#include "probecount/transit.h"

#include <algorithm>
#include <charconv>
#include <set>

#include "fmt/format.h"

#include "probecount/csv.h"
#include "probecount/error.h"

namespace probecount {

std::string_view to_string(direction d) {
  return d == direction::outbound ? "outbound" : "inbound";
}

std::vector<std::string> stop_timeline::stop_ids() const {
  std::vector<std::string> ids;
  ids.reserve(stops.size());
  for (auto const& s : stops) {
    ids.push_back(s.stop_id);
  }
  return ids;
}

void validate(stop_timeline const& tl) {
  if (tl.stops.size() < 2) {
    throw integrity_error(
        fmt::format("trip {}: {} stop(s), need at least 2", tl.trip_id, tl.stops.size()));
  }
  for (auto t = std::size_t{1}; t < tl.stops.size(); ++t) {
    if (tl.stops[t].arrival <= tl.stops[t - 1].arrival) {
      throw integrity_error(fmt::format("trip {}: non-increasing arrival at stop index {}",
                                        tl.trip_id, t));
    }
  }
}

// ---------------------------------------------------------------------------

schedule::schedule(std::vector<stop_info> stops, std::vector<stop_timeline> timelines)
    : stops_{std::move(stops)}, timelines_{std::move(timelines)} {
  for (auto i = std::size_t{0}; i != timelines_.size(); ++i) {
    validate(timelines_[i]);
    if (!trip_index_.emplace(timelines_[i].trip_id, i).second) {
      throw integrity_error(fmt::format("duplicate trip_id {}", timelines_[i].trip_id));
    }
    route_index_[timelines_[i].route_id].push_back(i);
  }
}

stop_timeline const* schedule::find_trip(std::string_view trip_id) const {
  auto const it = trip_index_.find(trip_id);
  return it == end(trip_index_) ? nullptr : &timelines_[it->second];
}

std::vector<stop_timeline const*> schedule::route_trips(std::string_view route_id) const {
  std::vector<stop_timeline const*> out;
  if (auto const it = route_index_.find(route_id); it != end(route_index_)) {
    for (auto const i : it->second) {
      out.push_back(&timelines_[i]);
    }
  }
  return out;
}

std::vector<std::string> schedule::routes() const {
  std::vector<std::string> out;
  for (auto const& [r, _] : route_index_) {
    out.push_back(r);
  }
  return out;
}

bool schedule::has_stop(std::string_view stop_id) const {
  return std::any_of(begin(stops_), end(stops_),
                     [&](stop_info const& s) { return s.stop_id == stop_id; });
}

bool schedule::route_serves(std::string_view route_id, std::string_view stop_id) const {
  auto const it = route_index_.find(route_id);
  if (it == end(route_index_)) {
    return false;
  }
  for (auto const i : it->second) {
    for (auto const& s : timelines_[i].stops) {
      if (s.stop_id == stop_id) {
        return true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

namespace {

std::string row_ref(std::string_view file, std::size_t line) {
  return fmt::format("{} line {}", file, line);
}

void check_width(csv::table const& t, csv::row const& r, std::string_view file) {
  if (r.fields.size() != t.header.size()) {
    throw parse_error(fmt::format("{}: expected {} fields, got {}", row_ref(file, r.line),
                                  t.header.size(), r.fields.size()),
                      static_cast<long long>(r.line));
  }
}

instant parse_instant_at(std::string_view s, std::string_view file, std::size_t line) {
  try {
    return parse_instant(s);
  } catch (parse_error const& e) {
    throw parse_error(fmt::format("{}: {}", row_ref(file, line), e.what()),
                      static_cast<long long>(line));
  }
}

double parse_double_or(std::string_view s, double fallback) {
  if (s.empty()) {
    return fallback;
  }
  try {
    return std::stod(std::string{s});
  } catch (std::exception const&) {
    return fallback;
  }
}

}  // namespace

schedule load_schedule(std::string_view stops_csv, std::string_view trips_csv,
                       std::string_view stop_times_csv) {
  auto const stops_t = csv::parse(stops_csv);
  auto const sc = stops_t.require({"stop_id"});
  auto const c_name = stops_t.column("name");
  auto const c_lat = stops_t.column("lat");
  auto const c_lon = stops_t.column("lon");

  std::vector<stop_info> stops;
  std::set<std::string, std::less<>> stop_ids;
  for (auto const& r : stops_t.rows) {
    check_width(stops_t, r, "stops.csv");
    stop_info s{r.fields[sc[0]], c_name ? r.fields[*c_name] : "",
                c_lat ? parse_double_or(r.fields[*c_lat], 0.0) : 0.0,
                c_lon ? parse_double_or(r.fields[*c_lon], 0.0) : 0.0};
    if (s.stop_id.empty() || !stop_ids.insert(s.stop_id).second) {
      throw parse_error(
          fmt::format("{}: empty or duplicate stop_id '{}'", row_ref("stops.csv", r.line),
                      s.stop_id),
          static_cast<long long>(r.line));
    }
    stops.push_back(std::move(s));
  }

  auto const trips_t = csv::parse(trips_csv);
  auto const tc = trips_t.require({"trip_id", "route_id"});
  auto const c_dir = trips_t.column("direction");
  std::vector<stop_timeline> timelines;
  std::map<std::string, std::size_t, std::less<>> trip_pos;
  for (auto const& r : trips_t.rows) {
    check_width(trips_t, r, "trips.csv");
    stop_timeline tl;
    tl.trip_id = r.fields[tc[0]];
    tl.route_id = r.fields[tc[1]];
    if (c_dir.has_value()) {
      auto const& d = r.fields[*c_dir];
      if (d == "inbound" || d == "1") {
        tl.dir = direction::inbound;
      } else if (d == "outbound" || d == "0" || d.empty()) {
        tl.dir = direction::outbound;
      } else {
        throw parse_error(
            fmt::format("{}: unknown direction '{}'", row_ref("trips.csv", r.line), d),
            static_cast<long long>(r.line));
      }
    }
    if (tl.trip_id.empty() || !trip_pos.emplace(tl.trip_id, timelines.size()).second) {
      throw parse_error(fmt::format("{}: empty or duplicate trip_id '{}'",
                                    row_ref("trips.csv", r.line), tl.trip_id),
                        static_cast<long long>(r.line));
    }
    timelines.push_back(std::move(tl));
  }

  struct pending {
    long seq;
    std::size_t line;
    stop_time st;
  };
  std::vector<std::vector<pending>> per_trip(timelines.size());
  auto const times_t = csv::parse(stop_times_csv);
  auto const stc = times_t.require({"trip_id", "seq", "stop_id", "arrival"});
  for (auto const& r : times_t.rows) {
    check_width(times_t, r, "stop_times.csv");
    auto const& trip_id = r.fields[stc[0]];
    auto const it = trip_pos.find(trip_id);
    if (it == end(trip_pos)) {
      throw parse_error(fmt::format("{}: dangling trip_id '{}'",
                                    row_ref("stop_times.csv", r.line), trip_id),
                        static_cast<long long>(r.line));
    }
    auto const& stop_id = r.fields[stc[2]];
    if (!stop_ids.contains(stop_id)) {
      throw parse_error(fmt::format("{}: dangling stop_id '{}'",
                                    row_ref("stop_times.csv", r.line), stop_id),
                        static_cast<long long>(r.line));
    }
    long seq = 0;
    auto const& seq_text = r.fields[stc[1]];
    auto const [ptr, ec] = std::from_chars(seq_text.data(), seq_text.data() + seq_text.size(), seq);
    if (ec != std::errc{} || ptr != seq_text.data() + seq_text.size()) {
      throw parse_error(
          fmt::format("{}: bad seq '{}'", row_ref("stop_times.csv", r.line), seq_text),
          static_cast<long long>(r.line));
    }
    per_trip[it->second].push_back(
        pending{seq, r.line,
                stop_time{stop_id, parse_instant_at(r.fields[stc[3]], "stop_times.csv", r.line)}});
  }

  for (auto i = std::size_t{0}; i != timelines.size(); ++i) {
    auto& rows = per_trip[i];
    std::stable_sort(begin(rows), end(rows),
                     [](pending const& a, pending const& b) { return a.seq < b.seq; });
    for (auto k = std::size_t{0}; k != rows.size(); ++k) {
      if (k != 0 && rows[k].seq == rows[k - 1].seq) {
        throw parse_error(fmt::format("{}: duplicate seq {} for trip {}",
                                      row_ref("stop_times.csv", rows[k].line), rows[k].seq,
                                      timelines[i].trip_id),
                          static_cast<long long>(rows[k].line));
      }
      if (k != 0 && rows[k].st.arrival <= rows[k - 1].st.arrival) {
        throw parse_error(fmt::format("{}: non-increasing arrival for trip {}",
                                      row_ref("stop_times.csv", rows[k].line),
                                      timelines[i].trip_id),
                          static_cast<long long>(rows[k].line));
      }
      timelines[i].stops.push_back(rows[k].st);
    }
    if (timelines[i].stops.size() < 2) {
      throw parse_error(fmt::format("stop_times.csv: trip {} has {} stop(s), need at least 2",
                                    timelines[i].trip_id, timelines[i].stops.size()));
    }
  }

  return schedule{std::move(stops), std::move(timelines)};
}

schedule load_schedule_dir(std::filesystem::path const& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw io_error(fmt::format("schedule directory {} does not exist", dir.string()));
  }
  return load_schedule(csv::read_file(dir / "stops.csv"), csv::read_file(dir / "trips.csv"),
                       csv::read_file(dir / "stop_times.csv"));
}

std::string write_stops_csv(std::span<stop_info const> stops) {
  std::string out = "stop_id,name,lat,lon\n";
  for (auto const& s : stops) {
    csv::append_row(out, {s.stop_id, s.name, fmt::format("{:.6f}", s.lat),
                          fmt::format("{:.6f}", s.lon)});
  }
  return out;
}

std::string write_trips_csv(std::span<stop_timeline const> tls) {
  std::string out = "trip_id,route_id,direction\n";
  for (auto const& tl : tls) {
    csv::append_row(out, {tl.trip_id, tl.route_id, std::string{to_string(tl.dir)}});
  }
  return out;
}

std::string write_stop_times_csv(std::span<stop_timeline const> tls) {
  std::string out = "trip_id,seq,stop_id,arrival\n";
  for (auto const& tl : tls) {
    for (auto t = std::size_t{0}; t != tl.stops.size(); ++t) {
      csv::append_row(out, {tl.trip_id, std::to_string(t), tl.stops[t].stop_id,
                            format_instant(tl.stops[t].arrival)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

assignment_index::assignment_index(std::vector<vehicle_assignment> all) : all_{std::move(all)} {
  for (auto i = std::size_t{0}; i != all_.size(); ++i) {
    if (all_[i].end <= all_[i].start) {
      throw integrity_error(fmt::format("assignment {} / {}: empty span", all_[i].sensor_id,
                                        all_[i].trip_id));
    }
    by_sensor_[all_[i].sensor_id].push_back(i);
  }
  for (auto& [sensor, idx] : by_sensor_) {
    std::sort(begin(idx), end(idx),
              [&](std::size_t a, std::size_t b) { return all_[a].start < all_[b].start; });
    for (auto k = std::size_t{1}; k < idx.size(); ++k) {
      if (all_[idx[k]].start < all_[idx[k - 1]].end) {
        throw integrity_error(fmt::format("sensor {}: assignments {} and {} overlap", sensor,
                                          all_[idx[k - 1]].trip_id, all_[idx[k]].trip_id));
      }
    }
  }
}

std::optional<std::string> assignment_index::resolve_trip(std::string_view sensor_id,
                                                          instant at) const {
  auto const it = by_sensor_.find(sensor_id);
  if (it == end(by_sensor_)) {
    return std::nullopt;
  }
  auto const& idx = it->second;
  // Last span starting at or before `at`.
  auto const ub = std::upper_bound(begin(idx), end(idx), at, [&](instant t, std::size_t i) {
    return t < all_[i].start;
  });
  if (ub == begin(idx)) {
    return std::nullopt;
  }
  auto const& a = all_[*std::prev(ub)];
  if (at < a.end) {
    return a.trip_id;
  }
  return std::nullopt;
}

assignment_index load_assignments(std::string_view text, schedule const& sched) {
  auto const t = csv::parse(text);
  auto const c = t.require({"sensor_id", "trip_id", "start", "end"});
  std::vector<vehicle_assignment> all;
  for (auto const& r : t.rows) {
    check_width(t, r, "assignments.csv");
    vehicle_assignment a{r.fields[c[0]], r.fields[c[1]],
                         parse_instant_at(r.fields[c[2]], "assignments.csv", r.line),
                         parse_instant_at(r.fields[c[3]], "assignments.csv", r.line)};
    if (sched.find_trip(a.trip_id) == nullptr) {
      throw parse_error(fmt::format("{}: unknown trip_id '{}'",
                                    row_ref("assignments.csv", r.line), a.trip_id),
                        static_cast<long long>(r.line));
    }
    all.push_back(std::move(a));
  }
  try {
    return assignment_index{std::move(all)};
  } catch (integrity_error const& e) {
    throw parse_error(fmt::format("assignments.csv: {}", e.what()));
  }
}

std::string write_assignments_csv(std::span<vehicle_assignment const> all) {
  std::string out = "sensor_id,trip_id,start,end\n";
  for (auto const& a : all) {
    csv::append_row(out, {a.sensor_id, a.trip_id, format_instant(a.start), format_instant(a.end)});
  }
  return out;
}

// ---------------------------------------------------------------------------

ticket_load load_tickets(std::string_view text, schedule const& sched) {
  auto const t = csv::parse(text);
  auto const c = t.require({"instant", "route_id", "stop_id"});
  auto const c_trip = t.column("trip_id");
  ticket_load out;
  for (auto const& r : t.rows) {
    check_width(t, r, "tickets.csv");
    ticket_validation v{parse_instant_at(r.fields[c[0]], "tickets.csv", r.line), r.fields[c[1]],
                        r.fields[c[2]], std::nullopt};
    if (c_trip.has_value() && !r.fields[*c_trip].empty()) {
      v.trip_id = r.fields[*c_trip];
    }
    if (sched.route_trips(v.route_id).empty() ||
        (!v.stop_id.empty() && !sched.route_serves(v.route_id, v.stop_id))) {
      ++out.rejected;
      continue;
    }
    out.validations.push_back(std::move(v));
  }
  return out;
}

std::string write_tickets_csv(std::span<ticket_validation const> vs) {
  std::string out = "instant,route_id,stop_id,trip_id\n";
  for (auto const& v : vs) {
    csv::append_row(out, {format_instant(v.at), v.route_id, v.stop_id, v.trip_id.value_or("")});
  }
  return out;
}

namespace {

std::optional<std::size_t> nearest_stop_occurrence(stop_timeline const& tl,
                                                   std::string_view stop_id, instant at) {
  std::optional<std::size_t> best;
  auto best_gap = milliseconds::max();
  for (auto t = std::size_t{0}; t != tl.size(); ++t) {
    if (tl.stops[t].stop_id != stop_id) {
      continue;
    }
    auto const gap = at > tl.arrival(t) ? at - tl.arrival(t) : tl.arrival(t) - at;
    if (gap < best_gap) {
      best_gap = gap;
      best = t;
    }
  }
  return best;
}

}  // namespace

trip_tickets assign_validations(schedule const& sched, std::span<ticket_validation const> vs,
                                milliseconds grace) {
  trip_tickets out;
  for (auto const& v : vs) {
    if (v.trip_id.has_value()) {
      if (sched.find_trip(*v.trip_id) == nullptr) {
        ++out.unassigned;
      } else {
        out.by_trip[*v.trip_id].push_back(v);
      }
      continue;
    }

    stop_timeline const* best = nullptr;
    auto best_gap = milliseconds::max();
    for (auto const* tl : sched.route_trips(v.route_id)) {
      if (v.at < tl->first_arrival() - grace || v.at > tl->last_arrival() + grace) {
        continue;
      }
      auto gap = milliseconds::max() / 2;
      if (!v.stop_id.empty()) {
        auto const occ = nearest_stop_occurrence(*tl, v.stop_id, v.at);
        if (!occ.has_value()) {
          continue;
        }
        auto const a = tl->arrival(*occ);
        gap = v.at > a ? v.at - a : a - v.at;
      }
      if (best == nullptr || gap < best_gap) {
        best = tl;
        best_gap = gap;
      }
    }
    if (best == nullptr) {
      ++out.unassigned;
    } else {
      out.by_trip[best->trip_id].push_back(v);
    }
  }
  return out;
}

ticket_counts_result ticket_counts(stop_timeline const& tl,
                                   std::span<ticket_validation const> vs, milliseconds grace) {
  ticket_counts_result out{count_vector(tl.size(), 0), 0};
  for (auto const& v : vs) {
    if (!v.stop_id.empty()) {
      if (auto const occ = nearest_stop_occurrence(tl, v.stop_id, v.at); occ.has_value()) {
        ++out.b[*occ];
        continue;
      }
    }
    if (v.at < tl.first_arrival()) {
      ++out.b[0];
      continue;
    }
    if (v.at >= tl.last_arrival()) {
      if (v.at - tl.last_arrival() <= grace) {
        ++out.b[tl.last_index()];
      } else {
        ++out.rejected;
      }
      continue;
    }
    auto const it = std::upper_bound(begin(tl.stops), end(tl.stops), v.at,
                                     [](instant t, stop_time const& s) { return t < s.arrival; });
    ++out.b[static_cast<std::size_t>(std::distance(begin(tl.stops), it)) - 1];
  }
  return out;
}

}  // namespace probecount
