#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probecount/time.h"

namespace probecount {

using count_vector = std::vector<std::int64_t>;

enum class direction { outbound, inbound };

std::string_view to_string(direction);

struct stop_time {
  std::string stop_id;
  instant arrival;
};

/// One trip's ordered stops. Arrivals strictly increase; at least two stops.
struct stop_timeline {
  std::string trip_id;
  std::string route_id;
  direction dir{direction::outbound};
  std::vector<stop_time> stops;

  std::size_t size() const { return stops.size(); }
  std::size_t last_index() const { return stops.size() - 1; }
  instant arrival(std::size_t t) const { return stops[t].arrival; }
  instant first_arrival() const { return stops.front().arrival; }
  instant last_arrival() const { return stops.back().arrival; }
  std::vector<std::string> stop_ids() const;
};

/// Throws integrity_error when the timeline invariants do not hold.
void validate(stop_timeline const&);

struct stop_info {
  std::string stop_id;
  std::string name;
  double lat{0.0};
  double lon{0.0};
};

/// Immutable after loading.
class schedule {
public:
  schedule() = default;
  schedule(std::vector<stop_info>, std::vector<stop_timeline>);

  stop_timeline const* find_trip(std::string_view trip_id) const;
  std::vector<stop_timeline const*> route_trips(std::string_view route_id) const;
  std::vector<std::string> routes() const;

  /// In trips.csv order.
  std::vector<stop_timeline> const& timelines() const { return timelines_; }
  bool has_stop(std::string_view stop_id) const;
  bool route_serves(std::string_view route_id, std::string_view stop_id) const;

private:
  std::vector<stop_info> stops_;
  std::vector<stop_timeline> timelines_;
  std::map<std::string, std::size_t, std::less<>> trip_index_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> route_index_;
};

/// GTFS-like subset. stops: `stop_id,name,lat,lon`; trips:
/// `trip_id,route_id,direction`; stop_times: `trip_id,seq,stop_id,arrival`.
/// Dangling references, duplicate ids and non-increasing arrivals throw
/// parse_error naming the file and row.
schedule load_schedule(std::string_view stops_csv, std::string_view trips_csv,
                       std::string_view stop_times_csv);
schedule load_schedule_dir(std::filesystem::path const& dir);

std::string write_stops_csv(std::span<stop_info const>);
std::string write_trips_csv(std::span<stop_timeline const>);
std::string write_stop_times_csv(std::span<stop_timeline const>);

// ---------------------------------------------------------------------------

/// `span` is start-inclusive, end-exclusive.
struct vehicle_assignment {
  std::string sensor_id;
  std::string trip_id;
  instant start;
  instant end;
};

class assignment_index {
public:
  assignment_index() = default;

  /// Throws integrity_error if two spans of one sensor overlap or a span is
  /// empty.
  explicit assignment_index(std::vector<vehicle_assignment>);

  std::optional<std::string> resolve_trip(std::string_view sensor_id, instant) const;

  std::vector<vehicle_assignment> const& assignments() const { return all_; }

private:
  std::vector<vehicle_assignment> all_;
  // sensor -> indices into all_, sorted by start
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_sensor_;
};

/// `sensor_id,trip_id,start,end`. Unknown trips are a parse_error.
assignment_index load_assignments(std::string_view text, schedule const&);
std::string write_assignments_csv(std::span<vehicle_assignment const>);

// ---------------------------------------------------------------------------

struct ticket_validation {
  instant at;
  std::string route_id;
  std::string stop_id;  // empty when the feed lacks it
  std::optional<std::string> trip_id;
};

struct ticket_load {
  std::vector<ticket_validation> validations;
  std::size_t rejected{0};  // unknown route, or stop not served by the route
};

/// `instant,route_id,stop_id[,trip_id]`.
ticket_load load_tickets(std::string_view text, schedule const&);
std::string write_tickets_csv(std::span<ticket_validation const>);

constexpr auto kDefaultTicketGrace = std::chrono::seconds{120};

struct trip_tickets {
  std::map<std::string, std::vector<ticket_validation>> by_trip;
  std::size_t unassigned{0};
};

/// Groups validations by trip: by trip_id when present, otherwise the trip of
/// the same route whose window [first arrival - grace, last arrival + grace]
/// contains the instant, preferring the trip whose arrival at the stated
/// stop is nearest.
trip_tickets assign_validations(schedule const&, std::span<ticket_validation const>,
                                milliseconds grace = kDefaultTicketGrace);

struct ticket_counts_result {
  count_vector b;
  std::size_t rejected{0};
};

/// b[t] = validations assigned to stop t of `trip`. A stop_id served by the
/// trip is used directly; otherwise the instant decides: [arrival_t,
/// arrival_{t+1}) -> t, before the first arrival -> 0, within `grace` after
/// the last arrival -> last stop, later -> rejected.
ticket_counts_result ticket_counts(stop_timeline const&, std::span<ticket_validation const>,
                                   milliseconds grace = kDefaultTicketGrace);

}  // namespace probecount
