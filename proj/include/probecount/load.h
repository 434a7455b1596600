#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probecount/transit.h"
#include "probecount/trip_mapper.h"

namespace probecount {

/// Per-stop vectors for one trip, all of length stops.size():
///   b  ticket validations        i  Wi-Fi entries     o  Wi-Fi exits
///   c  deduced load after stop   w  distinct devices in the stop's segment
struct trip_observation {
  std::string trip_id;
  std::string route_id;
  std::vector<std::string> stops;
  count_vector b;
  count_vector i;
  count_vector o;
  count_vector c;
  count_vector w;
  bool has_tickets{false};

  friend bool operator==(trip_observation const&, trip_observation const&) = default;
};

struct entries_exits {
  count_vector i;
  count_vector o;
};

entries_exits tally_entries_exits(std::span<stop_mapping const>, std::size_t n_stops);

/// c_0 = i_0 - o_0, c_t = c_{t-1} + i_t - o_t. Throws integrity_error when a
/// prefix goes negative or the lengths differ.
count_vector load_series(std::span<std::int64_t const> i, std::span<std::int64_t const> o);

/// Which segment w[t] counts.
///   departing: [arrival_t, arrival_{t+1}), last stop: [arrival_last, +margin]
///   arriving:  (arrival_{t-1}, arrival_t], first stop: [arrival_0 - margin, arrival_0]
enum class w_indexing { departing, arriving };

std::optional<w_indexing> parse_w_indexing(std::string_view);

count_vector window_counts(std::span<sighting const> filtered, stop_timeline const&,
                           w_indexing = w_indexing::departing,
                           milliseconds boundary_margin = kDefaultBoundaryMargin);

// ---------------------------------------------------------------------------

/// counts[r][c]: devices entering at stop_ids[r] and exiting at stop_ids[c].
class od_matrix {
public:
  od_matrix() = default;
  od_matrix(std::string scope, std::vector<std::string> stop_ids);

  void add(std::size_t entry, std::size_t exit, std::int64_t n = 1);

  std::string const& scope() const { return scope_; }
  std::vector<std::string> const& stop_ids() const { return stop_ids_; }
  std::size_t size() const { return stop_ids_.size(); }
  std::int64_t at(std::size_t r, std::size_t c) const { return counts_[r * size() + c]; }

  count_vector row_sums() const;
  count_vector col_sums() const;
  std::int64_t total() const;

  /// Table layout: header row and first column carry the stop ids.
  std::string to_csv() const;

  friend bool operator==(od_matrix const&, od_matrix const&) = default;

private:
  std::string scope_;
  std::vector<std::string> stop_ids_;
  std::vector<std::int64_t> counts_;
};

od_matrix trip_od_matrix(stop_timeline const&, std::span<stop_mapping const>);

/// Sums trip matrices. Identical stop sequences add position-wise; otherwise
/// the union of stop ids is ordered by first appearance.
od_matrix aggregate_od(std::string scope, std::span<od_matrix const>);

// ---------------------------------------------------------------------------

struct pipeline_options {
  milliseconds boundary_margin{kDefaultBoundaryMargin};
  w_indexing windexing{w_indexing::departing};
};

struct trip_estimate {
  trip_observation obs;
  std::vector<stop_mapping> mappings;
  std::size_t spans{0};
  std::size_t rejected_spans{0};
  std::size_t dropped_random_devices{0};
};

/// trim -> filter -> spans -> stop mapping -> i, o, c, w. `b` is copied into
/// the observation when present.
trip_estimate estimate_trip(stop_timeline const&, std::span<sighting const> trip_sightings,
                            std::optional<count_vector> const& b, filter_params,
                            pipeline_options const& = {});

std::string to_json(trip_observation const&);

}  // namespace probecount
