#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probecount/load.h"
#include "probecount/stats.h"

namespace probecount {

/// (A) ticket validations b vs Wi-Fi entries i.
/// (B) distinct devices per segment w vs deduced load c.
enum class study_case { A, B };

std::string_view to_string(study_case);

/// "A", "B", or with the "_ns" suffix when single-sighting devices are
/// excluded.
std::string case_label(study_case, bool include_random);

struct trip_input {
  stop_timeline const* timeline{nullptr};
  std::vector<sighting> sightings;
  std::optional<count_vector> b;  // nullopt without ticketing
};

struct trip_evaluation {
  std::optional<metric_bundle> case_a;  // nullopt when the trip has no ticketing
  metric_bundle case_b;
};

/// Runs the estimation pipeline for one cell and scores both cases:
/// A = metrics(b, i), B = metrics(w, c).
trip_evaluation evaluate_trip(trip_input const&, filter_params, pipeline_options const& = {});

struct calibration_record {
  std::string trip_id;
  std::string route_id;
  study_case kase{study_case::A};
  filter_params params;
  metric_bundle metrics;
};

struct skipped_cell {
  std::string trip_id;
  filter_params params;
  study_case kase{study_case::A};
  std::string reason;
};

struct sweep_result {
  std::vector<calibration_record> records;  // ordered by (trip, params, case)
  std::vector<skipped_cell> skipped;
};

/// Every trip x grid cell x case. Throws usage_error on an empty grid.
sweep_result sweep(std::span<trip_input const>, std::span<filter_params const> grid,
                   pipeline_options const& = {});

struct modal_rssi {
  int best{kMinRssi};
  double share{0.0};
  std::map<int, std::size_t> wins;
  std::size_t instances{0};
};

/// For each (trip, case, metric) instance the winning threshold minimizes the
/// error (maximizes r2; undefined r2 values do not compete); ties go to the
/// strongest threshold. Returns the threshold with the most wins. Only
/// records whose include_random equals `include_random` are considered.
/// Throws usage_error when nothing is scorable.
modal_rssi modal_best_rssi(std::span<calibration_record const> route_records,
                           bool include_random = false);

struct filter_comparison {
  std::string route_id;
  study_case kase{study_case::A};
  int at_rssi{kMinRssi};
  rank_test_result test;
  std::string winner;  // e.g. "A_ns" when excluding single-sighting devices wins
  double mean_include{0.0};
  double mean_exclude{0.0};
  std::size_t pairs{0};
};

inline constexpr std::size_t kDefaultMinTrips = 30;

/// Paired rank test of per-trip `m` (include_random vs. exclude) at one
/// threshold. Throws usage_error when fewer than `min_trips` pairs exist.
filter_comparison compare_random_filter(std::span<calibration_record const> route_records,
                                        study_case, int at_rssi,
                                        std::size_t min_trips = kDefaultMinTrips,
                                        metric m = metric::rmse);

struct metric_summary {
  std::size_t count{0};
  double mean{0.0};
  std::optional<double> std;  // sample form; needs 2 values
  std::optional<double> ci_lower;
  std::optional<double> ci_upper;
};

struct route_summary_row {
  std::string route_id;
  study_case kase{study_case::A};
  filter_params params;
  std::size_t trips{0};
  std::size_t r2_undefined{0};
  std::map<metric, metric_summary> metrics;
};

/// Per route and case aggregates over the records of one params cell. Routes
/// with fewer than `min_trips` trips are omitted.
std::vector<route_summary_row> route_summary(std::span<calibration_record const>,
                                             filter_params,
                                             std::size_t min_trips = kDefaultMinTrips);

/// Groups records by route id.
std::map<std::string, std::vector<calibration_record>> by_route(
    std::span<calibration_record const>);

// CSV layouts -----------------------------------------------------------------

std::string write_records_csv(std::span<calibration_record const>);
std::vector<calibration_record> parse_records_csv(std::string_view);

/// route,min_rssi,share
std::string write_modal_csv(std::map<std::string, modal_rssi> const&);
/// route,case,wilcox_pval
std::string write_rank_csv(std::span<filter_comparison const>);
/// route,case,lower_ci,upper_ci,count,mean,std (R2)
std::string write_r2_ci_csv(std::span<route_summary_row const>);
/// route,case,mae,rmse,r2
std::string write_means_csv(std::span<route_summary_row const>);
/// every metric with mean/std/ci
std::string write_summary_csv(std::span<route_summary_row const>);

/// Fixed-width number formatting shared by every report.
std::string format_number(double);
std::string format_optional(std::optional<double>);

}  // namespace probecount
