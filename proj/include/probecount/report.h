#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probecount/calibration.h"
#include "probecount/load.h"

namespace probecount {

/// Ticket validations (b) and Wi-Fi entries (i) over the stop sequence as two
/// polylines; stop ids label the x axis.
std::string entries_plot_svg(trip_observation const&);

struct table_options {
  std::size_t min_trips{kDefaultMinTrips};
  std::optional<int> at_rssi;          // random-filter comparison point; default: route modal
  bool modal_include_random{false};    // which arm the modal threshold is computed on
  filter_params summary_params{-55, false};
};

struct report_files {
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::vector<std::string> warnings;
};

/// modal_rssi.csv, rank_tests.csv, rank_tests_detail.csv,
/// r2_ci.csv, means.csv and summary.csv.
report_files calibration_tables(std::span<calibration_record const>, table_options const&);

}  // namespace probecount
