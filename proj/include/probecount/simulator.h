#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "probecount/capture.h"
#include "probecount/load.h"
#include "probecount/transit.h"

namespace probecount {

enum class ridership { constant, poisson };

struct rssi_range {
  int lo;
  int hi;
};

/// Synthetic scenario knobs. Every random draw comes from std::mt19937_64
/// streams seeded per trip with splitmix64(seed, trip index, stream), so
/// trips are reproducible independently of each other.
struct scenario_config {
  std::uint64_t seed{42};
  int n_routes{2};
  int n_trips_per_route{20};
  int n_stops_per_trip{12};
  int n_vehicles{0};  // 0: one vehicle per route
  double segment_seconds{120.0};
  double layover_seconds{600.0};
  ridership passengers_kind{ridership::poisson};
  double passengers_per_trip{20.0};  // constant count or Poisson mean
  double probe_interval_seconds{20.0};
  bool probe_every_segment{false};  // force >= 1 probe per ridden segment
  double p_device{0.8};
  double p_random_mac{0.2};
  int n_noise_devices{5};
  double noise_probe_interval_seconds{20.0};  // bystanders, independent of passengers
  rssi_range onboard_rssi{-75, -40};
  rssi_range noise_rssi{-95, -65};
  int max_load{83};
  double ticket_lag_seconds{0.0};
  std::string start_date{"2024-03-04"};
};

/// Throws config_error naming the offending field.
void validate(scenario_config const&);

struct trip_truth {
  std::string trip_id;
  std::string route_id;
  count_vector boardings;
  count_vector alightings;
  count_vector load;
  std::vector<std::pair<std::size_t, std::size_t>> journeys;  // (entry, exit) per passenger
  std::size_t devices{0};
  std::size_t dropped_passengers{0};  // could not be placed under max_load
};

struct ground_truth {
  std::vector<trip_truth> trips;
};

struct scenario {
  std::vector<stop_info> stops;
  std::vector<stop_timeline> timelines;
  std::vector<vehicle_assignment> assignments;
  std::vector<sighting> sightings;  // sorted by (sensor_id, instant)
  std::vector<ticket_validation> tickets;
  ground_truth truth;
};

/// Salt used to derive the simulator's device ids.
inline constexpr std::string_view kSimulatorSalt = "probecount-simulator";

scenario generate_scenario(scenario_config const&);

/// What a perfect sensor would report, counted straight from the journeys.
trip_observation oracle_counts(trip_truth const&, stop_timeline const&);

std::string ground_truth_json(ground_truth const&);

/// stops.csv, trips.csv, stop_times.csv, assignments.csv, tickets.csv,
/// sightings.csv and ground_truth.json.
void write_scenario(scenario const&, std::filesystem::path const& dir);

}  // namespace probecount
