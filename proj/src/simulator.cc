#include "probecount/simulator.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fmt/format.h"
#include "json.hpp"

#include "probecount/csv.h"
#include "probecount/error.h"

namespace probecount {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum stream_kind : std::uint64_t { kPeople = 0, kProbes = 1, kNoise = 2 };

// Distributions are written out so the draws do not depend on the standard
// library's (unspecified) distribution algorithms.
class rng {
public:
  rng(std::uint64_t seed, std::uint64_t trip, stream_kind kind)
      : gen_{splitmix64(seed ^ splitmix64(trip * 4 + kind))} {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  int uniform_int(int lo, int hi) {
    auto const span = static_cast<double>(hi) - lo + 1.0;
    auto const k = static_cast<int>(std::floor(uniform01() * span));
    return std::min(hi, lo + k);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  long poisson(double lambda) {
    long total = 0;
    while (lambda > 0.0) {
      auto const chunk = std::min(lambda, 30.0);
      lambda -= chunk;
      auto const limit = std::exp(-chunk);
      long k = 0;
      for (auto p = uniform01(); p > limit; p *= uniform01()) {
        ++k;
      }
      total += k;
    }
    return total;
  }

  mac_address mac(bool locally_administered) {
    auto const bits = gen_();
    mac_address m{};
    for (auto k = 0; k != 6; ++k) {
      m[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(bits >> (8 * k));
    }
    m[0] = locally_administered ? static_cast<std::uint8_t>((m[0] | 0x02u) & ~0x01u)
                                : static_cast<std::uint8_t>(m[0] & ~0x03u);
    return m;
  }

private:
  std::mt19937_64 gen_;
};

void require(bool ok, std::string_view field, std::string_view what) {
  if (!ok) {
    throw config_error(fmt::format("{}: {}", field, what));
  }
}

bool valid_rssi(rssi_range r) { return r.lo >= kMinRssi && r.hi <= kMaxRssi && r.lo <= r.hi; }

struct device_probe {
  std::int64_t ms;
  int rssi;
};

}  // namespace

void validate(scenario_config const& c) {
  require(c.n_routes >= 1, "n_routes", "must be >= 1");
  require(c.n_trips_per_route >= 1, "n_trips_per_route", "must be >= 1");
  require(c.n_stops_per_trip >= 2, "n_stops_per_trip",
          "must be >= 2 (passengers need a stop to alight at)");
  require(c.n_vehicles >= 0, "n_vehicles", "must be >= 0");
  require(c.segment_seconds >= 1.0, "segment_seconds", "must be >= 1");
  require(c.layover_seconds >= 0.0, "layover_seconds", "must be >= 0");
  require(c.passengers_per_trip >= 0.0 && std::isfinite(c.passengers_per_trip),
          "passengers_per_trip", "must be a finite value >= 0");
  require(c.probe_interval_seconds > 0.0, "probe_interval_seconds", "must be > 0");
  require(c.p_device >= 0.0 && c.p_device <= 1.0, "p_device", "must be in [0, 1]");
  require(c.p_random_mac >= 0.0 && c.p_random_mac <= 1.0, "p_random_mac",
          "must be in [0, 1]");
  require(c.n_noise_devices >= 0, "n_noise_devices", "must be >= 0");
  require(c.noise_probe_interval_seconds > 0.0, "noise_probe_interval_seconds", "must be > 0");
  require(valid_rssi(c.onboard_rssi), "onboard_rssi", "must satisfy -128 <= lo <= hi <= 0");
  require(valid_rssi(c.noise_rssi), "noise_rssi", "must satisfy -128 <= lo <= hi <= 0");
  require(c.max_load >= 1, "max_load", "must be >= 1");
  require(c.ticket_lag_seconds >= 0.0, "ticket_lag_seconds", "must be >= 0");
  try {
    parse_date(c.start_date);
  } catch (parse_error const& e) {
    throw config_error(fmt::format("start_date: {}", e.what()));
  }
}

scenario generate_scenario(scenario_config const& cfg) {
  validate(cfg);

  scenario sc;
  auto const n_stops = static_cast<std::size_t>(cfg.n_stops_per_trip);
  auto const n_vehicles = cfg.n_vehicles > 0 ? cfg.n_vehicles : cfg.n_routes;
  auto const seg_ms = static_cast<std::int64_t>(std::llround(cfg.segment_seconds * 1000.0));
  auto const layover_ms = static_cast<std::int64_t>(std::llround(cfg.layover_seconds * 1000.0));
  auto const trip_ms = seg_ms * static_cast<std::int64_t>(n_stops - 1);
  auto const probe_ms = cfg.probe_interval_seconds * 1000.0;
  auto const noise_probe_ms = cfg.noise_probe_interval_seconds * 1000.0;
  auto const lag = milliseconds{std::llround(cfg.ticket_lag_seconds * 1000.0)};
  auto const day0 = parse_date(cfg.start_date) + std::chrono::hours{6};

  for (auto r = 0; r != cfg.n_routes; ++r) {
    for (auto s = std::size_t{0}; s != n_stops; ++s) {
      sc.stops.push_back(stop_info{fmt::format("s{}_{:02}", r + 1, s),
                                   fmt::format("Route {} stop {}", r + 1, s),
                                   38.70 + 0.01 * r, -9.10 + 0.004 * static_cast<double>(s)});
    }
  }

  auto const salt = kSimulatorSalt;
  auto trip_index = std::uint64_t{0};
  for (auto r = 0; r != cfg.n_routes; ++r) {
    auto const route_id = std::to_string(r + 1);
    for (auto k = 0; k != cfg.n_trips_per_route; ++k, ++trip_index) {
      auto const vehicle = static_cast<int>(trip_index % static_cast<std::uint64_t>(n_vehicles));
      auto const slot = static_cast<std::int64_t>(trip_index / static_cast<std::uint64_t>(n_vehicles));
      auto const sensor_id = fmt::format("bus{:02}", vehicle + 1);
      auto const start = day0 + milliseconds{slot * (trip_ms + layover_ms)};

      stop_timeline tl;
      tl.trip_id = fmt::format("r{}-t{:03}", r + 1, k);
      tl.route_id = route_id;
      tl.dir = k % 2 == 0 ? direction::outbound : direction::inbound;
      for (auto s = std::size_t{0}; s != n_stops; ++s) {
        auto const stop_no = tl.dir == direction::outbound ? s : n_stops - 1 - s;
        tl.stops.push_back(stop_time{fmt::format("s{}_{:02}", r + 1, stop_no),
                                     start + milliseconds{seg_ms * static_cast<std::int64_t>(s)}});
      }
      sc.assignments.push_back(vehicle_assignment{sensor_id, tl.trip_id,
                                                  tl.first_arrival() - milliseconds{layover_ms / 2},
                                                  tl.last_arrival() + milliseconds{layover_ms / 2}});

      // Passengers and their devices.
      rng people{cfg.seed, trip_index, kPeople};
      auto const n_pass = cfg.passengers_kind == ridership::constant
                              ? static_cast<long>(std::llround(cfg.passengers_per_trip))
                              : people.poisson(cfg.passengers_per_trip);

      trip_truth truth;
      truth.trip_id = tl.trip_id;
      truth.route_id = route_id;
      truth.boardings.assign(n_stops, 0);
      truth.alightings.assign(n_stops, 0);
      std::vector<int> segment_load(n_stops - 1, 0);

      struct carried_device {
        std::size_t entry;
        std::size_t exit;
        bool randomizes;
        mac_address mac;
      };
      std::vector<carried_device> devices;

      for (auto p = 0L; p != n_pass; ++p) {
        std::optional<std::pair<std::size_t, std::size_t>> journey;
        for (auto attempt = 0; attempt != 100 && !journey.has_value(); ++attempt) {
          auto const e = static_cast<std::size_t>(people.uniform_int(0, static_cast<int>(n_stops) - 2));
          auto const x = static_cast<std::size_t>(
              people.uniform_int(static_cast<int>(e) + 1, static_cast<int>(n_stops) - 1));
          auto const fits = std::all_of(begin(segment_load) + static_cast<std::ptrdiff_t>(e),
                                        begin(segment_load) + static_cast<std::ptrdiff_t>(x),
                                        [&](int l) { return l < cfg.max_load; });
          if (fits) {
            journey = std::pair{e, x};
          }
        }
        if (!journey.has_value()) {
          ++truth.dropped_passengers;
          continue;
        }
        auto const [e, x] = *journey;
        for (auto t = e; t != x; ++t) {
          ++segment_load[t];
        }
        ++truth.boardings[e];
        ++truth.alightings[x];
        truth.journeys.emplace_back(e, x);
        sc.tickets.push_back(ticket_validation{tl.arrival(e) + lag, route_id,
                                               tl.stops[e].stop_id, tl.trip_id});
        if (people.bernoulli(cfg.p_device)) {
          auto const randomizes = people.bernoulli(cfg.p_random_mac);
          devices.push_back(carried_device{e, x, randomizes, people.mac(randomizes)});
        }
      }
      truth.devices = devices.size();
      truth.load.assign(n_stops, 0);
      for (auto t = std::size_t{0}; t + 1 < n_stops; ++t) {
        truth.load[t] = segment_load[t];
      }

      // Probe emissions of carried devices.
      rng probes{cfg.seed, trip_index, kProbes};
      auto const arrival_ms = [&](std::size_t t) { return epoch_ms(tl.arrival(t)); };
      auto const emit = [&](mac_address const& fixed, bool randomizes,
                            std::vector<device_probe> const& times) {
        auto const fixed_id = randomizes ? anonymized_mac{} : anonymize_mac(fixed, salt);
        for (auto const& pr : times) {
          auto const anon = randomizes ? anonymize_mac(probes.mac(true), salt) : fixed_id;
          sc.sightings.push_back(
              sighting{from_epoch_ms(pr.ms), anon.id, anon.is_local_admin, pr.rssi, sensor_id});
        }
      };

      for (auto const& d : devices) {
        auto const from = arrival_ms(d.entry);
        auto const to = arrival_ms(d.exit);
        std::vector<device_probe> times;
        for (auto cur = static_cast<double>(from) + probes.exponential(probe_ms);;
             cur += probes.exponential(probe_ms)) {
          auto const ms = static_cast<std::int64_t>(std::ceil(cur));
          if (ms >= to) {
            break;
          }
          times.push_back(device_probe{ms, 0});
        }
        if (cfg.probe_every_segment) {
          for (auto t = d.entry; t != d.exit; ++t) {
            auto const lo = arrival_ms(t);
            auto const hi = arrival_ms(t + 1);
            auto const covered = std::any_of(begin(times), end(times), [&](device_probe const& p) {
              return p.ms > lo && p.ms < hi;
            });
            if (!covered) {
              auto const width = static_cast<double>(hi - lo - 1);
              times.push_back(device_probe{
                  lo + 1 + static_cast<std::int64_t>(std::floor(probes.uniform01() * width)), 0});
            }
          }
          std::sort(begin(times), end(times),
                    [](device_probe const& a, device_probe const& b) { return a.ms < b.ms; });
        }
        for (auto& p : times) {
          p.rssi = probes.uniform_int(cfg.onboard_rssi.lo, cfg.onboard_rssi.hi);
        }
        emit(d.mac, d.randomizes, times);
      }

      // Devices outside the vehicle, lingering around one stop.
      rng noise{cfg.seed, trip_index, kNoise};
      for (auto nd = 0; nd != cfg.n_noise_devices; ++nd) {
        auto const stop = static_cast<std::size_t>(noise.uniform_int(0, static_cast<int>(n_stops) - 1));
        auto const randomizes = noise.bernoulli(cfg.p_random_mac);
        auto const mac = noise.mac(randomizes);
        auto const half = seg_ms / 4;
        auto const count = 1 + noise.poisson(static_cast<double>(2 * half) / noise_probe_ms);
        std::vector<device_probe> times;
        for (auto q = 0L; q != count; ++q) {
          auto const ms = arrival_ms(stop) - half +
                          static_cast<std::int64_t>(std::floor(noise.uniform01() * static_cast<double>(2 * half)));
          times.push_back(device_probe{ms, noise.uniform_int(cfg.noise_rssi.lo, cfg.noise_rssi.hi)});
        }
        std::sort(begin(times), end(times),
                  [](device_probe const& a, device_probe const& b) { return a.ms < b.ms; });
        auto const fixed_id = randomizes ? anonymized_mac{} : anonymize_mac(mac, salt);
        for (auto const& pr : times) {
          auto const anon = randomizes ? anonymize_mac(noise.mac(true), salt) : fixed_id;
          sc.sightings.push_back(
              sighting{from_epoch_ms(pr.ms), anon.id, anon.is_local_admin, pr.rssi, sensor_id});
        }
      }

      sc.truth.trips.push_back(std::move(truth));
      sc.timelines.push_back(std::move(tl));
    }
  }

  sort_sightings(sc.sightings);
  return sc;
}

trip_observation oracle_counts(trip_truth const& truth, stop_timeline const& tl) {
  auto const n = tl.size();
  trip_observation obs;
  obs.trip_id = truth.trip_id;
  obs.route_id = truth.route_id;
  obs.stops = tl.stop_ids();
  obs.has_tickets = true;
  obs.b.assign(n, 0);
  obs.i.assign(n, 0);
  obs.o.assign(n, 0);
  obs.c.assign(n, 0);
  for (auto const& [entry, exit] : truth.journeys) {
    ++obs.b[entry];
    ++obs.i[entry];
    ++obs.o[exit];
    for (auto t = entry; t < exit; ++t) {
      ++obs.c[t];
    }
  }
  obs.w = obs.c;
  return obs;
}

std::string ground_truth_json(ground_truth const& gt) {
  nlohmann::ordered_json trips = nlohmann::ordered_json::array();
  for (auto const& t : gt.trips) {
    nlohmann::ordered_json j;
    j["trip_id"] = t.trip_id;
    j["route_id"] = t.route_id;
    j["boardings"] = t.boardings;
    j["alightings"] = t.alightings;
    j["load"] = t.load;
    j["journeys"] = t.journeys;
    j["devices"] = t.devices;
    j["dropped_passengers"] = t.dropped_passengers;
    trips.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["trips"] = std::move(trips);
  return root.dump(1) + "\n";
}

void write_scenario(scenario const& sc, std::filesystem::path const& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw io_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  }
  csv::write_file(dir / "stops.csv", write_stops_csv(sc.stops));
  csv::write_file(dir / "trips.csv", write_trips_csv(sc.timelines));
  csv::write_file(dir / "stop_times.csv", write_stop_times_csv(sc.timelines));
  csv::write_file(dir / "assignments.csv", write_assignments_csv(sc.assignments));
  csv::write_file(dir / "tickets.csv", write_tickets_csv(sc.tickets));
  csv::write_file(dir / "sightings.csv", write_sightings_csv(sc.sightings));
  csv::write_file(dir / "ground_truth.json", ground_truth_json(sc.truth));
}

}  // namespace probecount
