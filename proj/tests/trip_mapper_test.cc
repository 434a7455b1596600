#include <map>
#include <random>
#include <set>

#include "gtest/gtest.h"

#include "probecount/simulator.h"
#include "probecount/trip_mapper.h"

#include "support.h"

using namespace probecount;
using namespace probecount::test;

namespace {

std::vector<sighting> random_trip_sightings(std::mt19937_64& rng, std::size_t n_devices,
                                            double from, double to) {
  std::uniform_real_distribution<double> at{from, to};
  std::uniform_int_distribution<int> rssi{-100, -30};
  std::uniform_int_distribution<int> count{1, 6};
  std::vector<sighting> out;
  for (auto d = 0U; d != n_devices; ++d) {
    for (auto k = count(rng); k != 0; --k) {
      out.push_back(seen(d, at(rng), rssi(rng)));
    }
  }
  std::sort(begin(out), end(out),
            [](sighting const& a, sighting const& b) { return a.at < b.at; });
  return out;
}

std::size_t distinct_devices(std::span<sighting const> s) {
  std::set<device_id> ids;
  for (auto const& x : s) {
    ids.insert(x.device);
  }
  return ids.size();
}

}  // namespace

TEST(filter, no_filter_is_identity) {
  std::mt19937_64 rng{1};
  auto const s = random_trip_sightings(rng, 30, 0, 1000);
  auto const r = filter_sightings(s, {kMinRssi, true});
  EXPECT_EQ(r.kept, s);
  EXPECT_EQ(r.dropped_random_devices, 0U);
}

TEST(filter, threshold_is_inclusive) {
  std::vector<sighting> const s{seen(1, 1, -90), seen(2, 2, -70), seen(3, 3, -50)};
  auto const r = filter_sightings(s, {-70, true});
  ASSERT_EQ(r.kept.size(), 2U);
  EXPECT_EQ(r.kept[0].rssi_dbm, -70);
  EXPECT_EQ(r.kept[1].rssi_dbm, -50);
}

TEST(filter, single_sighting_device_dropped) {
  std::vector<sighting> const s{seen(1, 1), seen(2, 2), seen(2, 3)};
  auto const r = filter_sightings(s, {kMinRssi, false});
  EXPECT_EQ(r.dropped_random_devices, 1U);
  ASSERT_EQ(r.kept.size(), 2U);
  EXPECT_EQ(r.kept[0].device, dev(2));
}

TEST(filter, single_after_rssi_filter_counts) {
  // device 1 has two sightings but only one survives -60
  std::vector<sighting> const s{seen(1, 1, -80), seen(1, 2, -50), seen(2, 2, -50),
                                seen(2, 3, -50)};
  auto const r = filter_sightings(s, {-60, false});
  EXPECT_EQ(r.dropped_random_devices, 1U);
  EXPECT_EQ(distinct_devices(r.kept), 1U);
}

TEST(filter, monotone_in_threshold) {
  std::mt19937_64 rng{2};
  for (auto round = 0; round != 50; ++round) {
    auto const s = random_trip_sightings(rng, 40, 0, 1000);
    auto const tl = timeline({0, 200, 400, 600, 800, 1000});
    for (auto const inc : {true, false}) {
      std::size_t prev_sightings = SIZE_MAX;
      std::size_t prev_devices = SIZE_MAX;
      std::size_t prev_mapped = SIZE_MAX;
      for (auto const t : kCanonicalRssi) {
        auto const r = filter_sightings(s, {t, inc});
        auto mapped = std::size_t{0};
        for (auto const& sp : build_spans(r.kept)) {
          mapped += map_to_stops(sp, tl).has_value() ? 1 : 0;
        }
        EXPECT_LE(r.kept.size(), prev_sightings);
        EXPECT_LE(distinct_devices(r.kept), prev_devices);
        EXPECT_LE(mapped, prev_mapped);
        prev_sightings = r.kept.size();
        prev_devices = distinct_devices(r.kept);
        prev_mapped = mapped;
      }
    }
  }
}

TEST(filter, dropped_equals_single_sighting_devices) {
  std::mt19937_64 rng{3};
  for (auto round = 0; round != 100; ++round) {
    auto const s = random_trip_sightings(rng, 50, 0, 1000);
    for (auto const t : kCanonicalRssi) {
      auto const kept = filter_sightings(s, {t, true}).kept;
      std::map<device_id, int> counts;
      for (auto const& x : kept) {
        ++counts[x.device];
      }
      auto const singles = static_cast<std::size_t>(
          std::count_if(begin(counts), end(counts), [](auto const& kv) { return kv.second == 1; }));
      auto const r = filter_sightings(s, {t, false});
      EXPECT_EQ(r.dropped_random_devices, singles);
      EXPECT_EQ(distinct_devices(r.kept), counts.size() - singles);
    }
  }
}

TEST(spans, empty) { EXPECT_TRUE(build_spans({}).empty()); }

TEST(spans, min_max_count) {
  std::vector<sighting> const s{seen(1, 50), seen(1, 10)};
  auto const sp = build_spans(s);
  ASSERT_EQ(sp.size(), 1U);
  EXPECT_EQ(sp[0].first_seen, secs(10));
  EXPECT_EQ(sp[0].last_seen, secs(50));
  EXPECT_EQ(sp[0].sighting_count, 2U);
}

TEST(spans, simulator_emitting_devices) {
  scenario_config cfg;
  cfg.n_routes = 1;
  cfg.n_trips_per_route = 5;
  cfg.p_random_mac = 0.0;
  cfg.n_noise_devices = 0;
  cfg.probe_every_segment = true;
  auto const sc = generate_scenario(cfg);
  auto const grouped = group_by_trip(sc.sightings, assignment_index{sc.assignments});
  EXPECT_EQ(grouped.unresolved, 0U);
  for (auto k = std::size_t{0}; k != sc.timelines.size(); ++k) {
    auto const it = grouped.by_trip.find(sc.timelines[k].trip_id);
    auto const n = it == end(grouped.by_trip) ? 0U : build_spans(it->second).size();
    EXPECT_EQ(n, sc.truth.trips[k].devices);
  }
}

TEST(map_to_stops, interval_rules) {
  auto const tl = timeline({100, 200, 300});
  auto const span = [](double a, double b) {
    return device_span{dev(1), secs(a), secs(b), 2};
  };

  auto m = map_to_stops(span(150, 250), tl);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->entry, 0U);
  EXPECT_EQ(m->exit, 2U);

  m = map_to_stops(span(150, 150), tl);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->entry, 0U);
  EXPECT_EQ(m->exit, 1U);

  m = map_to_stops(span(90, 310), tl, milliseconds{30'000});
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->entry, 0U);
  EXPECT_EQ(m->exit, 2U);

  // boundaries: entry [a_t, a_t+1), exit (a_t-1, a_t]
  m = map_to_stops(span(200, 200.001), tl);
  EXPECT_EQ(m->entry, 1U);
  EXPECT_EQ(m->exit, 2U);
  m = map_to_stops(span(199.999, 200), tl);
  EXPECT_EQ(m->entry, 0U);
  EXPECT_EQ(m->exit, 1U);
}

TEST(map_to_stops, outside_margin_absent) {
  auto const tl = timeline({100, 200, 300});
  EXPECT_FALSE(
      map_to_stops({dev(1), secs(10), secs(20), 2}, tl, milliseconds{30'000}).has_value());
  EXPECT_FALSE(
      map_to_stops({dev(1), secs(340), secs(400), 2}, tl, milliseconds{30'000}).has_value());
}

TEST(map_to_stops, totality_on_valid_spans) {
  std::mt19937_64 rng{4};
  auto const tl = timeline({0, 60, 90, 200, 260, 400, 410});
  std::uniform_real_distribution<double> at{-60, 470};
  for (auto k = 0; k != 20'000; ++k) {
    auto a = at(rng);
    auto b = at(rng);
    if (b < a) {
      std::swap(a, b);
    }
    auto const m = map_to_stops({dev(1), secs(a), secs(b), 2}, tl);
    ASSERT_TRUE(m.has_value()) << a << " " << b;
    EXPECT_LE(m->entry, m->exit);
    EXPECT_GE(m->exit, 1U);
    EXPECT_LE(m->exit, tl.last_index());

    // independent oracle for in-range instants
    if (a >= 0 && a < 410) {
      std::size_t entry = 0;
      while (entry + 1 < tl.size() && tl.arrival(entry + 1) <= secs(a)) {
        ++entry;
      }
      EXPECT_EQ(m->entry, entry);
    }
    if (b > 0 && b <= 410) {
      std::size_t exit = 1;
      while (tl.arrival(exit) < secs(b)) {
        ++exit;
      }
      EXPECT_EQ(m->exit, std::max(exit, m->entry));
    }
  }
}

TEST(map_to_stops, deterministic) {
  std::mt19937_64 rng{5};
  auto const s = random_trip_sightings(rng, 100, 0, 1000);
  auto const tl = timeline({0, 250, 500, 750, 1000});
  auto const run = [&] {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (auto const& sp : build_spans(filter_sightings(s, {-70, false}).kept)) {
      if (auto const m = map_to_stops(sp, tl)) {
        out.emplace_back(m->entry, m->exit);
      }
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(grid, canonical_sixteen_cells) {
  auto const g = canonical_grid();
  ASSERT_EQ(g.size(), 16U);
  for (auto const& p : g) {
    EXPECT_TRUE(p.canonical());
  }
  EXPECT_FALSE((filter_params{-57, true}.canonical()));
}
