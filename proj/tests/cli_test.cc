#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "fmt/format.h"
#include "gtest/gtest.h"
#include "json.hpp"

#include "probecount/cli.h"
#include "probecount/csv.h"
#include "probecount/simulator.h"

using namespace probecount;
namespace fs = std::filesystem;

namespace {

struct result {
  int code;
  std::string out;
  std::string err;
};

result run(std::vector<std::string> const& args) {
  std::ostringstream out;
  std::ostringstream err;
  auto const code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt::format("probecount_cli_{}",
                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(std::string const& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

std::string tree(fs::path const& root) {
  std::vector<fs::path> files;
  for (auto const& e : fs::recursive_directory_iterator{root}) {
    if (e.is_regular_file()) {
      files.push_back(e.path());
    }
  }
  std::sort(begin(files), end(files));
  std::string all;
  for (auto const& f : files) {
    all += fs::relative(f, root).string() + "\n" + csv::read_file(f);
  }
  return all;
}

}  // namespace

TEST(config_text, key_values) {
  auto const kv = parse_key_values(
      "# comment\n[section]\nmin_rssi = -60\nout = \"some dir\"\n; other\nseed=7 # trailing\n");
  EXPECT_EQ(kv.at("min_rssi"), "-60");
  EXPECT_EQ(kv.at("out"), "some dir");
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_THROW(parse_key_values("novalue\n"), usage_error);
}

TEST_F(cli, help_is_success) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST_F(cli, no_subcommand_is_usage) { EXPECT_EQ(run({}).code, 64); }

TEST_F(cli, estimate_ideal_matches_oracle) {
  auto const r = run({"simulate", "--out", path("sc"), "--n-trips-per-route", "10",
                      "--p-device", "1", "--p-random-mac", "0", "--n-noise-devices", "0",
                      "--probe-interval-seconds", "5", "--probe-every-segment",
                      "--onboard-rssi-lo", "-60", "--noise-rssi-hi", "-80"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto const e = run({"--min-rssi", "-128", "--include-random", "estimate", "--schedule-dir",
                      path("sc"), "--out", path("est"), "--plot-trip", "r1-t000"});
  ASSERT_EQ(e.code, 0) << e.err;

  auto const truth = nlohmann::json::parse(csv::read_file(path("sc/ground_truth.json")));
  ASSERT_EQ(truth["trips"].size(), 20U);
  for (auto const& t : truth["trips"]) {
    auto const id = t["trip_id"].get<std::string>();
    auto const obs = nlohmann::json::parse(csv::read_file(path("est/observations/" + id + ".json")));
    EXPECT_EQ(obs["i"], t["boardings"]) << id;
    EXPECT_EQ(obs["o"], t["alightings"]) << id;
    EXPECT_EQ(obs["c"], t["load"]) << id;
    EXPECT_EQ(obs["b"], t["boardings"]) << id;
    EXPECT_EQ(obs["w"], obs["c"]) << id;
    EXPECT_TRUE(fs::exists(path("est/od/trip_" + id + ".csv")));
  }
  EXPECT_TRUE(fs::exists(path("est/plots/r1-t000.svg")));
  EXPECT_FALSE(fs::exists(path("est/plots/r1-t001.svg")));
  auto const svg = csv::read_file(path("est/plots/r1-t000.svg"));
  EXPECT_NE(svg.find("id=\"tickets\""), std::string::npos);
  EXPECT_NE(svg.find("id=\"wifi-entries\""), std::string::npos);
  EXPECT_NE(svg.find(">s1_00<"), std::string::npos);
}

TEST_F(cli, route_od_needs_date_range) {
  ASSERT_EQ(run({"simulate", "--out", path("sc"), "--n-trips-per-route", "4"}).code, 0);
  auto const a = run({"estimate", "--schedule-dir", path("sc"), "--out", path("a")});
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.err.find("--from/--to"), std::string::npos);
  auto const b = run({"estimate", "--schedule-dir", path("sc"), "--out", path("b"), "--from",
                      "2024-03-04", "--to", "2024-03-04"});
  ASSERT_EQ(b.code, 0) << b.err;
  for (auto const* f : {"route_1_outbound_2024-03-04_2024-03-04.csv",
                        "route_1_inbound_2024-03-04_2024-03-04.csv"}) {
    EXPECT_TRUE(fs::exists(path(std::string{"b/od/"} + f))) << f;
  }
  auto const none = run({"estimate", "--schedule-dir", path("sc"), "--out", path("c"), "--from",
                         "2030-01-01", "--to", "2030-01-02"});
  EXPECT_EQ(none.code, 2);
}

TEST_F(cli, empty_sightings_zero_vectors) {
  ASSERT_EQ(run({"simulate", "--out", path("sc"), "--n-trips-per-route", "2"}).code, 0);
  csv::write_file(path("sc/sightings.csv"), "instant,mac,rssi,sensor_id\n");
  auto const r = run({"estimate", "--schedule-dir", path("sc"), "--out", path("est")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto const obs =
      nlohmann::json::parse(csv::read_file(path("est/observations/r1-t000.json")));
  for (auto const& v : obs["i"]) {
    EXPECT_EQ(v, 0);
  }
  for (auto const& v : obs["w"]) {
    EXPECT_EQ(v, 0);
  }
}

TEST_F(cli, missing_schedule_dir) {
  auto const r = run({"estimate", "--schedule-dir", path("nope"), "--out", path("est")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(path("nope")), std::string::npos);
}

TEST_F(cli, usage_errors) {
  ASSERT_EQ(run({"simulate", "--out", path("sc"), "--n-trips-per-route", "2"}).code, 0);
  EXPECT_EQ(run({"calibrate", "--schedule-dir", path("sc"), "--out", path("c"), "--grid-rssi",
                 ""})
                .code,
            64);
  EXPECT_EQ(run({"--w-indexing", "sideways", "estimate", "--schedule-dir", path("sc")}).code,
            64);
  EXPECT_EQ(run({"--min-rssi", "-57", "estimate", "--schedule-dir", path("sc"), "--out",
                 path("e")})
                .code,
            64);
  EXPECT_EQ(run({"--min-rssi", "-57", "estimate", "--allow-noncanonical-rssi",
                 "--schedule-dir", path("sc"), "--out", path("e")})
                .code,
            0);
  EXPECT_EQ(run({"estimate", "--bogus"}).code, 64);
}

TEST_F(cli, simulate_invalid_config_names_field) {
  auto const r = run({"simulate", "--out", path("sc"), "--p-device", "2"});
  EXPECT_EQ(r.code, 64);
  EXPECT_NE(r.err.find("p_device"), std::string::npos);
}

TEST_F(cli, config_file_fills_missing_options) {
  csv::write_file(path("sim.conf"),
                  "# scenario\nn_routes = 1\nn_trips_per_route = 3\nseed = 9\nout = " +
                      path("from_conf") + "\n");
  auto const r = run({"--config", path("sim.conf"), "simulate", "--seed", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto const m = nlohmann::json::parse(csv::read_file(path("from_conf/manifest.json")));
  EXPECT_EQ(m["trips"], 3);
  EXPECT_EQ(m["seed"], 10);  // command line wins

  csv::write_file(path("bad.conf"), "no_such_option = 1\n");
  EXPECT_EQ(run({"--config", path("bad.conf"), "simulate", "--out", path("x")}).code, 64);
  EXPECT_EQ(run({"--config", path("missing.conf"), "simulate"}).code, 1);
}

TEST_F(cli, calibrate_tables_and_min_trips) {
  ASSERT_EQ(run({"simulate", "--out", path("sc"), "--n-routes", "1", "--n-trips-per-route",
                 "40"})
                .code,
            0);
  auto const r = run({"calibrate", "--schedule-dir", path("sc"), "--out", path("cal"),
                      "--no-timestamps"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto const records = csv::parse(csv::read_file(path("cal/records.csv")));
  EXPECT_EQ(records.rows.size(), 40U * 16U * 2U);
  EXPECT_EQ(csv::parse(csv::read_file(path("cal/modal_rssi.csv"))).header,
            (std::vector<std::string>{"route", "min_rssi", "share"}));
  EXPECT_EQ(csv::parse(csv::read_file(path("cal/rank_tests.csv"))).header,
            (std::vector<std::string>{"route", "case", "wilcox_pval"}));
  EXPECT_EQ(csv::parse(csv::read_file(path("cal/means.csv"))).rows.size(), 2U);

  auto const big = run({"--min-trips", "9999", "calibrate", "--schedule-dir", path("sc"),
                        "--out", path("cal2"), "--no-timestamps"});
  EXPECT_EQ(big.code, 0);
  EXPECT_NE(big.err.find("warning"), std::string::npos);
  EXPECT_TRUE(csv::parse(csv::read_file(path("cal2/means.csv"))).rows.empty());
  EXPECT_TRUE(csv::parse(csv::read_file(path("cal2/r2_ci.csv"))).rows.empty());

  auto const rep = run({"report", "--records", path("cal/records.csv"), "--out", path("rep"),
                        "--no-timestamps"});
  ASSERT_EQ(rep.code, 0);
  for (auto const* f : {"modal_rssi.csv", "rank_tests.csv",
                        "r2_ci.csv", "means.csv", "summary.csv"}) {
    EXPECT_EQ(csv::read_file(path(std::string{"rep/"} + f)),
              csv::read_file(path(std::string{"cal/"} + f)))
        << f;
  }
}

TEST_F(cli, calibrate_without_tickets_warns) {
  ASSERT_EQ(run({"simulate", "--out", path("sc"), "--n-trips-per-route", "3"}).code, 0);
  fs::remove(path("sc/tickets.csv"));
  auto const r = run({"calibrate", "--schedule-dir", path("sc"), "--out", path("cal")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("case B only"), std::string::npos);
  EXPECT_EQ(csv::parse(csv::read_file(path("cal/records.csv"))).rows.size(), 6U * 16U);
}

TEST_F(cli, repeated_runs_identical) {
  for (auto const* run_dir : {"one", "two"}) {
    auto const base = path(run_dir);
    ASSERT_EQ(run({"--no-timestamps", "simulate", "--out", base + "/sc", "--seed", "5"}).code,
              0);
    ASSERT_EQ(run({"--no-timestamps", "estimate", "--schedule-dir", base + "/sc", "--out",
                   base + "/est", "--plot-trip", "all", "--from", "2024-03-04", "--to",
                   "2024-03-05"})
                  .code,
              0);
    ASSERT_EQ(run({"--no-timestamps", "calibrate", "--schedule-dir", base + "/sc", "--out",
                   base + "/cal"})
                  .code,
              0);
  }
  EXPECT_EQ(tree(path("one")), tree(path("two")));
  EXPECT_EQ(csv::read_file(path("one/cal/manifest.json")).find("generated_at"),
            std::string::npos);
}

TEST_F(cli, parse_pcap_with_salt_env) {
  pcap_writer w;
  w.add(instant_us{microseconds{1'709'532'000'000'000LL}},
        make_probe_request(*parse_mac("aa:bb:cc:dd:ee:ff")), -47);
  w.add(instant_us{microseconds{1'709'532'001'000'000LL}},
        make_frame(0, 8, *parse_mac("00:00:00:00:00:01")), -47);
  auto const& bytes = w.bytes();
  csv::write_file(path("cap.pcap"),
                  std::string_view{reinterpret_cast<char const*>(bytes.data()), bytes.size()});

  EXPECT_EQ(run({"parse", "--pcap", path("cap.pcap"), "--out", path("s.csv")}).code, 64);
  ::unsetenv("PROBECOUNT_TEST_SALT");
  EXPECT_EQ(run({"--salt-env", "PROBECOUNT_TEST_SALT", "parse", "--pcap", path("cap.pcap"),
                 "--out", path("s.csv")})
                .code,
            64);
  ::setenv("PROBECOUNT_TEST_SALT", "pepper", 1);
  auto const r = run({"--salt-env", "PROBECOUNT_TEST_SALT", "parse", "--pcap",
                      path("cap.pcap"), "--sensor-id", "bus03", "--out", path("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("probe_requests=1"), std::string::npos);
  auto const text = csv::read_file(path("s.csv"));
  EXPECT_EQ(text,
            "instant,mac,rssi,sensor_id,is_local_admin\n"
            "2024-03-04T06:00:00.000Z,0d8c39a417a003137ecb781b95e658d2,-47,bus03,true\n");
  EXPECT_EQ(run({"--salt-env", "PROBECOUNT_TEST_SALT", "parse", "--pcap", path("none.pcap"),
                 "--out", path("s.csv")})
                .code,
            1);
}
