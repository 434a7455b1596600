#include <random>
#include <set>

#include "fmt/format.h"
#include "gtest/gtest.h"

#include "probecount/capture.h"

using namespace probecount;

namespace {

// Global header (LE, us), one radiotap record: flags + antenna signal -42 dBm,
// 26-byte probe request from aa:bb:cc:dd:ee:ff. Assembled byte by byte.
std::vector<std::uint8_t> const kFixture = {
    // pcap global header
    0xd4, 0xc3, 0xb2, 0xa1, 0x02, 0x00, 0x04, 0x00,  //
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  //
    0xff, 0xff, 0x00, 0x00, 0x7f, 0x00, 0x00, 0x00,  //
    // record header: ts 1700000000 s + 123456 us, 36 bytes
    0x00, 0xf1, 0x53, 0x65, 0x40, 0xe2, 0x01, 0x00,  //
    0x24, 0x00, 0x00, 0x00, 0x24, 0x00, 0x00, 0x00,  //
    // radiotap: v0, pad, len 10, present = flags | antsignal
    0x00, 0x00, 0x0a, 0x00, 0x22, 0x00, 0x00, 0x00,  //
    0x00, 0xd6,                                      //
    // probe request
    0x40, 0x00, 0x00, 0x00,                          //
    0xff, 0xff, 0xff, 0xff, 0xff, 0xff,              //
    0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff,              //
    0xff, 0xff, 0xff, 0xff, 0xff, 0xff,              //
    0x00, 0x00, 0x00, 0x00};

captured_frame frame_of(std::vector<std::uint8_t> bytes) {
  return captured_frame{instant_us{}, std::nullopt, std::move(bytes)};
}

}  // namespace

TEST(pcap, hand_built_fixture) {
  auto const r = parse_pcap_stream(kFixture);
  ASSERT_FALSE(r.error.has_value());
  ASSERT_EQ(r.frames.size(), 1U);
  auto const& f = r.frames[0];
  EXPECT_EQ(f.rssi_dbm, -42);
  EXPECT_EQ(f.capture_instant.time_since_epoch().count(), 1'700'000'000'123'456LL);
  EXPECT_EQ(f.frame_bytes.size(), 26U);

  decode_tally tally;
  auto const rec = decode_probe_request(f, tally);
  ASSERT_TRUE(rec.has_value());
  EXPECT_EQ(format_mac(rec->source), "aa:bb:cc:dd:ee:ff");
  EXPECT_EQ(tally.probe_requests, 1U);
}

TEST(pcap, header_only_is_empty) {
  std::vector<std::uint8_t> const header(kFixture.begin(), kFixture.begin() + 24);
  auto const r = parse_pcap_stream(header);
  EXPECT_TRUE(r.frames.empty());
  EXPECT_FALSE(r.error.has_value());
}

TEST(pcap, bad_magic) {
  auto bytes = kFixture;
  std::fill(bytes.begin(), bytes.begin() + 4, 0);
  try {
    parse_pcap_stream(bytes);
    FAIL() << "no error";
  } catch (parse_error const& e) {
    EXPECT_NE(std::string{e.what()}.find("bad magic"), std::string::npos);
    EXPECT_EQ(e.position(), 0);
  }
}

TEST(pcap, short_header) {
  std::vector<std::uint8_t> const bytes(kFixture.begin(), kFixture.begin() + 10);
  EXPECT_THROW(parse_pcap_stream(bytes), parse_error);
}

TEST(pcap, unknown_link_type_named) {
  auto bytes = kFixture;
  bytes[20] = 1;  // ethernet
  try {
    parse_pcap_stream(bytes);
    FAIL() << "no error";
  } catch (parse_error const& e) {
    EXPECT_NE(std::string{e.what()}.find('1'), std::string::npos);
    EXPECT_EQ(e.position(), 20);
  }
}

TEST(pcap, truncated_record_after_complete_frames) {
  auto bytes = kFixture;
  bytes.insert(bytes.end(), kFixture.begin() + 24, kFixture.end() - 5);
  auto const r = parse_pcap_stream(bytes);
  EXPECT_EQ(r.frames.size(), 1U);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(r.error->position(), static_cast<long long>(kFixture.size()));
}

TEST(pcap, writer_reproduces_fixture_payload) {
  pcap_writer::options opt;
  opt.with_tsft = false;
  pcap_writer w{opt};
  auto const mac = *parse_mac("aa:bb:cc:dd:ee:ff");
  auto const frame = make_probe_request(mac);
  w.add(instant_us{microseconds{1'700'000'000'123'456LL}}, frame, -42);
  auto const r = parse_pcap_stream(w.bytes());
  ASSERT_EQ(r.frames.size(), 1U);
  EXPECT_EQ(r.frames[0].frame_bytes, frame);
  EXPECT_EQ(r.frames[0].rssi_dbm, -42);
}

TEST(pcap, round_trip_all_variants) {
  std::mt19937_64 rng{7};
  for (auto const link : {link_type::radiotap, link_type::ieee802_11}) {
    for (auto const big : {false, true}) {
      for (auto const nanos : {false, true}) {
        for (auto const tsft : {false, true}) {
          for (auto const ext : {false, true}) {
            pcap_writer w{{link, big, nanos, tsft, ext}};
            std::vector<probe_record> expect;
            for (auto k = 0; k != 50; ++k) {
              mac_address mac;
              for (auto& b : mac) {
                b = static_cast<std::uint8_t>(rng());
              }
              auto const at =
                  instant_us{microseconds{1'600'000'000'000'000LL +
                                          static_cast<long long>(rng() % 1'000'000'000'000ULL)}};
              auto const rssi = -static_cast<int>(rng() % 129);
              w.add(at, make_probe_request(mac, static_cast<std::uint16_t>(k)), rssi);
              expect.push_back({mac, at,
                                link == link_type::radiotap ? std::optional<int>{rssi}
                                                            : std::nullopt});
            }
            auto const r = parse_pcap_stream(w.bytes());
            ASSERT_FALSE(r.error.has_value());
            ASSERT_EQ(r.frames.size(), expect.size());
            decode_tally tally;
            for (auto k = std::size_t{0}; k != expect.size(); ++k) {
              auto const rec = decode_probe_request(r.frames[k], tally);
              ASSERT_TRUE(rec.has_value());
              EXPECT_EQ(rec->source, expect[k].source);
              EXPECT_EQ(rec->capture_instant, expect[k].capture_instant);
              EXPECT_EQ(rec->rssi_dbm, expect[k].rssi_dbm);
            }
          }
        }
      }
    }
  }
}

TEST(pcap, radiotap_fcs_is_stripped) {
  auto bytes = kFixture;
  bytes[48] = 0x10;  // radiotap flags: frame carries an FCS
  bytes.insert(bytes.end(), {0xde, 0xad, 0xbe, 0xef});
  bytes[32] = 40;  // incl_len
  bytes[36] = 40;  // orig_len
  auto const r = parse_pcap_stream(bytes);
  ASSERT_EQ(r.frames.size(), 1U);
  EXPECT_EQ(r.frames[0].frame_bytes.size(), 26U);
}

TEST(decode, all_type_subtype_combinations) {
  auto const mac = *parse_mac("02:00:00:00:00:01");
  for (auto type = 0U; type != 4; ++type) {
    for (auto subtype = 0U; subtype != 16; ++subtype) {
      decode_tally tally;
      auto const rec = decode_probe_request(frame_of(make_frame(type, subtype, mac)), tally);
      if (type == 0 && subtype == 4) {
        ASSERT_TRUE(rec.has_value());
        EXPECT_EQ(rec->source, mac);
      } else {
        EXPECT_FALSE(rec.has_value()) << type << "/" << subtype;
        EXPECT_EQ(tally.other_frames, 1U);
      }
    }
  }
}

TEST(decode, beacon_absent) {
  decode_tally tally;
  EXPECT_FALSE(decode_probe_request(frame_of(make_frame(0, 8, {})), tally).has_value());
}

TEST(decode, truncated_probe_request_is_malformed) {
  decode_tally tally;
  auto const f = make_frame(0, 4, *parse_mac("aa:bb:cc:dd:ee:ff"), 12);
  ASSERT_EQ(f.size(), 12U);
  EXPECT_FALSE(decode_probe_request(frame_of(f), tally).has_value());
  EXPECT_EQ(tally.malformed, 1U);
  EXPECT_EQ(tally.probe_requests, 0U);
}

TEST(anonymize, matches_reference_digest) {
  // sha256("pepper" || aabbccddeeff), computed offline
  auto const a = anonymize_mac(*parse_mac("aa:bb:cc:dd:ee:ff"), "pepper");
  EXPECT_EQ(to_hex(a.id), "0d8c39a417a003137ecb781b95e658d2");
  auto const b = anonymize_mac(*parse_mac("00:11:22:33:44:55"), "probecount-simulator");
  EXPECT_EQ(to_hex(b.id), "ae6f0d909ad3edbf2217cde128f36081");
}

TEST(anonymize, local_admin_bit) {
  EXPECT_TRUE(anonymize_mac(*parse_mac("da:a1:19:00:00:01"), "s").is_local_admin);
  EXPECT_FALSE(anonymize_mac(*parse_mac("00:11:22:33:44:55"), "s").is_local_admin);
  for (auto first = 0; first != 256; ++first) {
    mac_address m{static_cast<std::uint8_t>(first)};
    EXPECT_EQ(anonymize_mac(m, "s").is_local_admin, (first & 0x02) != 0);
  }
}

TEST(anonymize, empty_salt_refused) {
  EXPECT_THROW(anonymize_mac(mac_address{}, ""), config_error);
}

TEST(anonymize, no_collisions_over_random_macs_and_two_salts) {
  std::mt19937_64 rng{99};
  std::set<mac_address> macs;
  while (macs.size() != 100'000) {
    mac_address m;
    for (auto& b : m) {
      b = static_cast<std::uint8_t>(rng());
    }
    macs.insert(m);
  }
  std::set<device_id> ids;
  for (auto const& m : macs) {
    auto const x = anonymize_mac(m, "salt-one");
    auto const y = anonymize_mac(m, "salt-two");
    EXPECT_EQ(x.id, anonymize_mac(m, "salt-one").id);
    EXPECT_NE(x.id, y.id);
    ids.insert(x.id);
    ids.insert(y.id);
  }
  EXPECT_EQ(ids.size(), 200'000U);
}

TEST(sightings_csv, three_rows_sorted) {
  auto const r = ingest_sightings_csv(
      "instant,mac,rssi,sensor_id\n"
      "2024-03-04T06:00:03.000Z,aa:bb:cc:dd:ee:01,-60,bus02\n"
      "2024-03-04T06:00:02.000Z,aa:bb:cc:dd:ee:02,-61,bus01\n"
      "1709532001000,aa:bb:cc:dd:ee:03,-62,bus01\n",
      "salt");
  ASSERT_EQ(r.sightings.size(), 3U);
  EXPECT_TRUE(r.rejects.empty());
  EXPECT_EQ(r.sightings[0].sensor_id, "bus01");
  EXPECT_EQ(r.sightings[0].rssi_dbm, -62);
  EXPECT_EQ(r.sightings[1].rssi_dbm, -61);
  EXPECT_EQ(r.sightings[2].sensor_id, "bus02");
}

TEST(sightings_csv, out_of_range_rssi_rejected) {
  auto const r = ingest_sightings_csv(
      "instant,mac,rssi,sensor_id\n"
      "2024-03-04T06:00:03.000Z,aa:bb:cc:dd:ee:01,+10,bus02\n"
      "2024-03-04T06:00:03.000Z,aa:bb:cc:dd:ee:01,-129,bus02\n"
      "garbage,aa:bb:cc:dd:ee:01,-50,bus02\n"
      "2024-03-04T06:00:03.000Z,aa:bb:cc:dd:ee:01,-50,bus02\n",
      "salt");
  EXPECT_EQ(r.sightings.size(), 1U);
  ASSERT_EQ(r.rejects.size(), 3U);
  EXPECT_EQ(r.rejects[0].line, 2U);
  EXPECT_EQ(r.rejects[2].line, 4U);
}

TEST(sightings_csv, missing_column_is_fatal) {
  EXPECT_THROW(ingest_sightings_csv("instant,mac,sensor_id\n", "salt"), parse_error);
}

TEST(sightings_csv, raw_mac_without_salt_refused) {
  EXPECT_THROW(ingest_sightings_csv("instant,mac,rssi,sensor_id\n"
                                    "1,aa:bb:cc:dd:ee:01,-50,b\n",
                                    std::nullopt),
               config_error);
}

TEST(sightings_csv, hashed_round_trip_preserves_ids) {
  std::mt19937_64 rng{3};
  std::string raw = "instant,mac,rssi,sensor_id\n";
  for (auto k = 0; k != 200; ++k) {
    mac_address m;
    for (auto& b : m) {
      b = static_cast<std::uint8_t>(rng());
    }
    raw += fmt::format("{},{},{},bus{:02}\n", 1'709'532'000'000LL + k * 997, format_mac(m),
                       -static_cast<int>(rng() % 100), k % 3);
  }
  auto const first = ingest_sightings_csv(raw, "s3cret");
  ASSERT_EQ(first.sightings.size(), 200U);
  auto const dumped = write_sightings_csv(first.sightings);
  auto const second = ingest_sightings_csv(dumped, std::nullopt);
  EXPECT_EQ(first.sightings, second.sightings);

  std::multiset<device_id> a;
  std::multiset<device_id> b;
  for (auto const& s : first.sightings) {
    a.insert(s.device);
  }
  for (auto const& s : second.sightings) {
    b.insert(s.device);
  }
  EXPECT_EQ(a, b);
}

TEST(sightings, pcap_output_carries_no_raw_mac) {
  auto const mac = *parse_mac("aa:bb:cc:dd:ee:ff");
  pcap_writer w;
  w.add(instant_us{microseconds{1'700'000'000'000'000LL}}, make_probe_request(mac), -50);
  capture_stats stats;
  auto const s = sightings_from_pcap(w.bytes(), "bus01", "pepper", stats);
  ASSERT_EQ(s.size(), 1U);
  auto const csv = write_sightings_csv(s);
  EXPECT_EQ(csv.find("aa:bb"), std::string::npos);
  EXPECT_EQ(csv.find("aabbccddeeff"), std::string::npos);
  EXPECT_NE(csv.find("0d8c39a417a003137ecb781b95e658d2"), std::string::npos);
}
