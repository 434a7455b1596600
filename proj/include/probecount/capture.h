#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probecount/error.h"
#include "probecount/time.h"

namespace probecount {

using mac_address = std::array<std::uint8_t, 6>;

/// Truncated SHA-256 of salt || MAC. The only device identity that leaves
/// the capture layer.
using device_id = std::array<std::uint8_t, 16>;

constexpr int kMinRssi = -128;
constexpr int kMaxRssi = 0;

/// RSSI recorded for captures that carry no signal information.
constexpr int kNoRssiSentinel = kMinRssi;

struct captured_frame {
  instant_us capture_instant;
  std::optional<int> rssi_dbm;
  std::vector<std::uint8_t> frame_bytes;  // 802.11 MAC frame, radiotap stripped
};

struct sighting {
  instant at;
  device_id device{};
  bool is_local_admin{false};
  int rssi_dbm{kNoRssiSentinel};
  std::string sensor_id;

  friend bool operator==(sighting const&, sighting const&) = default;
};

enum class link_type : std::uint32_t { ieee802_11 = 105, radiotap = 127 };

// ---------------------------------------------------------------------------
// pcap

/// Streaming reader for classic pcap files (both byte orders, micro- and
/// nanosecond timestamps) carrying link type 105 or 127.
///
/// The constructor validates the 24-byte global header and throws
/// parse_error (with the failing byte offset) on bad magic, short header or
/// an unsupported link type. next() throws parse_error on a truncated record;
/// all complete records before it have already been returned by then.
class pcap_reader {
public:
  explicit pcap_reader(std::span<std::uint8_t const> bytes);

  std::optional<captured_frame> next();

  link_type link() const { return link_; }
  bool nanosecond_timestamps() const { return nanos_; }

  /// Records dropped because the radiotap header was unusable or the
  /// remaining 802.11 frame was shorter than 10 bytes.
  std::size_t skipped_records() const { return skipped_; }
  std::size_t offset() const { return pos_; }

private:
  std::uint32_t u32(std::size_t at) const;

  std::span<std::uint8_t const> bytes_;
  std::size_t pos_{0};
  bool swapped_{false};
  bool nanos_{false};
  link_type link_{link_type::radiotap};
  std::size_t skipped_{0};
};

struct pcap_parse_result {
  std::vector<captured_frame> frames;
  std::optional<parse_error> error;  // set when a truncated record ended the stream
  std::size_t skipped_records{0};
};

/// Collects every frame of a pcap stream. Header errors throw; a truncated
/// trailing record is reported in `error` next to the frames before it.
pcap_parse_result parse_pcap_stream(std::span<std::uint8_t const> bytes);

/// Radiotap Antenna-Signal (dBm) of a radiotap-prefixed packet and the
/// header length to strip. nullopt when the header is malformed.
struct radiotap_info {
  std::size_t header_length;
  std::optional<int> rssi_dbm;
  bool has_fcs;
};
std::optional<radiotap_info> parse_radiotap(std::span<std::uint8_t const> packet);

/// Builds pcap byte streams; used for fixtures and synthetic captures.
class pcap_writer {
public:
  struct options {
    link_type link{link_type::radiotap};
    bool big_endian{false};
    bool nanosecond{false};
    bool with_tsft{true};          // radiotap TSFT field (forces 8-byte alignment)
    bool extended_present{false};  // chain a second (empty) present word
  };

  pcap_writer();
  explicit pcap_writer(options);

  void add(instant_us at, std::span<std::uint8_t const> frame, std::optional<int> rssi_dbm);

  std::vector<std::uint8_t> const& bytes() const { return out_; }

private:
  void put16(std::uint16_t);
  void put32(std::uint32_t);

  options opt_;
  std::vector<std::uint8_t> out_;
};

/// Minimal probe-request frame (24-byte header, broadcast SSID element).
std::vector<std::uint8_t> make_probe_request(mac_address const& source,
                                             std::uint16_t sequence = 0);

/// Minimal management/control/data frame of an arbitrary type and subtype.
std::vector<std::uint8_t> make_frame(unsigned type, unsigned subtype,
                                     mac_address const& addr2, std::size_t length = 24);

// ---------------------------------------------------------------------------
// 802.11

struct probe_record {
  mac_address source;  // addr2
  instant_us capture_instant;
  std::optional<int> rssi_dbm;
};

struct decode_tally {
  std::size_t probe_requests{0};
  std::size_t other_frames{0};
  std::size_t malformed{0};
};

/// Returns a record iff the frame is management type / probe-request subtype
/// and long enough to carry addr2.
std::optional<probe_record> decode_probe_request(captured_frame const&, decode_tally&);

// ---------------------------------------------------------------------------
// anonymization

struct anonymized_mac {
  device_id id;
  bool is_local_admin;
};

/// Throws config_error on an empty salt.
anonymized_mac anonymize_mac(mac_address const&, std::span<std::uint8_t const> salt);
anonymized_mac anonymize_mac(mac_address const&, std::string_view salt);

std::optional<mac_address> parse_mac(std::string_view);
std::string format_mac(mac_address const&);
std::string to_hex(device_id const&);
std::optional<device_id> parse_device_id(std::string_view hex32);

// ---------------------------------------------------------------------------
// sightings

struct capture_stats {
  std::size_t frames{0};
  std::size_t skipped_records{0};
  decode_tally decode;
  std::optional<std::string> truncation;
};

/// pcap bytes -> anonymized sightings for one sensor, in file order.
std::vector<sighting> sightings_from_pcap(std::span<std::uint8_t const> bytes,
                                          std::string const& sensor_id,
                                          std::string_view salt, capture_stats& stats);

struct csv_reject {
  std::size_t line;
  std::string reason;
};

struct sightings_ingest {
  std::vector<sighting> sightings;  // sorted by (sensor_id, instant)
  std::vector<csv_reject> rejects;
};

/// Sightings CSV: `instant,mac,rssi,sensor_id[,is_local_admin]`. The mac
/// column holds either raw MACs (hashed with `salt`) or 32-hex-char ids.
/// A raw MAC with no salt available is a config_error; a missing required
/// column is a parse_error; any other bad row becomes a reject.
sightings_ingest ingest_sightings_csv(std::string_view text,
                                      std::optional<std::string_view> salt);

/// Writes pre-hashed rows (with the is_local_admin column).
std::string write_sightings_csv(std::span<sighting const>);

void sort_sightings(std::vector<sighting>&);

}  // namespace probecount
