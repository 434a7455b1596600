#include "probecount/capture.h"

#include <algorithm>
#include <charconv>
#include <memory>

#include "fmt/format.h"
#include "openssl/evp.h"

#include "probecount/csv.h"

namespace probecount {

namespace {

constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::size_t kMinFrameLength = 10;
constexpr std::size_t kAddr2End = 16;

constexpr std::uint32_t kRadiotapTsft = 0;
constexpr std::uint32_t kRadiotapFlags = 1;
constexpr std::uint32_t kRadiotapAntSignal = 5;
constexpr std::uint32_t kRadiotapExt = 31;
constexpr std::uint8_t kRadiotapFlagFcs = 0x10;

std::uint32_t bswap32(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::uint32_t le32(std::span<std::uint8_t const> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<std::uint8_t const> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

// (size, alignment) of radiotap fields 0..5 in the default namespace.
struct field_layout {
  std::size_t size;
  std::size_t align;
};
constexpr std::array<field_layout, 6> kLeadingFields{{
    {8, 8},  // TSFT
    {1, 1},  // Flags
    {1, 1},  // Rate
    {4, 2},  // Channel
    {2, 1},  // FHSS
    {1, 1},  // dBm Antenna Signal
}};

std::size_t align_up(std::size_t v, std::size_t a) { return (v + a - 1) / a * a; }

}  // namespace

// ---------------------------------------------------------------------------

std::optional<radiotap_info> parse_radiotap(std::span<std::uint8_t const> p) {
  if (p.size() < 8 || p[0] != 0) {
    return std::nullopt;
  }
  std::size_t const len = le16(p, 2);
  if (len < 8 || len > p.size()) {
    return std::nullopt;
  }

  auto const first_present = le32(p, 4);
  auto word_end = std::size_t{8};
  for (auto present = first_present; (present >> kRadiotapExt) & 1u;) {
    if (word_end + 4 > len) {
      return std::nullopt;
    }
    present = le32(p, word_end);
    word_end += 4;
  }

  radiotap_info info{len, std::nullopt, false};
  auto off = word_end;
  for (auto bit = std::uint32_t{0}; bit <= kRadiotapAntSignal; ++bit) {
    if (!((first_present >> bit) & 1u)) {
      continue;
    }
    auto const [size, align] = kLeadingFields[bit];
    off = align_up(off, align);
    if (off + size > len) {
      return std::nullopt;
    }
    if (bit == kRadiotapFlags) {
      info.has_fcs = (p[off] & kRadiotapFlagFcs) != 0;
    } else if (bit == kRadiotapAntSignal) {
      auto const dbm = static_cast<int>(static_cast<std::int8_t>(p[off]));
      if (dbm <= kMaxRssi) {
        info.rssi_dbm = dbm;
      }
    }
    off += size;
  }
  return info;
}

// ---------------------------------------------------------------------------

pcap_reader::pcap_reader(std::span<std::uint8_t const> bytes) : bytes_{bytes} {
  if (bytes_.size() < 4) {
    throw parse_error(
        fmt::format("pcap: bad magic: stream is {} bytes, header truncated at offset {}",
                    bytes_.size(), bytes_.size()),
        static_cast<long long>(bytes_.size()));
  }
  auto const magic = le32(bytes_, 0);
  if (magic == kMagicMicros || magic == kMagicNanos) {
    swapped_ = false;
  } else if (bswap32(magic) == kMagicMicros || bswap32(magic) == kMagicNanos) {
    swapped_ = true;
  } else {
    throw parse_error(fmt::format("pcap: bad magic 0x{:08x} at offset 0", bswap32(magic)), 0);
  }
  nanos_ = (swapped_ ? bswap32(magic) : magic) == kMagicNanos;

  if (bytes_.size() < kGlobalHeaderSize) {
    throw parse_error(fmt::format("pcap: global header truncated at offset {}", bytes_.size()),
                      static_cast<long long>(bytes_.size()));
  }
  auto const network = u32(20);
  if (network == static_cast<std::uint32_t>(link_type::radiotap)) {
    link_ = link_type::radiotap;
  } else if (network == static_cast<std::uint32_t>(link_type::ieee802_11)) {
    link_ = link_type::ieee802_11;
  } else {
    throw parse_error(fmt::format("pcap: unsupported link type {} at offset 20", network), 20);
  }
  pos_ = kGlobalHeaderSize;
}

std::uint32_t pcap_reader::u32(std::size_t at) const {
  auto const v = le32(bytes_, at);
  return swapped_ ? bswap32(v) : v;
}

std::optional<captured_frame> pcap_reader::next() {
  while (pos_ < bytes_.size()) {
    auto const record_start = pos_;
    if (bytes_.size() - pos_ < kRecordHeaderSize) {
      pos_ = bytes_.size();
      throw parse_error(
          fmt::format("pcap: truncated record header at offset {}", record_start),
          static_cast<long long>(record_start));
    }
    auto const ts_sec = u32(pos_);
    auto const ts_frac = u32(pos_ + 4);
    auto const incl_len = u32(pos_ + 8);
    if (incl_len > bytes_.size() - pos_ - kRecordHeaderSize) {
      pos_ = bytes_.size();
      throw parse_error(fmt::format("pcap: truncated record at offset {} ({} bytes declared)",
                                    record_start, incl_len),
                        static_cast<long long>(record_start));
    }
    pos_ += kRecordHeaderSize;
    auto packet = bytes_.subspan(pos_, incl_len);
    pos_ += incl_len;

    std::optional<int> rssi;
    if (link_ == link_type::radiotap) {
      auto const rt = parse_radiotap(packet);
      if (!rt.has_value()) {
        ++skipped_;
        continue;
      }
      packet = packet.subspan(rt->header_length);
      if (rt->has_fcs && packet.size() >= 4) {
        packet = packet.first(packet.size() - 4);
      }
      rssi = rt->rssi_dbm;
    }
    if (packet.size() < kMinFrameLength) {
      ++skipped_;
      continue;
    }

    auto const frac = nanos_ ? microseconds{ts_frac / 1000} : microseconds{ts_frac};
    return captured_frame{
        instant_us{std::chrono::seconds{ts_sec}} + frac, rssi,
        std::vector<std::uint8_t>(packet.begin(), packet.end())};
  }
  return std::nullopt;
}

pcap_parse_result parse_pcap_stream(std::span<std::uint8_t const> bytes) {
  pcap_reader reader{bytes};
  pcap_parse_result result;
  try {
    while (auto f = reader.next()) {
      result.frames.push_back(std::move(*f));
    }
  } catch (parse_error const& e) {
    result.error = e;
  }
  result.skipped_records = reader.skipped_records();
  return result;
}

// ---------------------------------------------------------------------------

pcap_writer::pcap_writer() : pcap_writer(options{}) {}

pcap_writer::pcap_writer(options opt) : opt_{opt} {
  auto const magic = opt_.nanosecond ? kMagicNanos : kMagicMicros;
  put32(magic);
  put16(2);
  put16(4);
  put32(0);  // thiszone
  put32(0);  // sigfigs
  put32(65535);
  put32(static_cast<std::uint32_t>(opt_.link));
}

void pcap_writer::put16(std::uint16_t v) {
  if (opt_.big_endian) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  } else {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
}

void pcap_writer::put32(std::uint32_t v) {
  if (opt_.big_endian) {
    put16(static_cast<std::uint16_t>(v >> 16));
    put16(static_cast<std::uint16_t>(v));
  } else {
    put16(static_cast<std::uint16_t>(v));
    put16(static_cast<std::uint16_t>(v >> 16));
  }
}

void pcap_writer::add(instant_us at, std::span<std::uint8_t const> frame,
                      std::optional<int> rssi_dbm) {
  std::vector<std::uint8_t> rt;
  if (opt_.link == link_type::radiotap) {
    // Radiotap is little-endian regardless of the pcap byte order.
    std::uint32_t present = 0;
    if (opt_.with_tsft) {
      present |= 1u << kRadiotapTsft;
    }
    present |= 1u << kRadiotapFlags;
    if (rssi_dbm.has_value()) {
      present |= 1u << kRadiotapAntSignal;
    }
    auto const put_le32 = [&](std::uint32_t v) {
      for (auto k = 0; k != 4; ++k) {
        rt.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
      }
    };
    rt = {0, 0, 0, 0};
    if (opt_.extended_present) {
      put_le32(present | (1u << kRadiotapExt));
      put_le32(0);
    } else {
      put_le32(present);
    }
    if (opt_.with_tsft) {
      rt.resize(align_up(rt.size(), 8), 0);
      auto const tsf = static_cast<std::uint64_t>(at.time_since_epoch().count());
      for (auto k = 0; k != 8; ++k) {
        rt.push_back(static_cast<std::uint8_t>(tsf >> (8 * k)));
      }
    }
    rt.push_back(0);  // flags
    if (rssi_dbm.has_value()) {
      rt.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(*rssi_dbm)));
    }
    rt[2] = static_cast<std::uint8_t>(rt.size());
    rt[3] = static_cast<std::uint8_t>(rt.size() >> 8);
  }

  auto const us = at.time_since_epoch().count();
  auto const sec = us / 1'000'000;
  auto const frac = us % 1'000'000;
  auto const len = static_cast<std::uint32_t>(rt.size() + frame.size());
  put32(static_cast<std::uint32_t>(sec));
  put32(static_cast<std::uint32_t>(opt_.nanosecond ? frac * 1000 : frac));
  put32(len);
  put32(len);
  out_.insert(out_.end(), rt.begin(), rt.end());
  out_.insert(out_.end(), frame.begin(), frame.end());
}

std::vector<std::uint8_t> make_frame(unsigned type, unsigned subtype,
                                     mac_address const& addr2, std::size_t length) {
  std::vector<std::uint8_t> f(std::max<std::size_t>(length, 2), 0);
  f[0] = static_cast<std::uint8_t>(((subtype & 0xfu) << 4) | ((type & 0x3u) << 2));
  for (auto k = std::size_t{0}; k != 6; ++k) {
    if (4 + k < f.size()) {
      f[4 + k] = 0xff;  // addr1: broadcast
    }
    if (10 + k < f.size()) {
      f[10 + k] = addr2[k];
    }
    if (16 + k < f.size()) {
      f[16 + k] = 0xff;  // addr3: wildcard BSSID
    }
  }
  f.resize(length);
  return f;
}

std::vector<std::uint8_t> make_probe_request(mac_address const& source,
                                             std::uint16_t sequence) {
  auto f = make_frame(0, 4, source, 24);
  f[22] = static_cast<std::uint8_t>(sequence << 4);
  f[23] = static_cast<std::uint8_t>(sequence >> 4);
  f.push_back(0);  // SSID element, wildcard
  f.push_back(0);
  return f;
}

// ---------------------------------------------------------------------------

std::optional<probe_record> decode_probe_request(captured_frame const& frame,
                                                 decode_tally& tally) {
  auto const& b = frame.frame_bytes;
  if (b.empty()) {
    ++tally.malformed;
    return std::nullopt;
  }
  auto const type = (b[0] >> 2) & 0x3u;
  auto const subtype = (b[0] >> 4) & 0xfu;
  if (type != 0 || subtype != 4) {
    ++tally.other_frames;
    return std::nullopt;
  }
  if (b.size() < kAddr2End) {
    ++tally.malformed;
    return std::nullopt;
  }
  ++tally.probe_requests;
  probe_record r{{}, frame.capture_instant, frame.rssi_dbm};
  std::copy(b.begin() + 10, b.begin() + 16, r.source.begin());
  return r;
}

// ---------------------------------------------------------------------------

anonymized_mac anonymize_mac(mac_address const& mac, std::span<std::uint8_t const> salt) {
  if (salt.empty()) {
    throw config_error("refusing to hash MAC addresses with an empty salt");
  }
  std::array<std::uint8_t, EVP_MAX_MD_SIZE> digest{};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free};
  unsigned digest_len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), salt.data(), salt.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), mac.data(), mac.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &digest_len) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }

  anonymized_mac out{{}, (mac[0] & 0x02u) != 0};
  std::copy_n(digest.begin(), out.id.size(), out.id.begin());
  return out;
}

anonymized_mac anonymize_mac(mac_address const& mac, std::string_view salt) {
  return anonymize_mac(
      mac, std::span{reinterpret_cast<std::uint8_t const*>(salt.data()), salt.size()});
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') {
    return c - '0';
  }
  if (c >= 'a' && c <= 'f') {
    return c - 'a' + 10;
  }
  if (c >= 'A' && c <= 'F') {
    return c - 'A' + 10;
  }
  return -1;
}

}  // namespace

std::optional<mac_address> parse_mac(std::string_view s) {
  if (s.size() != 17) {
    return std::nullopt;
  }
  mac_address m{};
  for (auto k = std::size_t{0}; k != 6; ++k) {
    auto const hi = hex_value(s[3 * k]);
    auto const lo = hex_value(s[3 * k + 1]);
    if (hi < 0 || lo < 0) {
      return std::nullopt;
    }
    if (k != 5 && s[3 * k + 2] != ':' && s[3 * k + 2] != '-') {
      return std::nullopt;
    }
    m[k] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return m;
}

std::string format_mac(mac_address const& m) {
  return fmt::format("{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", m[0], m[1], m[2], m[3],
                     m[4], m[5]);
}

std::string to_hex(device_id const& id) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (auto const b : id) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

std::optional<device_id> parse_device_id(std::string_view s) {
  if (s.size() != 32) {
    return std::nullopt;
  }
  device_id id{};
  for (auto k = std::size_t{0}; k != 16; ++k) {
    auto const hi = hex_value(s[2 * k]);
    auto const lo = hex_value(s[2 * k + 1]);
    if (hi < 0 || lo < 0) {
      return std::nullopt;
    }
    id[k] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return id;
}

// ---------------------------------------------------------------------------

std::vector<sighting> sightings_from_pcap(std::span<std::uint8_t const> bytes,
                                          std::string const& sensor_id,
                                          std::string_view salt, capture_stats& stats) {
  if (salt.empty()) {
    throw config_error("refusing to hash MAC addresses with an empty salt");
  }
  pcap_reader reader{bytes};
  std::vector<sighting> out;
  try {
    while (auto const frame = reader.next()) {
      ++stats.frames;
      auto const rec = decode_probe_request(*frame, stats.decode);
      if (!rec.has_value()) {
        continue;
      }
      auto const anon = anonymize_mac(rec->source, salt);
      out.push_back(sighting{std::chrono::floor<milliseconds>(rec->capture_instant), anon.id,
                             anon.is_local_admin, rec->rssi_dbm.value_or(kNoRssiSentinel),
                             sensor_id});
    }
  } catch (parse_error const& e) {
    stats.truncation = e.what();
  }
  stats.skipped_records = reader.skipped_records();
  return out;
}

void sort_sightings(std::vector<sighting>& v) {
  std::stable_sort(v.begin(), v.end(), [](sighting const& a, sighting const& b) {
    if (a.sensor_id != b.sensor_id) {
      return a.sensor_id < b.sensor_id;
    }
    return a.at < b.at;
  });
}

namespace {

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") {
    return true;
  }
  if (s == "0" || s == "false" || s == "FALSE" || s == "False" || s.empty()) {
    return false;
  }
  return std::nullopt;
}

}  // namespace

sightings_ingest ingest_sightings_csv(std::string_view text,
                                      std::optional<std::string_view> salt) {
  auto const t = csv::parse(text);
  auto const cols = t.require({"instant", "mac", "rssi", "sensor_id"});
  auto const c_instant = cols[0];
  auto const c_mac = cols[1];
  auto const c_rssi = cols[2];
  auto const c_sensor = cols[3];
  auto const c_local = t.column("is_local_admin");

  sightings_ingest result;
  result.sightings.reserve(t.rows.size());
  for (auto const& r : t.rows) {
    auto const reject = [&](std::string reason) {
      result.rejects.push_back(csv_reject{r.line, std::move(reason)});
    };
    if (r.fields.size() != t.header.size()) {
      reject(fmt::format("expected {} fields, got {}", t.header.size(), r.fields.size()));
      continue;
    }

    sighting s;
    try {
      s.at = parse_instant(r.fields[c_instant]);
    } catch (parse_error const& e) {
      reject(e.what());
      continue;
    }

    auto const& rssi_text = r.fields[c_rssi];
    int rssi = 0;
    auto const [ptr, ec] =
        std::from_chars(rssi_text.data(), rssi_text.data() + rssi_text.size(), rssi);
    if (rssi_text.empty() || ec != std::errc{} || ptr != rssi_text.data() + rssi_text.size()) {
      reject(fmt::format("unparsable rssi '{}'", rssi_text));
      continue;
    }
    if (rssi < kMinRssi || rssi > kMaxRssi) {
      reject(fmt::format("rssi {} outside [{}, {}]", rssi, kMinRssi, kMaxRssi));
      continue;
    }
    s.rssi_dbm = rssi;

    s.sensor_id = r.fields[c_sensor];
    if (s.sensor_id.empty()) {
      reject("empty sensor_id");
      continue;
    }

    auto const& mac_text = r.fields[c_mac];
    if (auto const mac = parse_mac(mac_text); mac.has_value()) {
      if (!salt.has_value() || salt->empty()) {
        throw config_error(fmt::format(
            "line {}: raw MAC address found but no salt configured", r.line));
      }
      auto const anon = anonymize_mac(*mac, *salt);
      s.device = anon.id;
      s.is_local_admin = anon.is_local_admin;
    } else if (auto const id = parse_device_id(mac_text); id.has_value()) {
      s.device = *id;
      if (c_local.has_value()) {
        auto const b = parse_bool(r.fields[*c_local]);
        if (!b.has_value()) {
          reject(fmt::format("bad is_local_admin '{}'", r.fields[*c_local]));
          continue;
        }
        s.is_local_admin = *b;
      }
    } else {
      reject(fmt::format("mac column is neither a MAC nor a 32-hex id"));
      continue;
    }
    result.sightings.push_back(std::move(s));
  }
  sort_sightings(result.sightings);
  return result;
}

std::string write_sightings_csv(std::span<sighting const> sightings) {
  std::string out = "instant,mac,rssi,sensor_id,is_local_admin\n";
  out.reserve(out.size() + sightings.size() * 80);
  for (auto const& s : sightings) {
    out += fmt::format("{},{},{},{},{}\n", format_instant(s.at), to_hex(s.device), s.rssi_dbm,
                       csv::escape(s.sensor_id), s.is_local_admin ? "true" : "false");
  }
  return out;
}

}  // namespace probecount
