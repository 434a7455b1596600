#include "probecount/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "fmt/format.h"
#include "json.hpp"

#include "probecount/calibration.h"
#include "probecount/capture.h"
#include "probecount/csv.h"
#include "probecount/error.h"
#include "probecount/load.h"
#include "probecount/report.h"
#include "probecount/simulator.h"
#include "probecount/transit.h"
#include "probecount/trip_mapper.h"

namespace fs = std::filesystem;

namespace probecount {

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto const nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    auto const trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
      }
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
      }
      return s;
    };
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';' || line.front() == '[') {
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw usage_error(fmt::format("config line {}: expected key = value", line_no));
    }
    auto const key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (auto const hash = value.find(" #"); hash != std::string_view::npos) {
      value = trim(value.substr(0, hash));
    }
    if (key.empty()) {
      throw usage_error(fmt::format("config line {}: empty key", line_no));
    }
    kv[std::string{key}] = std::string{value};
  }
  return kv;
}

namespace {

struct global_options {
  std::string config;
  std::string salt_env;
  int min_rssi{-55};
  bool include_random{false};
  bool allow_noncanonical{false};
  std::string w_indexing{"departing"};
  std::size_t min_trips{kDefaultMinTrips};
  bool no_timestamps{false};
  double boundary_margin_seconds{60.0};
  double ticket_grace_seconds{120.0};
};

struct input_options {
  std::string schedule_dir;
  std::string assignments;
  std::string tickets;
  std::string sightings;
  std::string pcap;
  std::string sensor_id{"sensor"};
  std::string from;
  std::string to;
  std::string out{"out"};
};

struct loaded_inputs {
  schedule sched;
  std::vector<stop_timeline const*> trips;  // in date range
  std::map<std::string, std::vector<sighting>> sightings_by_trip;
  std::optional<trip_tickets> tickets;
  std::optional<std::pair<instant, instant>> range;
  std::size_t sightings{0};
  std::size_t unresolved_sightings{0};
  std::size_t rejected_rows{0};
  std::size_t rejected_tickets{0};
};

std::optional<std::string> salt_from_env(std::string const& var) {
  if (var.empty()) {
    return std::nullopt;
  }
  auto const* v = std::getenv(var.c_str());
  if (v == nullptr || *v == '\0') {
    return std::nullopt;
  }
  return std::string{v};
}

filter_params params_from(global_options const& g) {
  filter_params p{g.min_rssi, g.include_random};
  if (g.min_rssi < kMinRssi || g.min_rssi > kMaxRssi) {
    throw usage_error(fmt::format("--min-rssi {} outside [-128, 0]", g.min_rssi));
  }
  if (!p.canonical() && !g.allow_noncanonical) {
    throw usage_error(fmt::format(
        "--min-rssi {} is not one of the canonical thresholds; pass --allow-noncanonical-rssi",
        g.min_rssi));
  }
  return p;
}

pipeline_options pipeline_from(global_options const& g) {
  auto const wi = parse_w_indexing(g.w_indexing);
  if (!wi.has_value()) {
    throw usage_error(
        fmt::format("--w-indexing must be departing or arriving, got '{}'", g.w_indexing));
  }
  if (g.boundary_margin_seconds < 0.0) {
    throw usage_error("--boundary-margin-seconds must be >= 0");
  }
  return pipeline_options{milliseconds{std::llround(g.boundary_margin_seconds * 1000.0)}, *wi};
}

std::string read_required(fs::path const& p, std::string_view what) {
  if (!fs::exists(p)) {
    throw io_error(fmt::format("{} {} does not exist", what, p.string()));
  }
  return csv::read_file(p);
}

loaded_inputs load_inputs(input_options const& in, global_options const& g, std::ostream& err) {
  if (in.schedule_dir.empty()) {
    throw usage_error("--schedule-dir is required");
  }
  fs::path const dir{in.schedule_dir};
  if (!fs::is_directory(dir)) {
    throw io_error(fmt::format("schedule directory {} does not exist", dir.string()));
  }

  loaded_inputs li;
  li.sched = load_schedule_dir(dir);

  if (!in.from.empty() || !in.to.empty()) {
    if (in.from.empty() || in.to.empty()) {
      throw usage_error("--from and --to must be given together");
    }
    auto const from = parse_date(in.from);
    auto const to = parse_date(in.to);
    if (to < from) {
      throw usage_error("--from must not be after --to");
    }
    li.range = std::pair{from, to + std::chrono::days{1}};
  }
  for (auto const& tl : li.sched.timelines()) {
    if (!li.range.has_value() ||
        (tl.first_arrival() >= li.range->first && tl.first_arrival() < li.range->second)) {
      li.trips.push_back(&tl);
    }
  }

  auto const assignments_path =
      in.assignments.empty() ? dir / "assignments.csv" : fs::path{in.assignments};
  auto const index = load_assignments(read_required(assignments_path, "assignments file"), li.sched);

  auto const salt = salt_from_env(g.salt_env);
  std::vector<sighting> all;
  if (!in.pcap.empty()) {
    if (!salt.has_value()) {
      throw config_error("reading a pcap needs a salt: pass --salt-env naming a set variable");
    }
    auto const text = read_required(in.pcap, "pcap file");
    capture_stats stats;
    all = sightings_from_pcap(
        std::span{reinterpret_cast<std::uint8_t const*>(text.data()), text.size()},
        in.sensor_id, *salt, stats);
    if (stats.truncation.has_value()) {
      err << "warning: " << *stats.truncation << "\n";
    }
  } else {
    auto const path = in.sightings.empty() ? dir / "sightings.csv" : fs::path{in.sightings};
    auto ingest = ingest_sightings_csv(read_required(path, "sightings file"),
                                       salt.has_value() ? std::optional<std::string_view>{*salt}
                                                        : std::nullopt);
    li.rejected_rows = ingest.rejects.size();
    for (auto const& r : ingest.rejects) {
      err << fmt::format("warning: {} line {}: {}\n", path.string(), r.line, r.reason);
    }
    all = std::move(ingest.sightings);
  }
  li.sightings = all.size();
  auto grouped = group_by_trip(all, index);
  li.sightings_by_trip = std::move(grouped.by_trip);
  li.unresolved_sightings = grouped.unresolved;

  auto const tickets_path = in.tickets.empty() ? dir / "tickets.csv" : fs::path{in.tickets};
  if (!in.tickets.empty() || fs::exists(tickets_path)) {
    auto const tl = load_tickets(read_required(tickets_path, "tickets file"), li.sched);
    li.rejected_tickets = tl.rejected;
    li.tickets = assign_validations(
        li.sched, tl.validations, milliseconds{std::llround(g.ticket_grace_seconds * 1000.0)});
  }
  return li;
}

std::optional<count_vector> trip_b(loaded_inputs const& li, stop_timeline const& tl,
                                   global_options const& g) {
  if (!li.tickets.has_value()) {
    return std::nullopt;
  }
  auto const it = li.tickets->by_trip.find(tl.trip_id);
  if (it == end(li.tickets->by_trip)) {
    return count_vector(tl.size(), 0);
  }
  return ticket_counts(tl, it->second, milliseconds{std::llround(g.ticket_grace_seconds * 1000.0)}).b;
}

std::string safe_name(std::string_view s) {
  std::string out;
  for (auto const c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'
                      ? c
                      : '_');
  }
  return out;
}

void write_manifest(fs::path const& out_dir, nlohmann::ordered_json manifest,
                    global_options const& g) {
  if (!g.no_timestamps) {
    manifest["generated_at"] =
        format_instant(std::chrono::floor<milliseconds>(std::chrono::system_clock::now()));
  }
  csv::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (auto const c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    out.push_back(std::move(cur));
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_parse(input_options const& in, global_options const& g, std::string const& out_file,
              std::ostream& out, std::ostream& err) {
  if (in.pcap.empty()) {
    throw usage_error("parse: --pcap is required");
  }
  if (g.salt_env.empty()) {
    throw usage_error("parse: --salt-env is required (the salt is never taken from argv)");
  }
  auto const salt = salt_from_env(g.salt_env);
  if (!salt.has_value()) {
    throw config_error(fmt::format("environment variable {} is unset or empty", g.salt_env));
  }
  auto const bytes = read_required(in.pcap, "pcap file");
  capture_stats stats;
  auto sightings = sightings_from_pcap(
      std::span{reinterpret_cast<std::uint8_t const*>(bytes.data()), bytes.size()}, in.sensor_id,
      *salt, stats);
  sort_sightings(sightings);
  csv::write_file(out_file, write_sightings_csv(sightings));
  if (stats.truncation.has_value()) {
    err << "warning: " << *stats.truncation << "\n";
  }
  out << fmt::format(
      "frames={} probe_requests={} other_frames={} malformed={} skipped_records={} -> {}\n",
      stats.frames, stats.decode.probe_requests, stats.decode.other_frames,
      stats.decode.malformed, stats.skipped_records, out_file);
  return 0;
}

int cmd_estimate(input_options const& in, global_options const& g,
                 std::vector<std::string> const& plot_trips, std::ostream& out,
                 std::ostream& err) {
  auto const params = params_from(g);
  auto const popt = pipeline_from(g);
  auto const li = load_inputs(in, g, err);
  if (li.trips.empty()) {
    err << "error: no trips resolved (schedule empty or outside --from/--to)\n";
    return static_cast<int>(exit_code::empty_result);
  }

  fs::path const out_dir{in.out};
  std::set<std::string> const plot_set(begin(plot_trips), end(plot_trips));
  auto const plot_all = plot_set.contains("all");

  // (route, direction) -> trip matrices
  std::map<std::pair<std::string, std::string>, std::vector<od_matrix>> route_parts;
  std::int64_t mapped = 0;
  std::vector<sighting> const none;
  for (auto const* tl : li.trips) {
    auto const it = li.sightings_by_trip.find(tl->trip_id);
    auto const& sightings = it == end(li.sightings_by_trip) ? none : it->second;
    auto const est = estimate_trip(*tl, sightings, trip_b(li, *tl, g), params, popt);
    auto const name = safe_name(tl->trip_id);
    csv::write_file(out_dir / "observations" / (name + ".json"), to_json(est.obs));
    auto od = trip_od_matrix(*tl, est.mappings);
    csv::write_file(out_dir / "od" / ("trip_" + name + ".csv"), od.to_csv());
    route_parts[{tl->route_id, std::string{to_string(tl->dir)}}].push_back(std::move(od));
    if (plot_all || plot_set.contains(tl->trip_id)) {
      csv::write_file(out_dir / "plots" / (name + ".svg"), entries_plot_svg(est.obs));
    }
    mapped += static_cast<std::int64_t>(est.mappings.size());
  }

  if (li.range.has_value()) {
    for (auto const& [key, parts] : route_parts) {
      auto const scope = fmt::format("{}/{} {}..{}", key.first, key.second, in.from, in.to);
      auto const od = aggregate_od(scope, parts);
      csv::write_file(out_dir / "od" /
                          fmt::format("route_{}_{}_{}_{}.csv", safe_name(key.first), key.second,
                                      in.from, in.to),
                      od.to_csv());
    }
  } else {
    err << "note: route OD matrices need an explicit --from/--to date range; skipped\n";
  }

  nlohmann::ordered_json m;
  m["command"] = "estimate";
  m["min_rssi"] = params.min_rssi;
  m["include_random"] = params.include_random;
  m["canonical_rssi"] = params.canonical();
  m["w_indexing"] = g.w_indexing;
  m["boundary_margin_seconds"] = g.boundary_margin_seconds;
  m["trips"] = li.trips.size();
  m["sightings"] = li.sightings;
  m["unresolved_sightings"] = li.unresolved_sightings;
  m["rejected_sighting_rows"] = li.rejected_rows;
  m["ticketing"] = li.tickets.has_value();
  m["mapped_devices"] = mapped;
  m["max_load_annotation"] = 83;
  write_manifest(out_dir, std::move(m), g);

  out << fmt::format("estimated {} trips, {} mapped devices -> {}\n", li.trips.size(), mapped,
                     out_dir.string());
  return 0;
}

void write_tables(fs::path const& out_dir, std::span<calibration_record const> records,
                  table_options const& topt, std::ostream& err) {
  auto const tables = calibration_tables(records, topt);
  for (auto const& [name, contents] : tables.files) {
    csv::write_file(out_dir / name, contents);
  }
  for (auto const& w : tables.warnings) {
    err << "warning: " << w << "\n";
  }
}

table_options table_options_from(global_options const& g, std::optional<int> at_rssi,
                                 std::string const& modal_arm, int summary_rssi,
                                 bool summary_include_random) {
  table_options t;
  t.min_trips = g.min_trips;
  t.at_rssi = at_rssi;
  if (modal_arm != "exclude" && modal_arm != "include") {
    throw usage_error(fmt::format("--modal-arm must be exclude or include, got '{}'", modal_arm));
  }
  t.modal_include_random = modal_arm == "include";
  t.summary_params = filter_params{summary_rssi, summary_include_random};
  return t;
}

int cmd_calibrate(input_options const& in, global_options const& g, std::string const& grid_rssi,
                  std::string const& grid_arms, table_options const& topt, std::ostream& out,
                  std::ostream& err) {
  std::vector<int> thresholds;
  for (auto const& s : split_list(grid_rssi)) {
    try {
      std::size_t used = 0;
      auto const v = std::stoi(s, &used);
      if (used != s.size() || v < kMinRssi || v > kMaxRssi) {
        throw std::invalid_argument{s};
      }
      thresholds.push_back(v);
    } catch (std::exception const&) {
      throw usage_error(fmt::format("--grid-rssi: bad threshold '{}'", s));
    }
  }
  std::vector<bool> arms;
  if (grid_arms == "both") {
    arms = {true, false};
  } else if (grid_arms == "include") {
    arms = {true};
  } else if (grid_arms == "exclude") {
    arms = {false};
  } else {
    throw usage_error(fmt::format("--grid-arms must be both, include or exclude, got '{}'", grid_arms));
  }
  std::vector<filter_params> grid;
  for (auto const arm : arms) {
    for (auto const t : thresholds) {
      grid.push_back(filter_params{t, arm});
    }
  }
  if (grid.empty()) {
    throw usage_error("calibration grid is empty");
  }

  auto const popt = pipeline_from(g);
  auto li = load_inputs(in, g, err);
  if (li.trips.empty()) {
    err << "error: no trips resolved (schedule empty or outside --from/--to)\n";
    return static_cast<int>(exit_code::empty_result);
  }
  if (!li.tickets.has_value()) {
    err << "warning: no ticketing data; case A is skipped, case B only\n";
  }

  std::vector<trip_input> inputs;
  inputs.reserve(li.trips.size());
  for (auto const* tl : li.trips) {
    trip_input ti;
    ti.timeline = tl;
    if (auto it = li.sightings_by_trip.find(tl->trip_id); it != end(li.sightings_by_trip)) {
      ti.sightings = std::move(it->second);
    }
    ti.b = trip_b(li, *tl, g);
    inputs.push_back(std::move(ti));
  }

  auto const result = sweep(inputs, grid, popt);
  fs::path const out_dir{in.out};
  csv::write_file(out_dir / "records.csv", write_records_csv(result.records));
  std::string skipped = "trip_id,case,min_rssi,include_random,reason\n";
  for (auto const& s : result.skipped) {
    csv::append_row(skipped, {s.trip_id, std::string{to_string(s.kase)},
                              std::to_string(s.params.min_rssi),
                              s.params.include_random ? "true" : "false", s.reason});
  }
  csv::write_file(out_dir / "skipped.csv", skipped);
  write_tables(out_dir, result.records, topt, err);

  nlohmann::ordered_json m;
  m["command"] = "calibrate";
  m["trips"] = inputs.size();
  m["grid_cells"] = grid.size();
  m["records"] = result.records.size();
  m["skipped"] = result.skipped.size();
  m["min_trips"] = g.min_trips;
  m["w_indexing"] = g.w_indexing;
  m["ticketing"] = li.tickets.has_value();
  write_manifest(out_dir, std::move(m), g);

  out << fmt::format("calibrated {} trips x {} cells: {} records -> {}\n", inputs.size(),
                     grid.size(), result.records.size(), out_dir.string());
  return 0;
}

int cmd_report(std::string const& records_path, std::string const& out, global_options const& g,
               table_options const& topt, std::ostream& os, std::ostream& err) {
  if (records_path.empty()) {
    throw usage_error("report: --records is required");
  }
  auto const records = parse_records_csv(read_required(records_path, "records file"));
  fs::path const out_dir{out};
  write_tables(out_dir, records, topt, err);
  nlohmann::ordered_json m;
  m["command"] = "report";
  m["records"] = records.size();
  m["min_trips"] = g.min_trips;
  write_manifest(out_dir, std::move(m), g);
  os << fmt::format("report over {} records -> {}\n", records.size(), out_dir.string());
  return 0;
}

int cmd_simulate(scenario_config const& cfg, std::string const& out, global_options const& g,
                 std::ostream& os) {
  auto const sc = generate_scenario(cfg);
  fs::path const out_dir{out};
  write_scenario(sc, out_dir);
  std::int64_t boardings = 0;
  for (auto const& t : sc.truth.trips) {
    for (auto const b : t.boardings) {
      boardings += b;
    }
  }
  nlohmann::ordered_json m;
  m["command"] = "simulate";
  m["seed"] = cfg.seed;
  m["trips"] = sc.timelines.size();
  m["sightings"] = sc.sightings.size();
  m["boardings"] = boardings;
  write_manifest(out_dir, std::move(m), g);
  os << fmt::format("simulated {} trips, {} sightings, {} boardings -> {}\n",
                    sc.timelines.size(), sc.sightings.size(), boardings, out_dir.string());
  return 0;
}

std::string dashed(std::string_view key) {
  std::string s{key};
  std::replace(begin(s), end(s), '_', '-');
  return "--" + s;
}

// Fills options not given on the command line from the --config file.
void apply_config(CLI::App& root, CLI::App* sub, std::map<std::string, std::string> const& kv) {
  for (auto const& [key, value] : kv) {
    auto const name = dashed(key);
    CLI::Option* opt = sub != nullptr ? sub->get_option_no_throw(name) : nullptr;
    if (opt == nullptr) {
      opt = root.get_option_no_throw(name);
    }
    if (opt == nullptr || name == "--config") {
      throw usage_error(fmt::format("config: unknown key '{}'", key));
    }
    if (opt->count() == 0) {
      try {
        opt->add_result(value);
        opt->run_callback();
      } catch (CLI::ParseError const& e) {
        throw usage_error(fmt::format("config: {}: {}", key, e.what()));
      }
    }
  }
}

}  // namespace

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Passenger counting from Wi-Fi probe requests on transit vehicles", "probe"};
  app.require_subcommand(1);
  app.fallthrough();

  global_options g;
  app.add_option("--config", g.config, "key = value file supplying option defaults");
  app.add_option("--salt-env", g.salt_env, "environment variable holding the MAC hashing salt");
  app.add_option("--min-rssi", g.min_rssi, "minimum RSSI in dBm (inclusive)");
  app.add_flag("--include-random{true},--exclude-random{false}", g.include_random,
               "keep devices seen only once in a trip");
  app.add_flag("--allow-noncanonical-rssi", g.allow_noncanonical,
               "accept --min-rssi values outside the canonical threshold set");
  app.add_option("--w-indexing", g.w_indexing, "departing | arriving");
  app.add_option("--min-trips", g.min_trips, "minimum trips per route in summary tables");
  app.add_flag("--no-timestamps", g.no_timestamps, "omit generation timestamps from outputs");
  app.add_option("--boundary-margin-seconds", g.boundary_margin_seconds,
                 "clamp window around the first and last arrival");
  app.add_option("--ticket-grace-seconds", g.ticket_grace_seconds,
                 "late validations within this window count at the last stop");

  input_options in;
  auto const add_inputs = [&](CLI::App* c) {
    c->add_option("--schedule-dir", in.schedule_dir,
                  "directory with stops.csv, trips.csv, stop_times.csv, assignments.csv");
    c->add_option("--assignments", in.assignments, "vehicle assignments CSV");
    c->add_option("--tickets", in.tickets, "ticket validations CSV");
    c->add_option("--sightings", in.sightings, "sightings CSV");
    c->add_option("--pcap", in.pcap, "pcap capture instead of a sightings CSV");
    c->add_option("--sensor-id", in.sensor_id, "sensor (vehicle) id of the pcap");
    c->add_option("--from", in.from, "first service date, YYYY-MM-DD");
    c->add_option("--to", in.to, "last service date, YYYY-MM-DD");
    c->add_option("--out", in.out, "output directory");
  };

  auto* parse = app.add_subcommand("parse", "decode a pcap into an anonymized sightings CSV");
  std::string parse_out{"sightings.csv"};
  parse->add_option("--pcap", in.pcap, "pcap file (link type 127 or 105)");
  parse->add_option("--sensor-id", in.sensor_id, "sensor (vehicle) id");
  parse->add_option("--out", parse_out, "output CSV");

  auto* estimate = app.add_subcommand("estimate", "per-trip i, o, c, w vectors and OD matrices");
  add_inputs(estimate);
  std::vector<std::string> plot_trips;
  estimate->add_option("--plot-trip", plot_trips, "trip id to plot (repeatable, or 'all')");

  auto* calibrate = app.add_subcommand("calibrate", "RSSI x random-filter sweep and tables");
  add_inputs(calibrate);
  std::string grid_rssi = "-128,-85,-80,-75,-70,-65,-60,-55";
  std::string grid_arms = "both";
  calibrate->add_option("--grid-rssi", grid_rssi, "comma separated thresholds");
  calibrate->add_option("--grid-arms", grid_arms, "both | include | exclude");

  std::optional<int> at_rssi;
  std::string modal_arm = "exclude";
  int summary_rssi = -55;
  bool summary_include_random = false;
  std::string records_path;
  std::string report_out{"out"};
  auto* report = app.add_subcommand("report", "calibration tables from a records CSV");
  report->add_option("--records", records_path, "records.csv from calibrate");
  report->add_option("--out", report_out, "output directory");
  for (auto* c : {calibrate, report}) {
    c->add_option("--at-rssi", at_rssi, "threshold for the random-filter comparison");
    c->add_option("--modal-arm", modal_arm, "exclude | include");
    c->add_option("--summary-rssi", summary_rssi, "threshold of the summary tables");
    c->add_flag("--summary-include-random", summary_include_random,
                "summarize the include-random arm");
  }

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic ground-truthed scenario");
  scenario_config cfg;
  std::string sim_out{"scenario"};
  std::string passengers_kind = "poisson";
  simulate->add_option("--out", sim_out, "output directory");
  simulate->add_option("--seed", cfg.seed);
  simulate->add_option("--n-routes", cfg.n_routes);
  simulate->add_option("--n-trips-per-route", cfg.n_trips_per_route);
  simulate->add_option("--n-stops-per-trip", cfg.n_stops_per_trip);
  simulate->add_option("--n-vehicles", cfg.n_vehicles);
  simulate->add_option("--segment-seconds", cfg.segment_seconds);
  simulate->add_option("--layover-seconds", cfg.layover_seconds);
  simulate->add_option("--passengers-kind", passengers_kind, "constant | poisson");
  simulate->add_option("--passengers-per-trip", cfg.passengers_per_trip);
  simulate->add_option("--probe-interval-seconds", cfg.probe_interval_seconds);
  simulate->add_flag("--probe-every-segment", cfg.probe_every_segment);
  simulate->add_option("--noise-probe-interval-seconds", cfg.noise_probe_interval_seconds);
  simulate->add_option("--p-device", cfg.p_device);
  simulate->add_option("--p-random-mac", cfg.p_random_mac);
  simulate->add_option("--n-noise-devices", cfg.n_noise_devices);
  simulate->add_option("--onboard-rssi-lo", cfg.onboard_rssi.lo);
  simulate->add_option("--onboard-rssi-hi", cfg.onboard_rssi.hi);
  simulate->add_option("--noise-rssi-lo", cfg.noise_rssi.lo);
  simulate->add_option("--noise-rssi-hi", cfg.noise_rssi.hi);
  simulate->add_option("--max-load", cfg.max_load);
  simulate->add_option("--ticket-lag-seconds", cfg.ticket_lag_seconds);
  simulate->add_option("--start-date", cfg.start_date);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    CLI::App* active = nullptr;
    for (auto* c : {parse, estimate, calibrate, report, simulate}) {
      if (c->parsed()) {
        active = c;
      }
    }
    if (!g.config.empty()) {
      apply_config(app, active, parse_key_values(read_required(g.config, "config file")));
    }

    if (parse->parsed()) {
      return cmd_parse(in, g, parse_out, out, err);
    }
    if (estimate->parsed()) {
      return cmd_estimate(in, g, plot_trips, out, err);
    }
    if (calibrate->parsed()) {
      return cmd_calibrate(
          in, g, grid_rssi, grid_arms,
          table_options_from(g, at_rssi, modal_arm, summary_rssi, summary_include_random), out,
          err);
    }
    if (report->parsed()) {
      return cmd_report(
          records_path, report_out, g,
          table_options_from(g, at_rssi, modal_arm, summary_rssi, summary_include_random), out,
          err);
    }
    if (simulate->parsed()) {
      if (passengers_kind == "constant") {
        cfg.passengers_kind = ridership::constant;
      } else if (passengers_kind == "poisson") {
        cfg.passengers_kind = ridership::poisson;
      } else {
        throw config_error(
            fmt::format("passengers_kind: must be constant or poisson, got '{}'", passengers_kind));
      }
      return cmd_simulate(cfg, sim_out, g, out);
    }
    return static_cast<int>(exit_code::usage);
  } catch (CLI::CallForHelp const&) {
    out << app.help();
    return 0;
  } catch (CLI::CallForAllHelp const&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (CLI::ParseError const& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(exit_code::usage);
  } catch (usage_error const& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(exit_code::usage);
  } catch (io_error const& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(exit_code::io);
  } catch (parse_error const& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(exit_code::io);
  } catch (integrity_error const& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(exit_code::io);
  }
}

}  // namespace probecount
