#include "probecount/calibration.h"

#include <algorithm>
#include <charconv>
#include <tuple>

#include "fmt/format.h"

#include "probecount/csv.h"
#include "probecount/error.h"

namespace probecount {

std::string_view to_string(study_case c) { return c == study_case::A ? "A" : "B"; }

std::string case_label(study_case c, bool include_random) {
  return std::string{to_string(c)} + (include_random ? "" : "_ns");
}

namespace {

std::vector<double> as_doubles(count_vector const& v) {
  return std::vector<double>(begin(v), end(v));
}

}  // namespace

trip_evaluation evaluate_trip(trip_input const& in, filter_params params,
                              pipeline_options const& opt) {
  if (in.timeline == nullptr) {
    throw usage_error("evaluate_trip: trip has no timeline");
  }
  auto const est = estimate_trip(*in.timeline, in.sightings, in.b, params, opt);
  auto const& obs = est.obs;

  trip_evaluation ev;
  if (in.b.has_value()) {
    ev.case_a = compute_metrics(as_doubles(obs.b), as_doubles(obs.i));
  }
  ev.case_b = compute_metrics(as_doubles(obs.w), as_doubles(obs.c));
  return ev;
}

sweep_result sweep(std::span<trip_input const> trips, std::span<filter_params const> grid,
                   pipeline_options const& opt) {
  if (grid.empty()) {
    throw usage_error("calibration grid is empty");
  }
  sweep_result out;
  out.records.reserve(trips.size() * grid.size() * 2);
  for (auto const& trip : trips) {
    if (trip.timeline == nullptr) {
      for (auto const& p : grid) {
        for (auto const c : {study_case::A, study_case::B}) {
          out.skipped.push_back(skipped_cell{"", p, c, "no timeline"});
        }
      }
      continue;
    }
    auto const& tl = *trip.timeline;
    for (auto const& p : grid) {
      auto const ev = evaluate_trip(trip, p, opt);
      if (ev.case_a.has_value()) {
        out.records.push_back(calibration_record{tl.trip_id, tl.route_id, study_case::A, p,
                                                 *ev.case_a});
      } else {
        out.skipped.push_back(skipped_cell{tl.trip_id, p, study_case::A, "no ticketing"});
      }
      out.records.push_back(
          calibration_record{tl.trip_id, tl.route_id, study_case::B, p, ev.case_b});
    }
  }
  return out;
}

std::map<std::string, std::vector<calibration_record>> by_route(
    std::span<calibration_record const> records) {
  std::map<std::string, std::vector<calibration_record>> out;
  for (auto const& r : records) {
    out[r.route_id].push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

modal_rssi modal_best_rssi(std::span<calibration_record const> records, bool include_random) {
  // (trip, case) -> rssi -> metrics
  std::map<std::pair<std::string, study_case>, std::map<int, metric_bundle const*>> cells;
  for (auto const& r : records) {
    if (r.params.include_random == include_random) {
      cells[{r.trip_id, r.kase}][r.params.min_rssi] = &r.metrics;
    }
  }

  modal_rssi out;
  for (auto const& [_, by_rssi] : cells) {
    for (auto const m : kAllMetrics) {
      std::optional<int> winner;
      double best = 0.0;
      // Ascending rssi: a later (stronger) threshold takes ties.
      for (auto const& [rssi, bundle] : by_rssi) {
        auto const v = bundle->get(m);
        if (!v.has_value()) {
          continue;
        }
        auto const better = higher_is_better(m) ? *v >= best : *v <= best;
        if (!winner.has_value() || better) {
          winner = rssi;
          best = *v;
        }
      }
      if (winner.has_value()) {
        ++out.wins[*winner];
        ++out.instances;
      }
    }
  }
  if (out.instances == 0) {
    throw usage_error("modal_best_rssi: no scorable instances");
  }

  std::size_t most = 0;
  for (auto const& [rssi, n] : out.wins) {
    if (n >= most) {
      most = n;
      out.best = rssi;
    }
  }
  out.share = static_cast<double>(most) / static_cast<double>(out.instances);
  return out;
}

// ---------------------------------------------------------------------------

filter_comparison compare_random_filter(std::span<calibration_record const> records,
                                        study_case kase, int at_rssi, std::size_t min_trips,
                                        metric m) {
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> per_trip;
  std::string route;
  for (auto const& r : records) {
    if (r.kase != kase || r.params.min_rssi != at_rssi) {
      continue;
    }
    route = r.route_id;
    auto& slot = per_trip[r.trip_id];
    (r.params.include_random ? slot.first : slot.second) = r.metrics.get(m);
  }

  std::vector<double> include;
  std::vector<double> exclude;
  for (auto const& [_, pair] : per_trip) {
    if (pair.first.has_value() && pair.second.has_value()) {
      include.push_back(*pair.first);
      exclude.push_back(*pair.second);
    }
  }
  if (include.size() < min_trips) {
    throw usage_error(fmt::format("route {} case {}: {} paired trips, need {}", route,
                                  to_string(kase), include.size(), min_trips));
  }

  filter_comparison out;
  out.route_id = route;
  out.kase = kase;
  out.at_rssi = at_rssi;
  out.pairs = include.size();
  out.test = wilcoxon_signed_rank(include, exclude);
  if (!include.empty()) {
    auto const n = static_cast<double>(include.size());
    for (auto k = std::size_t{0}; k != include.size(); ++k) {
      out.mean_include += include[k] / n;
      out.mean_exclude += exclude[k] / n;
    }
  }
  auto const exclude_wins =
      higher_is_better(m) ? out.mean_exclude > out.mean_include : out.mean_exclude < out.mean_include;
  out.winner = case_label(kase, !exclude_wins);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<route_summary_row> route_summary(std::span<calibration_record const> records,
                                             filter_params params, std::size_t min_trips) {
  std::map<std::pair<std::string, study_case>, std::vector<calibration_record const*>> groups;
  for (auto const& r : records) {
    if (r.params == params) {
      groups[{r.route_id, r.kase}].push_back(&r);
    }
  }

  std::vector<route_summary_row> out;
  for (auto const& [key, recs] : groups) {
    if (recs.size() < min_trips) {
      continue;
    }
    route_summary_row row;
    row.route_id = key.first;
    row.kase = key.second;
    row.params = params;
    row.trips = recs.size();
    for (auto const m : kAllMetrics) {
      std::vector<double> values;
      for (auto const* r : recs) {
        if (auto const v = r->metrics.get(m); v.has_value()) {
          values.push_back(*v);
        } else if (m == metric::r2) {
          ++row.r2_undefined;
        }
      }
      metric_summary s;
      s.count = values.size();
      if (values.size() >= 2) {
        auto const ci = mean_ci95(values);
        s.mean = ci.mean;
        s.std = ci.std;
        s.ci_lower = ci.lower;
        s.ci_upper = ci.upper;
      } else if (values.size() == 1) {
        s.mean = values.front();
      }
      row.metrics[m] = s;
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string format_number(double v) { return fmt::format("{:.6f}", v); }

std::string format_optional(std::optional<double> v) {
  return v.has_value() ? format_number(*v) : "";
}

namespace {

// Records keep full precision so reports recomputed from them match.
std::string exact(double v) { return fmt::format("{}", v); }

double parse_double(std::string const& s, std::size_t line) {
  try {
    std::size_t used = 0;
    auto const v = std::stod(s, &used);
    if (used == s.size()) {
      return v;
    }
  } catch (std::exception const&) {
  }
  throw parse_error(fmt::format("records line {}: bad number '{}'", line, s),
                    static_cast<long long>(line));
}

}  // namespace

std::string write_records_csv(std::span<calibration_record const> records) {
  std::string out = "trip_id,route_id,case,min_rssi,include_random,mae,median_ae,std_ae,rmse,r2\n";
  for (auto const& r : records) {
    csv::append_row(out, {r.trip_id, r.route_id, std::string{to_string(r.kase)},
                          std::to_string(r.params.min_rssi),
                          r.params.include_random ? "true" : "false", exact(r.metrics.mae),
                          exact(r.metrics.median_ae), exact(r.metrics.std_ae),
                          exact(r.metrics.rmse),
                          r.metrics.r2.has_value() ? exact(*r.metrics.r2) : ""});
  }
  return out;
}

std::vector<calibration_record> parse_records_csv(std::string_view text) {
  auto const t = csv::parse(text);
  auto const c = t.require({"trip_id", "route_id", "case", "min_rssi", "include_random", "mae",
                            "median_ae", "std_ae", "rmse", "r2"});
  std::vector<calibration_record> out;
  for (auto const& row : t.rows) {
    if (row.fields.size() != t.header.size()) {
      throw parse_error(fmt::format("records line {}: wrong field count", row.line),
                        static_cast<long long>(row.line));
    }
    auto const& f = row.fields;
    calibration_record r;
    r.trip_id = f[c[0]];
    r.route_id = f[c[1]];
    if (f[c[2]] == "A") {
      r.kase = study_case::A;
    } else if (f[c[2]] == "B") {
      r.kase = study_case::B;
    } else {
      throw parse_error(fmt::format("records line {}: bad case '{}'", row.line, f[c[2]]),
                        static_cast<long long>(row.line));
    }
    r.params.min_rssi = static_cast<int>(parse_double(f[c[3]], row.line));
    r.params.include_random = f[c[4]] == "true" || f[c[4]] == "1";
    r.metrics.mae = parse_double(f[c[5]], row.line);
    r.metrics.median_ae = parse_double(f[c[6]], row.line);
    r.metrics.std_ae = parse_double(f[c[7]], row.line);
    r.metrics.rmse = parse_double(f[c[8]], row.line);
    if (!f[c[9]].empty()) {
      r.metrics.r2 = parse_double(f[c[9]], row.line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_modal_csv(std::map<std::string, modal_rssi> const& by_route) {
  std::string out = "route,min_rssi,share\n";
  for (auto const& [route, m] : by_route) {
    csv::append_row(out, {route, std::to_string(m.best), fmt::format("{:.2f}", m.share)});
  }
  return out;
}

std::string write_rank_csv(std::span<filter_comparison const> rows) {
  std::string out = "route,case,wilcox_pval\n";
  for (auto const& r : rows) {
    csv::append_row(out, {r.route_id, r.winner, fmt::format("{:.6e}", r.test.p_value)});
  }
  return out;
}

std::string write_r2_ci_csv(std::span<route_summary_row const> rows) {
  std::string out = "route,case,lower_ci,upper_ci,count,mean,std\n";
  for (auto const& r : rows) {
    auto const& s = r.metrics.at(metric::r2);
    csv::append_row(out, {r.route_id, case_label(r.kase, r.params.include_random),
                          format_optional(s.ci_lower), format_optional(s.ci_upper),
                          std::to_string(s.count),
                          s.count == 0 ? "" : format_number(s.mean), format_optional(s.std)});
  }
  return out;
}

std::string write_means_csv(std::span<route_summary_row const> rows) {
  std::string out = "route,case,mae,rmse,r2\n";
  for (auto const& r : rows) {
    auto const& r2 = r.metrics.at(metric::r2);
    csv::append_row(out, {r.route_id, case_label(r.kase, r.params.include_random),
                          format_number(r.metrics.at(metric::mae).mean),
                          format_number(r.metrics.at(metric::rmse).mean),
                          r2.count == 0 ? "" : format_number(r2.mean)});
  }
  return out;
}

std::string write_summary_csv(std::span<route_summary_row const> rows) {
  std::string out =
      "route,case,min_rssi,include_random,trips,r2_undefined,metric,count,mean,std,ci_lower,"
      "ci_upper\n";
  for (auto const& r : rows) {
    for (auto const m : kAllMetrics) {
      auto const& s = r.metrics.at(m);
      csv::append_row(out, {r.route_id, case_label(r.kase, r.params.include_random),
                            std::to_string(r.params.min_rssi),
                            r.params.include_random ? "true" : "false",
                            std::to_string(r.trips), std::to_string(r.r2_undefined),
                            std::string{to_string(m)}, std::to_string(s.count),
                            s.count == 0 ? "" : format_number(s.mean), format_optional(s.std),
                            format_optional(s.ci_lower), format_optional(s.ci_upper)});
    }
  }
  return out;
}

}  // namespace probecount
