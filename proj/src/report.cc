#include "probecount/report.h"

#include <algorithm>

#include "fmt/format.h"

#include "probecount/csv.h"
#include "probecount/error.h"

namespace probecount {

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (auto const c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string entries_plot_svg(trip_observation const& obs) {
  constexpr double kWidth = 800.0;
  constexpr double kHeight = 420.0;
  constexpr double kLeft = 60.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 90.0;

  auto const n = obs.stops.size();
  std::int64_t peak = 1;
  for (auto const v : obs.b) {
    peak = std::max(peak, v);
  }
  for (auto const v : obs.i) {
    peak = std::max(peak, v);
  }

  auto const plot_w = kWidth - kLeft - kRight;
  auto const plot_h = kHeight - kTop - kBottom;
  auto const x = [&](std::size_t t) {
    return n <= 1 ? kLeft : kLeft + plot_w * static_cast<double>(t) / static_cast<double>(n - 1);
  };
  auto const y = [&](std::int64_t v) {
    return kTop + plot_h * (1.0 - static_cast<double>(v) / static_cast<double>(peak));
  };
  auto const polyline = [&](count_vector const& v, std::string_view colour, std::string_view id) {
    std::string pts;
    for (auto t = std::size_t{0}; t != v.size(); ++t) {
      pts += fmt::format("{}{:.1f},{:.1f}", t == 0 ? "" : " ", x(t), y(v[t]));
    }
    return fmt::format(
        "  <polyline id=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
        id, colour, pts);
  };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      kWidth, kHeight, kWidth, kHeight);
  svg += fmt::format(
      "  <text x=\"{:.1f}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      "trip {} (route {}): ticket validations vs Wi-Fi entries</text>\n",
      kLeft, xml_escape(obs.trip_id), xml_escape(obs.route_id));
  svg += fmt::format(
      "  <line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
      kLeft, kTop, kTop + plot_h);
  svg += fmt::format(
      "  <line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n",
      kLeft, kTop + plot_h, kLeft + plot_w);
  for (auto const v : {std::int64_t{0}, peak}) {
    svg += fmt::format(
        "  <text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"end\">{}</text>\n",
        kLeft - 6.0, y(v) + 4.0, v);
  }
  for (auto t = std::size_t{0}; t != n; ++t) {
    svg += fmt::format(
        "  <text x=\"{0:.1f}\" y=\"{1:.1f}\" font-family=\"sans-serif\" font-size=\"10\" "
        "text-anchor=\"end\" transform=\"rotate(-60 {0:.1f} {1:.1f})\">{2}</text>\n",
        x(t), kTop + plot_h + 14.0, xml_escape(obs.stops[t]));
  }
  svg += fmt::format(
      "  <text x=\"16\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
      "transform=\"rotate(-90 16 {:.1f})\">passengers</text>\n",
      kTop + plot_h / 2.0, kTop + plot_h / 2.0);
  if (obs.has_tickets) {
    svg += polyline(obs.b, "#1f77b4", "tickets");
  }
  svg += polyline(obs.i, "#ffbf00", "wifi-entries");
  svg += fmt::format(
      "  <text x=\"{0:.1f}\" y=\"{1:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
      "fill=\"#1f77b4\">ticket validations (b)</text>\n"
      "  <text x=\"{0:.1f}\" y=\"{2:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
      "fill=\"#b38600\">Wi-Fi entries (i)</text>\n",
      kWidth - 170.0, kTop + 4.0, kTop + 18.0);
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------

report_files calibration_tables(std::span<calibration_record const> records,
                                table_options const& opt) {
  report_files out;
  auto const routes = by_route(records);

  std::map<std::string, modal_rssi> modal;
  for (auto const& [route, recs] : routes) {
    try {
      modal.emplace(route, modal_best_rssi(recs, opt.modal_include_random));
    } catch (usage_error const& e) {
      out.warnings.push_back(fmt::format("route {}: {}", route, e.what()));
    }
  }
  out.files.emplace_back("modal_rssi.csv", write_modal_csv(modal));

  std::vector<filter_comparison> comparisons;
  for (auto const& [route, recs] : routes) {
    auto at = opt.at_rssi;
    if (!at.has_value()) {
      if (auto const it = modal.find(route); it != end(modal)) {
        at = it->second.best;
      } else {
        continue;
      }
    }
    for (auto const c : {study_case::A, study_case::B}) {
      try {
        comparisons.push_back(compare_random_filter(recs, c, *at, opt.min_trips));
      } catch (usage_error const& e) {
        out.warnings.push_back(e.what());
      }
    }
  }
  std::stable_sort(begin(comparisons), end(comparisons),
                   [](filter_comparison const& a, filter_comparison const& b) {
                     return a.kase < b.kase;
                   });
  out.files.emplace_back("rank_tests.csv", write_rank_csv(comparisons));

  std::string detail =
      "route,case,winner,at_rssi,pairs,statistic_w,p_value,method,mean_include,mean_exclude\n";
  for (auto const& c : comparisons) {
    csv::append_row(detail, {c.route_id, std::string{to_string(c.kase)}, c.winner,
                             std::to_string(c.at_rssi), std::to_string(c.pairs),
                             fmt::format("{}", c.test.statistic_w),
                             fmt::format("{:.6e}", c.test.p_value),
                             c.test.method == rank_method::exact ? "exact" : "normal_approx",
                             format_number(c.mean_include), format_number(c.mean_exclude)});
  }
  out.files.emplace_back("rank_tests_detail.csv", std::move(detail));

  auto const summary = route_summary(records, opt.summary_params, opt.min_trips);
  if (summary.empty()) {
    out.warnings.push_back(fmt::format(
        "no route has {} or more trips at min_rssi={} include_random={}; summary tables are empty",
        opt.min_trips, opt.summary_params.min_rssi, opt.summary_params.include_random));
  }
  out.files.emplace_back("r2_ci.csv", write_r2_ci_csv(summary));
  out.files.emplace_back("means.csv", write_means_csv(summary));
  out.files.emplace_back("summary.csv", write_summary_csv(summary));
  return out;
}

}  // namespace probecount
