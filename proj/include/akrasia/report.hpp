#pragma once

// Human-readable renderings of one or more metric reports: a markdown
// summary table, a per-temptation CSV, and an SVG bar chart. All output is
// deterministic (fixed 2-decimal formatting, no timestamps).

#include <cstdio>
#include <string>
#include <vector>

#include "akrasia/common.hpp"
#include "akrasia/metrics.hpp"
#include "akrasia/types.hpp"

namespace akrasia {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

namespace detail {

inline std::string cell(const MetricsReport& r, const std::string& metric,
                        double point) {
  auto it = r.ci.find(metric);
  if (it == r.ci.end()) return fmt2(point);
  return fmt2(point) + " [" + fmt2(it->second.first) + ", " +
         fmt2(it->second.second) + "]";
}

}  // namespace detail

inline std::string render_markdown(const std::vector<MetricsReport>& reports) {
  std::string out;
  out += "# Akratic slip report\n\n";
  out += "Retention of baseline-correct answers under paraphrase (IC),\n";
  out += "distraction (TC), and temptation (CRC). Brackets are 95% bootstrap\n";
  out += "confidence intervals.\n\n";
  out += "| Model | Decoding | IC | TC | CRC |\n";
  out += "| --- | --- | --- | --- | --- |\n";
  for (const MetricsReport& r : reports) {
    out += "| " + r.model_id + " | " + r.regime + " | " +
           detail::cell(r, "ic", r.ic) + " | " + detail::cell(r, "tc", r.tc) +
           " | " + detail::cell(r, "crc", r.crc) + " |\n";
  }

  out += "\n## CRC by temptation\n\n";
  out += "| Model | Decoding | Social proof | Decoy MC | Negation |\n";
  out += "| --- | --- | --- | --- | --- |\n";
  for (const MetricsReport& r : reports) {
    out += "| " + r.model_id + " | " + r.regime + " | " +
           detail::cell(r, "crc_social_proof",
                        r.crc_by_temptation.at(Temptation::social_proof)) +
           " | " +
           detail::cell(r, "crc_decoy_mc",
                        r.crc_by_temptation.at(Temptation::decoy_mc)) +
           " | " +
           detail::cell(r, "crc_negation",
                        r.crc_by_temptation.at(Temptation::negation)) +
           " |\n";
  }

  out += "\n## Slips\n";
  for (const MetricsReport& r : reports) {
    out += "\n### " + r.model_id + " (" + r.regime + ")\n\n";
    out += "Items answered correctly at baseline (" +
           std::to_string(r.n_b_correct) + " of " + std::to_string(r.n_items) +
           ") that flipped under at least one variant:\n\n";
    if (r.slips.empty()) {
      out += "- none\n";
    } else {
      for (const Slip& s : r.slips) {
        out += "- `" + s.item_id + "`: " + join(s.failed_variants, ", ") + "\n";
      }
    }
  }
  return out;
}

inline std::string render_temptation_csv(
    const std::vector<MetricsReport>& reports) {
  std::string out = "model,regime,social_proof,decoy_mc,negation\n";
  for (const MetricsReport& r : reports) {
    out += r.model_id + "," + r.regime + "," +
           fmt2(r.crc_by_temptation.at(Temptation::social_proof)) + "," +
           fmt2(r.crc_by_temptation.at(Temptation::decoy_mc)) + "," +
           fmt2(r.crc_by_temptation.at(Temptation::negation)) + "\n";
  }
  return out;
}

// Grouped bar chart of per-temptation CRC, one group per report. Hand-rolled
// SVG so the bytes are fully deterministic.
inline std::string render_crc_svg(const std::vector<MetricsReport>& reports) {
  const int margin_left = 60, margin_top = 50, margin_bottom = 70;
  const int bar_w = 28, bar_gap = 6, group_gap = 40;
  const int plot_h = 240;
  const int group_w = 3 * bar_w + 2 * bar_gap;
  const int n = static_cast<int>(reports.size());
  const int width = margin_left + 20 + (n > 0 ? n * group_w + (n - 1) * group_gap : group_w);
  const int height = margin_top + plot_h + margin_bottom;
  const char* colors[3] = {"#4c78a8", "#f58518", "#54a24b"};
  const char* labels[3] = {"social proof", "decoy MC", "negation"};

  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return std::string(buf);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\">\n";
  out += "<style>text{font-family:sans-serif;font-size:11px;}"
         ".title{font-size:14px;font-weight:bold;}</style>\n";
  out += "<text class=\"title\" x=\"" + std::to_string(width / 2) +
         "\" y=\"20\" text-anchor=\"middle\">CRC by temptation</text>\n";

  // Axis and gridlines at 0, 0.25, 0.5, 0.75, 1.
  for (int g = 0; g <= 4; ++g) {
    double frac = g / 4.0;
    double y = margin_top + plot_h * (1.0 - frac);
    out += "<line x1=\"" + std::to_string(margin_left) + "\" y1=\"" + num(y) +
           "\" x2=\"" + std::to_string(width - 10) + "\" y2=\"" + num(y) +
           "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + std::to_string(margin_left - 8) + "\" y=\"" +
           num(y + 4) + "\" text-anchor=\"end\">" + fmt2(frac) + "</text>\n";
  }

  for (int i = 0; i < n; ++i) {
    const MetricsReport& r = reports[i];
    int gx = margin_left + 10 + i * (group_w + group_gap);
    double values[3] = {r.crc_by_temptation.at(Temptation::social_proof),
                        r.crc_by_temptation.at(Temptation::decoy_mc),
                        r.crc_by_temptation.at(Temptation::negation)};
    for (int b = 0; b < 3; ++b) {
      double h = plot_h * values[b];
      double x = gx + b * (bar_w + bar_gap);
      double y = margin_top + plot_h - h;
      out += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
             std::to_string(bar_w) + "\" height=\"" + num(h) + "\" fill=\"" +
             colors[b] + "\"/>\n";
      out += "<text x=\"" + num(x + bar_w / 2.0) + "\" y=\"" + num(y - 4) +
             "\" text-anchor=\"middle\">" + fmt2(values[b]) + "</text>\n";
    }
    out += "<text x=\"" + std::to_string(gx + group_w / 2) + "\" y=\"" +
           std::to_string(margin_top + plot_h + 18) +
           "\" text-anchor=\"middle\">" + r.model_id + "</text>\n";
    out += "<text x=\"" + std::to_string(gx + group_w / 2) + "\" y=\"" +
           std::to_string(margin_top + plot_h + 34) +
           "\" text-anchor=\"middle\">" + r.regime + "</text>\n";
  }

  // Legend.
  for (int b = 0; b < 3; ++b) {
    int ly = height - 16;
    int lx = margin_left + 10 + b * 110;
    out += "<rect x=\"" + std::to_string(lx) + "\" y=\"" +
           std::to_string(ly - 9) +
           "\" width=\"10\" height=\"10\" fill=\"" + std::string(colors[b]) +
           "\"/>\n";
    out += "<text x=\"" + std::to_string(lx + 14) + "\" y=\"" +
           std::to_string(ly) + "\">" + labels[b] + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace akrasia
