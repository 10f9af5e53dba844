// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap_tools/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <stdexcept>

namespace askcap::report {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> kColumns = {
      "mix",   "cider", "bleu4", "rouge", "meteor", "supervision_total", "gt_captions_used",
      "atop3", "atop5", "atop10", "improved_pct", "mean_collected_reward"};
  return kColumns;
}

std::vector<json> collect_summaries(const fs::path& root) {
  std::vector<fs::path> files;
  if (fs::exists(root)) {
    const std::regex pattern(R"(round_\d+\.jsonl)");
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && std::regex_match(e.path().filename().string(), pattern)) {
        files.push_back(e.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<json> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    std::optional<json> summary;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      if (j.value("type", "") == "round_end") summary = std::move(j.at("summary"));
    }
    if (!summary) throw std::runtime_error(f.string() + ": no round_end record");
    out.push_back(std::move(*summary));
  }
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<Row> aggregate(const std::vector<json>& summaries) {
  std::map<std::pair<std::string, int>, std::vector<const json*>> groups;
  for (const auto& s : summaries) {
    groups[{s.at("mode").get<std::string>(), s.at("round").get<int>()}].push_back(&s);
  }
  std::vector<Row> rows;
  for (const auto& [key, members] : groups) {
    Row row;
    row.mode = key.first;
    row.round = key.second;
    row.runs = static_cast<int>(members.size());
    for (const auto& col : metric_columns()) {
      std::vector<double> values;
      for (const json* m : members) {
        if (m->contains(col) && !m->at(col).is_null()) values.push_back(m->at(col).get<double>());
      }
      Cell cell;
      if (!values.empty()) {
        std::sort(values.begin(), values.end());
        cell.median = quantile(values, 0.5);
        cell.q1 = quantile(values, 0.25);
        cell.q3 = quantile(values, 0.75);
      }
      row.cells.push_back(cell);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> header() {
  std::vector<std::string> h = {"mode", "round", "runs"};
  for (const auto& col : metric_columns()) {
    for (const char* suffix : {"_median", "_q1", "_q3", "_iqr"}) h.push_back(col + suffix);
  }
  return h;
}

namespace {

std::string fixed(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

void write_chart(const fs::path& path, const std::string& title, const std::string& x_label,
                 const std::vector<Series>& series) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 140, kTop = 40, kBottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto py = [&](double y) { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", kLeft,
                kH - kBottom, kW - kRight, kH - kBottom);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", kLeft,
                kTop, kLeft, kH - kBottom);
  out << buf;
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n",
                  px(xv), kH - kBottom + 16, xv);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                  kLeft - 6, py(yv) + 4, yv);
    out << buf;
  }
  out << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(x), py(y));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", kW - kRight + 10,
                  kTop + 16.0 * static_cast<double>(i), color, series[i].name.c_str());
    out << buf;
  }
  out << "</svg>\n";
}

std::size_t column(const std::string& name) {
  const auto& cols = metric_columns();
  return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
}

std::vector<Series> series_by_mode(const std::vector<Row>& rows, bool by_supervision) {
  std::map<std::string, Series> out;
  const std::size_t mix = column("mix");
  const std::size_t sup = column("supervision_total");
  for (const auto& r : rows) {
    const auto& y = r.cells[mix].median;
    const std::optional<double> x =
        by_supervision ? r.cells[sup].median : std::optional<double>(r.round);
    if (!x || !y) continue;
    auto& s = out[r.mode];
    s.name = r.mode;
    s.points.emplace_back(*x, *y);
  }
  std::vector<Series> v;
  for (auto& [_, s] : out) {
    std::sort(s.points.begin(), s.points.end());
    v.push_back(std::move(s));
  }
  return v;
}

}  // namespace

void write_csv(const fs::path& path, const std::vector<Row>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto h = header();
  for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
  out << '\n';
  for (const auto& r : rows) {
    out << r.mode << ',' << r.round << ',' << r.runs;
    for (const auto& c : r.cells) {
      std::optional<double> iqr;
      if (c.q1 && c.q3) iqr = *c.q3 - *c.q1;
      out << ',' << fixed(c.median) << ',' << fixed(c.q1) << ',' << fixed(c.q3) << ','
          << fixed(iqr);
    }
    out << '\n';
  }
}

void write_svg_reward_by_round(const fs::path& path, const std::vector<Row>& rows) {
  write_chart(path, "Mix (median) by round", "round", series_by_mode(rows, false));
}

void write_svg_mix_by_supervision(const fs::path& path, const std::vector<Row>& rows) {
  write_chart(path, "Mix (median) by supervision", "supervision units", series_by_mode(rows, true));
}

}  // namespace askcap::report
