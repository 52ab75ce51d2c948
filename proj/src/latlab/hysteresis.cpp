// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/latlab/hysteresis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lhsynth/common/error.hpp"

namespace lhsynth::latlab {

const char* lhp_rule_name(LhpRule rule) { return rule == LhpRule::kPrefixMin ? "prefix-min" : "suffix-min"; }

std::optional<LhpRule> parse_lhp_rule(const std::string& name) {
  if (name == "prefix-min") return LhpRule::kPrefixMin;
  if (name == "suffix-min") return LhpRule::kSuffixMin;
  return std::nullopt;
}

double HysteresisMap::latency_at(std::size_t dim) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), dim);
  if (it == grid.end() || *it != dim) throw InputError("dim " + std::to_string(dim) + " is not on the grid");
  return latency[static_cast<std::size_t>(it - grid.begin())];
}

bool HysteresisMap::is_lhp(std::size_t dim) const { return std::binary_search(lhps.begin(), lhps.end(), dim); }

HysteresisMap detect_lhps(const std::vector<std::size_t>& grid, const std::vector<double>& latency, LhpRule rule) {
  if (grid.empty() || grid.size() != latency.size()) {
    throw ContractViolation("detect_lhps: need one latency per grid point and at least one point");
  }
  HysteresisMap m;
  m.rule = rule;
  m.grid = grid;
  m.latency = latency;
  const std::size_t n = grid.size();
  std::vector<bool> flag(n, false);
  if (rule == LhpRule::kPrefixMin) {
    double best = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (latency[i] < best) {
        best = latency[i];
        flag[i] = true;
      }
    }
  } else {
    double best = INFINITY;
    for (std::size_t i = n; i-- > 0;) {
      if (latency[i] < best) {
        best = latency[i];
        flag[i] = true;
      }
    }
  }
  HysteresisBin bin;
  for (std::size_t i = 0; i < n; ++i) {
    ++bin.points;
    if (flag[i]) {
      m.lhps.push_back(grid[i]);
      bin.upper = grid[i];
      bin.lhp = grid[i];
      m.bins.push_back(bin);
      bin = HysteresisBin{};
      bin.lower_exclusive = grid[i];
    }
  }
  if (bin.points > 0) {
    bin.upper = grid.back();
    m.bins.push_back(bin);
  }
  m.redundancy = redundancy(m);
  return m;
}

HysteresisMap detect_lhps(const LatencyProfile& profile, LhpRule rule) {
  return detect_lhps(profile.grid, profile.medians(), rule);
}

double redundancy(const HysteresisMap& map) {
  if (map.grid.empty()) return 0.0;
  return 1.0 - static_cast<double>(map.lhps.size()) / static_cast<double>(map.grid.size());
}

NearestLhp nearest_lhp(const HysteresisMap& map, std::size_t d) {
  if (map.grid.empty() || d > map.grid.back()) {
    throw InputError("nearest_lhp: dim " + std::to_string(d) + " lies above the profiled grid");
  }
  const auto it = std::lower_bound(map.lhps.begin(), map.lhps.end(), d);
  if (it == map.lhps.end()) return {d, false};
  return {*it, true};
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

std::string hysteresis_report_json(const HysteresisMap& map, const LatencyProfile& profile) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : map.bins) {
    bins.push_back({{"lower_exclusive", b.lower_exclusive ? nlohmann::json(*b.lower_exclusive) : nlohmann::json()},
                    {"upper", b.upper},
                    {"lhp", b.lhp ? nlohmann::json(*b.lhp) : nlohmann::json()},
                    {"points", b.points}});
  }
  nlohmann::json j{{"hardware_id", profile.hardware_id},
                   {"backend", profile.backend},
                   {"batch", profile.batch},
                   {"rule", lhp_rule_name(map.rule)},
                   {"grid_points", map.grid.size()},
                   {"lhp_count", map.lhps.size()},
                   {"lhp_set", map.lhps},
                   {"bins", bins},
                   {"redundancy", map.redundancy},
                   {"redundancy_pct", format_percent(map.redundancy)}};
  return j.dump(2) + "\n";
}

std::string hysteresis_svg(const HysteresisMap& map, const std::string& title) {
  const double w = 800, h = 420, left = 70, right = 20, top = 40, bottom = 50;
  const double x0 = static_cast<double>(map.grid.front()), x1 = static_cast<double>(map.grid.back());
  const auto [lo_it, hi_it] = std::minmax_element(map.latency.begin(), map.latency.end());
  double y0 = *lo_it, y1 = *hi_it;
  if (y1 <= y0) y1 = y0 + 1.0;
  const double xs = x1 > x0 ? (w - left - right) / (x1 - x0) : 0.0;
  auto px = [&](double x) { return left + (x - x0) * xs; };
  auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
  auto escape = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };

  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << " " << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << escape(title) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    s << "<text x=\"" << px(xv) << "\" y=\"" << h - bottom + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << static_cast<long long>(std::llround(xv)) << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << static_cast<long long>(std::llround(yv)) << "</text>\n";
  }
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\">dimension</text>\n";
  s << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">median latency (ns)</text>\n";
  s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    s << px(static_cast<double>(map.grid[i])) << "," << py(map.latency[i]) << " ";
  }
  s << "\"/>\n";
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    if (!map.is_lhp(map.grid[i])) continue;
    s << "<circle class=\"lhp\" cx=\"" << px(static_cast<double>(map.grid[i])) << "\" cy=\"" << py(map.latency[i])
      << "\" r=\"3.5\" fill=\"#d62728\"><title>LHP " << map.grid[i] << "</title></circle>\n";
  }
  s << "<text x=\"" << w - right << "\" y=\"" << top - 8 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
    << "font-size=\"11\">" << map.lhps.size() << " LHPs / " << map.grid.size() << " points, redundancy "
    << format_percent(map.redundancy) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractViolation("spearman: need two equal-length series");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lhsynth::latlab
