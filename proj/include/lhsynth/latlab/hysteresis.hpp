// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lhsynth/latlab/profile.hpp"

namespace lhsynth::latlab {

enum class LhpRule {
  // d is an LHP when it is strictly faster than every smaller grid point.
  kPrefixMin,
  // d is an LHP when every larger grid point is strictly slower.
  kSuffixMin,
};

const char* lhp_rule_name(LhpRule rule);
std::optional<LhpRule> parse_lhp_rule(const std::string& name);

struct HysteresisBin {
  std::optional<std::size_t> lower_exclusive;  // previous LHP, none for the first bin
  std::size_t upper = 0;                       // last grid point of the bin
  std::optional<std::size_t> lhp;              // equals upper, or none for a trailing bin
  std::size_t points = 0;
};

struct HysteresisMap {
  LhpRule rule = LhpRule::kPrefixMin;
  std::vector<std::size_t> grid;
  std::vector<double> latency;  // central statistic per grid point
  std::vector<std::size_t> lhps;
  std::vector<HysteresisBin> bins;
  double redundancy = 0.0;

  double latency_at(std::size_t dim) const;  // grid dims only
  bool is_lhp(std::size_t dim) const;
};

HysteresisMap detect_lhps(const std::vector<std::size_t>& grid, const std::vector<double>& latency,
                          LhpRule rule = LhpRule::kPrefixMin);
HysteresisMap detect_lhps(const LatencyProfile& profile, LhpRule rule = LhpRule::kPrefixMin);

// 1 - |LHPs| / |grid|.
double redundancy(const HysteresisMap& map);

struct NearestLhp {
  std::size_t dim = 0;
  bool found = true;  // false: no LHP at or above the query, dim echoes it
};

// Smallest LHP >= d. Throws InputError when d exceeds the grid.
NearestLhp nearest_lhp(const HysteresisMap& map, std::size_t d);

// JSON report with the LHP list, bins and redundancy (also as a percentage
// with one decimal).
std::string hysteresis_report_json(const HysteresisMap& map, const LatencyProfile& profile);
std::string format_percent(double fraction);

// Self-contained SVG line chart of latency against dimension, LHPs marked.
std::string hysteresis_svg(const HysteresisMap& map, const std::string& title);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lhsynth::latlab
