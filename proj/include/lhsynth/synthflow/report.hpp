// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lhsynth/growprune/mask_io.hpp"

namespace lhsynth::synthflow {

// One row per completed step, plus the baseline.
struct ReportRow {
  std::string step;  // baseline | wg | rcp | rcg | wp
  std::size_t d_s = 0;
  std::size_t d_h = 0;
  std::size_t d_x = 0;
  std::size_t cell_total = 0;
  std::size_t cell_active = 0;
  std::size_t io_total = 0;
  std::size_t io_active = 0;
  double val_ppl = 0.0;
  double latency_median_ns = 0.0;
  double latency_p95_ns = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct RcgRecord {
  std::size_t pruned_dim = 0;  // tied dim after rcp
  std::size_t target_dim = 0;  // nearest LHP at or above it
  bool lhp_found = false;
  bool noop = false;
  double metric_before = 0.0;
  double metric_after = 0.0;
  friend bool operator==(const RcgRecord&, const RcgRecord&) = default;
};

struct FlowReport {
  std::vector<ReportRow> rows;
  bool complete = false;
  std::string error;  // set when a phase aborted
  bool cpu_mode = false;
  double threshold = 0.0;
  std::size_t seed_cell_active = 0;
  std::vector<double> wg_active_fraction;  // cell active fraction after each growth epoch
  bool rcp_start_violation = false;
  bool wp_start_violation = false;
  std::optional<RcgRecord> rcg;
  std::vector<std::string> events;
  std::vector<growprune::MaskSnapshot> masks;

  const ReportRow* find(const std::string& step) const;
};

std::string report_csv(const FlowReport& report);
std::string report_json(const FlowReport& report);
FlowReport report_from_json(const std::string& text);

// Writes report.csv and report.json into `dir`.
void write_report(const FlowReport& report, const std::string& dir);
FlowReport load_report(const std::string& dir);

// Fixed-width table for terminals; partial reports carry a banner.
std::string report_table(const FlowReport& report);

}  // namespace lhsynth::synthflow
