// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lhsynth::latlab {

struct SampleStats {
  double mean_ns = 0.0;
  double median_ns = 0.0;
  double p95_ns = 0.0;
  std::size_t runs = 0;

  friend bool operator==(const SampleStats&, const SampleStats&) = default;
};

// Mean, median (mean of the middle pair for even counts) and nearest-rank
// p95 of raw durations. Throws ContractViolation on an empty list.
SampleStats summarize(std::vector<double> durations_ns);

struct LatencyProfile {
  std::string hardware_id;
  std::string backend;
  std::string timestamp;  // "virtual" for virtual-clock profiles
  std::size_t batch = 0;
  std::vector<std::size_t> grid;
  std::vector<SampleStats> samples;
  bool partial = false;

  std::vector<double> medians() const;
  // Checks the invariants (ascending grid, positive stats, runs >= min_runs).
  void validate(std::size_t min_runs = 1) const;

  friend bool operator==(const LatencyProfile&, const LatencyProfile&) = default;
};

// "a:b:step" inclusive on both ends. Throws ConfigError.
std::vector<std::size_t> parse_grid(const std::string& text);

// CSV with "# key=value" preamble lines and the columns
// dim,batch,mean_ns,median_ns,p95_ns,runs.
void save_profile(const LatencyProfile& p, const std::string& path);
LatencyProfile load_profile(const std::string& path);
std::string profile_to_csv(const LatencyProfile& p);
LatencyProfile profile_from_csv(const std::string& text);

}  // namespace lhsynth::latlab
