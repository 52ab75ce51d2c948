// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lhsynth/latlab/profile.hpp"

namespace lhsynth::latlab {

// One square-weight multiplication per call: Y[batch x dim] = X W.
class MatmulBackend {
 public:
  virtual ~MatmulBackend() = default;
  virtual std::string identity() const = 0;
  // Allocates operands for (dim, batch); untimed.
  virtual void prepare(std::size_t dim, std::size_t batch) = 0;
  // Runs once and returns its duration in nanoseconds.
  virtual double timed_run() = 0;
  virtual bool virtual_clock() const { return false; }
};

// Dense product through the runtime-selected numkit kernels.
std::unique_ptr<MatmulBackend> make_native_backend(bool single_precision = false);

// L(d) = base + slope * d + jump * ((period - d mod period) mod period) / period.
// A period of 0 disables the sawtooth. Negative slopes are allowed as long
// as L stays positive on the queried dims.
struct SyntheticCurveSpec {
  double base_ns = 1000.0;
  double slope_ns = 0.0;
  std::size_t period = 0;
  double jump_ns = 0.0;
  double noise = 0.0;  // relative amplitude, real-clock mode only
  std::uint64_t seed = 0;
  bool virtual_clock = true;

  double latency(std::size_t dim) const;
  friend bool operator==(const SyntheticCurveSpec&, const SyntheticCurveSpec&) = default;
};

// JSON object with the fields above ("mode": "virtual" | "real").
SyntheticCurveSpec load_curve_spec(const std::string& path);
SyntheticCurveSpec curve_spec_from_json(const std::string& text);
std::string curve_spec_to_json(const SyntheticCurveSpec& spec);

// Virtual clock: returns L(d) exactly. Real clock: busy-waits L(d) with
// multiplicative noise. Non-positive L(d) raises MeasurementError.
std::unique_ptr<MatmulBackend> make_synthetic_backend(const SyntheticCurveSpec& spec);

// "native", "native-f32" or "synthetic:<specfile>". Throws ConfigError.
std::unique_ptr<MatmulBackend> make_backend(const std::string& name);

struct MeasureConfig {
  std::size_t warmup_runs = 10;
  std::size_t measured_runs = 50;
};

// Warmups are discarded. measured_runs must be at least 5.
SampleStats measure_point(MatmulBackend& backend, std::size_t dim, std::size_t batch, const MeasureConfig& cfg);

struct SweepResult {
  LatencyProfile profile;
  bool complete = true;
  std::string error;
  std::size_t failed_dim = 0;
};

// Sequential sweep. A failing point stops the sweep; the samples gathered so
// far are kept and the profile is flagged partial.
SweepResult sweep(MatmulBackend& backend, const std::vector<std::size_t>& grid, std::size_t batch,
                  const MeasureConfig& cfg);

// Times an arbitrary callable with the same warmup/median policy.
SampleStats time_callable(const std::function<void()>& fn, const MeasureConfig& cfg);

std::string host_hardware_id();

}  // namespace lhsynth::latlab
