// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/latlab/backend.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lhsynth/common/error.hpp"
#include "lhsynth/numkit/kernels.hpp"
#include "lhsynth/numkit/rng.hpp"

namespace lhsynth::latlab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

template <class T>
class NativeBackend final : public MatmulBackend {
 public:
  std::string identity() const override {
    return std::string(sizeof(T) == 8 ? "native" : "native-f32") + "/" +
           std::string(numkit::isa_name(numkit::kernels().isa));
  }

  void prepare(std::size_t dim, std::size_t batch) override {
    dim_ = dim;
    batch_ = batch;
    numkit::SeededRng rng(dim * 131 + batch);
    x_.resize(batch * dim);
    w_.resize(dim * dim);
    y_.assign(batch * dim, T(0));
    for (auto& v : x_) v = static_cast<T>(rng.uniform(-1, 1));
    for (auto& v : w_) v = static_cast<T>(rng.uniform(-1, 1));
  }

  double timed_run() override {
    numkit::GemmArgs<T> g;
    g.m = batch_;
    g.n = dim_;
    g.k = dim_;
    g.a = x_.data();
    g.a_row_stride = dim_;
    g.b = w_.data();
    g.ldb = dim_;
    g.c = y_.data();
    g.ldc = dim_;
    const auto& table = numkit::kernels();
    const auto t0 = Clock::now();
    if constexpr (sizeof(T) == 8) {
      table.gemm_f64(g);
    } else {
      table.gemm_f32(g);
    }
    const auto t1 = Clock::now();
    sink_ = sink_ + static_cast<double>(y_[0]);
    return elapsed_ns(t0, t1);
  }

 private:
  std::size_t dim_ = 0, batch_ = 0;
  std::vector<T> x_, w_, y_;
  volatile double sink_ = 0.0;
};

class SyntheticBackend final : public MatmulBackend {
 public:
  explicit SyntheticBackend(const SyntheticCurveSpec& spec) : spec_(spec), rng_(spec.seed) {}

  std::string identity() const override {
    std::ostringstream s;
    s << "synthetic(" << (spec_.virtual_clock ? "virtual" : "real") << ",base=" << spec_.base_ns
      << ",slope=" << spec_.slope_ns << ",period=" << spec_.period << ",jump=" << spec_.jump_ns << ")";
    return s.str();
  }

  void prepare(std::size_t dim, std::size_t) override {
    dim_ = dim;
    const double l = spec_.latency(dim);
    if (!(l > 0.0)) throw MeasurementError("synthetic curve gives non-positive latency", dim);
  }

  double timed_run() override {
    const double target = spec_.latency(dim_);
    if (spec_.virtual_clock) return target;
    const double want = target * (1.0 + spec_.noise * rng_.uniform(-1.0, 1.0));
    const auto t0 = Clock::now();
    auto t1 = t0;
    while (elapsed_ns(t0, t1) < want) t1 = Clock::now();
    return elapsed_ns(t0, t1);
  }

  bool virtual_clock() const override { return spec_.virtual_clock; }

 private:
  SyntheticCurveSpec spec_;
  numkit::SeededRng rng_;
  std::size_t dim_ = 0;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

double SyntheticCurveSpec::latency(std::size_t dim) const {
  double l = base_ns + slope_ns * static_cast<double>(dim);
  if (period > 0) {
    const std::size_t gap = (period - dim % period) % period;
    l += jump_ns * static_cast<double>(gap) / static_cast<double>(period);
  }
  return l;
}

SyntheticCurveSpec curve_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("synthetic curve spec: ") + e.what());
  }
  SyntheticCurveSpec s;
  try {
    s.base_ns = j.value("base_ns", s.base_ns);
    s.slope_ns = j.value("slope_ns", s.slope_ns);
    s.period = j.value("period", s.period);
    s.jump_ns = j.value("jump_ns", s.jump_ns);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    const std::string mode = j.value("mode", std::string("virtual"));
    if (mode != "virtual" && mode != "real") throw ConfigError("synthetic curve spec: mode must be virtual or real");
    s.virtual_clock = mode == "virtual";
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError(std::string("synthetic curve spec: ") + e.what());
  }
  if (s.noise < 0.0 || s.noise >= 1.0) throw ConfigError("synthetic curve spec: noise must lie in [0, 1)");
  return s;
}

std::string curve_spec_to_json(const SyntheticCurveSpec& s) {
  nlohmann::json j{{"base_ns", s.base_ns}, {"slope_ns", s.slope_ns}, {"period", s.period},
                   {"jump_ns", s.jump_ns}, {"noise", s.noise}, {"seed", s.seed},
                   {"mode", s.virtual_clock ? "virtual" : "real"}};
  return j.dump(2);
}

SyntheticCurveSpec load_curve_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic curve spec '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return curve_spec_from_json(ss.str());
}

std::unique_ptr<MatmulBackend> make_native_backend(bool single_precision) {
  if (single_precision) return std::make_unique<NativeBackend<float>>();
  return std::make_unique<NativeBackend<double>>();
}

std::unique_ptr<MatmulBackend> make_synthetic_backend(const SyntheticCurveSpec& spec) {
  return std::make_unique<SyntheticBackend>(spec);
}

std::unique_ptr<MatmulBackend> make_backend(const std::string& name) {
  if (name == "native") return make_native_backend(false);
  if (name == "native-f32") return make_native_backend(true);
  const std::string prefix = "synthetic:";
  if (name.rfind(prefix, 0) == 0) return make_synthetic_backend(load_curve_spec(name.substr(prefix.size())));
  throw ConfigError("unknown backend '" + name + "' (expected native, native-f32 or synthetic:<specfile>)");
}

SampleStats measure_point(MatmulBackend& backend, std::size_t dim, std::size_t batch, const MeasureConfig& cfg) {
  if (dim == 0 || batch == 0) throw ContractViolation("measure_point: dim and batch must be positive");
  if (cfg.measured_runs < 5) throw ContractViolation("measure_point: at least 5 measured runs required");
  std::vector<double> d;
  try {
    backend.prepare(dim, batch);
    for (std::size_t i = 0; i < cfg.warmup_runs; ++i) backend.timed_run();
    for (std::size_t i = 0; i < cfg.measured_runs; ++i) d.push_back(backend.timed_run());
  } catch (const MeasurementError&) {
    throw;
  } catch (const std::exception& e) {
    throw MeasurementError(std::string("backend failure: ") + e.what(), dim);
  }
  SampleStats s = summarize(std::move(d));
  // Sub-nanosecond runs can read as zero on coarse clocks.
  if (!(s.median_ns > 0.0)) throw MeasurementError("clock resolution too coarse (zero duration)", dim);
  return s;
}

SweepResult sweep(MatmulBackend& backend, const std::vector<std::size_t>& grid, std::size_t batch,
                  const MeasureConfig& cfg) {
  if (grid.empty()) throw ContractViolation("sweep: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw ContractViolation("sweep: grid must be strictly ascending");
  }
  SweepResult r;
  r.profile.hardware_id = backend.virtual_clock() ? "virtual" : host_hardware_id();
  r.profile.backend = backend.identity();
  r.profile.timestamp = backend.virtual_clock() ? "virtual" : utc_now();
  r.profile.batch = batch;
  for (std::size_t d : grid) {
    try {
      r.profile.samples.push_back(measure_point(backend, d, batch, cfg));
      r.profile.grid.push_back(d);
    } catch (const MeasurementError& e) {
      r.complete = false;
      r.error = e.what();
      r.failed_dim = d;
      r.profile.partial = true;
      break;
    }
  }
  return r;
}

SampleStats time_callable(const std::function<void()>& fn, const MeasureConfig& cfg) {
  for (std::size_t i = 0; i < cfg.warmup_runs; ++i) fn();
  std::vector<double> d;
  for (std::size_t i = 0; i < cfg.measured_runs; ++i) {
    const auto t0 = Clock::now();
    fn();
    d.push_back(elapsed_ns(t0, Clock::now()));
  }
  return summarize(std::move(d));
}

std::string host_hardware_id() {
  std::ifstream in("/proc/cpuinfo");
  std::string line, model = "unknown-cpu";
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + " [" + std::string(numkit::isa_name(numkit::kernels().isa)) + "]";
}

}  // namespace lhsynth::latlab
