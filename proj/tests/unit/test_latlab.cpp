// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lhsynth/common/error.hpp"
#include "lhsynth/latlab/backend.hpp"
#include "lhsynth/latlab/hysteresis.hpp"
#include "lhsynth/latlab/profile.hpp"
#include "lhsynth/numkit/rng.hpp"
#include "support/lhp_oracle.hpp"

using namespace lhsynth;
using namespace lhsynth::latlab;

namespace {

std::string fixture(const std::string& name) { return std::string(LHSYNTH_FIXTURES) + "/" + name; }

SyntheticCurveSpec sawtooth(std::size_t period, double slope = 1.0) {
  SyntheticCurveSpec s;
  s.base_ns = 1000;
  s.slope_ns = slope;
  s.period = period;
  s.jump_ns = 500;
  return s;
}

MeasureConfig quick() { return MeasureConfig{1, 5}; }

}  // namespace

TEST_CASE("summary statistics") {
  const auto s = summarize({5, 1, 4, 2, 3, 100});
  CHECK(s.runs == 6);
  CHECK(s.median_ns == 3.5);
  CHECK(s.p95_ns == 100);
  CHECK(s.mean_ns == doctest::Approx(115.0 / 6));
  CHECK(summarize({7}).p95_ns == 7);
}

TEST_CASE("measure_point") {
  SUBCASE("constant curve") {
    auto b = make_synthetic_backend(SyntheticCurveSpec{});
    const auto s = measure_point(*b, 10, 16, quick());
    CHECK(s.median_ns == 1000.0);
    CHECK(s.runs == 5);
  }
  SUBCASE("real-clock constant curve stays near 1 us") {
    SyntheticCurveSpec spec;
    spec.virtual_clock = false;
    auto b = make_synthetic_backend(spec);
    const auto s = measure_point(*b, 10, 16, MeasureConfig{2, 9});
    CHECK(s.median_ns >= 1000.0);
    CHECK(s.median_ns < 1000.0 + 200000.0);
  }
  SUBCASE("native backend populates all stats") {
    auto b = make_native_backend();
    const auto s = measure_point(*b, 32, 16, quick());
    CHECK(s.median_ns > 0);
    CHECK(s.p95_ns >= s.median_ns);
    CHECK(s.mean_ns > 0);
  }
  SUBCASE("sawtooth makes 63 slower than 64") {
    auto b = make_synthetic_backend(sawtooth(64));
    CHECK(measure_point(*b, 63, 16, quick()).median_ns > measure_point(*b, 64, 16, quick()).median_ns);
  }
  SUBCASE("too few runs") {
    auto b = make_synthetic_backend(SyntheticCurveSpec{});
    CHECK_THROWS_AS(measure_point(*b, 8, 16, MeasureConfig{0, 4}), ContractViolation);
  }
  SUBCASE("non-positive curve is a measurement error naming the dim") {
    SyntheticCurveSpec s;
    s.slope_ns = -10;
    auto b = make_synthetic_backend(s);
    try {
      measure_point(*b, 150, 16, quick());
      FAIL("expected MeasurementError");
    } catch (const MeasurementError& e) {
      CHECK(e.dim() == 150);
    }
  }
}

TEST_CASE("sweep") {
  auto b = make_synthetic_backend(sawtooth(0));
  CHECK(sweep(*b, {7}, 16, quick()).profile.samples.size() == 1);
  const auto grid = parse_grid("64:512:16");
  CHECK(grid.size() == 29);
  const auto r = sweep(*b, grid, 16, quick());
  CHECK(r.complete);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(r.profile.samples[i].median_ns > r.profile.samples[i - 1].median_ns);
  }
  CHECK(r.profile.timestamp == "virtual");

  SUBCASE("failing point keeps the partial profile") {
    SyntheticCurveSpec s;
    s.slope_ns = -4;
    auto bad = make_synthetic_backend(s);
    const auto p = sweep(*bad, parse_grid("100:400:100"), 16, quick());
    CHECK(!p.complete);
    CHECK(p.failed_dim == 300);
    CHECK(p.profile.grid == std::vector<std::size_t>{100, 200});
    CHECK(p.profile.partial);
  }
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("1:3:1") == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(parse_grid("10:5:1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("10:20"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1:20:0"), ConfigError);
}

TEST_CASE("LHP detection examples") {
  const std::vector<std::size_t> grid{1, 2, 3, 4, 5};
  SUBCASE("increasing curve: only the first point") {
    const auto m = detect_lhps(grid, {1, 2, 3, 4, 5});
    CHECK(m.lhps == std::vector<std::size_t>{1});
    CHECK(m.bins.size() == 2);
    CHECK(!m.bins[1].lhp);
    CHECK(m.redundancy == doctest::Approx(0.8));
  }
  SUBCASE("decreasing curve: every point") {
    const auto m = detect_lhps(grid, {5, 4, 3, 2, 1});
    CHECK(m.lhps == grid);
    CHECK(m.redundancy == 0.0);
  }
  SUBCASE("tie run keeps its smallest member") {
    const auto m = detect_lhps(grid, {5, 3, 3, 4, 2});
    CHECK(m.lhps == std::vector<std::size_t>{1, 2, 5});
  }
  SUBCASE("suffix rule") {
    const auto m = detect_lhps(grid, {1, 3, 2, 5, 4}, LhpRule::kSuffixMin);
    CHECK(m.lhps == std::vector<std::size_t>{1, 3, 5});
  }
  SUBCASE("one LHP in ten points") {
    std::vector<std::size_t> g(10);
    std::vector<double> l(10);
    for (std::size_t i = 0; i < 10; ++i) {
      g[i] = i + 1;
      l[i] = 10.0 + static_cast<double>(i);
    }
    CHECK(detect_lhps(g, l).redundancy == doctest::Approx(0.9));
  }
}

TEST_CASE("sawtooth with period-64 minima") {
  auto b = make_synthetic_backend(sawtooth(64, -0.05));
  std::vector<std::size_t> grid;
  for (std::size_t d = 64; d < 704; ++d) grid.push_back(d);
  const auto p = sweep(*b, grid, 16, quick()).profile;
  const auto m = detect_lhps(p);
  std::vector<std::size_t> want;
  for (std::size_t d = 64; d < 704; d += 64) want.push_back(d);
  CHECK(m.lhps == want);
  CHECK(m.lhps == testing::oracle_prefix_min(p.grid, p.medians()));
  CHECK(m.redundancy == doctest::Approx(1.0 - 10.0 / 640.0));
  CHECK(m.redundancy > 0.9);
}

TEST_CASE("bins partition the grid") {
  numkit::SeededRng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::size_t> g;
    std::vector<double> l;
    const std::size_t n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      g.push_back(i * 3 + 1);
      l.push_back(static_cast<double>(rng.below(10)));
    }
    const auto m = detect_lhps(g, l);
    std::size_t covered = 0;
    std::optional<std::size_t> prev;
    for (const auto& bin : m.bins) {
      CHECK(bin.lower_exclusive == prev);
      covered += bin.points;
      prev = bin.upper;
      if (bin.lhp) CHECK(*bin.lhp == bin.upper);
    }
    CHECK(covered == n);
    CHECK(prev == g.back());
  }
}

TEST_CASE("nearest LHP") {
  std::vector<std::size_t> grid;
  std::vector<double> lat;
  for (std::size_t d = 1100; d <= 1300; ++d) {
    grid.push_back(d);
    lat.push_back(d % 100 == 0 ? 100.0 - static_cast<double>(d) / 100.0 : 200.0);
  }
  const auto m = detect_lhps(grid, lat);
  CHECK(nearest_lhp(m, 1197).dim == 1200);
  CHECK(nearest_lhp(m, 1200).dim == 1200);
  CHECK(nearest_lhp(m, 1100).dim == 1100);
  CHECK_THROWS_AS(nearest_lhp(m, 1301), InputError);
  const auto none = nearest_lhp(m, 1250);
  CHECK(none.dim == 1300);

  const auto inc = detect_lhps({1, 2, 3}, {1, 2, 3});
  const auto r = nearest_lhp(inc, 2);
  CHECK(!r.found);
  CHECK(r.dim == 2);
}

TEST_CASE("dominance over random curves") {
  numkit::SeededRng rng(99);
  for (int t = 0; t < 1000; ++t) {
    SyntheticCurveSpec s;
    s.base_ns = rng.uniform(500, 5000);
    s.slope_ns = rng.uniform(-2, 4);
    s.period = 1 + rng.below(80);
    s.jump_ns = rng.uniform(0, 800);
    auto b = make_synthetic_backend(s);
    std::vector<std::size_t> grid;
    for (std::size_t d = 16; d <= 400; d += 1 + rng.below(8)) grid.push_back(d);
    const auto p = sweep(*b, grid, 16, quick()).profile;
    if (p.partial) continue;
    const auto m = detect_lhps(p);
    CHECK(m.lhps == testing::oracle_prefix_min(p.grid, p.medians()));
    for (std::size_t d : grid) {
      const auto near = nearest_lhp(m, d);
      CHECK(m.latency_at(near.dim) <= m.latency_at(d));
    }
  }
}

TEST_CASE("profile CSV") {
  SUBCASE("round trip") {
    auto b = make_synthetic_backend(sawtooth(16));
    const auto p = sweep(*b, parse_grid("8:96:8"), 16, quick()).profile;
    CHECK(profile_from_csv(profile_to_csv(p)) == p);
  }
  SUBCASE("hand-written fixture") {
    const auto p = load_profile(fixture("three_points.csv"));
    CHECK(p.grid == std::vector<std::size_t>{64, 80, 96});
    CHECK(p.samples[0].mean_ns == 1500.5);
    CHECK(p.samples[1].median_ns == 1400.75);
    CHECK(p.samples[2].p95_ns == 2500);
    CHECK(p.batch == 16);
    CHECK(p.hardware_id == "fixture");
  }
  SUBCASE("missing column names the column") {
    try {
      load_profile(fixture("missing_column.csv"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("median_ns") != std::string::npos);
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("bad value reports its line") {
    try {
      profile_from_csv("dim,batch,mean_ns,median_ns,p95_ns,runs\n8,16,1,1,1,5\n16,16,x,1,1,5\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}

TEST_CASE("report and chart") {
  const auto p = load_profile(fixture("sawtooth_profile.csv"));
  const auto m = detect_lhps(p);
  CHECK(m.lhps == std::vector<std::size_t>{8, 16, 28, 32});
  const std::string report = hysteresis_report_json(m, p);
  CHECK(report.find("\"redundancy_pct\": \"55.6%\"") != std::string::npos);
  const std::string svg = hysteresis_svg(m, "fixture");
  CHECK(svg.find("<svg") == 0);
  std::size_t circles = 0;
  for (std::size_t pos = 0; (pos = svg.find("class=\"lhp\"", pos)) != std::string::npos; ++pos) ++circles;
  CHECK(circles == 4);
  CHECK(format_percent(0.98437) == "98.4%");
}

TEST_CASE("curve spec JSON") {
  const auto s = sawtooth(64, -0.5);
  CHECK(curve_spec_from_json(curve_spec_to_json(s)) == s);
  CHECK_THROWS_AS(curve_spec_from_json("{\"mode\": \"sideways\"}"), ConfigError);
  CHECK_THROWS_AS(curve_spec_from_json("{"), ConfigError);
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {1, 1, 2}) == doctest::Approx(0.8660254));
}
