// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lhsynth/latlab/profile.hpp"
#include "lhsynth/synthflow/report.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const auto out = fs::temp_directory_path() / "lhsynth_cli_stdout.txt";
  const std::string cmd = std::string("LHSYNTH_LOG=quiet ") + LHSYNTH_CLI + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lhsynth_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tiny() { return std::string(LHSYNTH_FIXTURES) + "/tiny_flow.json"; }

std::string write_spec(const std::string& dir, const std::string& json) {
  const auto path = dir + "/curve.json";
  std::ofstream(path) << json;
  return path;
}

}  // namespace

TEST_CASE("profile writes one row per grid point and is deterministic on the virtual clock") {
  const auto dir = scratch("profile");
  const auto spec = write_spec(dir, R"({"base_ns": 900, "slope_ns": 2, "period": 32, "jump_ns": 100})");
  const auto a = cli("profile --grid 64:512:16 --batch 16 --runs 50 --backend synthetic:" + spec + " --out " + dir + "/a.csv");
  const auto b = cli("profile --grid 64:512:16 --batch 16 --runs 50 --backend synthetic:" + spec + " --out " + dir + "/b.csv");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(lhsynth::latlab::load_profile(dir + "/a.csv").grid.size() == 29);
  CHECK(slurp(dir + "/a.csv") == slurp(dir + "/b.csv"));
}

TEST_CASE("usage and config errors exit with 2") {
  const auto dir = scratch("usage");
  CHECK(cli("profile --grid 10:5:1 --out " + dir + "/p.csv").code == 2);
  CHECK(cli("profile --grid 10:5 --out " + dir + "/p.csv").code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("synthesize --config " + tiny() + " --out " + dir + "/flow").code == 2);
  CHECK(cli("synthesize --config " + dir + "/missing.json --sweep --out " + dir + "/flow").code == 2);
  std::ofstream(dir + "/bad.json") << R"({"schema_version": 99})";
  CHECK(cli("synthesize --config " + dir + "/bad.json --sweep --out " + dir + "/flow").code == 2);
}

TEST_CASE("runtime failures exit with 1") {
  const auto dir = scratch("runtime");
  CHECK(cli("analyze --profile " + dir + "/nope.csv").code == 1);
  CHECK(cli("analyze --profile " + std::string(LHSYNTH_FIXTURES) + "/missing_column.csv").code == 1);
  std::ofstream(dir + "/junk.bin") << "not a checkpoint";
  CHECK(cli("eval --checkpoint " + dir + "/junk.bin").code == 1);
}

TEST_CASE("analyze reports LHPs and redundancy") {
  const auto dir = scratch("analyze");
  const auto saw = cli("analyze --profile " + std::string(LHSYNTH_FIXTURES) + "/sawtooth_profile.csv --out " + dir +
                       "/r.json --svg " + dir + "/p.svg");
  REQUIRE(saw.code == 0);
  CHECK(saw.out.find("redundancy 55.6%") != std::string::npos);
  const auto report = slurp(dir + "/r.json");
  CHECK(report.find("55.6%") != std::string::npos);
  const auto svg = slurp(dir + "/p.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("class=\"lhp\"") != std::string::npos);

  const auto spec = write_spec(dir, R"({"base_ns": 9000, "slope_ns": -3})");
  REQUIRE(cli("profile --grid 8:256:8 --runs 5 --warmup 0 --backend synthetic:" + spec + " --out " + dir + "/dec.csv").code == 0);
  const auto dec = cli("analyze --profile " + dir + "/dec.csv");
  REQUIRE(dec.code == 0);
  CHECK(dec.out.find("redundancy 0.0%") != std::string::npos);
}

TEST_CASE("synthesize, eval, report and bench agree") {
  const auto dir = scratch("flow");
  const auto s = cli("synthesize --config " + tiny() + " --sweep --out " + dir + "/out");
  REQUIRE(s.code == 0);
  const auto rep = lhsynth::synthflow::load_report(dir + "/out");
  REQUIRE(rep.complete);
  CHECK(rep.rows.size() == 5);
  CHECK(fs::exists(dir + "/out/masks/manifest.json"));
  CHECK(fs::exists(dir + "/out/profile.csv"));

  const auto e = cli("eval --checkpoint " + dir + "/out/checkpoint.bin");
  REQUIRE(e.code == 0);
  const auto pos = e.out.find("perplexity ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::strtod(e.out.c_str() + pos + 11, nullptr) == rep.rows.back().val_ppl);

  const auto r = cli("report --flow " + dir + "/out");
  CHECK(r.code == 0);
  CHECK(r.out.find("PARTIAL") == std::string::npos);

  const auto b1 = cli("bench --checkpoint " + dir + "/out/checkpoint.bin --virtual");
  const auto b2 = cli("bench --checkpoint " + dir + "/out/checkpoint.bin --virtual");
  CHECK(b1.code == 0);
  CHECK(b1.out == b2.out);
  CHECK(b1.out.find("median_ns") != std::string::npos);
  const auto real = cli("bench --checkpoint " + dir + "/out/checkpoint.bin --reps 5");
  CHECK(real.code == 0);

  const auto cpu = cli("synthesize --config " + tiny() + " --cpu-mode --out " + dir + "/cpu");
  REQUIRE(cpu.code == 0);
  CHECK(lhsynth::synthflow::load_report(dir + "/cpu").rows.size() == 3);
}

TEST_CASE("an interrupted flow is reported as partial and resumes") {
  const auto dir = scratch("partial");
  REQUIRE(cli("synthesize --config " + tiny() + " --sweep --stop-after 3 --out " + dir).code == 0);
  const auto r = cli("report --flow " + dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("PARTIAL") != std::string::npos);
  REQUIRE(cli("synthesize --config " + tiny() + " --resume --out " + dir).code == 0);
  CHECK(lhsynth::synthflow::load_report(dir).complete);
}
