// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

// lhsynth: profile, analyze, synthesize, eval, report, bench.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
// LHSYNTH_LOG=quiet|info (default info) controls progress output on stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lhsynth/common/error.hpp"
#include "lhsynth/latlab/backend.hpp"
#include "lhsynth/latlab/hysteresis.hpp"
#include "lhsynth/latlab/profile.hpp"
#include "lhsynth/numkit/kernels.hpp"
#include "lhsynth/synthflow/checkpoint.hpp"
#include "lhsynth/synthflow/config.hpp"
#include "lhsynth/synthflow/flow.hpp"
#include "lhsynth/synthflow/report.hpp"

namespace {

using namespace lhsynth;

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

bool verbose() {
  const char* v = std::getenv("LHSYNTH_LOG");
  return v == nullptr || std::string(v) != "quiet";
}

void info(const std::string& line) {
  if (verbose()) std::cerr << line << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write '" + path + "'");
}

struct ProfileArgs {
  std::string grid;
  std::size_t batch = 16;
  std::size_t runs = 50;
  std::size_t warmup = 10;
  std::string backend = "native";
  std::string out;
};

int cmd_profile(const ProfileArgs& a) {
  const auto grid = latlab::parse_grid(a.grid);
  auto backend = latlab::make_backend(a.backend);
  const auto res = latlab::sweep(*backend, grid, a.batch, {a.warmup, a.runs});
  latlab::save_profile(res.profile, a.out);
  if (!res.complete) {
    std::cerr << "sweep stopped at " << res.error << "; partial profile written to " << a.out << "\n";
    return kRuntime;
  }
  info("wrote " + std::to_string(grid.size()) + " points to " + a.out);
  return kOk;
}

struct AnalyzeArgs {
  std::string profile;
  std::string out;
  std::string svg;
  std::string rule = "prefix-min";
};

int cmd_analyze(const AnalyzeArgs& a) {
  const auto rule = latlab::parse_lhp_rule(a.rule);
  if (!rule) throw ConfigError("--rule must be prefix-min or suffix-min");
  const auto profile = latlab::load_profile(a.profile);
  const auto map = latlab::detect_lhps(profile, *rule);
  const std::string report = latlab::hysteresis_report_json(map, profile);
  if (a.out.empty()) std::cout << report;
  else write_text(a.out, report);
  if (!a.svg.empty()) write_text(a.svg, latlab::hysteresis_svg(map, profile.backend + " batch " + std::to_string(profile.batch)));
  std::cout << "lhps " << map.lhps.size() << " of " << map.grid.size() << ", redundancy "
            << latlab::format_percent(map.redundancy) << "\n";
  return kOk;
}

struct SynthArgs {
  std::string config;
  std::string profile;
  bool sweep = false;
  bool cpu_mode = false;
  std::string out;
  bool resume = false;
  std::size_t stop_after = 0;
};

int cmd_synthesize(const SynthArgs& a) {
  auto cfg = synthflow::load_config(a.config);
  if (a.cpu_mode) cfg.cpu_mode = true;
  synthflow::FlowOptions opt;
  opt.out_dir = a.out;
  opt.resume = a.resume;
  opt.stop_after_units = a.stop_after;
  opt.log = [](const std::string& line) { info(line); };
  const bool have_checkpoint = a.resume && std::filesystem::exists(synthflow::checkpoint_path(a.out));
  if (!cfg.cpu_mode && !have_checkpoint) {
    if (!a.profile.empty()) {
      opt.profile = latlab::load_profile(a.profile);
    } else if (a.sweep) {
      info("sweeping " + cfg.sweep_grid + " (" + synthflow::latency_mode_name(cfg.latency_mode) + " clock)");
      opt.profile = synthflow::sweep_profile(cfg);
    } else {
      throw ConfigError("synthesize needs --profile <file> or --sweep unless --cpu-mode is set");
    }
    std::filesystem::create_directories(a.out);
    latlab::save_profile(*opt.profile, (std::filesystem::path(a.out) / "profile.csv").string());
  }
  const auto report = synthflow::run_flow(cfg, opt);
  std::cout << synthflow::report_table(report);
  return report.complete || (a.stop_after > 0 && report.error.empty()) ? kOk : kRuntime;
}

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::string split = "valid";
};

int cmd_eval(const EvalArgs& a) {
  std::string cfg_json;
  const auto state = synthflow::load_checkpoint(a.checkpoint, &cfg_json);
  if (state.model.cells.empty()) throw InputError("checkpoint holds no model yet");
  auto cfg = synthflow::config_from_json(cfg_json);
  if (!a.corpus.empty()) cfg.corpus = a.corpus;
  const auto data = synthflow::load_flow_data(cfg);
  if (data.vocab.symbols() != state.vocab) throw InputError("corpus vocabulary differs from the checkpoint's");
  const auto& stream = a.split == "test" ? data.test : data.valid;
  const double ppl = synthflow::validation_perplexity(state.model, stream, cfg);
  std::printf("phase %s\nsplit %s\nperplexity %.17g\n", synthflow::phase_name(state.phase), a.split.c_str(), ppl);
  return kOk;
}

int cmd_report(const std::string& dir) {
  const auto report = synthflow::load_report(dir);
  std::cout << synthflow::report_table(report);
  return kOk;
}

struct BenchArgs {
  std::string checkpoint;
  std::size_t batch = 16;
  std::size_t reps = 20;
  bool virtual_clock = false;
};

int cmd_bench(const BenchArgs& a) {
  std::string cfg_json;
  auto state = synthflow::load_checkpoint(a.checkpoint, &cfg_json);
  if (state.model.cells.empty()) throw InputError("checkpoint holds no model yet");
  auto cfg = synthflow::config_from_json(cfg_json);
  cfg.latency_mode = a.virtual_clock ? synthflow::LatencyMode::kVirtual : synthflow::LatencyMode::kReal;
  cfg.latency_batch = a.batch;
  cfg.latency_measure.measured_runs = a.reps;
  if (a.reps < 5) throw ConfigError("--reps must be at least 5");
  const auto s = synthflow::model_latency(cfg, state.model);
  std::printf("clock %s\nbatch %zu\nsteps %zu\nruns %zu\nmedian_ns %.17g\np95_ns %.17g\n",
              a.virtual_clock ? "virtual" : std::string(numkit::isa_name(numkit::kernels().isa)).c_str(), cfg.latency_batch,
              cfg.latency_steps, s.runs, s.median_ns, s.p95_ns);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lhsynth: latency-guided grow-and-prune synthesis of H-LSTM models"};
  app.require_subcommand(1, 1);

  ProfileArgs pa;
  auto* profile = app.add_subcommand("profile", "Sweep matrix-multiply latency over a dimension grid");
  profile->add_option("--grid", pa.grid, "a:b:step, inclusive")->required();
  profile->add_option("--batch", pa.batch, "Rows of the activation operand");
  profile->add_option("--runs", pa.runs, "Timed runs per point (at least 5)");
  profile->add_option("--warmup", pa.warmup, "Discarded warmup runs per point");
  profile->add_option("--backend", pa.backend, "native | native-f32 | synthetic:<specfile>");
  profile->add_option("--out", pa.out, "Profile CSV")->required();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Detect latency hysteresis points in a profile");
  analyze->add_option("--profile", aa.profile, "Profile CSV")->required();
  analyze->add_option("--out", aa.out, "Report JSON (stdout when omitted)");
  analyze->add_option("--svg", aa.svg, "Plot with LHPs marked");
  analyze->add_option("--rule", aa.rule, "prefix-min | suffix-min");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synthesize", "Run the grow-and-prune synthesis flow");
  synth->add_option("--config", sa.config, "Flow config JSON")->required();
  auto* prof_opt = synth->add_option("--profile", sa.profile, "Latency profile CSV");
  synth->add_flag("--sweep", sa.sweep, "Measure the profile before synthesis")->excludes(prof_opt);
  synth->add_flag("--cpu-mode", sa.cpu_mode, "Skip row/column pruning and growth");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_flag("--resume", sa.resume, "Continue from <out>/checkpoint.bin");
  synth->add_option("--stop-after", sa.stop_after, "Stop after this many units (checkpoint kept)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Perplexity of a checkpointed model");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  eval->add_option("--corpus", ea.corpus, "Corpus override (same vocabulary)");
  eval->add_option("--split", ea.split, "valid | test")->check(CLI::IsMember({"valid", "test"}));

  std::string flow_dir;
  auto* report = app.add_subcommand("report", "Print a flow report");
  report->add_option("--flow", flow_dir, "Flow output directory")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Whole-model forward latency of a checkpoint");
  bench->add_option("--checkpoint", ba.checkpoint, "Checkpoint file")->required();
  bench->add_option("--batch", ba.batch, "Batch size");
  bench->add_option("--reps", ba.reps, "Timed repetitions");
  bench->add_flag("--virtual", ba.virtual_clock, "Evaluate the config's synthetic curve instead of timing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*profile) return cmd_profile(pa);
    if (*analyze) return cmd_analyze(aa);
    if (*synth) return cmd_synthesize(sa);
    if (*eval) return cmd_eval(ea);
    if (*report) return cmd_report(flow_dir);
    if (*bench) return cmd_bench(ba);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
