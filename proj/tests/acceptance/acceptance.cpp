// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
//   acceptance [--only 1,3,5] [--work DIR] [--toy CONFIG]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "lhsynth/common/error.hpp"
#include "lhsynth/growprune/coordinated.hpp"
#include "lhsynth/growprune/ops.hpp"
#include "lhsynth/latlab/backend.hpp"
#include "lhsynth/latlab/hysteresis.hpp"
#include "lhsynth/synthflow/flow.hpp"
#include "support/lhp_oracle.hpp"
#include "support/oracles.hpp"
#include "support/random_model.hpp"

using namespace lhsynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1: BPTT gradients vs central differences.
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  const numkit::ActivationKind acts[] = {numkit::ActivationKind::kRelu, numkit::ActivationKind::kTanh,
                                         numkit::ActivationKind::kSigmoid};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    numkit::SeededRng rng(1000 + seed);
    const hlstm::ModelDims dims{6, 3, 4, 5, 1, 1};
    auto m = testing::random_model(dims, rng, 0.6, acts[seed % 3]);
    const auto in = testing::random_block(rng, 4, 2, 6);
    const auto tgt = testing::random_block(rng, 4, 2, 6);
    worst = std::max(worst, testing::model_gradient_error(m, in, tgt));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 10.0,
          "max rel err " + fmt("%.3g", worst) + " over 20 seeds, " + fmt("%.2f", secs) + " s"};
}

double grid_value(numkit::SeededRng& rng) { return static_cast<double>(static_cast<int>(rng.below(9)) - 4) * 0.25; }

numkit::MaskedLinear random_layer(numkit::SeededRng& rng, std::size_t m, std::size_t n, double keep) {
  numkit::MaskedLinear l(m, n);
  for (auto& w : l.weight_mut().values()) w = grid_value(rng);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) l.mask_mut().set(r, c, rng.bernoulli(keep));
  }
  l.apply_mask();
  return l;
}

numkit::Matrix random_grad(numkit::SeededRng& rng, std::size_t m, std::size_t n) {
  numkit::Matrix g(m, n);
  for (auto& v : g.values()) v = grid_value(rng);
  return g;
}

std::vector<std::size_t> flipped_on(const numkit::Mask& before, const numkit::Mask& after) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < before.size(); ++k) {
    if (!before.bytes()[k] && after.bytes()[k]) out.push_back(k);
  }
  return out;
}

// 2: selections vs brute-force sort oracles.
Outcome oracle_equivalence() {
  using namespace growprune;
  const auto t0 = Clock::now();
  std::size_t mismatches = 0;
  numkit::SeededRng rng(4242);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.below(10), n = 1 + rng.below(10);
    const double q1 = static_cast<double>(rng.below(11)) / 10.0;
    const double q2 = static_cast<double>(rng.below(11)) / 10.0;
    const auto l = random_layer(rng, m, n, rng.uniform());
    const auto g = random_grad(rng, m, n);

    auto grow = l;
    const auto want_grow = testing::oracle_weight_grow(grow, g, q1);
    weight_grow(grow, g, q1, 0.1);
    mismatches += flipped_on(l.mask(), grow.mask()) != want_grow;

    auto prune = l;
    const auto want_prune = testing::oracle_weight_prune(prune, q1);
    weight_prune(prune, q1);
    mismatches += flipped_on(prune.mask(), l.mask()) != want_prune;

    auto rp = l;
    const auto want_rp = testing::oracle_rc_prune(rp, q1, q2);
    const auto act = ActiveSets::of(l.mask());
    const bool degenerate = (!want_rp.rows.empty() && want_rp.rows.size() == act.rows.size()) ||
                            (!want_rp.cols.empty() && want_rp.cols.size() == act.cols.size());
    try {
      const auto got = rc_prune(rp, q1, q2);
      mismatches += degenerate || got.rows != want_rp.rows || got.cols != want_rp.cols;
    } catch (const ContractViolation&) {
      mismatches += !degenerate;
    }

    auto rg = l;
    const auto want_rg = testing::oracle_rc_grow(rg, g, q1, q2);
    const auto got_rg = rc_grow(rg, g, act, q1, q2, 0.1);
    mismatches += got_rg.rows != want_rg.rows || got_rg.cols != want_rg.cols;
  }

  // Coordinated pruning: summed unit importances, then sort.
  for (int trial = 0; trial < 1000; ++trial) {
    const hlstm::ModelDims dims{2 + rng.below(5), 1 + rng.below(5), 2 + rng.below(6), 2 + rng.below(6), 1, 1};
    auto model = testing::random_model(dims, rng, 0.4 + 0.6 * rng.uniform());
    const double pr = static_cast<double>(rng.below(5)) / 10.0, pc = static_cast<double>(rng.below(5)) / 10.0;
    const auto o = testing::oracle_units(model);
    const auto wh = testing::oracle_unit_prune(o.hidden, o.hidden_on, pr);
    const auto ws = testing::oracle_unit_prune(o.state, o.state_on, pr);
    const auto wx = testing::oracle_unit_prune(o.input, o.input_on, pc);
    const auto n_on = [](const std::vector<bool>& v) { return static_cast<std::size_t>(std::count(v.begin(), v.end(), true)); };
    const bool degenerate = (!wh.empty() && wh.size() == n_on(o.hidden_on)) ||
                            (!ws.empty() && ws.size() == n_on(o.state_on)) ||
                            (!wx.empty() && wx.size() == n_on(o.input_on));
    try {
      const auto res = coordinated_prune(model, 0, pr, pc);
      mismatches += degenerate || res.hidden != wh || res.state != ws || res.input != wx;
    } catch (const ContractViolation&) {
      mismatches += !degenerate;
    }
  }

  // Coordinated growth of one hidden unit: brute-force ranking over partners.
  for (int trial = 0; trial < 1000; ++trial) {
    const hlstm::ModelDims dims{3 + rng.below(3), 2 + rng.below(3), 3 + rng.below(5), 3 + rng.below(5), 1, 1};
    auto model = testing::random_model(dims, rng, 1.0);
    coordinated_prune_counts(model, 0, 1 + rng.below(2), 1 + rng.below(2), 0);
    std::vector<numkit::Matrix> grads;
    for (auto* l : model.masked_layers()) grads.push_back(random_grad(rng, l->out_features(), l->in_features()));
    const auto layers = model.masked_layers();
    std::vector<double> score(dims.hidden, 0.0);
    std::vector<bool> on(dims.hidden, false);
    for (std::size_t g = 0; g < 4; ++g) {
      const auto& h = *layers[2 * g];
      const auto& o = *layers[2 * g + 1];
      for (std::size_t j = 0; j < dims.hidden; ++j) {
        on[j] = on[j] || h.mask().row_any(j) || o.mask().col_any(j);
        for (std::size_t c = 0; c < h.in_features(); ++c) {
          if (h.mask().col_any(c)) score[j] += std::abs(grads[2 * g](j, c));
        }
        for (std::size_t u = 0; u < o.out_features(); ++u) {
          if (o.mask().row_any(u)) score[j] += std::abs(grads[2 * g + 1](u, j));
        }
      }
    }
    std::vector<std::size_t> dormant;
    std::vector<double> ds;
    for (std::size_t j = 0; j < dims.hidden; ++j) {
      if (!on[j]) {
        dormant.push_back(j);
        ds.push_back(score[j]);
      }
    }
    const std::vector<std::size_t> want{dormant[testing::full_sort(ds, true)[0]]};
    mismatches += coordinated_grow_counts(model, 0, grads, 1, 0, 0, 0.1).hidden != want;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0, std::to_string(mismatches) +
                                              " mismatches over 6 x 1000 trials, " + fmt("%.2f", secs) + " s"};
}

// 3: sawtooth with period 64 over 640 grid points.
Outcome lhp_exactness() {
  const auto t0 = Clock::now();
  latlab::SyntheticCurveSpec s;
  s.base_ns = 1000;
  s.slope_ns = -0.05;
  s.period = 64;
  s.jump_ns = 500;
  auto backend = latlab::make_synthetic_backend(s);
  std::vector<std::size_t> grid;
  for (std::size_t d = 64; d < 64 + 640; ++d) grid.push_back(d);
  const auto prof = latlab::sweep(*backend, grid, 16, {1, 5}).profile;
  const auto map = latlab::detect_lhps(prof);
  std::vector<std::size_t> hand;
  for (std::size_t d = 64; d < 704; d += 64) hand.push_back(d);
  std::size_t counted = 0;
  for (std::size_t d : grid) counted += std::find(hand.begin(), hand.end(), d) == hand.end();
  const double want_red = static_cast<double>(counted) / static_cast<double>(grid.size());
  const bool ok = map.lhps == hand && map.lhps == testing::oracle_prefix_min(grid, prof.medians()) &&
                  map.redundancy == want_red && map.redundancy > 0.9 && seconds_since(t0) < 1.0;
  return {ok, std::to_string(map.lhps.size()) + " LHPs, redundancy " + latlab::format_percent(map.redundancy) + ", " +
                  fmt("%.3f", seconds_since(t0)) + " s"};
}

// 4: L(nearest_lhp(d)) <= L(d) on random curves.
Outcome lhp_dominance() {
  const auto t0 = Clock::now();
  numkit::SeededRng rng(7);
  std::size_t violations = 0, curves = 0;
  while (curves < 1000) {
    latlab::SyntheticCurveSpec s;
    s.base_ns = rng.uniform(500, 5000);
    s.slope_ns = rng.uniform(-2, 4);
    s.period = rng.below(80);
    s.jump_ns = rng.uniform(0, 800);
    auto b = latlab::make_synthetic_backend(s);
    std::vector<std::size_t> grid;
    for (std::size_t d = 8; d <= 600; d += 1 + rng.below(8)) grid.push_back(d);
    const auto p = latlab::sweep(*b, grid, 16, {1, 5}).profile;
    if (p.partial) continue;
    ++curves;
    const auto m = latlab::detect_lhps(p);
    for (std::size_t d : grid) violations += m.latency_at(latlab::nearest_lhp(m, d).dim) > m.latency_at(d);
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 5.0,
          std::to_string(violations) + " violations over 1000 curves, " + fmt("%.2f", secs) + " s"};
}

struct ToyRun {
  synthflow::FlowReport report;
  std::optional<latlab::HysteresisMap> map;
  std::string csv;
  double seconds = 0.0;
};

ToyRun run_toy(const std::string& config, const std::string& dir) {
  const auto t0 = Clock::now();
  const auto cfg = synthflow::load_config(config);
  fs::remove_all(dir);
  synthflow::FlowOptions o;
  o.out_dir = dir;
  o.profile = synthflow::sweep_profile(cfg);
  o.log = [](const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); };
  ToyRun r;
  r.map = latlab::detect_lhps(*o.profile, cfg.lhp_rule);
  r.report = synthflow::run_flow(cfg, o);
  r.csv = slurp(dir + "/report.csv");
  r.seconds = seconds_since(t0);
  return r;
}

// 5: end-to-end toy synthesis.
Outcome toy_synthesis(const ToyRun& t) {
  const auto& r = t.report;
  std::vector<std::string> fails;
  const std::vector<std::string> want{"baseline", "wg", "rcp", "rcg", "wp"};
  std::vector<std::string> got;
  for (const auto& row : r.rows) got.push_back(row.step);
  if (!r.complete || got != want) {
    return {false, "flow incomplete or wrong rows (" + r.error + ")"};
  }
  const auto* base = r.find("baseline");
  const auto* wg = r.find("wg");
  const auto* rcp = r.find("rcp");
  const auto* rcg = r.find("rcg");
  const auto* wp = r.find("wp");
  const double ratio = static_cast<double>(wp->cell_active) / static_cast<double>(base->cell_active);
  if (ratio > 0.5) fails.push_back("final/dense active " + fmt("%.3f", ratio));
  if (!(wp->val_ppl <= r.threshold)) fails.push_back("final ppl above threshold");
  if (!r.rcp_start_violation && !(rcp->val_ppl <= r.threshold)) fails.push_back("rcp ppl above threshold");
  const std::size_t pruned = std::max(rcp->d_s, rcp->d_h);
  const auto lhp = latlab::nearest_lhp(*t.map, pruned);
  if (std::max(rcg->d_s, rcg->d_h) != lhp.dim) fails.push_back("rcg dim is not nearest_lhp(rcp dim)");
  if (!(rcg->latency_median_ns <= rcp->latency_median_ns)) fails.push_back("rcg latency above rcp");
  if (!(wg->cell_active >= r.seed_cell_active)) fails.push_back("wg < seed");
  if (!(rcp->cell_active <= wg->cell_active)) fails.push_back("rcp > wg");
  if (!(wp->cell_active <= rcg->cell_active)) fails.push_back("wp > rcg");
  if (!(rcp->d_s < 128 || rcp->d_h < 128)) fails.push_back("rcp did not shrink the dims");
  if (t.seconds >= 1800.0) fails.push_back("runtime over 30 min");
  std::string detail = "dims " + std::to_string(rcp->d_s) + "/" + std::to_string(rcp->d_h) + " -> LHP " +
                       std::to_string(lhp.dim) + ", active " + std::to_string(wp->cell_active) + "/" +
                       std::to_string(base->cell_active) + " (" + fmt("%.3f", ratio) + "), ppl " +
                       fmt("%.3f", wp->val_ppl) + " <= " + fmt("%.3f", r.threshold) + ", " + fmt("%.0f", t.seconds) +
                       " s";
  for (const auto& f : fails) detail += "; FAILED: " + f;
  return {fails.empty(), detail};
}

// Mask-level invariants checked after every phase transition.
std::string check_invariants(hlstm::LMModel& m, std::uint64_t seed) {
  for (const auto* l : m.masked_layers()) {
    for (std::size_t r = 0; r < l->out_features(); ++r) {
      const bool live = l->row_live(r);
      if (!live && l->bias()[r] != 0.0) return "dead row with nonzero bias";
      for (std::size_t c = 0; c < l->in_features(); ++c) {
        if (!l->mask()(r, c) && l->weight()(r, c) != 0.0) return "dormant entry with nonzero weight";
      }
    }
    const auto sets = growprune::ActiveSets::of(l->mask());
    for (std::size_t r = 0; r < l->out_features(); ++r) {
      const bool listed = std::binary_search(sets.rows.begin(), sets.rows.end(), r);
      if (listed != l->mask().row_any(r)) return "active row set disagrees with the mask";
    }
    for (std::size_t c = 0; c < l->in_features(); ++c) {
      const bool listed = std::binary_search(sets.cols.begin(), sets.cols.end(), c);
      if (listed != l->mask().col_any(c)) return "active column set disagrees with the mask";
    }
  }
  // Units outside the coordinated active sets must carry no live slice in any gate.
  for (std::size_t cell = 0; cell < m.cells.size(); ++cell) {
    for (auto axis : {growprune::Axis::kHidden, growprune::Axis::kState, growprune::Axis::kInput}) {
      const auto on = growprune::active_units(m, cell, axis);
      for (std::size_t u = 0; u < growprune::axis_size(m, cell, axis); ++u) {
        if (std::binary_search(on.begin(), on.end(), u)) continue;
        for (const auto& sl : growprune::unit_slices(m, cell, axis, u)) {
          const auto& mk = sl.layer->mask();
          const bool any = sl.is_row ? mk.row_any(sl.index) : mk.col_any(sl.index);
          if (any) return "inactive unit has a live slice";
        }
      }
    }
  }
  // The compacted model must agree with the masked one.
  numkit::SeededRng rng(seed);
  const auto in = testing::random_block(rng, 6, 3, m.vocab());
  const auto tgt = testing::random_block(rng, 6, 3, m.vocab());
  const auto small = hlstm::compact(m);
  numkit::SeededRng u1(0), u2(0);
  const double a = hlstm::sequence_nll(hlstm::unroll_forward(m, in, m.zero_state(3), false, u1), tgt);
  const double b = hlstm::sequence_nll(hlstm::unroll_forward(small, in, small.zero_state(3), false, u2), tgt);
  if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a))) return "compacted model disagrees";
  return "";
}

// 6: invariants across 20 randomized short flows.
Outcome mask_fuzz(const std::string& toy_config, const std::string& work) {
  numkit::SeededRng rng(66);
  std::size_t checks = 0;
  std::string first_error;
  for (int f = 0; f < 20; ++f) {
    auto cfg = synthflow::load_config(toy_config);
    cfg.seed = rng.next_u64();
    cfg.corpus_limit = 6000 + rng.below(6000);
    cfg.embed = 3 + rng.below(6);
    cfg.state = 6 + rng.below(10);
    cfg.hidden = 6 + rng.below(10);
    cfg.layers = rng.below(4) == 0 ? 2 : 1;
    cfg.activation = static_cast<numkit::ActivationKind>(rng.below(3));
    cfg.seed_sparsity = 0.2 + 0.6 * rng.uniform();
    cfg.train.batch = 4;
    cfg.train.bptt = 12;
    cfg.train.eval_batch = 4;
    cfg.growprune.g_w = 0.2 * rng.uniform();
    cfg.growprune.p_r = 0.1 + 0.3 * rng.uniform();
    cfg.growprune.p_c = 0.3 * rng.uniform();
    cfg.growprune.retrain_patience = 1;
    cfg.accuracy_threshold = rng.bernoulli(0.5) ? std::optional<double>(1e9) : std::nullopt;
    cfg.baseline_epochs = 1;
    cfg.wg_epochs = 1 + rng.below(2);
    cfg.wg_settle_epochs = rng.below(2);
    cfg.rcp_max_iters = 1 + rng.below(4);
    cfg.rcg_retrain_epochs = rng.below(2);
    cfg.wp_max_iters = 1 + rng.below(3);
    cfg.cpu_mode = rng.bernoulli(0.25);
    cfg.mask_snapshots = false;
    cfg.sweep_grid = "1:" + std::to_string(std::max(cfg.state, cfg.hidden) + 4) + ":1";
    cfg.curve.period = 2 + rng.below(5);
    cfg.curve.slope_ns = -1.0;
    cfg.curve.jump_ns = 2.0 * static_cast<double>(cfg.curve.period * cfg.curve.period);
    cfg.curve.base_ns = 5000;
    cfg.validate();
    synthflow::FlowOptions o;
    o.out_dir = work + "/fuzz_" + std::to_string(f);
    fs::remove_all(o.out_dir);
    if (!cfg.cpu_mode) o.profile = synthflow::sweep_profile(cfg);
    o.on_phase = [&](const std::string& phase, hlstm::LMModel& m) {
      ++checks;
      const auto err = check_invariants(m, cfg.seed + checks);
      if (!err.empty() && first_error.empty()) first_error = "flow " + std::to_string(f) + " after " + phase + ": " + err;
    };
    const auto r = synthflow::run_flow(cfg, o);
    if (!r.complete && first_error.empty()) first_error = "flow " + std::to_string(f) + " incomplete: " + r.error;
  }
  return {first_error.empty(), first_error.empty() ? std::to_string(checks) + " phase transitions checked in 20 flows"
                                                   : first_error};
}

// 7: native sweep on this host.
Outcome hardware_smoke() {
  const auto t0 = Clock::now();
  auto b = latlab::make_native_backend();
  const auto res = latlab::sweep(*b, latlab::parse_grid("64:512:16"), 16, {10, 50});
  bool populated = res.complete && res.profile.grid.size() == 29;
  for (const auto& s : res.profile.samples) {
    populated = populated && s.runs == 50 && s.mean_ns > 0 && s.median_ns > 0 && s.p95_ns >= s.median_ns;
  }
  std::vector<double> dims(res.profile.grid.begin(), res.profile.grid.end());
  const double rho = latlab::spearman(dims, res.profile.medians());
  const double secs = seconds_since(t0);
  return {populated && rho > 0.8 && secs < 120.0, b->identity() + ", 29 points, spearman " + fmt("%.3f", rho) + ", " +
                                                      fmt("%.1f", secs) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::string work = (fs::temp_directory_path() / "lhsynth_acceptance").string();
  std::string toy = LHSYNTH_TOY_CONFIG;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--toy" && i + 1 < argc) {
      toy = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only 1,2,...] [--work DIR] [--toy CONFIG]\n");
      return 2;
    }
  }
  fs::create_directories(work);
  const auto want = [&](int n) { return only.empty() || only.count(n) > 0; };

  int failed = 0;
  const auto report = [&](int n, const char* name, const std::function<Outcome()>& fn) {
    if (!want(n)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d %-22s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient-fidelity", gradient_fidelity);
  report(2, "oracle-equivalence", oracle_equivalence);
  report(3, "lhp-exactness", lhp_exactness);
  report(4, "lhp-dominance", lhp_dominance);

  std::optional<ToyRun> first;
  if (want(5) || want(8)) {
    try {
      first = run_toy(toy, work + "/toy_a");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "toy run failed: %s\n", e.what());
    }
  }
  report(5, "toy-synthesis", [&] { return first ? toy_synthesis(*first) : Outcome{false, "toy run threw"}; });
  report(6, "mask-invariant-fuzz", [&] { return mask_fuzz(toy, work); });
  report(7, "hardware-smoke", hardware_smoke);
  report(8, "determinism", [&]() -> Outcome {
    if (!first) return {false, "toy run threw"};
    const auto second = run_toy(toy, work + "/toy_b");
    const bool same = !first->csv.empty() && first->csv == second.csv;
    return {same, same ? "report CSVs identical (" + std::to_string(first->csv.size()) + " bytes)"
                       : "report CSVs differ"};
  });

  std::printf("%s\n", failed == 0 ? "ALL CRITERIA PASS" : (std::to_string(failed) + " CRITERIA FAILED").c_str());
  return failed == 0 ? 0 : 1;
}
