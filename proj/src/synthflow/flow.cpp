// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/synthflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "lhsynth/common/error.hpp"
#include "lhsynth/growprune/coordinated.hpp"
#include "lhsynth/growprune/mask_io.hpp"
#include "lhsynth/growprune/ops.hpp"
#include "lhsynth/latlab/backend.hpp"
#include "lhsynth/numkit/percentile.hpp"

namespace lhsynth::synthflow {

namespace fs = std::filesystem;
using hlstm::LMModel;

namespace {

hlstm::ModelDims model_dims(const FlowConfig& cfg, std::size_t vocab) {
  hlstm::ModelDims d;
  d.vocab = vocab;
  d.embed = cfg.embed;
  d.state = cfg.state;
  d.hidden = cfg.hidden_depth == 0 ? 0 : cfg.hidden;
  d.hidden_depth = cfg.hidden_depth;
  d.layers = cfg.layers;
  return d;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

hlstm::LMModel make_seed(const FlowConfig& cfg, std::size_t vocab, numkit::SeededRng& rng) {
  LMModel model(model_dims(cfg, vocab), cfg.activation);
  hlstm::init_uniform(model, rng);
  for (numkit::MaskedLinear* layer : model.masked_layers()) {
    const std::size_t size = layer->out_features() * layer->in_features();
    const std::size_t keep = numkit::ratio_count(1.0 - cfg.seed_sparsity, size);
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(idx));
    auto bits = layer->mask_mut().bytes();
    std::fill(bits.begin(), bits.end(), std::uint8_t{0});
    for (std::size_t i = 0; i < keep; ++i) bits[idx[i]] = 1;
    layer->apply_mask();
  }
  return model;
}

FlowData load_flow_data(const FlowConfig& cfg) {
  std::string text = hlstm::read_text_file(cfg.corpus);
  if (cfg.corpus_limit > 0 && text.size() > cfg.corpus_limit) text.resize(cfg.corpus_limit);
  FlowData d;
  d.vocab = hlstm::Vocabulary::from_text(text);
  const auto splits = hlstm::split_tokens(d.vocab.encode(text), cfg.train_frac, cfg.valid_frac);
  d.train = hlstm::batchify(splits.train, cfg.train.batch);
  d.valid = hlstm::batchify(splits.valid, cfg.train.eval_batch);
  d.test = hlstm::batchify(splits.test, cfg.train.eval_batch);
  return d;
}

double validation_perplexity(const LMModel& model, const hlstm::BatchStream& valid, const FlowConfig& cfg) {
  return hlstm::perplexity(hlstm::evaluate_nll(model, valid, cfg.train.bptt));
}

latlab::SampleStats model_latency(const FlowConfig& cfg, LMModel& model) {
  if (cfg.latency_mode == LatencyMode::kVirtual) {
    double per_step = 0.0;
    for (std::size_t c = 0; c < model.cells.size(); ++c) {
      const auto ad = growprune::active_dims(model, c);
      const double ls = cfg.curve.latency(std::max<std::size_t>(ad.d_s, 1));
      const double lh = model.cells[c].dims().hidden_depth == 0 ? 0.0 : cfg.curve.latency(std::max<std::size_t>(ad.d_h, 1));
      per_step += 4.0 * (lh + ls);
    }
    const double v = per_step * static_cast<double>(cfg.latency_steps);
    return {v, v, v, cfg.latency_measure.measured_runs};
  }
  const LMModel small = hlstm::compact(model);
  numkit::SeededRng tok_rng(0x5eed);
  hlstm::TokenBlock block;
  block.steps = cfg.latency_steps;
  block.batch = cfg.latency_batch;
  block.tokens.resize(block.steps * block.batch);
  for (auto& t : block.tokens) t = static_cast<std::uint32_t>(tok_rng.below(small.vocab()));
  const auto init = small.zero_state(block.batch);
  numkit::SeededRng unused(0);
  return latlab::time_callable([&] { (void)hlstm::unroll_forward(small, block, init, false, unused); },
                               cfg.latency_measure);
}

latlab::LatencyProfile sweep_profile(const FlowConfig& cfg) {
  std::unique_ptr<latlab::MatmulBackend> backend;
  if (cfg.latency_mode == LatencyMode::kVirtual) {
    auto spec = cfg.curve;
    spec.virtual_clock = true;
    backend = latlab::make_synthetic_backend(spec);
  } else {
    backend = latlab::make_native_backend();
  }
  auto res = latlab::sweep(*backend, latlab::parse_grid(cfg.sweep_grid), cfg.sweep_batch, cfg.sweep_measure);
  if (!res.complete) throw MeasurementError("sweep incomplete: " + res.error, res.failed_dim);
  return res.profile;
}

std::string checkpoint_path(const std::string& out_dir) { return (fs::path(out_dir) / "checkpoint.bin").string(); }

namespace {

struct Snapshot {
  LMModel model;
  hlstm::OptimizerState opt;
  double metric = 0.0;
};

class Runner {
 public:
  Runner(const FlowConfig& cfg, const FlowOptions& o) : cfg_(cfg), o_(o), cfg_json_(config_to_json(cfg)) {}

  FlowReport run() {
    data_ = load_flow_data(cfg_);
    if (!o_.out_dir.empty()) fs::create_directories(o_.out_dir);
    init_state();
    if (!cfg_.cpu_mode) {
      if (!s_.profile) throw ConfigError("a latency profile is required unless cpu_mode is set");
      map_ = latlab::detect_lhps(*s_.profile, cfg_.lhp_rule);
    }
    try {
      while (s_.phase != Phase::kDone) {
        step();
        ++s_.units_done;
        persist();
        if (o_.stop_after_units > 0 && ++units_run_ >= o_.stop_after_units && s_.phase != Phase::kDone) {
          log("stopping after " + std::to_string(units_run_) + " units (checkpoint saved)");
          return s_.report;
        }
      }
    } catch (const Error& e) {
      s_.report.complete = false;
      s_.report.error = std::string(phase_name(s_.phase)) + ": " + e.what();
      log("flow aborted: " + s_.report.error);
      if (!o_.out_dir.empty()) write_report(s_.report, o_.out_dir);
      return s_.report;
    }
    return s_.report;
  }

 private:
  void init_state() {
    const std::string ck = o_.out_dir.empty() ? std::string() : checkpoint_path(o_.out_dir);
    if (o_.resume && !ck.empty() && fs::exists(ck)) {
      std::string stored;
      s_ = load_checkpoint(ck, &stored);
      if (stored != cfg_json_) throw ConfigError("checkpoint '" + ck + "' was written with a different config");
      if (s_.vocab != data_.vocab.symbols()) throw InputError("checkpoint vocabulary differs from the corpus");
      log("resuming at phase " + std::string(phase_name(s_.phase)) + ", unit " + std::to_string(s_.units_done));
      return;
    }
    s_ = FlowState();
    s_.rng = numkit::SeededRng(cfg_.seed);
    s_.vocab = data_.vocab.symbols();
    s_.profile = o_.profile;
    s_.report.cpu_mode = cfg_.cpu_mode;
    s_.p_r = cfg_.growprune.p_r;
    s_.p_c = cfg_.growprune.p_c;
    s_.p_w = cfg_.growprune.p_w;
  }

  void persist() {
    if (o_.out_dir.empty()) return;
    save_checkpoint(s_, cfg_json_, checkpoint_path(o_.out_dir));
    write_report(s_.report, o_.out_dir);
  }

  void log(const std::string& line) const {
    if (o_.log) o_.log(line);
  }

  void event(const std::string& line) {
    s_.report.events.push_back(line);
    log(line);
  }

  double threshold() const { return s_.report.threshold; }

  double evaluate(const LMModel& m) const { return validation_perplexity(m, data_.valid, cfg_); }

  // One training epoch on the flow model followed by validation.
  double epoch(bool collect, hlstm::BridgingGradients* bridging = nullptr) {
    auto r = hlstm::train_epoch(s_.model, data_.train, cfg_.train, s_.opt, s_.rng, collect);
    if (bridging) *bridging = std::move(r.bridging);
    s_.metric = evaluate(s_.model);
    s_.metric_history.push_back(s_.metric);
    hlstm::observe_validation(s_.opt, cfg_.train, s_.metric);
    return s_.metric;
  }

  // Re-evaluates after a structural change, then retrains until the metric
  // meets the threshold or `epochs` run out.
  double retrain(std::size_t epochs) {
    s_.metric = evaluate(s_.model);
    s_.opt.best_metric = std::numeric_limits<double>::infinity();
    s_.opt.stale_epochs = 0;
    for (std::size_t e = 0; e < epochs && !(s_.metric <= threshold()); ++e) epoch(false);
    return s_.metric;
  }

  Snapshot snapshot() const { return {s_.model, s_.opt, s_.metric}; }
  void restore(Snapshot&& snap) {
    s_.model = std::move(snap.model);
    s_.opt = snap.opt;
    s_.metric = snap.metric;
  }

  ReportRow make_row(const std::string& step, LMModel& m, double ppl) {
    ReportRow r;
    r.step = step;
    const auto ad = growprune::active_dims(m, 0);
    r.d_s = ad.d_s;
    r.d_h = ad.d_h;
    r.d_x = ad.d_x;
    const auto cp = hlstm::cell_param_count(m);
    const auto io = hlstm::io_param_count(m);
    r.cell_total = cp.total;
    r.cell_active = cp.active;
    r.io_total = io.total;
    r.io_active = io.active;
    r.val_ppl = ppl;
    const auto lat = model_latency(cfg_, m);
    r.latency_median_ns = lat.median_ns;
    r.latency_p95_ns = lat.p95_ns;
    return r;
  }

  void snapshot_masks(const std::string& phase) {
    if (!cfg_.mask_snapshots || o_.out_dir.empty()) return;
    const auto dir = (fs::path(o_.out_dir) / "masks").string();
    fs::create_directories(dir);
    auto snaps = growprune::export_masks(s_.model, dir, phase);
    s_.report.masks.insert(s_.report.masks.end(), snaps.begin(), snaps.end());
    growprune::write_mask_manifest(s_.report.masks, (fs::path(dir) / "manifest.json").string());
  }

  void finish_phase(const std::string& step, Phase next) {
    s_.model.apply_masks();
    s_.report.rows.push_back(make_row(step, s_.model, s_.metric));
    snapshot_masks(step);
    if (o_.on_phase) o_.on_phase(step, s_.model);
    log(step + " done: val ppl " + fmt("%.4f", s_.metric) + ", cell active " +
        std::to_string(s_.report.rows.back().cell_active));
    s_.phase = next;
    s_.phase_step = 0;
    s_.phase_started = false;
    s_.report.complete = next == Phase::kDone;
  }

  void step() {
    switch (s_.phase) {
      case Phase::kBaseline: return baseline();
      case Phase::kSeed: return seed();
      case Phase::kWg: return weight_growth();
      case Phase::kRcp: return rc_prune();
      case Phase::kRcg: return rc_grow();
      case Phase::kWp: return weight_prune();
      case Phase::kDone: return;
    }
  }

  void baseline() {
    auto dims = model_dims(cfg_, data_.vocab.size());
    if (cfg_.baseline_kind == BaselineKind::kLstm) {
      dims.hidden_depth = 0;
      dims.hidden = 0;
    }
    LMModel base(dims, cfg_.activation);
    numkit::SeededRng rng = s_.rng.fork(0xba5e);
    hlstm::init_uniform(base, rng);
    hlstm::OptimizerState opt;
    opt.lr = cfg_.train.lr;
    double ppl = 0.0;
    for (std::size_t e = 0; e < cfg_.baseline_epochs; ++e) {
      (void)hlstm::train_epoch(base, data_.train, cfg_.train, opt, rng, false);
      ppl = evaluate(base);
      hlstm::observe_validation(opt, cfg_.train, ppl);
      log("baseline epoch " + std::to_string(e + 1) + ": val ppl " + fmt("%.4f", ppl));
    }
    s_.report.threshold = cfg_.accuracy_threshold.value_or(ppl);
    s_.report.rows.push_back(make_row("baseline", base, ppl));
    if (o_.on_phase) o_.on_phase("baseline", base);
    event("baseline (" + std::string(baseline_kind_name(cfg_.baseline_kind)) + "): val ppl " + fmt("%.4f", ppl) +
          ", threshold " + fmt("%.4f", s_.report.threshold));
    s_.phase = Phase::kSeed;
  }

  void seed() {
    s_.model = make_seed(cfg_, data_.vocab.size(), s_.rng);
    s_.opt = hlstm::OptimizerState{};
    s_.opt.lr = cfg_.train.lr;
    s_.metric = evaluate(s_.model);
    s_.report.seed_cell_active = hlstm::cell_param_count(s_.model).active;
    snapshot_masks("seed");
    if (o_.on_phase) o_.on_phase("seed", s_.model);
    event("seed: sparsity " + fmt("%.3f", cfg_.seed_sparsity) + ", cell active " +
          std::to_string(s_.report.seed_cell_active));
    s_.phase = Phase::kWg;
    s_.phase_step = 0;
  }

  double cell_active_fraction() const {
    const auto cp = hlstm::cell_param_count(s_.model);
    return static_cast<double>(cp.active) / static_cast<double>(cp.total);
  }

  void weight_growth() {
    const std::size_t k = s_.phase_step;
    const std::size_t total = cfg_.wg_epochs + cfg_.wg_settle_epochs;
    if (k < cfg_.wg_epochs) {
      const auto g = hlstm::train_epoch(s_.model, data_.train, cfg_.train, s_.opt, s_.rng, true).bridging;
      auto layers = s_.model.masked_layers();
      std::size_t grown = 0;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        grown += growprune::weight_grow(*layers[i], g.layers[i], cfg_.growprune.g_w, cfg_.grow_lr);
      }
      s_.metric = evaluate(s_.model);
      s_.metric_history.push_back(s_.metric);
      hlstm::observe_validation(s_.opt, cfg_.train, s_.metric);
      s_.report.wg_active_fraction.push_back(cell_active_fraction());
      event("wg epoch " + std::to_string(k + 1) + ": grew " + std::to_string(grown) + ", cell active fraction " +
            fmt("%.4f", s_.report.wg_active_fraction.back()) + ", val ppl " + fmt("%.4f", s_.metric));
    } else if (k < total) {
      epoch(false);
      log("wg settle epoch " + std::to_string(k + 1 - cfg_.wg_epochs) + ": val ppl " + fmt("%.4f", s_.metric));
    }
    ++s_.phase_step;
    if (s_.phase_step >= total) finish_phase("wg", cfg_.cpu_mode ? Phase::kWp : Phase::kRcp);
  }

  // Shared start check of rcp and wp. Returns false when the threshold
  // cannot be met even before pruning.
  bool start_check(const char* name) {
    s_.phase_started = true;
    if (s_.metric <= threshold()) return true;
    retrain(cfg_.growprune.retrain_patience);
    if (s_.metric <= threshold()) return true;
    event(std::string(name) + ": threshold " + fmt("%.4f", threshold()) + " not met at start (val ppl " +
          fmt("%.4f", s_.metric) + "); nothing pruned");
    return false;
  }

  void rc_prune() {
    if (!s_.phase_started) {
      if (!start_check("rcp")) {
        s_.report.rcp_start_violation = true;
        finish_phase("rcp", Phase::kRcg);
      }
      return;
    }
    if (s_.phase_step >= cfg_.rcp_max_iters) {
      event("rcp: iteration cap reached");
      finish_phase("rcp", Phase::kRcg);
      return;
    }
    ++s_.phase_step;
    Snapshot snap = snapshot();
    const bool single = s_.mode == growprune::PruneMode::kSingle;
    std::string what;
    try {
      for (std::size_t c = 0; c < s_.model.cells.size(); ++c) {
        const auto r = growprune::coordinated_prune(s_.model, c, s_.p_r, s_.p_c, single);
        what += " cell" + std::to_string(c) + " -" + std::to_string(r.hidden.size()) + "h -" +
                std::to_string(r.state.size()) + "s -" + std::to_string(r.input.size()) + "x -> " +
                std::to_string(r.dims.d_s) + "/" + std::to_string(r.dims.d_h) + "/" + std::to_string(r.dims.d_x);
      }
    } catch (const ContractViolation& e) {
      restore(std::move(snap));
      event(std::string("rcp: pruning refused (") + e.what() + ")");
      finish_phase("rcp", Phase::kRcg);
      return;
    }
    const double m = retrain(cfg_.growprune.retrain_patience);
    if (m <= threshold()) {
      event("rcp iter " + std::to_string(s_.phase_step) + " (" + growprune::prune_mode_name(s_.mode) + "):" + what +
            ", val ppl " + fmt("%.4f", m) + " accepted");
      return;
    }
    restore(std::move(snap));
    growprune::GrowPruneConfig gp = cfg_.growprune;
    gp.p_r = s_.p_r;
    gp.p_c = s_.p_c;
    gp.accuracy_threshold = threshold();
    const auto out = growprune::halve_on_violation(gp, s_.mode, m);
    s_.p_r = gp.p_r;
    s_.p_c = gp.p_c;
    s_.mode = out.mode;
    event("rcp iter " + std::to_string(s_.phase_step) + ":" + what + ", val ppl " + fmt("%.4f", m) +
          " violates; restored, next p_r " + fmt("%.5g", s_.p_r) + " mode " + growprune::prune_mode_name(s_.mode));
    if (s_.mode == growprune::PruneMode::kStop) finish_phase("rcp", Phase::kRcg);
  }

  void rc_grow() {
    RcgRecord rec;
    rec.metric_before = s_.metric;
    const bool depth0 = s_.model.cells.front().dims().hidden_depth == 0;
    std::vector<std::size_t> tied(s_.model.cells.size()), target(s_.model.cells.size());
    bool any = false;
    for (std::size_t c = 0; c < s_.model.cells.size(); ++c) {
      const auto ad = growprune::active_dims(s_.model, c);
      tied[c] = depth0 ? ad.d_s : std::max(ad.d_s, ad.d_h);
      target[c] = tied[c];
      try {
        const auto n = latlab::nearest_lhp(*map_, tied[c]);
        if (n.found) target[c] = n.dim;
        if (c == 0) rec.lhp_found = n.found;
      } catch (const InputError& e) {
        event("rcg: cell " + std::to_string(c) + " dim " + std::to_string(tied[c]) + " outside the profile (" +
              e.what() + ")");
      }
      any = any || target[c] != tied[c];
    }
    rec.pruned_dim = tied.front();
    rec.target_dim = target.front();
    if (!any) {
      rec.noop = true;
      rec.metric_after = s_.metric;
      s_.report.rcg = rec;
      event("rcg: dim " + std::to_string(rec.pruned_dim) + (rec.lhp_found ? " is already an LHP" : " has no LHP above it") +
            "; no-op");
      finish_phase("rcg", Phase::kWp);
      return;
    }
    hlstm::BridgingGradients g;
    s_.opt.best_metric = std::numeric_limits<double>::infinity();
    s_.opt.stale_epochs = 0;
    epoch(true, &g);
    for (std::size_t c = 0; c < s_.model.cells.size(); ++c) {
      const auto ad = growprune::active_dims(s_.model, c);
      const std::size_t n_h = depth0 ? 0 : target[c] - std::min(target[c], ad.d_h);
      const std::size_t n_s = target[c] - std::min(target[c], ad.d_s);
      const auto r = growprune::coordinated_grow_counts(s_.model, c, g.layers, n_h, n_s, 0, cfg_.grow_lr);
      event("rcg: cell " + std::to_string(c) + " " + std::to_string(tied[c]) + " -> LHP " +
            std::to_string(target[c]) + ", grew " + std::to_string(r.hidden.size()) + "h " +
            std::to_string(r.state.size()) + "s" +
            (r.shortfall ? ", shortfall " + std::to_string(r.shortfall) : std::string()));
    }
    for (std::size_t e = 0; e < cfg_.rcg_retrain_epochs; ++e) epoch(false);
    rec.metric_after = s_.metric;
    s_.report.rcg = rec;
    event("rcg: val ppl " + fmt("%.4f", rec.metric_before) + " -> " + fmt("%.4f", rec.metric_after));
    finish_phase("rcg", Phase::kWp);
  }

  void weight_prune() {
    if (!s_.phase_started) {
      if (!start_check("wp")) {
        s_.report.wp_start_violation = true;
        finish_phase("wp", Phase::kDone);
      }
      return;
    }
    if (s_.phase_step >= cfg_.wp_max_iters || s_.p_w < cfg_.growprune.halving_floor || s_.p_w <= 0.0) {
      event(s_.phase_step >= cfg_.wp_max_iters ? "wp: iteration cap reached" : "wp: ratio below floor");
      finish_phase("wp", Phase::kDone);
      return;
    }
    ++s_.phase_step;
    Snapshot snap = snapshot();
    std::size_t pruned = 0;
    for (numkit::MaskedLinear* l : s_.model.masked_layers()) {
      if (l->active_weights() > 0) pruned += growprune::weight_prune(*l, s_.p_w).pruned;
    }
    s_.model.apply_masks();
    const double m = retrain(cfg_.growprune.retrain_patience);
    const std::string head = "wp iter " + std::to_string(s_.phase_step) + " (p_w " + fmt("%.5g", s_.p_w) +
                             "): pruned " + std::to_string(pruned) + ", val ppl " + fmt("%.4f", m);
    if (m <= threshold()) {
      event(head + " accepted");
      return;
    }
    restore(std::move(snap));
    s_.p_w *= 0.5;
    event(head + " violates; restored, next p_w " + fmt("%.5g", s_.p_w));
  }

  const FlowConfig& cfg_;
  const FlowOptions& o_;
  std::string cfg_json_;
  FlowData data_;
  FlowState s_;
  std::optional<latlab::HysteresisMap> map_;
  std::size_t units_run_ = 0;
};

}  // namespace

FlowReport run_flow(const FlowConfig& cfg, const FlowOptions& options) {
  cfg.validate();
  Runner runner(cfg, options);
  return runner.run();
}

}  // namespace lhsynth::synthflow
