// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/synthflow/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lhsynth/common/error.hpp"

namespace lhsynth::synthflow {

using nlohmann::json;

const char* baseline_kind_name(BaselineKind k) { return k == BaselineKind::kDenseHlstm ? "dense-hlstm" : "lstm"; }
const char* latency_mode_name(LatencyMode m) { return m == LatencyMode::kVirtual ? "virtual" : "real"; }

namespace {

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

void check_ratio(double v, const char* key) { check(v >= 0.0 && v <= 1.0, std::string(key) + " must lie in [0, 1]"); }

// Reads `key` from `j` into `out` when present, naming the key on type errors.
template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: key '" + section + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("config: unknown key '" + section + it.key() + "'");
  }
}

const json& object_or_empty(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("config: '") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

void FlowConfig::validate() const {
  check(!corpus.empty(), "corpus path is required");
  check(train_frac > 0.0 && valid_frac > 0.0 && train_frac + valid_frac < 1.0,
        "splits.train and splits.valid must be positive with room left for a test split");
  check(embed > 0 && state > 0, "model.embed and model.state must be positive");
  check(hidden_depth == 0 || hidden_depth == 1, "model.hidden_depth must be 0 or 1");
  check(hidden_depth == 0 || hidden > 0, "model.hidden must be positive at depth 1");
  check(layers >= 1, "model.layers must be at least 1");
  check(seed_sparsity >= 0.0 && seed_sparsity < 1.0, "seed_sparsity must lie in [0, 1)");
  check(train.batch > 0 && train.bptt > 0 && train.eval_batch > 0, "train.batch, train.bptt, train.eval_batch must be positive");
  check(train.lr > 0.0, "train.lr must be positive");
  check(train.lr_decay > 0.0 && train.lr_decay <= 1.0, "train.lr_decay must lie in (0, 1]");
  check(train.plateau_patience >= 1, "train.plateau_patience must be at least 1");
  check(train.weight_decay >= 0.0, "train.weight_decay must be non-negative");
  check(train.clip_norm >= 0.0, "train.clip_norm must be non-negative");
  check(train.dropout >= 0.0 && train.dropout < 1.0, "train.dropout must lie in [0, 1)");
  try {
    growprune.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: growprune.") + e.what());
  }
  check(growprune.retrain_patience >= 1, "growprune.retrain_patience must be at least 1");
  check(!accuracy_threshold || *accuracy_threshold > 0.0, "growprune.accuracy_threshold must be positive");
  check(grow_lr >= 0.0, "grow_lr must be non-negative");
  check(baseline_epochs >= 1, "baseline.epochs must be at least 1");
  check(latency_batch > 0 && latency_steps > 0, "latency.batch and latency.steps must be positive");
  check(latency_measure.measured_runs >= 5, "latency.runs must be at least 5");
  check(sweep_measure.measured_runs >= 5, "sweep.runs must be at least 5");
  check(curve.noise >= 0.0 && curve.noise < 1.0, "latency.curve.noise must lie in [0, 1)");
  check_ratio(growprune.p_w, "growprune.p_w");
  try {
    (void)latlab::parse_grid(sweep_grid);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: sweep.grid: ") + e.what());
  }
}

FlowConfig config_from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j,
                 {"schema_version", "seed", "corpus", "corpus_limit", "splits", "model", "seed_sparsity", "train",
                  "growprune", "grow_lr", "baseline", "phases", "cpu_mode", "latency", "sweep", "lhp_rule",
                  "mask_snapshots"},
                 "");
  int version = 0;
  read(j, "schema_version", version, "");
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config: schema_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }

  FlowConfig c;
  read(j, "seed", c.seed, "");
  read(j, "corpus", c.corpus, "");
  read(j, "corpus_limit", c.corpus_limit, "");
  if (!c.corpus.empty() && std::filesystem::path(c.corpus).is_relative()) {
    c.corpus = std::filesystem::absolute(std::filesystem::path(base_dir) / c.corpus).lexically_normal().string();
  }
  read(j, "seed_sparsity", c.seed_sparsity, "");
  read(j, "grow_lr", c.grow_lr, "");
  read(j, "cpu_mode", c.cpu_mode, "");
  read(j, "mask_snapshots", c.mask_snapshots, "");

  const json& sp = object_or_empty(j, "splits");
  reject_unknown(sp, {"train", "valid"}, "splits.");
  read(sp, "train", c.train_frac, "splits.");
  read(sp, "valid", c.valid_frac, "splits.");

  const json& m = object_or_empty(j, "model");
  reject_unknown(m, {"embed", "state", "hidden", "hidden_depth", "layers", "activation"}, "model.");
  read(m, "embed", c.embed, "model.");
  read(m, "state", c.state, "model.");
  read(m, "hidden", c.hidden, "model.");
  read(m, "hidden_depth", c.hidden_depth, "model.");
  read(m, "layers", c.layers, "model.");
  if (m.contains("activation")) {
    std::string a;
    read(m, "activation", a, "model.");
    const auto k = numkit::parse_activation(a);
    if (!k) throw ConfigError("config: model.activation '" + a + "' is not sigmoid, tanh or relu");
    c.activation = *k;
  }

  const json& t = object_or_empty(j, "train");
  reject_unknown(t, {"batch", "bptt", "eval_batch", "lr", "lr_decay", "plateau_patience", "min_lr", "weight_decay",
                     "clip_norm", "dropout", "bridging_batches"},
                 "train.");
  read(t, "batch", c.train.batch, "train.");
  read(t, "bptt", c.train.bptt, "train.");
  read(t, "eval_batch", c.train.eval_batch, "train.");
  read(t, "lr", c.train.lr, "train.");
  read(t, "lr_decay", c.train.lr_decay, "train.");
  read(t, "plateau_patience", c.train.plateau_patience, "train.");
  read(t, "min_lr", c.train.min_lr, "train.");
  read(t, "weight_decay", c.train.weight_decay, "train.");
  read(t, "clip_norm", c.train.clip_norm, "train.");
  read(t, "dropout", c.train.dropout, "train.");
  read(t, "bridging_batches", c.train.bridging_batches, "train.");

  const json& g = object_or_empty(j, "growprune");
  reject_unknown(g, {"g_w", "p_w", "p_r", "p_c", "halving_floor", "retrain_patience", "accuracy_threshold"},
                 "growprune.");
  read(g, "g_w", c.growprune.g_w, "growprune.");
  read(g, "p_w", c.growprune.p_w, "growprune.");
  read(g, "p_r", c.growprune.p_r, "growprune.");
  read(g, "p_c", c.growprune.p_c, "growprune.");
  read(g, "halving_floor", c.growprune.halving_floor, "growprune.");
  read(g, "retrain_patience", c.growprune.retrain_patience, "growprune.");
  if (g.contains("accuracy_threshold") && !g.at("accuracy_threshold").is_null()) {
    double v = 0.0;
    read(g, "accuracy_threshold", v, "growprune.");
    c.accuracy_threshold = v;
  }

  const json& b = object_or_empty(j, "baseline");
  reject_unknown(b, {"kind", "epochs"}, "baseline.");
  if (b.contains("kind")) {
    std::string k;
    read(b, "kind", k, "baseline.");
    if (k == "dense-hlstm") c.baseline_kind = BaselineKind::kDenseHlstm;
    else if (k == "lstm") c.baseline_kind = BaselineKind::kLstm;
    else throw ConfigError("config: baseline.kind must be dense-hlstm or lstm");
  }
  read(b, "epochs", c.baseline_epochs, "baseline.");

  const json& p = object_or_empty(j, "phases");
  reject_unknown(p, {"wg_epochs", "wg_settle_epochs", "rcp_max_iters", "rcg_retrain_epochs", "wp_max_iters"},
                 "phases.");
  read(p, "wg_epochs", c.wg_epochs, "phases.");
  read(p, "wg_settle_epochs", c.wg_settle_epochs, "phases.");
  read(p, "rcp_max_iters", c.rcp_max_iters, "phases.");
  read(p, "rcg_retrain_epochs", c.rcg_retrain_epochs, "phases.");
  read(p, "wp_max_iters", c.wp_max_iters, "phases.");

  const json& l = object_or_empty(j, "latency");
  reject_unknown(l, {"mode", "curve", "batch", "steps", "runs", "warmup"}, "latency.");
  if (l.contains("mode")) {
    std::string mode;
    read(l, "mode", mode, "latency.");
    if (mode == "virtual") c.latency_mode = LatencyMode::kVirtual;
    else if (mode == "real") c.latency_mode = LatencyMode::kReal;
    else throw ConfigError("config: latency.mode must be virtual or real");
  }
  if (l.contains("curve")) {
    try {
      c.curve = latlab::curve_spec_from_json(l.at("curve").dump());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config: latency.curve: ") + e.what());
    }
  }
  read(l, "batch", c.latency_batch, "latency.");
  read(l, "steps", c.latency_steps, "latency.");
  read(l, "runs", c.latency_measure.measured_runs, "latency.");
  read(l, "warmup", c.latency_measure.warmup_runs, "latency.");

  const json& s = object_or_empty(j, "sweep");
  reject_unknown(s, {"grid", "batch", "runs", "warmup"}, "sweep.");
  read(s, "grid", c.sweep_grid, "sweep.");
  read(s, "batch", c.sweep_batch, "sweep.");
  read(s, "runs", c.sweep_measure.measured_runs, "sweep.");
  read(s, "warmup", c.sweep_measure.warmup_runs, "sweep.");

  if (j.contains("lhp_rule")) {
    std::string r;
    read(j, "lhp_rule", r, "");
    const auto rule = latlab::parse_lhp_rule(r);
    if (!rule) throw ConfigError("config: lhp_rule must be prefix-min or suffix-min");
    c.lhp_rule = *rule;
  }
  c.validate();
  return c;
}

FlowConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return config_from_json(ss.str(), dir.empty() ? "." : dir.string());
}

std::string config_to_json(const FlowConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = c.seed;
  j["corpus"] = c.corpus;
  j["corpus_limit"] = c.corpus_limit;
  j["splits"] = {{"train", c.train_frac}, {"valid", c.valid_frac}};
  j["model"] = {{"embed", c.embed},   {"state", c.state},   {"hidden", c.hidden},
                {"hidden_depth", c.hidden_depth}, {"layers", c.layers},
                {"activation", std::string(numkit::activation_name(c.activation))}};
  j["seed_sparsity"] = c.seed_sparsity;
  j["train"] = {{"batch", c.train.batch},
                {"bptt", c.train.bptt},
                {"eval_batch", c.train.eval_batch},
                {"lr", c.train.lr},
                {"lr_decay", c.train.lr_decay},
                {"plateau_patience", c.train.plateau_patience},
                {"min_lr", c.train.min_lr},
                {"weight_decay", c.train.weight_decay},
                {"clip_norm", c.train.clip_norm},
                {"dropout", c.train.dropout},
                {"bridging_batches", c.train.bridging_batches}};
  j["growprune"] = {{"g_w", c.growprune.g_w},
                    {"p_w", c.growprune.p_w},
                    {"p_r", c.growprune.p_r},
                    {"p_c", c.growprune.p_c},
                    {"halving_floor", c.growprune.halving_floor},
                    {"retrain_patience", c.growprune.retrain_patience},
                    {"accuracy_threshold", c.accuracy_threshold ? json(*c.accuracy_threshold) : json()}};
  j["grow_lr"] = c.grow_lr;
  j["baseline"] = {{"kind", baseline_kind_name(c.baseline_kind)}, {"epochs", c.baseline_epochs}};
  j["phases"] = {{"wg_epochs", c.wg_epochs},
                 {"wg_settle_epochs", c.wg_settle_epochs},
                 {"rcp_max_iters", c.rcp_max_iters},
                 {"rcg_retrain_epochs", c.rcg_retrain_epochs},
                 {"wp_max_iters", c.wp_max_iters}};
  j["cpu_mode"] = c.cpu_mode;
  j["latency"] = {{"mode", latency_mode_name(c.latency_mode)},
                  {"curve", json::parse(latlab::curve_spec_to_json(c.curve))},
                  {"batch", c.latency_batch},
                  {"steps", c.latency_steps},
                  {"runs", c.latency_measure.measured_runs},
                  {"warmup", c.latency_measure.warmup_runs}};
  j["sweep"] = {{"grid", c.sweep_grid},
                {"batch", c.sweep_batch},
                {"runs", c.sweep_measure.measured_runs},
                {"warmup", c.sweep_measure.warmup_runs}};
  j["lhp_rule"] = latlab::lhp_rule_name(c.lhp_rule);
  j["mask_snapshots"] = c.mask_snapshots;
  return j.dump(2) + "\n";
}

}  // namespace lhsynth::synthflow
