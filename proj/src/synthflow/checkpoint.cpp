// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/synthflow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lhsynth/common/error.hpp"

namespace lhsynth::synthflow {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'H', 'S', 'Y', 'C', 'K', 'P', 'T'};
constexpr std::size_t kHeader = 8 + 4 + 8;

class Writer {
 public:
  template <class T>
  void pod(T v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void matrix(const numkit::Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    doubles(m.values());
  }
  void layer(const numkit::MaskedLinear& l) {
    matrix(l.weight());
    const auto bits = l.mask().bytes();
    u64(bits.size());
    out_.append(reinterpret_cast<const char*>(bits.data()), bits.size());
    doubles(l.bias());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const auto n = u64();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const auto n = u64();
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  void matrix_into(numkit::Matrix& m) {
    const auto r = u64();
    const auto c = u64();
    if (r != m.rows() || c != m.cols()) throw IntegrityError("checkpoint: matrix shape does not match model dims");
    auto v = doubles();
    if (v.size() != m.size()) throw IntegrityError("checkpoint: matrix payload size mismatch");
    std::copy(v.begin(), v.end(), m.values().begin());
  }
  void layer_into(numkit::MaskedLinear& l) {
    matrix_into(l.weight_mut());
    const auto n = u64();
    auto bits = l.mask_mut().bytes();
    if (n != bits.size()) throw IntegrityError("checkpoint: mask size mismatch");
    need(n);
    std::memcpy(bits.data(), in_.data() + pos_, n);
    pos_ += n;
    auto b = doubles();
    if (b.size() != l.bias().size()) throw IntegrityError("checkpoint: bias size mismatch");
    l.bias_mut() = std::move(b);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IntegrityError("checkpoint: truncated payload");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_model(Writer& w, const hlstm::LMModel& m) {
  const auto d = m.dims();
  w.u64(d.vocab);
  w.u64(d.embed);
  w.u64(d.state);
  w.u64(d.hidden);
  w.pod<std::int32_t>(d.hidden_depth);
  w.u64(d.layers);
  w.pod<std::uint8_t>(static_cast<std::uint8_t>(m.cells.front().hidden_activation()));
  w.f64(m.dropout_h);
  w.matrix(m.embedding);
  for (const auto& cell : m.cells) {
    for (const auto* l : cell.layers()) w.layer(*l);
  }
  w.layer(m.head);
}

hlstm::LMModel read_model(Reader& r) {
  hlstm::ModelDims d;
  d.vocab = r.u64();
  d.embed = r.u64();
  d.state = r.u64();
  d.hidden = r.u64();
  d.hidden_depth = r.pod<std::int32_t>();
  d.layers = r.u64();
  const auto act = r.pod<std::uint8_t>();
  if (d.vocab == 0 || d.embed == 0 || d.state == 0 || d.layers == 0 || d.layers > 64 ||
      (d.hidden_depth != 0 && d.hidden_depth != 1) || act > 2) {
    throw IntegrityError("checkpoint: implausible model dims");
  }
  hlstm::LMModel m(d, static_cast<numkit::ActivationKind>(act));
  m.dropout_h = r.f64();
  r.matrix_into(m.embedding);
  for (auto& cell : m.cells) {
    for (auto* l : cell.layers()) r.layer_into(*l);
  }
  r.layer_into(m.head);
  return m;
}

}  // namespace

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::kBaseline: return "baseline";
    case Phase::kSeed: return "seed";
    case Phase::kWg: return "wg";
    case Phase::kRcp: return "rcp";
    case Phase::kRcg: return "rcg";
    case Phase::kWp: return "wp";
    case Phase::kDone: return "done";
  }
  return "?";
}

bool operator==(const FlowState& a, const FlowState& b) {
  const auto prof = [](const std::optional<latlab::LatencyProfile>& p) {
    return p ? latlab::profile_to_csv(*p) : std::string();
  };
  return a.phase == b.phase && a.phase_step == b.phase_step && a.units_done == b.units_done &&
         a.phase_started == b.phase_started && a.metric == b.metric && a.metric_history == b.metric_history &&
         a.p_r == b.p_r && a.p_c == b.p_c && a.p_w == b.p_w && a.mode == b.mode && a.model == b.model &&
         a.opt == b.opt && a.rng == b.rng && a.vocab == b.vocab && a.profile.has_value() == b.profile.has_value() &&
         prof(a.profile) == prof(b.profile) && report_json(a.report) == report_json(b.report);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string wrap_container(std::string_view payload) {
  Writer w;
  std::string out(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.u64(payload.size());
  out += w.take();
  out.append(payload);
  Writer t;
  t.u64(fnv1a64(payload));
  out += t.take();
  return out;
}

std::string unwrap_container(std::string_view bytes) {
  if (bytes.size() < kHeader + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw IntegrityError("checkpoint: not a checkpoint file (bad magic or too short)");
  }
  Reader head(bytes.substr(8, 12));
  const auto version = head.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: file version " + std::to_string(version) + ", this build reads version " +
                       std::to_string(kCheckpointVersion));
  }
  const auto size = head.u64();
  if (size != bytes.size() - kHeader - 8) throw IntegrityError("checkpoint: payload length mismatch");
  const auto payload = bytes.substr(kHeader, size);
  Reader tail(bytes.substr(kHeader + size));
  if (tail.u64() != fnv1a64(payload)) throw IntegrityError("checkpoint: checksum mismatch");
  return std::string(payload);
}

std::string encode_checkpoint(const FlowState& s, const std::string& config_json) {
  Writer w;
  w.str(config_json);
  w.pod<std::uint8_t>(static_cast<std::uint8_t>(s.phase));
  w.u64(s.phase_step);
  w.u64(s.units_done);
  w.pod<std::uint8_t>(s.phase_started ? 1 : 0);
  w.f64(s.metric);
  w.doubles(s.metric_history);
  w.f64(s.p_r);
  w.f64(s.p_c);
  w.f64(s.p_w);
  w.pod<std::uint8_t>(static_cast<std::uint8_t>(s.mode));
  w.f64(s.opt.lr);
  w.f64(s.opt.best_metric);
  w.u64(s.opt.stale_epochs);
  w.u64(s.rng.seed());
  w.u64(s.rng.counter());
  w.str(s.vocab);
  w.str(s.profile ? latlab::profile_to_csv(*s.profile) : std::string());
  w.str(report_json(s.report));
  w.pod<std::uint8_t>(s.model.cells.empty() ? 0 : 1);
  if (!s.model.cells.empty()) write_model(w, s.model);
  return wrap_container(w.take());
}

FlowState decode_checkpoint(std::string_view bytes, std::string* config_json) {
  const std::string payload = unwrap_container(bytes);
  Reader r(payload);
  FlowState s;
  std::string cfg = r.str();
  if (config_json) *config_json = cfg;
  const auto phase = r.pod<std::uint8_t>();
  if (phase > static_cast<std::uint8_t>(Phase::kDone)) throw IntegrityError("checkpoint: unknown phase");
  s.phase = static_cast<Phase>(phase);
  s.phase_step = r.u64();
  s.units_done = r.u64();
  s.phase_started = r.pod<std::uint8_t>() != 0;
  s.metric = r.f64();
  s.metric_history = r.doubles();
  s.p_r = r.f64();
  s.p_c = r.f64();
  s.p_w = r.f64();
  const auto mode = r.pod<std::uint8_t>();
  if (mode > 2) throw IntegrityError("checkpoint: unknown prune mode");
  s.mode = static_cast<growprune::PruneMode>(mode);
  s.opt.lr = r.f64();
  s.opt.best_metric = r.f64();
  s.opt.stale_epochs = r.u64();
  const auto seed = r.u64();
  const auto counter = r.u64();
  s.rng = numkit::SeededRng(seed, counter);
  s.vocab = r.str();
  const std::string prof = r.str();
  try {
    if (!prof.empty()) s.profile = latlab::profile_from_csv(prof);
    s.report = report_from_json(r.str());
  } catch (const ParseError& e) {
    throw IntegrityError(std::string("checkpoint: ") + e.what());
  }
  if (r.pod<std::uint8_t>() != 0) s.model = read_model(r);
  if (!r.done()) throw IntegrityError("checkpoint: trailing bytes after payload");
  return s;
}

void save_checkpoint(const FlowState& state, const std::string& config_json, const std::string& path) {
  const std::string bytes = encode_checkpoint(state, config_json);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("cannot write checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

FlowState load_checkpoint(const std::string& path, std::string* config_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str(), config_json);
}

}  // namespace lhsynth::synthflow
