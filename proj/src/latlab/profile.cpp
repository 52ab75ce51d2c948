// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/latlab/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lhsynth/common/error.hpp"

namespace lhsynth::latlab {

SampleStats summarize(std::vector<double> d) {
  if (d.empty()) throw ContractViolation("summarize: no samples");
  SampleStats s;
  s.runs = d.size();
  double sum = 0.0;
  for (double v : d) sum += v;
  s.mean_ns = sum / static_cast<double>(d.size());
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  s.median_ns = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n) - 1e-9));
  s.p95_ns = d[std::clamp<std::size_t>(rank, 1, n) - 1];
  return s;
}

std::vector<double> LatencyProfile::medians() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.median_ns);
  return out;
}

void LatencyProfile::validate(std::size_t min_runs) const {
  if (grid.size() != samples.size()) throw ContractViolation("profile: grid and samples differ in length");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] <= grid[i - 1]) throw ContractViolation("profile: grid is not strictly ascending");
    const auto& s = samples[i];
    if (!(s.mean_ns > 0.0 && s.median_ns > 0.0 && s.p95_ns > 0.0)) {
      throw ContractViolation("profile: non-positive statistic at dim " + std::to_string(grid[i]));
    }
    if (s.runs < min_runs) throw ContractViolation("profile: too few runs at dim " + std::to_string(grid[i]));
  }
}

namespace {

template <typename T>
bool parse_number(std::string_view s, T& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* const kColumns[] = {"dim", "batch", "mean_ns", "median_ns", "p95_ns", "runs"};

}  // namespace

std::vector<std::size_t> parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  std::size_t a = 0, b = 0, step = 0;
  if (parts.size() != 3 || !parse_number(parts[0], a) || !parse_number(parts[1], b) ||
      !parse_number(parts[2], step)) {
    throw ConfigError("grid must look like start:stop:step, got '" + text + "'");
  }
  if (a == 0 || step == 0 || a > b) {
    throw ConfigError("grid '" + text + "' needs 1 <= start <= stop and step >= 1");
  }
  std::vector<std::size_t> g;
  for (std::size_t d = a; d <= b; d += step) g.push_back(d);
  return g;
}

std::string profile_to_csv(const LatencyProfile& p) {
  std::ostringstream out;
  out << "# hardware_id=" << p.hardware_id << "\n";
  out << "# backend=" << p.backend << "\n";
  out << "# timestamp=" << p.timestamp << "\n";
  out << "# batch=" << p.batch << "\n";
  if (p.partial) out << "# partial=true\n";
  out << "dim,batch,mean_ns,median_ns,p95_ns,runs\n";
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    const auto& s = p.samples[i];
    out << p.grid[i] << ',' << p.batch << ',' << fmt(s.mean_ns) << ',' << fmt(s.median_ns) << ','
        << fmt(s.p95_ns) << ',' << s.runs << "\n";
  }
  return out.str();
}

LatencyProfile profile_from_csv(const std::string& text) {
  LatencyProfile p;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> col;
  bool have_header = false;
  bool batch_known = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      std::string key = body.substr(0, eq);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = body.substr(eq + 1);
      if (key == "hardware_id") p.hardware_id = value;
      else if (key == "backend") p.backend = value;
      else if (key == "timestamp") p.timestamp = value;
      else if (key == "partial") p.partial = value == "true";
      else if (key == "batch") {
        if (!parse_number(value, p.batch)) throw ParseError("bad batch value '" + value + "'", line_no);
        batch_known = true;
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (!have_header) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      for (const char* name : kColumns) {
        if (!col.count(name)) throw ParseError(std::string("missing column '") + name + "'", line_no);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != col.size()) {
      throw ParseError("expected " + std::to_string(col.size()) + " fields, found " + std::to_string(cells.size()),
                       line_no);
    }
    std::size_t dim = 0, batch = 0;
    SampleStats s;
    auto need = [&](const char* name, auto& out) {
      if (!parse_number(cells[col.at(name)], out)) {
        throw ParseError(std::string("bad value in column '") + name + "': '" + cells[col.at(name)] + "'", line_no);
      }
    };
    need("dim", dim);
    need("batch", batch);
    need("mean_ns", s.mean_ns);
    need("median_ns", s.median_ns);
    need("p95_ns", s.p95_ns);
    need("runs", s.runs);
    if (!batch_known) {
      p.batch = batch;
      batch_known = true;
    } else if (batch != p.batch) {
      throw ParseError("batch " + std::to_string(batch) + " differs from profile batch " + std::to_string(p.batch),
                       line_no);
    }
    if (!p.grid.empty() && dim <= p.grid.back()) throw ParseError("dims must be strictly ascending", line_no);
    if (!(s.mean_ns > 0 && s.median_ns > 0 && s.p95_ns > 0)) throw ParseError("statistics must be positive", line_no);
    p.grid.push_back(dim);
    p.samples.push_back(s);
  }
  if (!have_header) throw ParseError("missing header line", line_no);
  if (p.grid.empty()) throw ParseError("profile has no samples", line_no);
  return p;
}

void save_profile(const LatencyProfile& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << profile_to_csv(p);
}

LatencyProfile load_profile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open profile '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return profile_from_csv(ss.str());
}

}  // namespace lhsynth::latlab
