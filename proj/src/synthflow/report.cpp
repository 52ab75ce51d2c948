// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/synthflow/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lhsynth/common/error.hpp"

namespace lhsynth::synthflow {

using nlohmann::json;

const ReportRow* FlowReport::find(const std::string& step) const {
  for (const auto& r : rows) {
    if (r.step == step) return &r;
  }
  return nullptr;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write '" + path + "'");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string report_csv(const FlowReport& report) {
  std::string out =
      "step,d_s,d_h,d_x,cell_params_total,cell_params_active,io_params_total,io_params_active,val_ppl,"
      "latency_median_ns,latency_p95_ns\n";
  for (const auto& r : report.rows) {
    out += r.step + "," + std::to_string(r.d_s) + "," + std::to_string(r.d_h) + "," + std::to_string(r.d_x) + "," +
           std::to_string(r.cell_total) + "," + std::to_string(r.cell_active) + "," + std::to_string(r.io_total) +
           "," + std::to_string(r.io_active) + "," + g17(r.val_ppl) + "," + g17(r.latency_median_ns) + "," +
           g17(r.latency_p95_ns) + "\n";
  }
  return out;
}

std::string report_json(const FlowReport& report) {
  json j;
  j["complete"] = report.complete;
  j["error"] = report.error;
  j["cpu_mode"] = report.cpu_mode;
  j["threshold"] = report.threshold;
  j["seed_cell_active"] = report.seed_cell_active;
  j["wg_active_fraction"] = report.wg_active_fraction;
  j["rcp_start_violation"] = report.rcp_start_violation;
  j["wp_start_violation"] = report.wp_start_violation;
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"step", r.step},
                    {"d_s", r.d_s},
                    {"d_h", r.d_h},
                    {"d_x", r.d_x},
                    {"cell_params_total", r.cell_total},
                    {"cell_params_active", r.cell_active},
                    {"io_params_total", r.io_total},
                    {"io_params_active", r.io_active},
                    {"val_ppl", r.val_ppl},
                    {"latency_median_ns", r.latency_median_ns},
                    {"latency_p95_ns", r.latency_p95_ns}});
  }
  j["rows"] = rows;
  if (report.rcg) {
    const auto& g = *report.rcg;
    j["rcg"] = {{"pruned_dim", g.pruned_dim},         {"target_dim", g.target_dim},
                {"lhp_found", g.lhp_found},           {"noop", g.noop},
                {"metric_before", g.metric_before},   {"metric_after", g.metric_after}};
  } else {
    j["rcg"] = nullptr;
  }
  j["events"] = report.events;
  json masks = json::array();
  for (const auto& m : report.masks) {
    masks.push_back({{"phase", m.phase},
                     {"layer", m.layer},
                     {"file", m.file},
                     {"rows", m.rows},
                     {"cols", m.cols},
                     {"active", m.active}});
  }
  j["masks"] = masks;
  return j.dump(2) + "\n";
}

FlowReport report_from_json(const std::string& text) {
  FlowReport r;
  try {
    const json j = json::parse(text);
    r.complete = j.at("complete").get<bool>();
    r.error = j.value("error", std::string());
    r.cpu_mode = j.value("cpu_mode", false);
    r.threshold = j.value("threshold", 0.0);
    r.seed_cell_active = j.value("seed_cell_active", std::size_t{0});
    r.wg_active_fraction = j.value("wg_active_fraction", std::vector<double>{});
    r.rcp_start_violation = j.value("rcp_start_violation", false);
    r.wp_start_violation = j.value("wp_start_violation", false);
    for (const auto& row : j.at("rows")) {
      ReportRow x;
      x.step = row.at("step").get<std::string>();
      x.d_s = row.at("d_s").get<std::size_t>();
      x.d_h = row.at("d_h").get<std::size_t>();
      x.d_x = row.at("d_x").get<std::size_t>();
      x.cell_total = row.at("cell_params_total").get<std::size_t>();
      x.cell_active = row.at("cell_params_active").get<std::size_t>();
      x.io_total = row.at("io_params_total").get<std::size_t>();
      x.io_active = row.at("io_params_active").get<std::size_t>();
      x.val_ppl = row.at("val_ppl").get<double>();
      x.latency_median_ns = row.at("latency_median_ns").get<double>();
      x.latency_p95_ns = row.at("latency_p95_ns").get<double>();
      r.rows.push_back(x);
    }
    if (j.contains("rcg") && !j.at("rcg").is_null()) {
      const auto& g = j.at("rcg");
      r.rcg = RcgRecord{g.at("pruned_dim").get<std::size_t>(), g.at("target_dim").get<std::size_t>(),
                        g.at("lhp_found").get<bool>(),         g.at("noop").get<bool>(),
                        g.at("metric_before").get<double>(),   g.at("metric_after").get<double>()};
    }
    r.events = j.value("events", std::vector<std::string>{});
    for (const auto& m : j.value("masks", json::array())) {
      r.masks.push_back({m.at("phase").get<std::string>(), m.at("layer").get<std::string>(),
                         m.at("file").get<std::string>(), m.at("rows").get<std::size_t>(),
                         m.at("cols").get<std::size_t>(), m.at("active").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what(), 0);
  }
  return r;
}

void write_report(const FlowReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file((std::filesystem::path(dir) / "report.csv").string(), report_csv(report));
  write_file((std::filesystem::path(dir) / "report.json").string(), report_json(report));
}

FlowReport load_report(const std::string& dir) {
  return report_from_json(slurp((std::filesystem::path(dir) / "report.json").string()));
}

std::string report_table(const FlowReport& report) {
  std::string out;
  if (!report.complete) {
    out += "PARTIAL REPORT: flow did not complete";
    if (!report.error.empty()) out += " (" + report.error + ")";
    out += "\n";
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-9s %6s %6s %6s %12s %12s %10s %14s\n", "step", "d_s", "d_h", "d_x",
                "cell_total", "cell_active", "val_ppl", "latency_ms");
  out += buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-9s %6zu %6zu %6zu %12zu %12zu %10.3f %14.3f\n", r.step.c_str(), r.d_s, r.d_h,
                  r.d_x, r.cell_total, r.cell_active, r.val_ppl, r.latency_median_ns / 1e6);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "threshold (validation perplexity): %.3f\n", report.threshold);
  out += buf;
  if (report.rcg) {
    std::snprintf(buf, sizeof buf, "rcg: %zu -> %zu%s, perplexity %.3f -> %.3f\n", report.rcg->pruned_dim,
                  report.rcg->target_dim, report.rcg->noop ? " (no-op)" : "", report.rcg->metric_before,
                  report.rcg->metric_after);
    out += buf;
  }
  return out;
}

}  // namespace lhsynth::synthflow
