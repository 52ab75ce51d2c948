// Copyright 2026 The lhsynth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "lhsynth/growprune/mask_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lhsynth/common/error.hpp"

namespace lhsynth::growprune {

void write_pbm(const numkit::Mask& mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << "P4\n" << mask.cols() << " " << mask.rows() << "\n";
  const std::size_t stride = (mask.cols() + 7) / 8;
  std::vector<char> line(stride);
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    std::fill(line.begin(), line.end(), 0);
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      if (mask(r, c)) line[c / 8] = static_cast<char>(line[c / 8] | (0x80 >> (c % 8)));
    }
    out.write(line.data(), static_cast<std::streamsize>(stride));
  }
}

numkit::Mask read_pbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string magic;
  std::size_t cols = 0, rows = 0;
  in >> magic >> cols >> rows;
  if (magic != "P4" || !in) throw ParseError("not a binary PBM file: " + path, 1);
  in.get();
  numkit::Mask mask(rows, cols, false);
  const std::size_t stride = (cols + 7) / 8;
  std::vector<char> line(stride);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!in.read(line.data(), static_cast<std::streamsize>(stride))) {
      throw ParseError("truncated PBM raster in " + path, 2);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      mask.set(r, c, (static_cast<unsigned char>(line[c / 8]) >> (7 - c % 8)) & 1);
    }
  }
  return mask;
}

std::vector<MaskSnapshot> export_masks(hlstm::LMModel& model, const std::string& dir, const std::string& phase) {
  std::filesystem::create_directories(dir);
  const auto layers = model.masked_layers();
  const auto names = model.masked_layer_names();
  std::vector<MaskSnapshot> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    MaskSnapshot s;
    s.phase = phase;
    s.layer = names[i];
    s.file = phase + "_" + names[i] + ".pbm";
    s.rows = layers[i]->out_features();
    s.cols = layers[i]->in_features();
    s.active = layers[i]->mask().count();
    write_pbm(layers[i]->mask(), (std::filesystem::path(dir) / s.file).string());
    out.push_back(std::move(s));
  }
  return out;
}

void write_mask_manifest(const std::vector<MaskSnapshot>& snaps, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : snaps) {
    j.push_back({{"phase", s.phase}, {"layer", s.layer}, {"file", s.file},
                 {"rows", s.rows}, {"cols", s.cols}, {"active", s.active}});
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << nlohmann::json{{"masks", j}}.dump(2) << "\n";
}

}  // namespace lhsynth::growprune
