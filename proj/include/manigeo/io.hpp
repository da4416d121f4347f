#pragma once

// Artifact serialization. Every writer is deterministic: fixed column order,
// every number through format_g9, LF line ends, no timestamps. Identical
// inputs therefore produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "manigeo/geometry.hpp"
#include "manigeo/manifolds.hpp"
#include "manigeo/network.hpp"
#include "manigeo/numerics.hpp"

namespace manigeo {

// 9 significant digits; enough for a double to survive a parse/format
// round trip of these artifacts, compact enough to diff.
inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = detail::open_out(path);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct NamedColumn {
  std::string name;
  const Vec* values = nullptr;
};

// Grid serialization: header theta1,theta2,<columns>, one row per point in
// row-major grid order.
inline void write_grid_csv(const std::filesystem::path& path, const AngleGrid& grid,
                           const std::vector<NamedColumn>& columns) {
  for (const NamedColumn& c : columns)
    if (c.values == nullptr || c.values->size() != grid.points.size())
      throw std::invalid_argument("grid csv column '" + c.name + "' does not match the grid");
  std::ofstream out = detail::open_out(path);
  out << "theta1,theta2";
  for (const NamedColumn& c : columns) out << ',' << c.name;
  out << '\n';
  for (size_t p = 0; p < grid.points.size(); ++p) {
    out << format_g9(grid.points[p].theta1) << ',' << format_g9(grid.points[p].theta2);
    for (const NamedColumn& c : columns) out << ',' << format_g9((*c.values)[p]);
    out << '\n';
  }
}

inline void write_metric_csv(const std::filesystem::path& path, const MetricField& f) {
  write_grid_csv(path, f.grid, {{"g11", &f.g11}, {"g12", &f.g12}, {"g22", &f.g22}});
}

inline void write_curvature_csv(const std::filesystem::path& path, const CurvatureField& f) {
  Vec valid(f.valid.size());
  for (size_t i = 0; i < f.valid.size(); ++i) valid[i] = f.valid[i] ? 1.0 : 0.0;
  write_grid_csv(path, f.grid, {{"K", &f.k}, {"valid", &valid}});
}

// Bare numeric matrix, one row per line.
inline void write_matrix_csv(const std::filesystem::path& path, const Mat& m) {
  std::ofstream out = detail::open_out(path);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (c) out << ',';
      out << format_g9(m(r, c));
    }
    out << '\n';
  }
}

inline void write_row_csv(const std::filesystem::path& path, const Vec& v) {
  std::ofstream out = detail::open_out(path);
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << format_g9(v[i]);
  }
  out << '\n';
}

inline void write_trajectory_csv(const std::filesystem::path& path, const std::vector<int>& epochs,
                                 const Vec& u_empirical, const Vec& u_theory) {
  if (epochs.size() != u_empirical.size() || epochs.size() != u_theory.size())
    throw std::invalid_argument("trajectory columns differ in length");
  std::ofstream out = detail::open_out(path);
  out << "epoch,u_empirical,u_theory\n";
  for (size_t i = 0; i < epochs.size(); ++i)
    out << epochs[i] << ',' << format_g9(u_empirical[i]) << ',' << format_g9(u_theory[i]) << '\n';
}

inline void write_curve_csv(const std::filesystem::path& path, const Vec& c, const Vec& analytic,
                            const Vec& mc, const Vec& network) {
  if (c.size() != analytic.size() || c.size() != mc.size() || c.size() != network.size())
    throw std::invalid_argument("curve columns differ in length");
  std::ofstream out = detail::open_out(path);
  out << "c,posterior_analytic,posterior_mc,network_output\n";
  for (size_t i = 0; i < c.size(); ++i)
    out << format_g9(c[i]) << ',' << format_g9(analytic[i]) << ',' << format_g9(mc[i]) << ','
        << format_g9(network[i]) << '\n';
}

inline nlohmann::ordered_json train_record_json(const TrainRecord& record) {
  nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
  for (const TrainSnapshot& s : record.snapshots) {
    nlohmann::ordered_json j;
    j["epoch"] = s.epoch;
    j["loss"] = s.loss;
    j["train_accuracy"] = s.train_accuracy;
    j["holdout_accuracy"] = s.holdout_accuracy;  // NaN dumps as null
    j["u"] = s.u;
    snaps.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["snapshots"] = std::move(snaps);
  return root;
}

inline std::string epoch_tag(int epoch) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", epoch);
  return buf;
}

// record.json holds the scalar trace; with_weights additionally dumps every
// snapshot's layers as weights_<epoch>_l<k>.csv / biases_<epoch>_l<k>.csv.
inline void write_train_record(const std::filesystem::path& dir, const TrainRecord& record,
                               bool with_weights = false) {
  std::filesystem::create_directories(dir);
  write_text(dir / "record.json", train_record_json(record).dump(2) + "\n");
  if (!with_weights) return;
  for (const TrainSnapshot& s : record.snapshots) {
    const std::string tag = epoch_tag(s.epoch);
    for (size_t l = 0; l < s.weights.layers.size(); ++l) {
      const std::string suffix = tag + "_l" + std::to_string(l) + ".csv";
      write_matrix_csv(dir / ("weights_" + suffix), s.weights.layers[l].w);
      write_row_csv(dir / ("biases_" + suffix), s.weights.layers[l].b);
    }
  }
}

// Minimal reader for round-trip checks and downstream tooling.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<Vec> columns;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  table.columns.resize(table.header.size());
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ls(line);
    size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= table.columns.size())
        throw std::runtime_error(path.string() + ": too many cells on row " + std::to_string(row));
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw std::runtime_error(path.string() + ": bad number on row " + std::to_string(row));
      table.columns[col++].push_back(v);
    }
    if (col != table.columns.size())
      throw std::runtime_error(path.string() + ": short row " + std::to_string(row));
  }
  return table;
}

}  // namespace manigeo
