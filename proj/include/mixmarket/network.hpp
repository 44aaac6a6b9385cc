#pragma once

#include <filesystem>
#include <vector>

#include "mixmarket/datamodel.hpp"

namespace mixmarket {

/// Line-by-node sensitivity matrix; the slack node's column is zero.
struct PtdfMatrix {
  int num_lines = 0;
  int num_nodes = 0;
  int slack_node = 0;
  std::vector<double> entries;  // row-major, [line * num_nodes + node]

  double operator()(int line, int node) const { return entries[line * num_nodes + node]; }
  /// Flows for a nodal injection vector.
  std::vector<double> flows(const std::vector<double>& injection) const;
};

/// DC power-flow PTDF from line reactances. Throws InputError if the line
/// graph does not connect all nodes.
PtdfMatrix compute_ptdf(const std::vector<Line>& lines, int num_nodes, int slack_node);
PtdfMatrix compute_ptdf(const Scenario& scenario);

/// ptdf.csv: header "line,<node ids...>", one row per line in scenario order.
void write_ptdf(const PtdfMatrix& ptdf, const Scenario& scenario, const std::filesystem::path& path);
PtdfMatrix load_ptdf(const std::filesystem::path& path, const Scenario& scenario);

/// The scenario's ptdf.csv when present, otherwise the computed matrix.
PtdfMatrix scenario_ptdf(const Scenario& scenario, const std::filesystem::path& dir);

}  // namespace mixmarket
