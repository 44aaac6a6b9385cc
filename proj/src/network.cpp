#include "mixmarket/network.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace mixmarket {

std::vector<double> PtdfMatrix::flows(const std::vector<double>& injection) const {
  std::vector<double> f(num_lines, 0.0);
  for (int l = 0; l < num_lines; ++l) {
    double s = 0.0;
    for (int n = 0; n < num_nodes; ++n) s += (*this)(l, n) * injection[n];
    f[l] = s;
  }
  return f;
}

PtdfMatrix compute_ptdf(const std::vector<Line>& lines, int num_nodes, int slack_node) {
  if (slack_node < 0 || slack_node >= num_nodes) throw InputError("PTDF: slack node out of range");
  PtdfMatrix out;
  out.num_lines = static_cast<int>(lines.size());
  out.num_nodes = num_nodes;
  out.slack_node = slack_node;
  out.entries.assign(static_cast<std::size_t>(out.num_lines) * num_nodes, 0.0);
  if (lines.empty()) return out;

  // Connectivity over all nodes (union-find).
  std::vector<int> parent(num_nodes);
  for (int i = 0; i < num_nodes; ++i) parent[i] = i;
  auto root = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const Line& l : lines) {
    if (!(l.reactance > 0.0)) throw InputError(fmt::format("PTDF: line {} has nonpositive reactance", l.id));
    parent[root(l.from)] = root(l.to);
  }
  for (int i = 0; i < num_nodes; ++i) {
    if (root(i) != root(slack_node)) throw InputError("PTDF: line graph is disconnected");
  }

  // Reduced nodal susceptance matrix without the slack row/column.
  auto reduced = [&](int n) { return n < slack_node ? n : n - 1; };
  const int dim = num_nodes - 1;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, dim);
  for (const Line& l : lines) {
    const double b = 1.0 / l.reactance;
    if (l.from != slack_node) B(reduced(l.from), reduced(l.from)) += b;
    if (l.to != slack_node) B(reduced(l.to), reduced(l.to)) += b;
    if (l.from != slack_node && l.to != slack_node) {
      B(reduced(l.from), reduced(l.to)) -= b;
      B(reduced(l.to), reduced(l.from)) -= b;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
  if (lu.rank() < dim) throw InputError("PTDF: reduced susceptance matrix is singular");
  const Eigen::MatrixXd X = lu.inverse();

  for (int l = 0; l < out.num_lines; ++l) {
    const Line& line = lines[l];
    const double b = 1.0 / line.reactance;
    for (int n = 0; n < num_nodes; ++n) {
      if (n == slack_node) continue;
      const double theta_from = line.from == slack_node ? 0.0 : X(reduced(line.from), reduced(n));
      const double theta_to = line.to == slack_node ? 0.0 : X(reduced(line.to), reduced(n));
      out.entries[l * num_nodes + n] = b * (theta_from - theta_to);
    }
  }
  return out;
}

PtdfMatrix compute_ptdf(const Scenario& scenario) {
  return compute_ptdf(scenario.lines, static_cast<int>(scenario.nodes.size()), scenario.slack_node);
}

void write_ptdf(const PtdfMatrix& ptdf, const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "line";
  for (const Node& n : scenario.nodes) out << ',' << n.id;
  out << '\n';
  for (int l = 0; l < ptdf.num_lines; ++l) {
    out << scenario.lines[l].id;
    for (int n = 0; n < ptdf.num_nodes; ++n) out << ',' << fmt::format("{}", ptdf(l, n));
    out << '\n';
  }
}

PtdfMatrix load_ptdf(const std::filesystem::path& path, const Scenario& scenario) {
  const CsvTable t = read_csv(path);
  PtdfMatrix out;
  out.num_lines = static_cast<int>(scenario.lines.size());
  out.num_nodes = static_cast<int>(scenario.nodes.size());
  out.slack_node = scenario.slack_node;
  out.entries.assign(static_cast<std::size_t>(out.num_lines) * out.num_nodes, 0.0);
  const auto c_line = t.column("line");
  std::vector<std::size_t> cols;
  for (const Node& n : scenario.nodes) cols.push_back(t.column(n.id));
  std::vector<bool> seen(out.num_lines, false);
  for (const CsvRow& row : t.rows) {
    int l = -1;
    for (int i = 0; i < out.num_lines; ++i) {
      if (scenario.lines[i].id == row.cells[c_line]) l = i;
    }
    if (l < 0) throw InputError(t.path, row.line, "unknown line '" + row.cells[c_line] + "'");
    if (seen[l]) throw InputError(t.path, row.line, "duplicate line '" + row.cells[c_line] + "'");
    seen[l] = true;
    for (int n = 0; n < out.num_nodes; ++n) {
      const double v = t.number(row, cols[n]);
      if (n == out.slack_node && std::abs(v) > 1e-9) {
        throw InputError(t.path, row.line, fmt::format("slack column must be zero, got {}", v));
      }
      out.entries[l * out.num_nodes + n] = n == out.slack_node ? 0.0 : v;
    }
  }
  for (int l = 0; l < out.num_lines; ++l) {
    if (!seen[l]) throw InputError(t.path, 0, "missing row for line '" + scenario.lines[l].id + "'");
  }
  return out;
}

PtdfMatrix scenario_ptdf(const Scenario& scenario, const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / "ptdf.csv")) return load_ptdf(dir / "ptdf.csv", scenario);
  return compute_ptdf(scenario);
}

}  // namespace mixmarket
