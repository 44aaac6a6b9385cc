#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "mixmarket/network.hpp"

using namespace mixmarket;
namespace fs = std::filesystem;

namespace {

Line make_line(int from, int to, double x = 1.0) {
  Line l;
  l.id = "L" + std::to_string(from) + "_" + std::to_string(to);
  l.from = from;
  l.to = to;
  l.reactance = x;
  return l;
}

// Flows from the Moore-Penrose pseudo-inverse of the full Laplacian; no slack.
std::vector<double> pinv_flows(const std::vector<Line>& lines, int n, const std::vector<double>& inj) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const Line& l : lines) {
    const double b = 1.0 / l.reactance;
    L(l.from, l.from) += b;
    L(l.to, l.to) += b;
    L(l.from, l.to) -= b;
    L(l.to, l.from) -= b;
  }
  const Eigen::MatrixXd Lp = L.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::VectorXd theta = Lp * Eigen::Map<const Eigen::VectorXd>(inj.data(), n);
  std::vector<double> f;
  for (const Line& l : lines) f.push_back((theta[l.from] - theta[l.to]) / l.reactance);
  return f;
}

std::vector<Line> random_connected(std::mt19937& rng, int n) {
  std::vector<Line> lines;
  std::uniform_real_distribution<double> x(0.05, 2.0);
  for (int i = 1; i < n; ++i) {
    lines.push_back(make_line(std::uniform_int_distribution<int>(0, i - 1)(rng), i, x(rng)));
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.3) lines.push_back(make_line(a, b, x(rng)));
    }
  }
  return lines;
}

}  // namespace

TEST_CASE("two-node PTDF") {
  const auto p = compute_ptdf({make_line(0, 1)}, 2, 1);
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(p(0, 1) == 0.0);
}

TEST_CASE("triangle splits flow 2/3 and 1/3") {
  // A=0, B=1, C=2; lines A-B, A-C, C-B.
  const std::vector<Line> lines = {make_line(0, 1), make_line(0, 2), make_line(2, 1)};
  const std::vector<double> inj = {1.0, -1.0, 0.0};
  const auto oracle = pinv_flows(lines, 3, inj);
  CHECK(oracle[0] == doctest::Approx(2.0 / 3.0));
  CHECK(oracle[1] == doctest::Approx(1.0 / 3.0));
  for (int slack = 0; slack < 3; ++slack) {
    const auto f = compute_ptdf(lines, 3, slack).flows(inj);
    for (int l = 0; l < 3; ++l) CHECK(f[l] == doctest::Approx(oracle[l]).epsilon(1e-12));
  }
}

TEST_CASE("zero injection gives zero flow") {
  std::mt19937 rng(3);
  const auto lines = random_connected(rng, 5);
  const auto f = compute_ptdf(lines, 5, 0).flows(std::vector<double>(5, 0.0));
  for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("flows satisfy nodal balance and match the pseudo-inverse on random graphs") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 5;
    const auto lines = random_connected(rng, n);
    const int slack = trial % n;
    const auto ptdf = compute_ptdf(lines, n, slack);
    CHECK(ptdf.slack_node == slack);
    for (int l = 0; l < ptdf.num_lines; ++l) CHECK(ptdf(l, slack) == 0.0);
    std::vector<double> inj(n);
    double total = 0.0;
    for (int i = 0; i + 1 < n; ++i) total += inj[i] = std::uniform_real_distribution<double>(-5, 5)(rng);
    inj[n - 1] = -total;
    const auto f = ptdf.flows(inj);
    std::vector<double> net(n, 0.0);
    for (std::size_t l = 0; l < lines.size(); ++l) {
      net[lines[l].from] += f[l];
      net[lines[l].to] -= f[l];
    }
    for (int i = 0; i < n; ++i) CHECK(std::abs(net[i] - inj[i]) <= 1e-8);
    const auto oracle = pinv_flows(lines, n, inj);
    for (std::size_t l = 0; l < lines.size(); ++l) CHECK(std::abs(f[l] - oracle[l]) <= 1e-8);
  }
}

TEST_CASE("superposition") {
  std::mt19937 rng(5);
  const auto lines = random_connected(rng, 6);
  const auto ptdf = compute_ptdf(lines, 6, 2);
  // Dyadic data keeps every product exact.
  const std::vector<double> x = {1.0, -0.5, 0.25, 2.0, -1.0, 0.0};
  const std::vector<double> y = {0.0, 0.75, -1.0, 0.5, 0.0, 1.0};
  const double a = 2.0, b = -0.5;
  std::vector<double> z(6);
  for (int i = 0; i < 6; ++i) z[i] = a * x[i] + b * y[i];
  const auto fz = ptdf.flows(z);
  const auto fx = ptdf.flows(x);
  const auto fy = ptdf.flows(y);
  for (std::size_t l = 0; l < fz.size(); ++l) CHECK(fz[l] == doctest::Approx(a * fx[l] + b * fy[l]).epsilon(1e-14));
}

TEST_CASE("disconnected graph is rejected") {
  CHECK_THROWS_AS(compute_ptdf({make_line(0, 1)}, 3, 0), InputError);
}

TEST_CASE("ptdf.csv round-trip and validation") {
  Scenario s;
  s.slack_node = 1;
  for (const char* id : {"A", "B", "C"}) {
    Node n;
    n.id = id;
    s.nodes.push_back(n);
  }
  s.lines = {make_line(0, 1, 0.5), make_line(0, 2, 1.0), make_line(2, 1, 2.0)};
  const auto p = compute_ptdf(s);
  const fs::path dir = fs::temp_directory_path() / "mixmarket_ptdf";
  fs::create_directories(dir);
  write_ptdf(p, s, dir / "ptdf.csv");
  const auto back = load_ptdf(dir / "ptdf.csv", s);
  CHECK(back.entries == p.entries);

  std::ofstream(dir / "missing.csv") << "line,A,B\nL0_1,1,0\nL0_2,1,0\nL2_1,1,0\n";
  CHECK_THROWS_AS(load_ptdf(dir / "missing.csv", s), InputError);
  std::ofstream(dir / "slack.csv") << "line,A,B,C\nL0_1,1,0.5,0\nL0_2,1,0,0\nL2_1,1,0,0\n";
  CHECK_THROWS_AS(load_ptdf(dir / "slack.csv", s), InputError);

  Scenario two;
  two.slack_node = 1;
  two.nodes.resize(2);
  two.nodes[0].id = "A";
  two.nodes[1].id = "B";
  two.lines = {make_line(0, 1)};
  std::ofstream(dir / "hand.csv") << "line,A,B\nL0_1,1,0\n";
  const auto hand = load_ptdf(dir / "hand.csv", two);
  CHECK(hand(0, 0) == 1.0);
}
