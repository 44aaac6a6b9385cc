#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mixmarket/fixtures.hpp"
#include "mixmarket/lp_solver.hpp"
#include "mixmarket/model_builder.hpp"
#include "support/pool_only_oracle.hpp"

using namespace mixmarket;
namespace fs = std::filesystem;

namespace {

std::set<Tag> tags_of(const ModelInstance& m) {
  std::set<Tag> out;
  for (const RowRef& r : m.row_tags) out.insert(r.tag);
  return out;
}

Scenario two_node_trade(double coefficient, double phi = 1.0) {
  // Cheap generation at A, expensive at B, so A exports to B.
  Scenario s;
  s.timesteps = 1;
  Technology gen;
  gen.id = "gen";
  s.technologies.push_back(gen);
  for (int n = 0; n < 2; ++n) {
    Node node;
    node.id = n == 0 ? "A" : "B";
    node.demand = {n == 0 ? 0.0 : 5.0};
    node.existing_capacity = {n == 0 ? 10.0 : 0.0};
    node.existing_storage_capacity = {0.0};
    node.capacity_externality = {0.0};
    node.production_externality = {0.0};
    node.capacity_factor = {{1.0}};
    node.bilateral_share = phi;
    s.nodes.push_back(node);
  }
  s.technologies[0].capex_conversion = 100.0;
  s.technologies[0].vom = 1.0;
  make_complete_communication_graph(s);
  s.preferences.coefficient = {{0.0, coefficient}, {coefficient, 0.0}};
  Line l;
  l.id = "AB";
  l.from = 0;
  l.to = 1;
  l.existing_capacity = 100.0;
  s.lines.push_back(l);
  s.slack_node = 1;
  validate(s);
  return s;
}

}  // namespace

TEST_CASE("single-node model: variable count and constraint families") {
  const Scenario s = single_node_scenario({10.0, 10.0}, 5.0, 1.0);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  // k + 2 p + 2 ppool + e + 2 zpool
  CHECK(m.lp.num_cols() == 8);
  const std::set<Tag> expected = {Tag::k1e, Tag::k1f, Tag::k1k, Tag::k5g, Tag::k5h, Tag::k2d};
  CHECK(tags_of(m) == expected);
  CHECK(expected_size(s).columns == 8);
  CHECK(expected_size(s).rows == m.lp.num_rows());
}

TEST_CASE("single-node model solves to k = 10, objective 70") {
  const Scenario s = single_node_scenario({10.0, 10.0}, 5.0, 1.0);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  const SolveResult res = solve(m.lp);
  REQUIRE(res.status == SolveStatus::kOptimal);
  CHECK(res.primal[m.vars.k[0][0]] == doctest::Approx(10.0));
  CHECK(res.objective_value == doctest::Approx(70.0));
  CHECK(verify_certificate(m.lp, res).accepted());
}

TEST_CASE("zero buildable capacity is infeasible") {
  Scenario s = single_node_scenario({10.0, 10.0}, 5.0, 1.0);
  s.nodes[0].capacity_factor[0] = {0.0, 0.0};
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  CHECK(solve(m.lp).status == SolveStatus::kInfeasible);
}

TEST_CASE("closed-form sizes match on fixtures") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Scenario s = random_scenario(seed);
    const ModelInstance m = build_centralized(s, compute_ptdf(s));
    const ModelSize size = expected_size(s);
    CHECK(m.lp.num_cols() == size.columns);
    CHECK(m.lp.num_rows() == size.rows);
    CHECK(m.column_symbols.size() == static_cast<std::size_t>(m.lp.num_cols()));
    CHECK(m.row_tags.size() == static_cast<std::size_t>(m.lp.num_rows()));
  }
  const Scenario two = load_scenario(fs::path(MIXMARKET_DATA_DIR) / "two_node");
  const ModelInstance m = build_centralized(two, compute_ptdf(two));
  CHECK(m.lp.num_cols() == expected_size(two).columns);
  CHECK(m.lp.num_rows() == expected_size(two).rows);
}

TEST_CASE("every catalog entry maps to a unique column and back") {
  const Scenario s = random_scenario(7);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  std::vector<int> seen(m.lp.num_cols(), 0);
  for (int j = 0; j < m.lp.num_cols(); ++j) {
    CHECK(m.column(m.column_symbols[j]) == j);
    ++seen[j];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("objective coefficients match an independent recomputation") {
  const Scenario s = random_scenario(11);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  for (int j = 0; j < m.lp.num_cols(); ++j) {
    const SymbolRef& ref = m.column_symbols[j];
    double expected = 0.0;
    switch (ref.symbol) {
      case Symbol::kCapacity: {
        const Technology& t = s.technologies[ref.b];
        expected = t.capex_conversion / t.annuity_factor + s.nodes[ref.a].capacity_externality[ref.b];
        break;
      }
      case Symbol::kStorageCapacity:
        expected = s.technologies[ref.b].capex_storage / s.technologies[ref.b].annuity_factor;
        break;
      case Symbol::kGeneration:
        expected = s.technologies[ref.b].vom + s.nodes[ref.a].production_externality[ref.b];
        break;
      case Symbol::kBilateralPlus:
      case Symbol::kBilateralMinus:
        expected = s.preferences.at(m.pairs[ref.a].n, m.pairs[ref.a].m);
        break;
      case Symbol::kLineCapacity: {
        const Line& l = s.lines[ref.a];
        expected = l.length_km * l.capex_per_mw_km / l.annuity_factor;
        break;
      }
      default:
        expected = 0.0;
    }
    CHECK(m.lp.cost()[j] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("bilateral share 1 pins the pool variables") {
  Scenario s = two_node_trade(0.0, 1.0);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  for (int n = 0; n < 2; ++n) {
    for (int t = 0; t < s.timesteps; ++t) {
      CHECK(m.lp.col_lower()[m.vars.ppool[n][t]] == 0.0);
      CHECK(m.lp.col_upper()[m.vars.ppool[n][t]] == 0.0);
      CHECK(m.rows.r1e[n][t] == -1);
    }
  }
  const SolveResult res = solve(m.lp);
  REQUIRE(res.status == SolveStatus::kOptimal);
  for (int n = 0; n < 2; ++n) CHECK(res.primal[m.vars.ppool[n][0]] == 0.0);
}

TEST_CASE("zero preferences leave no bilateral-ex cost") {
  const Scenario s = two_node_trade(0.0, 0.7);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  for (int j = 0; j < m.lp.num_cols(); ++j) {
    const Symbol sym = m.column_symbols[j].symbol;
    if (sym == Symbol::kBilateralPlus || sym == Symbol::kBilateralMinus) CHECK(m.lp.cost()[j] == 0.0);
  }
}

TEST_CASE("absolute-value split is exact at the optimum") {
  SUBCASE("E = 2, trade +5") {
    const Scenario s = two_node_trade(2.0);
    const ModelInstance m = build_centralized(s, compute_ptdf(s));
    const SolveResult res = solve(m.lp);
    REQUIRE(res.status == SolveStatus::kOptimal);
    const int q = m.pair_index[0][1];
    const double plus = res.primal[m.vars.pplus[q][0]], minus = res.primal[m.vars.pminus[q][0]];
    CHECK(plus == doctest::Approx(5.0));
    CHECK(minus == 0.0);
    CHECK(2.0 * (plus + minus) == doctest::Approx(10.0));
  }
  SUBCASE("E = 12.2, trade -3") {
    Scenario s = two_node_trade(12.2);
    s.nodes[1].demand = {3.0};
    const ModelInstance m = build_centralized(s, compute_ptdf(s));
    const SolveResult res = solve(m.lp);
    REQUIRE(res.status == SolveStatus::kOptimal);
    const int q = m.pair_index[1][0];
    const double plus = res.primal[m.vars.pplus[q][0]], minus = res.primal[m.vars.pminus[q][0]];
    CHECK(plus - minus == doctest::Approx(-3.0));
    CHECK(std::min(plus, minus) <= 1e-9);
    CHECK(12.2 * (plus + minus) == doctest::Approx(36.6));
  }
  SUBCASE("negative coefficient rejected") {
    LinearProgram lp;
    CHECK_THROWS_AS(linearize_abs(lp, "[x]", -1.0), InputError);
  }
}

TEST_CASE("reciprocity, mix identity and split exactness on random optima") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const Scenario s = random_scenario(seed);
    const ModelInstance m = build_centralized(s, compute_ptdf(s));
    const SolveResult res = solve(m.lp);
    REQUIRE(res.status == SolveStatus::kOptimal);
    const auto& x = res.primal;
    for (int t = 0; t < s.timesteps; ++t) {
      for (std::size_t q = 0; q < m.pairs.size(); ++q) {
        const int mir = m.pairs[q].mirror;
        const double pq = x[m.vars.pplus[q][t]] - x[m.vars.pminus[q][t]];
        const double pm = x[m.vars.pplus[mir][t]] - x[m.vars.pminus[mir][t]];
        CHECK(std::abs(pq + pm) <= 1e-8);
        if (s.preferences.at(m.pairs[q].n, m.pairs[q].m) > 0.0) {
          CHECK(std::min(x[m.vars.pplus[q][t]], x[m.vars.pminus[q][t]]) <= 1e-9);
        }
      }
      for (int n = 0; n < m.num_nodes; ++n) {
        double net = -s.nodes[n].demand[t];
        for (int i = 0; i < m.num_technologies; ++i) {
          if (s.technologies[i].is_storage()) net += x[m.vars.pout[n][i][t]] - x[m.vars.pin[n][i][t]];
          else net += x[m.vars.p[n][i][t]];
        }
        double traded = x[m.vars.ppool[n][t]];
        for (std::size_t q = 0; q < m.pairs.size(); ++q) {
          if (m.pairs[q].n == n) traded += x[m.vars.pplus[q][t]] - x[m.vars.pminus[q][t]];
        }
        CHECK(std::abs(traded - net) <= 1e-7);
      }
    }
  }
}

TEST_CASE("pool-only reduction matches a conventional model") {
  RandomScenarioOptions opt;
  opt.bilateral_shares = {0.0};
  opt.with_externalities = false;
  opt.with_preferences = false;
  for (std::uint64_t seed = 200; seed < 215; ++seed) {
    const Scenario s = random_scenario(seed, opt);
    const PtdfMatrix ptdf = compute_ptdf(s);
    const ModelInstance m = build_centralized(s, ptdf);
    const SolveResult res = solve(m.lp);
    const SolveResult oracle = solve(testing::pool_only_model(s, ptdf));
    REQUIRE(res.status == SolveStatus::kOptimal);
    REQUIRE(oracle.status == SolveStatus::kOptimal);
    CHECK(std::abs(res.objective_value - oracle.objective_value) <= 1e-9 * std::max(1.0, std::abs(oracle.objective_value)));
    for (std::size_t q = 0; q < m.pairs.size(); ++q) {
      for (int t = 0; t < s.timesteps; ++t) {
        CHECK(res.primal[m.vars.pplus[q][t]] == 0.0);
        CHECK(res.primal[m.vars.pminus[q][t]] == 0.0);
        CHECK(res.primal[m.vars.zbil[q][t]] == 0.0);
      }
    }
  }
}

TEST_CASE("MPS export") {
  const fs::path dir = fs::temp_directory_path() / "mixmarket_mps";
  fs::create_directories(dir);

  SUBCASE("single-node model has 8 columns") {
    const Scenario s = single_node_scenario({10.0, 10.0}, 5.0, 1.0);
    const ModelInstance m = build_centralized(s, compute_ptdf(s));
    export_mps(m.lp, dir / "single.mps", {}, dir / "single_names.csv");
    std::ifstream in(dir / "single.mps");
    std::string line;
    bool in_columns = false;
    std::set<std::string> cols;
    while (std::getline(in, line)) {
      if (line == "COLUMNS") { in_columns = true; continue; }
      if (!line.empty() && line[0] != ' ') in_columns = false;
      if (in_columns) {
        std::istringstream ss(line);
        std::string name;
        ss >> name;
        cols.insert(name);
      }
    }
    CHECK(cols.size() == 8);
    const LinearProgram back = read_mps(dir / "single.mps");
    CHECK(solve(back).objective_value == doctest::Approx(70.0));
  }

  SUBCASE("empty objective stays valid") {
    LinearProgram lp;
    const int x = lp.add_column("x", 0, 4, 0.0);
    const Term t[] = {{x, 1.0}};
    lp.add_row("r", 1, kInf, t);
    export_mps(lp, dir / "empty.mps");
    const LinearProgram back = read_mps(dir / "empty.mps");
    CHECK(back.num_cols() == 1);
    CHECK(back.cost()[0] == 0.0);
    CHECK(solve(back).status == SolveStatus::kOptimal);
  }

  SUBCASE("round trip reproduces nonzeros and bounds exactly") {
    const Scenario s = random_scenario(42);
    const ModelInstance m = build_centralized(s, compute_ptdf(s));
    export_mps(m.lp, dir / "random.mps");
    const LinearProgram back = read_mps(dir / "random.mps");
    REQUIRE(back.num_cols() == m.lp.num_cols());
    REQUIRE(back.num_rows() == m.lp.num_rows());
    CHECK(back.cost() == m.lp.cost());
    CHECK(back.col_lower() == m.lp.col_lower());
    CHECK(back.col_upper() == m.lp.col_upper());
    CHECK(back.row_lower() == m.lp.row_lower());
    CHECK(back.row_upper() == m.lp.row_upper());
    const ColumnMatrix a = m.lp.column_matrix(), b = back.column_matrix();
    CHECK(a.start == b.start);
    CHECK(a.index == b.index);
    CHECK(a.value == b.value);
    const MpsNames names = mps_names(m.lp);
    CHECK(std::set<std::string>(names.columns.begin(), names.columns.end()).size() == names.columns.size());
    CHECK(std::set<std::string>(names.rows.begin(), names.rows.end()).size() == names.rows.size());
    for (const auto& n : names.columns) CHECK(n.size() <= 8);
  }

  SUBCASE("ranged and free rows survive") {
    LinearProgram lp;
    const int x = lp.add_column("x", -kInf, 3, -1.0);
    const int y = lp.add_column("y", -2, kInf, 1.0);
    const Term t[] = {{x, 1.0}, {y, 1.0}};
    lp.add_row("ranged", -1, 2, t);
    lp.add_row("free", -kInf, kInf, t);
    lp.set_objective_offset(4.5);
    export_mps(lp, dir / "ranged.mps");
    const LinearProgram back = read_mps(dir / "ranged.mps");
    CHECK(back.row_lower() == lp.row_lower());
    CHECK(back.row_upper() == lp.row_upper());
    CHECK(back.col_lower() == lp.col_lower());
    CHECK(back.col_upper() == lp.col_upper());
    CHECK(back.objective_offset() == 4.5);
  }
}

TEST_CASE("LP dump tags every constraint") {
  const Scenario s = single_node_scenario({10.0, 10.0}, 5.0, 1.0);
  const ModelInstance m = build_centralized(s, compute_ptdf(s));
  std::ostringstream out;
  write_lp_dump(m, out);
  const std::string text = out.str();
  CHECK(text.find("[1e] 1e[A,0]:") != std::string::npos);
  CHECK(text.find("[5h] 5h:") != std::string::npos);
  int tagged = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) tagged += !line.empty() && line[0] == '[';
  CHECK(tagged == m.lp.num_rows());
}
