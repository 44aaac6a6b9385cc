#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mixmarket/datamodel.hpp"

using namespace mixmarket;
namespace fs = std::filesystem;

namespace {

const fs::path kTwoNode = fs::path(MIXMARKET_DATA_DIR) / "two_node";

fs::path scratch_copy(const fs::path& src, const std::string& name) {
  const fs::path dst = fs::temp_directory_path() / ("mixmarket_dm_" + name);
  fs::remove_all(dst);
  fs::copy(src, dst, fs::copy_options::recursive);
  return dst;
}

void overwrite(const fs::path& file, const std::string& body) {
  std::ofstream out(file, std::ios::trunc);
  out << body;
}

void check_same(const Scenario& a, const Scenario& b) {
  REQUIRE(a.nodes.size() == b.nodes.size());
  REQUIRE(a.technologies.size() == b.technologies.size());
  REQUIRE(a.lines.size() == b.lines.size());
  CHECK(a.timesteps == b.timesteps);
  CHECK(a.carbon_cap == b.carbon_cap);
  CHECK(a.carbon_cap_mode == b.carbon_cap_mode);
  CHECK(a.slack_node == b.slack_node);
  CHECK(a.step_hours == b.step_hours);
  for (std::size_t i = 0; i < a.technologies.size(); ++i) {
    const Technology& x = a.technologies[i];
    const Technology& y = b.technologies[i];
    CHECK(x.id == y.id);
    CHECK(x.kind == y.kind);
    CHECK(x.capex_conversion == y.capex_conversion);
    CHECK(x.capex_storage == y.capex_storage);
    CHECK(x.vom == y.vom);
    CHECK(x.lifetime_years == y.lifetime_years);
    CHECK(x.discount_rate == y.discount_rate);
    CHECK(x.annuity_factor == y.annuity_factor);
    CHECK(x.emission_rate == y.emission_rate);
    CHECK(x.charge_efficiency == y.charge_efficiency);
    CHECK(x.discharge_efficiency == y.discharge_efficiency);
    CHECK(x.is_fossil == y.is_fossil);
  }
  for (std::size_t n = 0; n < a.nodes.size(); ++n) {
    const Node& x = a.nodes[n];
    const Node& y = b.nodes[n];
    CHECK(x.id == y.id);
    CHECK(x.demand == y.demand);
    CHECK(x.existing_capacity == y.existing_capacity);
    CHECK(x.existing_storage_capacity == y.existing_storage_capacity);
    CHECK(x.capacity_factor == y.capacity_factor);
    CHECK(x.bilateral_share == y.bilateral_share);
    CHECK(x.capacity_externality == y.capacity_externality);
    CHECK(x.production_externality == y.production_externality);
    CHECK(x.neighbors == y.neighbors);
  }
  for (std::size_t l = 0; l < a.lines.size(); ++l) {
    const Line& x = a.lines[l];
    const Line& y = b.lines[l];
    CHECK(x.id == y.id);
    CHECK(x.from == y.from);
    CHECK(x.to == y.to);
    CHECK(x.length_km == y.length_km);
    CHECK(x.capex_per_mw_km == y.capex_per_mw_km);
    CHECK(x.annuity_factor == y.annuity_factor);
    CHECK(x.existing_capacity == y.existing_capacity);
    CHECK(x.reactance == y.reactance);
  }
  CHECK(a.preferences.coefficient == b.preferences.coefficient);
}

}  // namespace

TEST_CASE("annuity factor") {
  CHECK(annuity(25, 0.0) == 25.0);
  CHECK(annuity(1, 0.07) == doctest::Approx(1.0 / 1.07).epsilon(1e-15));
  // Spreadsheet-style summation of discounted unit payments.
  double sum = 0.0;
  for (int t = 1; t <= 25; ++t) sum += std::pow(1.07, -t);
  CHECK(annuity(25, 0.07) == doctest::Approx(sum).epsilon(1e-13));
  CHECK_THROWS(annuity(0, 0.05));
  CHECK_THROWS(annuity(-3, 0.05));
}

TEST_CASE("preference coefficients from criteria") {
  std::vector<Node> nodes(2);
  nodes[0].id = "NO";
  nodes[1].id = "CH";
  nodes[0].neighbors = {1};
  nodes[1].neighbors = {0};

  SUBCASE("non-green index, calibrated") {
    Criterion u{"non_green", {1.0, 1.0}, {{{0, 1}, 12.2}, {{1, 0}, 0.0}}};
    const auto pref = build_preferences_from_criteria(std::span(&u, 1), nodes);
    CHECK(pref.at(0, 1) == doctest::Approx(12.2));
    CHECK(pref.at(1, 0) == 0.0);
  }
  SUBCASE("empty criteria set") {
    const auto pref = build_preferences_from_criteria({}, nodes);
    CHECK(pref.at(0, 1) == 0.0);
    CHECK(pref.at(1, 0) == 0.0);
  }
  SUBCASE("two criteria") {
    std::vector<Criterion> us = {{"a", {1.0, 1.0}, {{{0, 1}, 3.0}, {{1, 0}, 3.0}}},
                                 {"b", {2.0, 2.0}, {{{0, 1}, 0.5}, {{1, 0}, 0.5}}}};
    const auto pref = build_preferences_from_criteria(us, nodes);
    CHECK(pref.at(0, 1) == doctest::Approx(4.0));
  }
  SUBCASE("negative coefficient rejected with the pair") {
    Criterion u{"bad", {1.0, 1.0}, {{{0, 1}, -1.0}, {{1, 0}, 1.0}}};
    try {
      build_preferences_from_criteria(std::span(&u, 1), nodes);
      FAIL("expected rejection");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("NO, CH") != std::string::npos);
    }
  }
  SUBCASE("missing characteristic rejected") {
    Criterion u{"gap", {1.0, 1.0}, {{{0, 1}, 1.0}}};
    CHECK_THROWS_AS(build_preferences_from_criteria(std::span(&u, 1), nodes), InputError);
  }
}

TEST_CASE("criteria coefficients equal the defining sum on random data") {
  const int n = 5;
  std::vector<Node> nodes(n);
  for (int a = 0; a < n; ++a) {
    nodes[a].id = "N" + std::to_string(a);
    for (int b = 0; b < n; ++b) {
      if (b != a) nodes[a].neighbors.push_back(b);
    }
  }
  std::vector<Criterion> us(3);
  unsigned state = 12345;
  auto next = [&] {
    state = state * 1103515245u + 12345u;
    return (state >> 8) % 1000 / 100.0;
  };
  for (int u = 0; u < 3; ++u) {
    us[u].name = "u" + std::to_string(u);
    us[u].node_value.resize(n);
    for (int a = 0; a < n; ++a) us[u].node_value[a] = next();
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a != b) us[u].characteristic[{a, b}] = next();
      }
    }
  }
  const auto pref = build_preferences_from_criteria(us, nodes);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      double s = 0.0;
      for (const auto& u : us) s += u.node_value[a] * u.characteristic.at({a, b});
      CHECK(pref.at(a, b) == s);
    }
  }
}

TEST_CASE("two-node fixture loads") {
  const Scenario s = load_scenario(kTwoNode);
  CHECK(s.nodes.size() == 2);
  CHECK(s.technologies.size() == 3);
  CHECK(s.lines.size() == 1);
  CHECK(s.timesteps == 4);
  CHECK(s.slack_node == 1);
  CHECK(s.nodes[0].bilateral_share == 0.7);
  CHECK(std::isinf(s.carbon_cap));
  const int wind = s.technology_index("wind");
  const int battery = s.technology_index("battery");
  CHECK(s.nodes[0].capacity_factor[wind][2] == 0.3);
  CHECK(s.nodes[0].capacity_factor[s.technology_index("gas")][2] == 1.0);
  CHECK(s.nodes[0].existing_storage_capacity[battery] == 4.0);
  CHECK(s.technologies[battery].is_storage());
  CHECK(s.technologies[s.technology_index("gas")].is_fossil);
  CHECK(s.preferences.at(0, 1) == 1.5);
  CHECK(s.nodes[0].neighbors == std::vector<int>{1});
  CHECK(s.nodes[1].neighbors == std::vector<int>{0});
  CHECK(s.generation_technologies() == std::vector<int>{0, 1});
  CHECK(s.storage_technologies() == std::vector<int>{2});
}

TEST_CASE("scenario round-trip") {
  Scenario s = load_scenario(kTwoNode);
  s.carbon_cap = 123.25;
  s.carbon_cap_mode = CarbonCapMode::kEquality;
  const fs::path dir = fs::temp_directory_path() / "mixmarket_dm_roundtrip";
  fs::remove_all(dir);
  write_scenario(s, dir);
  const Scenario back = load_scenario(dir);
  check_same(s, back);
}

TEST_CASE("criteria-based preferences round-trip") {
  Scenario s = load_scenario(kTwoNode);
  std::vector<Criterion> us = {{"ng", {1.0, 2.0}, {{{0, 1}, 3.0}, {{1, 0}, 0.25}}}};
  s.preferences = build_preferences_from_criteria(us, s.nodes);
  const fs::path dir = fs::temp_directory_path() / "mixmarket_dm_criteria";
  fs::remove_all(dir);
  write_scenario(s, dir);
  const Scenario back = load_scenario(dir);
  CHECK(back.preferences.at(0, 1) == 3.0);
  CHECK(back.preferences.at(1, 0) == 0.5);
  REQUIRE(back.preferences.criteria.size() == 1);
}

TEST_CASE("ingestion errors carry file and line") {
  SUBCASE("series length") {
    const fs::path dir = scratch_copy(kTwoNode, "short");
    overwrite(dir / "demand.csv", "A,B\n1,2\n3,4\n5,6\n");
    try {
      load_scenario(dir);
      FAIL("expected error");
    } catch (const InputError& e) {
      CHECK(fs::path(e.file()).filename() == "demand.csv");
      CHECK(std::string(e.what()).find("length 3, expected 4") != std::string::npos);
    }
  }
  SUBCASE("bilateral share outside [0,1]") {
    const fs::path dir = scratch_copy(kTwoNode, "phi");
    overwrite(dir / "nodes.csv", "id,bilateral_share,slack\nA,0.7,0\nB,1.2,1\n");
    try {
      load_scenario(dir);
      FAIL("expected error");
    } catch (const InputError& e) {
      CHECK(fs::path(e.file()).filename() == "nodes.csv");
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("dangling reference") {
    const fs::path dir = scratch_copy(kTwoNode, "dangling");
    overwrite(dir / "existing_capacity.csv", "node,technology,mw,mwh\nC,gas,5,0\n");
    try {
      load_scenario(dir);
      FAIL("expected error");
    } catch (const InputError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("malformed number") {
    const fs::path dir = scratch_copy(kTwoNode, "malformed");
    overwrite(dir / "demand.csv", "A,B\n10,20\n12,x\n8,25\n15,22\n");
    try {
      load_scenario(dir);
      FAIL("expected error");
    } catch (const InputError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing file") {
    const fs::path dir = scratch_copy(kTwoNode, "missing");
    fs::remove(dir / "technologies.csv");
    CHECK_THROWS_AS(load_scenario(dir), InputError);
  }
  SUBCASE("storage fields on generation technology") {
    const fs::path dir = scratch_copy(kTwoNode, "storage_fields");
    overwrite(dir / "technologies.csv",
              "id,kind,capex_conversion,capex_storage,vom,lifetime,discount_rate,emission_rate,charge_eff,discharge_eff\n"
              "gas,generation,40,5,30,30,0.05,0.4,,\nwind,generation,60,,0,25,0.05,0,,\n"
              "battery,storage,20,10,0.5,15,0.05,0,0.95,0.95\n");
    CHECK_THROWS_AS(load_scenario(dir), InputError);
  }
  SUBCASE("negative explicit preference") {
    const fs::path dir = scratch_copy(kTwoNode, "negpref");
    overwrite(dir / "preferences.csv", "from,to,coefficient\nA,B,-1\n");
    CHECK_THROWS_AS(load_scenario(dir), InputError);
  }
}

TEST_CASE("communication graph is symmetric after ingestion") {
  const fs::path dir = scratch_copy(kTwoNode, "comm");
  overwrite(dir / "communication.csv", "node_a,node_b\nB,A\n");
  const Scenario s = load_scenario(dir);
  for (std::size_t n = 0; n < s.nodes.size(); ++n) {
    for (int m : s.nodes[n].neighbors) {
      const auto& back = s.nodes[m].neighbors;
      CHECK(std::find(back.begin(), back.end(), static_cast<int>(n)) != back.end());
    }
  }
  Scenario broken = s;
  broken.nodes[1].neighbors.clear();
  CHECK_THROWS_AS(validate(broken), InputError);
}
