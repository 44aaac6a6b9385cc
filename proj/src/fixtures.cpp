#include "mixmarket/fixtures.hpp"

#include <random>

#include <fmt/format.h>

namespace mixmarket {

namespace {

Technology generation(std::string id, double capex, double vom, double emission) {
  Technology t;
  t.id = std::move(id);
  t.kind = TechnologyKind::kGeneration;
  t.capex_conversion = capex;
  t.vom = vom;
  t.lifetime_years = 1.0;
  t.discount_rate = 0.0;
  t.annuity_factor = 1.0;
  t.emission_rate = emission;
  t.is_fossil = emission > 0.0;
  return t;
}

void size_node(Node& node, int n_tech, int T) {
  node.existing_capacity.assign(n_tech, 0.0);
  node.existing_storage_capacity.assign(n_tech, 0.0);
  node.capacity_externality.assign(n_tech, 0.0);
  node.production_externality.assign(n_tech, 0.0);
  node.capacity_factor.assign(n_tech, std::vector<double>(T, 1.0));
}

}  // namespace

Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& o) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto integer = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  auto chance = [&](double p) { return uniform(0.0, 1.0) < p; };

  Scenario s;
  const int N = integer(o.min_nodes, o.max_nodes);
  const int T = integer(o.min_steps, o.max_steps);
  s.timesteps = T;

  s.technologies.push_back(generation("gas", uniform(5, 40), uniform(10, 60), uniform(0.2, 0.6)));
  s.technologies.push_back(generation("wind", uniform(20, 120), uniform(0, 2), 0.0));
  if (o.with_storage) {
    Technology b;
    b.id = "battery";
    b.kind = TechnologyKind::kStorage;
    b.capex_conversion = uniform(2, 20);
    b.capex_storage = uniform(1, 10);
    b.lifetime_years = integer(5, 20);
    b.discount_rate = uniform(0.0, 0.08);
    b.annuity_factor = annuity(b.lifetime_years, b.discount_rate);
    b.charge_efficiency = uniform(0.8, 1.0);
    b.discharge_efficiency = uniform(0.8, 1.0);
    s.technologies.push_back(b);
  }
  const int I = static_cast<int>(s.technologies.size());

  for (int n = 0; n < N; ++n) {
    Node node;
    node.id = fmt::format("N{}", n);
    size_node(node, I, T);
    node.bilateral_share = o.bilateral_shares[integer(0, static_cast<int>(o.bilateral_shares.size()) - 1)];
    for (int t = 0; t < T; ++t) {
      node.demand.push_back(uniform(5, 30));
      node.capacity_factor[1][t] = uniform(0.05, 1.0);
    }
    node.existing_capacity[0] = chance(0.5) ? uniform(0, 10) : 0.0;
    node.existing_capacity[1] = chance(0.3) ? uniform(0, 10) : 0.0;
    if (o.with_storage && chance(0.3)) {
      node.existing_capacity[2] = uniform(0, 3);
      node.existing_storage_capacity[2] = uniform(0, 6);
    }
    if (o.with_externalities) {
      for (int i = 0; i < I; ++i) {
        if (chance(0.4)) node.capacity_externality[i] = uniform(0, 5);
        if (i < 2 && chance(0.4)) node.production_externality[i] = uniform(-2, 5);
      }
    }
    s.nodes.push_back(std::move(node));
  }
  make_complete_communication_graph(s);
  s.slack_node = integer(0, N - 1);

  // Random spanning tree plus a few extra lines.
  auto add_line = [&](int a, int b) {
    Line l;
    l.id = fmt::format("L{}", s.lines.size());
    l.from = a;
    l.to = b;
    l.length_km = uniform(10, 100);
    l.capex_per_mw_km = uniform(0.01, 0.5);
    l.lifetime_years = 1.0;
    l.annuity_factor = 1.0;
    l.existing_capacity = chance(0.5) ? uniform(0, 15) : 0.0;
    l.reactance = uniform(0.05, 1.0);
    s.lines.push_back(l);
  };
  for (int n = 1; n < N; ++n) add_line(integer(0, n - 1), n);
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      if (chance(0.25)) add_line(a, b);
    }
  }

  s.preferences.coefficient.assign(N, std::vector<double>(N, 0.0));
  if (o.with_preferences) {
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b < N; ++b) {
        if (a != b && chance(0.7)) s.preferences.coefficient[a][b] = uniform(0.0, 5.0);
      }
    }
  }

  if (chance(o.cap_probability)) {
    double demand = 0.0;
    for (const Node& node : s.nodes) {
      for (double d : node.demand) demand += d;
    }
    s.carbon_cap = uniform(0.0, 0.3) * demand * s.technologies[0].emission_rate;
  }
  validate(s);
  return s;
}

Scenario single_node_scenario(const std::vector<double>& demand, double capex_per_mw, double vom,
                              double bilateral_share) {
  Scenario s;
  s.timesteps = static_cast<int>(demand.size());
  s.technologies.push_back(generation("gen", capex_per_mw, vom, 0.0));
  Node node;
  node.id = "A";
  size_node(node, 1, s.timesteps);
  node.demand = demand;
  node.bilateral_share = bilateral_share;
  s.nodes.push_back(std::move(node));
  s.preferences.coefficient.assign(1, std::vector<double>(1, 0.0));
  validate(s);
  return s;
}

}  // namespace mixmarket
