#pragma once

#include <cstdint>
#include <vector>

#include "mixmarket/datamodel.hpp"

namespace mixmarket {

struct RandomScenarioOptions {
  int min_nodes = 2;
  int max_nodes = 4;
  int min_steps = 2;
  int max_steps = 6;
  std::vector<double> bilateral_shares = {0.0, 0.5, 0.7, 1.0};
  bool with_storage = true;
  bool with_externalities = true;
  bool with_preferences = true;
  /// Probability of a finite carbon cap.
  double cap_probability = 0.5;
};

/// Small random instance: gas, wind (capacity factor >= 0.05) and optionally
/// a battery at every node, a connected line graph, complete communication
/// graph. Feasible by construction.
Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& options = {});

/// One node, one generation technology, no lines: demand d per step,
/// capacity factor 1, annualized capex capex_per_mw, variable cost vom.
Scenario single_node_scenario(const std::vector<double>& demand, double capex_per_mw, double vom,
                              double bilateral_share = 0.0);

}  // namespace mixmarket
