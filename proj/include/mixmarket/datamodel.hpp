#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mixmarket/csv.hpp"

namespace mixmarket {

enum class TechnologyKind { kGeneration, kStorage };

struct Technology {
  std::string id;
  TechnologyKind kind = TechnologyKind::kGeneration;
  double capex_conversion = 0.0;  // currency per MW, CapEx and FOM combined
  double capex_storage = 0.0;     // currency per MWh, storage only
  double vom = 0.0;               // currency per MWh
  double lifetime_years = 1.0;
  double discount_rate = 0.0;
  double annuity_factor = 1.0;
  double emission_rate = 0.0;     // t CO2 per MWh
  double charge_efficiency = 1.0;
  double discharge_efficiency = 1.0;
  bool is_fossil = false;

  bool is_storage() const { return kind == TechnologyKind::kStorage; }
};

/// Per-technology vectors are indexed like Scenario::technologies.
struct Node {
  std::string id;
  std::vector<double> demand;                          // MWh per step
  std::vector<double> existing_capacity;               // MW
  std::vector<double> existing_storage_capacity;       // MWh
  std::vector<std::vector<double>> capacity_factor;    // [tech][t] in [0,1]
  double bilateral_share = 0.0;                        // fraction of net injection traded bilaterally
  std::vector<double> capacity_externality;            // currency per MW
  std::vector<double> production_externality;          // currency per MWh, may be negative
  std::vector<int> neighbors;                          // sorted node indices
};

/// Product-differentiation coefficients, optionally with the criteria they
/// were built from.
struct Criterion {
  std::string name;
  std::vector<double> node_value;                      // c_n
  std::map<std::pair<int, int>, double> characteristic;  // r_{n,m}
};

struct BilateralPreference {
  std::vector<std::vector<double>> coefficient;  // [n][m], currency per MWh
  std::vector<Criterion> criteria;               // empty when given explicitly

  double at(int n, int m) const { return coefficient.empty() ? 0.0 : coefficient[n][m]; }
};

struct Line {
  std::string id;
  int from = 0;
  int to = 0;
  double length_km = 1.0;
  double capex_per_mw_km = 0.0;
  double lifetime_years = 1.0;
  double discount_rate = 0.0;
  double annuity_factor = 1.0;
  double existing_capacity = 0.0;  // MW
  double reactance = 1.0;          // per unit, PTDF input only
};

enum class CarbonCapMode { kUpperBound, kEquality };

struct Scenario {
  std::vector<Node> nodes;
  std::vector<Technology> technologies;
  std::vector<Line> lines;
  BilateralPreference preferences;
  int timesteps = 0;
  double carbon_cap = kNoCap;
  CarbonCapMode carbon_cap_mode = CarbonCapMode::kUpperBound;
  int slack_node = 0;
  double step_hours = 1.0;

  static constexpr double kNoCap = std::numeric_limits<double>::infinity();

  int node_index(std::string_view id) const;
  int technology_index(std::string_view id) const;
  /// Generation and storage technology indices, in declaration order.
  std::vector<int> generation_technologies() const;
  std::vector<int> storage_technologies() const;
};

/// Present-value annuity factor: (1 - (1+r)^-L) / r, or L when r = 0.
double annuity(double lifetime_years, double discount_rate);

/// E_{n,m} = sum_u c^u_n r^u_{n,m} for every neighbor pair; rejects missing
/// characteristics and negative coefficients.
BilateralPreference build_preferences_from_criteria(std::span<const Criterion> criteria,
                                                    const std::vector<Node>& nodes);

/// Throws InputError describing the first violated invariant.
void validate(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& dir);
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);

/// Replaces every node's neighbor list with the complete graph.
void make_complete_communication_graph(Scenario& scenario);

}  // namespace mixmarket
