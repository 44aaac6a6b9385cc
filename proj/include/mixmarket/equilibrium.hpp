#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mixmarket/datamodel.hpp"
#include "mixmarket/lp_solver.hpp"
#include "mixmarket/model_builder.hpp"
#include "mixmarket/network.hpp"

namespace mixmarket {

// Multipliers are stored in the sign of the actors' Lagrangians,
//
//   L = objective + sum lambda * (lhs - rhs) + sum mu_up * (g - ub) - sum mu_lo * (g - lb),
//
// with every constraint written as in the node and TSO problems (equalities
// as lhs - rhs = 0, so lambda = -dual). mu_* >= 0 at a valid KKT point.
// pool_price is the exception: it is the market-facing price, the marginal
// system cost of one more MWh of demand, and equals -lambda_pool.
struct PriceSet {
  // Market prices
  Vec2<double> lambda_pool;        // [n][t]  coupling p^pool = z^pool
  Vec2<double> pool_price;         // [n][t]  -lambda_pool
  Vec2<double> lambda_bilateral;   // [q][t]  reciprocity, shared by (n,m) and (m,n)
  Vec2<double> lambda_grid;        // [q][t]  coupling p^bilateral = z^bilateral
  double lambda_co2 = 0.0;         // carbon cap, >= 0
  Vec2<double> lambda_flow;        // [l][t]  flow definition
  std::vector<double> lambda_system;  // [t] system balance
  // Node-internal
  Vec2<double> lambda_bilateral_node;  // [n][t]  bilateral balance
  Vec2<double> lambda_pool_node;       // [n][t]  pool balance
  std::vector<double> lambda_co2_node; // [n]     emission accounting
  Vec3<double> lambda_storage;         // [n][i][t] storage dynamics
  // Bound duals
  Vec3<double> mu_gen_up, mu_gen_lo;   // [n][i][t]
  Vec3<double> mu_soc_up, mu_soc_lo;
  Vec3<double> mu_out_up, mu_out_lo;
  Vec3<double> mu_in_up, mu_in_lo;
  Vec2<double> mu_k_lo, mu_kst_lo;     // [n][i]
  Vec2<double> mu_line_up, mu_line_lo; // [l][t]
  std::vector<double> mu_kline_lo;     // [l]
  // Marginal cost of +1 MWh demand at (n,t): phi*dual(1d) + (1-phi)*dual(1e).
  Vec2<double> marginal_demand_cost;

  ActorPrices actor_prices() const;
};

/// One line per price family: name, indices, sign convention.
std::vector<std::pair<std::string, std::string>> price_sign_table();

PriceSet extract_prices(const ModelInstance& model, const SolveResult& result);

struct KktCondition {
  std::string id;           // "A.1" .. "A.31"
  std::string description;
  double residual = 0.0;    // scaled, see kkt_residuals
  std::string worst_at;     // symbolic location of the worst residual
};

struct KktReport {
  std::vector<KktCondition> conditions;  // A.1 .. A.31 in order
  /// A.1 evaluated literally as printed (informational, not gating).
  double literal_a1_residual = 0.0;
  double tolerance = 1e-6;
  bool pass = false;

  const KktCondition& at(const std::string& id) const;
  double max_residual() const;
};

/// Evaluates the equilibrium KKT system at (x, prices) from scenario data.
/// Each residual is |sum of terms| / max(1, largest |term|), so the
/// tolerance is relative to the magnitudes that cancel. Complementarity is
/// |mu * slack| / max(1, |mu|, |slack|) plus sign violations.
KktReport kkt_residuals(const Scenario& scenario, const PtdfMatrix& ptdf, const ModelInstance& model,
                        const std::vector<double>& x, const PriceSet& prices, double tolerance = 1e-6);

struct ActorGap {
  std::string actor;         // node id or "TSO"
  double slice_cost = 0.0;   // actor objective at the centralized solution
  double optimal_cost = 0.0; // individually optimal objective at fixed prices
  double gap = 0.0;          // (slice - optimal) / (1 + |optimal|); +inf if unbounded
  SolveStatus status = SolveStatus::kOptimal;
};

/// Solves every node problem and the TSO problem at fixed prices, in parallel.
std::vector<ActorGap> best_response_gap(const Scenario& scenario, const PtdfMatrix& ptdf,
                                        const ModelInstance& model, const std::vector<double>& x,
                                        const PriceSet& prices, int threads = 0, const Tolerances& tol = {});

struct NodeAccount {
  std::string node;
  double investment = 0.0;       // capacity and storage annuities
  double operating = 0.0;        // variable cost of generation
  double externality = 0.0;      // capacity, production and bilateral-ex
  double bilateral_payment = 0.0;  // sum (lambda_bil + lambda_grid) p^bilateral
  double pool_payment = 0.0;       // sum lambda_pool p^pool
  double carbon_payment = 0.0;     // lambda_co2 e
  double total = 0.0;
  double demand = 0.0;           // MWh over the horizon
  double average_cost = 0.0;     // total / demand, or total when demand is 0
  bool zero_demand = false;
};

struct Ledger {
  std::vector<NodeAccount> nodes;
  double tso_investment = 0.0;
  double tso_congestion_income = 0.0;
  double tso_net_cost = 0.0;
  double government_revenue = 0.0;
  double total_emissions = 0.0;
  double carbon_cap = 0.0;
  bool cap_binding = false;
  double operator_imbalance = 0.0;   // |sum of coupling and reciprocity payments|
  double carbon_revenue_error = 0.0; // |revenue - lambda*CAP| when binding, |revenue| otherwise
  double objective = 0.0;
  double reconciliation_error = 0.0; // |sum nodes + TSO net - government - objective|
  bool ok = false;
};

Ledger budget_balance(const Scenario& scenario, const ModelInstance& model, const std::vector<double>& x,
                      const PriceSet& prices, double objective, double tolerance = 1e-6);

void write_prices_csv(const Scenario& scenario, const ModelInstance& model, const PriceSet& prices,
                      const std::filesystem::path& path);
void write_kkt_json(const KktReport& report, const std::vector<ActorGap>& gaps, const std::filesystem::path& path);
void write_ledger_csv(const Ledger& ledger, const std::filesystem::path& path);

}  // namespace mixmarket
