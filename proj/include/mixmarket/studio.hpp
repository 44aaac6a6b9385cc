#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixmarket/datamodel.hpp"
#include "mixmarket/equilibrium.hpp"
#include "mixmarket/lp_solver.hpp"

namespace mixmarket {

enum class StudyMode { kBenchmark, kPreference, kRegionalTc };

const char* to_string(StudyMode mode);

/// Read from a key=value file; relative paths resolve against the file's
/// directory.
///
///   scenario = ../data/desk5              ("random" draws a random fixture from seed)
///   mode = benchmark | preference | regional_tc
///   criteria = non_green_index.csv        (preference: node,non_res_percent)
///   regions = regions.csv                 (regional_tc: node,region)
///   inter_regional_coefficient = 20       (regional_tc, EUR/MWh)
///   output = runs/benchmark
///   tolerance = 1e-6
///   threads = 0
struct StudyConfig {
  std::filesystem::path scenario;
  StudyMode mode = StudyMode::kBenchmark;
  std::filesystem::path criteria;
  std::filesystem::path regions;
  double inter_regional_coefficient = 0.0;
  std::filesystem::path output;
  double tolerance = 1e-6;
  int threads = 0;
  bool force = false;
  std::uint64_t seed = 1;
  bool random_scenario = false;
};

StudyConfig load_study_config(const std::filesystem::path& path);

/// Replaces the scenario's bilateral preferences according to the mode:
/// benchmark zeroes them, preference builds E[n][m] = index[m] - min(index)
/// from the non-green percentages, regional_tc charges the coefficient on
/// inter-regional pairs only.
void apply_mode(Scenario& scenario, const StudyConfig& config);

std::map<std::string, std::string> read_regions(const std::filesystem::path& path, const Scenario& scenario);

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& message, KktReport kkt, std::vector<ActorGap> gaps)
      : std::runtime_error(message), kkt(std::move(kkt)), gaps(std::move(gaps)) {}
  KktReport kkt;
  std::vector<ActorGap> gaps;
};

struct CapacityShare {
  std::string technology;
  double mw = 0.0;
  double share = 0.0;
};

struct Report {
  std::string mode;
  bool certified = false;
  bool forced = false;  // emitted without certification
  std::vector<std::string> nodes;
  std::vector<std::string> technologies;
  std::vector<std::string> lines;
  std::vector<CapacityShare> capacity_mix;  // installed MW (existing + new) per technology
  Vec2<double> node_capacity;               // [n][i] MW
  Vec2<double> node_storage_energy;         // [n][i] MWh
  std::vector<double> line_capacity;        // [l] MW
  std::vector<double> average_cost;         // [n] EUR/MWh, or EUR when zero_demand
  std::vector<bool> zero_demand;
  std::vector<double> total_cost;           // [n] EUR
  std::vector<double> demand;               // [n] MWh over the horizon
  Vec2<double> trade_matrix;                // [n][m] net bilateral sales of n to m over the horizon, MWh
  Vec2<double> trade_volume;                // [n][m] sum over t of |p^bilateral_{n,m,t}|
  std::vector<double> net_exports;          // [n] sum over t of net injection, MWh
  std::vector<double> mean_pool_price;      // [n] EUR/MWh
  double objective = 0.0;
  double total_emissions = 0.0;
  double carbon_price = 0.0;
  double max_kkt_residual = 0.0;
  double max_gap = 0.0;
  long iterations = 0;

  /// Total bilateral volume over unordered pairs (each pair counted once).
  double total_volume() const;
  /// Volume over pairs whose regions differ (inter) or agree (intra).
  double regional_volume(const std::map<std::string, std::string>& regions, bool inter) const;
};

struct RunOutcome {
  Scenario scenario;
  ModelInstance model;
  SolveResult result;
  CertificateReport certificate;
  PriceSet prices;
  KktReport kkt;
  std::vector<ActorGap> gaps;
  Ledger ledger;
  Report report;
};

/// Solves a prepared scenario and evaluates every certificate; throws
/// InfeasibleError, and CertificationError unless config.force.
RunOutcome run_scenario(const Scenario& scenario, const StudyConfig& config);

/// The configured scenario, loaded or drawn, with the mode applied.
Scenario prepare_scenario(const StudyConfig& config);

/// Loads, applies the mode, runs, and writes every artifact to config.output.
/// A certification failure without force writes only kkt_report.json.
RunOutcome run_study(const StudyConfig& config);

/// Independent runs in parallel; results in input order. Exceptions are
/// rethrown after all runs finish.
std::vector<RunOutcome> run_studies(const std::vector<StudyConfig>& configs, int parallel = 0);

/// Re-checks a run directory from its stored scenario and solution files.
struct RecheckResult {
  CertificateReport certificate;
  KktReport kkt;
  std::vector<ActorGap> gaps;
  Ledger ledger;
};
RecheckResult recheck_run(const std::filesystem::path& run_dir, double tolerance, int threads);

/// Per-node average cost from the ledger; see NodeAccount.
std::vector<double> compute_average_cost(const Scenario& scenario, const ModelInstance& model,
                                         const std::vector<double>& x, const PriceSet& prices);

Report make_report(const Scenario& scenario, const ModelInstance& model, const SolveResult& result,
                   const PriceSet& prices, const Ledger& ledger);

void write_report_json(const Report& report, const std::filesystem::path& path);
Report read_report_json(const std::filesystem::path& path);

/// capacity_totals.csv, node_capacity.csv, average_cost.csv, trade_edges.csv.
void emit_plots_data(const Report& report, const std::filesystem::path& dir);

struct DeltaRow {
  std::string key;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
};
struct DeltaTable {
  std::string name;
  std::vector<DeltaRow> rows;
};
/// Tables keyed identically for both runs; keys missing on one side count as 0.
std::vector<DeltaTable> compare_reports(const Report& a, const Report& b);
void write_delta_tables(const std::vector<DeltaTable>& tables, const std::filesystem::path& dir);

}  // namespace mixmarket
