#include "mixmarket/studio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "mixmarket/fixtures.hpp"
#include "mixmarket/network.hpp"

namespace mixmarket {

namespace fs = std::filesystem;

namespace {

constexpr const char* kWatermark = "UNCERTIFIED: emitted with --force";

double parse_value(const fs::path& path, const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InputError(path, 0, fmt::format("malformed value '{}' for key '{}'", text, key));
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string num(double v) { return format_double(v); }

}  // namespace

const char* to_string(StudyMode mode) {
  switch (mode) {
    case StudyMode::kBenchmark: return "benchmark";
    case StudyMode::kPreference: return "preference";
    case StudyMode::kRegionalTc: return "regional_tc";
  }
  return "?";
}

StudyConfig load_study_config(const fs::path& path) {
  const auto kv = read_config(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& v) {
    const fs::path p(v);
    return p.is_absolute() ? p : (base / p).lexically_normal();
  };
  StudyConfig c;
  bool have_mode = false;
  for (const auto& [key, value] : kv) {
    if (key == "scenario") {
      c.random_scenario = value == "random";
      if (!c.random_scenario) c.scenario = resolve(value);
    }
    else if (key == "mode") {
      have_mode = true;
      if (value == "benchmark") c.mode = StudyMode::kBenchmark;
      else if (value == "preference") c.mode = StudyMode::kPreference;
      else if (value == "regional_tc") c.mode = StudyMode::kRegionalTc;
      else throw InputError(path, 0, "mode must be benchmark, preference or regional_tc");
    } else if (key == "criteria") c.criteria = resolve(value);
    else if (key == "regions") c.regions = resolve(value);
    else if (key == "inter_regional_coefficient") c.inter_regional_coefficient = parse_value(path, key, value);
    else if (key == "output") c.output = resolve(value);
    else if (key == "tolerance") c.tolerance = parse_value(path, key, value);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_value(path, key, value));
    else if (key == "threads") c.threads = static_cast<int>(parse_value(path, key, value));
    else throw InputError(path, 0, "unknown key '" + key + "'");
  }
  if (c.scenario.empty() && !c.random_scenario) throw InputError(path, 0, "scenario not given");
  if (!have_mode) throw InputError(path, 0, "mode not given");
  if (c.output.empty()) throw InputError(path, 0, "output not given");
  if (c.mode == StudyMode::kPreference && c.criteria.empty()) {
    throw InputError(path, 0, "preference mode needs criteria");
  }
  if (c.mode == StudyMode::kRegionalTc) {
    if (c.regions.empty()) throw InputError(path, 0, "regional_tc mode needs regions");
    if (!(c.inter_regional_coefficient >= 0.0)) {
      throw InputError(path, 0, "inter_regional_coefficient must be >= 0");
    }
  }
  if (!(c.tolerance > 0.0)) throw InputError(path, 0, "tolerance must be positive");
  return c;
}

std::map<std::string, std::string> read_regions(const fs::path& path, const Scenario& s) {
  const CsvTable t = read_csv(path);
  const auto c_node = t.column("node"), c_region = t.column("region");
  std::map<std::string, std::string> out;
  for (const CsvRow& row : t.rows) {
    const std::string& id = t.text(row, c_node);
    if (s.node_index(id) < 0) throw InputError(t.path, row.line, "unknown node " + id);
    if (!out.emplace(id, t.text(row, c_region)).second) throw InputError(t.path, row.line, "duplicate node " + id);
  }
  for (const Node& n : s.nodes) {
    if (!out.count(n.id)) throw InputError(t.path, 0, "no region for node " + n.id);
  }
  return out;
}

void apply_mode(Scenario& s, const StudyConfig& c) {
  const std::size_t N = s.nodes.size();
  s.preferences = {};
  s.preferences.coefficient.assign(N, std::vector<double>(N, 0.0));
  switch (c.mode) {
    case StudyMode::kBenchmark:
      break;
    case StudyMode::kPreference: {
      const CsvTable t = read_csv(c.criteria);
      const auto c_node = t.column("node"), c_pct = t.column("non_res_percent");
      std::vector<double> pct(N, std::nan(""));
      for (const CsvRow& row : t.rows) {
        const int n = s.node_index(t.text(row, c_node));
        if (n < 0) throw InputError(t.path, row.line, "unknown node " + t.text(row, c_node));
        pct[n] = t.number(row, c_pct);
        if (pct[n] < 0.0 || pct[n] > 100.0) throw InputError(t.path, row.line, "percentage outside [0, 100]");
      }
      for (std::size_t n = 0; n < N; ++n) {
        if (std::isnan(pct[n])) throw InputError(t.path, 0, "no non-green index for node " + s.nodes[n].id);
      }
      const double lowest = *std::min_element(pct.begin(), pct.end());
      Criterion u;
      u.name = "non_green_index";
      u.node_value.assign(N, 1.0);
      for (std::size_t n = 0; n < N; ++n) {
        for (int m : s.nodes[n].neighbors) u.characteristic[{static_cast<int>(n), m}] = pct[m] - lowest;
      }
      s.preferences = build_preferences_from_criteria(std::span<const Criterion>(&u, 1), s.nodes);
      break;
    }
    case StudyMode::kRegionalTc: {
      const auto region = read_regions(c.regions, s);
      for (std::size_t n = 0; n < N; ++n) {
        for (int m : s.nodes[n].neighbors) {
          if (region.at(s.nodes[n].id) != region.at(s.nodes[m].id)) {
            s.preferences.coefficient[n][m] = c.inter_regional_coefficient;
          }
        }
      }
      break;
    }
  }
  validate(s);
}

// ---------------------------------------------------------------------------
// Report

double Report::total_volume() const {
  double v = 0.0;
  for (std::size_t n = 0; n < trade_volume.size(); ++n) {
    for (std::size_t m = n + 1; m < trade_volume.size(); ++m) v += trade_volume[n][m];
  }
  return v;
}

double Report::regional_volume(const std::map<std::string, std::string>& regions, bool inter) const {
  double v = 0.0;
  for (std::size_t n = 0; n < trade_volume.size(); ++n) {
    for (std::size_t m = n + 1; m < trade_volume.size(); ++m) {
      if ((regions.at(nodes[n]) != regions.at(nodes[m])) == inter) v += trade_volume[n][m];
    }
  }
  return v;
}

std::vector<double> compute_average_cost(const Scenario& s, const ModelInstance& m, const std::vector<double>& x,
                                         const PriceSet& prices) {
  const Ledger led = budget_balance(s, m, x, prices, m.lp.objective(x));
  std::vector<double> out;
  for (const NodeAccount& a : led.nodes) out.push_back(a.average_cost);
  return out;
}

Report make_report(const Scenario& s, const ModelInstance& m, const SolveResult& r, const PriceSet& prices,
                   const Ledger& led) {
  const int N = m.num_nodes, I = m.num_technologies, T = m.timesteps, L = m.num_lines;
  const VariableCatalog& v = m.vars;
  const auto& x = r.primal;
  auto X = [&](int j) { return j < 0 ? 0.0 : x[j]; };
  Report rep;
  for (const Node& n : s.nodes) rep.nodes.push_back(n.id);
  for (const Technology& t : s.technologies) rep.technologies.push_back(t.id);
  for (const Line& l : s.lines) rep.lines.push_back(l.id);
  rep.node_capacity.assign(N, std::vector<double>(I, 0.0));
  rep.node_storage_energy.assign(N, std::vector<double>(I, 0.0));
  double total_mw = 0.0;
  std::vector<double> per_tech(I, 0.0);
  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < I; ++i) {
      rep.node_capacity[n][i] = s.nodes[n].existing_capacity[i] + X(v.k[n][i]);
      if (s.technologies[i].is_storage()) {
        rep.node_storage_energy[n][i] = s.nodes[n].existing_storage_capacity[i] + X(v.kst[n][i]);
      }
      per_tech[i] += rep.node_capacity[n][i];
      total_mw += rep.node_capacity[n][i];
    }
  }
  for (int i = 0; i < I; ++i) {
    rep.capacity_mix.push_back({s.technologies[i].id, per_tech[i], total_mw > 0.0 ? per_tech[i] / total_mw : 0.0});
  }
  for (int l = 0; l < L; ++l) rep.line_capacity.push_back(s.lines[l].existing_capacity + X(v.kline[l]));
  for (const NodeAccount& a : led.nodes) {
    rep.average_cost.push_back(a.average_cost);
    rep.zero_demand.push_back(a.zero_demand);
    rep.total_cost.push_back(a.total);
    rep.demand.push_back(a.demand);
  }
  rep.trade_matrix.assign(N, std::vector<double>(N, 0.0));
  rep.trade_volume.assign(N, std::vector<double>(N, 0.0));
  for (std::size_t q = 0; q < m.pairs.size(); ++q) {
    const TradePair& pair = m.pairs[q];
    for (int t = 0; t < T; ++t) {
      const double p = X(v.pplus[q][t]) - X(v.pminus[q][t]);
      rep.trade_matrix[pair.n][pair.m] += p;
      rep.trade_volume[pair.n][pair.m] += std::abs(p);
    }
  }
  rep.net_exports.assign(N, 0.0);
  rep.mean_pool_price.assign(N, 0.0);
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) {
      double net = -s.nodes[n].demand[t];
      for (int i = 0; i < I; ++i) {
        if (s.technologies[i].is_storage()) net += X(v.pout[n][i][t]) - X(v.pin[n][i][t]);
        else net += X(v.p[n][i][t]);
      }
      rep.net_exports[n] += net;
      rep.mean_pool_price[n] += prices.pool_price[n][t] / T;
    }
  }
  rep.objective = r.objective_value;
  rep.total_emissions = led.total_emissions;
  rep.carbon_price = prices.lambda_co2;
  rep.iterations = r.iterations;
  return rep;
}

void write_report_json(const Report& r, const fs::path& path) {
  using nlohmann::ordered_json;
  ordered_json j;
  if (r.forced) j["watermark"] = kWatermark;
  j["mode"] = r.mode;
  j["certified"] = r.certified;
  j["nodes"] = r.nodes;
  j["technologies"] = r.technologies;
  j["lines"] = r.lines;
  ordered_json mix = ordered_json::array();
  for (const CapacityShare& c : r.capacity_mix) mix.push_back({{"technology", c.technology}, {"mw", c.mw}, {"share", c.share}});
  j["capacity_mix"] = mix;
  j["node_capacity_mw"] = r.node_capacity;
  j["node_storage_mwh"] = r.node_storage_energy;
  j["line_capacity_mw"] = r.line_capacity;
  j["average_cost"] = r.average_cost;
  j["zero_demand"] = r.zero_demand;
  j["total_cost"] = r.total_cost;
  j["demand_mwh"] = r.demand;
  j["bilateral_trade_matrix_mwh"] = r.trade_matrix;
  j["bilateral_trade_volume_mwh"] = r.trade_volume;
  j["net_exports_mwh"] = r.net_exports;
  j["mean_pool_price"] = r.mean_pool_price;
  j["objective"] = r.objective;
  j["total_emissions"] = r.total_emissions;
  j["carbon_price"] = r.carbon_price;
  j["max_kkt_residual"] = r.max_kkt_residual;
  j["max_best_response_gap"] = r.max_gap;
  j["iterations"] = r.iterations;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Report read_report_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path, 0, e.what());
  }
  Report r;
  try {
    r.forced = j.contains("watermark");
    r.mode = j.at("mode").get<std::string>();
    r.certified = j.at("certified").get<bool>();
    r.nodes = j.at("nodes").get<std::vector<std::string>>();
    r.technologies = j.at("technologies").get<std::vector<std::string>>();
    r.lines = j.at("lines").get<std::vector<std::string>>();
    for (const auto& c : j.at("capacity_mix")) {
      r.capacity_mix.push_back({c.at("technology").get<std::string>(), c.at("mw").get<double>(), c.at("share").get<double>()});
    }
    r.node_capacity = j.at("node_capacity_mw").get<Vec2<double>>();
    r.node_storage_energy = j.at("node_storage_mwh").get<Vec2<double>>();
    r.line_capacity = j.at("line_capacity_mw").get<std::vector<double>>();
    r.average_cost = j.at("average_cost").get<std::vector<double>>();
    r.zero_demand = j.at("zero_demand").get<std::vector<bool>>();
    r.total_cost = j.at("total_cost").get<std::vector<double>>();
    r.demand = j.at("demand_mwh").get<std::vector<double>>();
    r.trade_matrix = j.at("bilateral_trade_matrix_mwh").get<Vec2<double>>();
    r.trade_volume = j.at("bilateral_trade_volume_mwh").get<Vec2<double>>();
    r.net_exports = j.at("net_exports_mwh").get<std::vector<double>>();
    r.mean_pool_price = j.at("mean_pool_price").get<std::vector<double>>();
    r.objective = j.at("objective").get<double>();
    r.total_emissions = j.at("total_emissions").get<double>();
    r.carbon_price = j.at("carbon_price").get<double>();
    r.max_kkt_residual = j.at("max_kkt_residual").get<double>();
    r.max_gap = j.at("max_best_response_gap").get<double>();
    r.iterations = j.at("iterations").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path, 0, e.what());
  }
  return r;
}

void emit_plots_data(const Report& r, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    auto out = open_out(dir / name);
    if (r.forced) out << "# " << kWatermark << '\n';
    return out;
  };
  {
    auto out = open("capacity_totals.csv");
    out << "technology,mw,share\n";
    for (const CapacityShare& c : r.capacity_mix) out << c.technology << ',' << num(c.mw) << ',' << num(c.share) << '\n';
  }
  {
    auto out = open("node_capacity.csv");
    out << "kind,id,technology,mw,mwh\n";
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
      for (std::size_t i = 0; i < r.technologies.size(); ++i) {
        out << "node," << r.nodes[n] << ',' << r.technologies[i] << ',' << num(r.node_capacity[n][i]) << ','
            << num(r.node_storage_energy[n][i]) << '\n';
      }
    }
    for (std::size_t l = 0; l < r.lines.size(); ++l) out << "line," << r.lines[l] << ",," << num(r.line_capacity[l]) << ",\n";
  }
  {
    auto out = open("average_cost.csv");
    out << "node,average_cost,unit,total_cost,demand_mwh\n";
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
      out << r.nodes[n] << ',' << num(r.average_cost[n]) << ',' << (r.zero_demand[n] ? "EUR" : "EUR/MWh") << ','
          << num(r.total_cost[n]) << ',' << num(r.demand[n]) << '\n';
    }
  }
  {
    auto out = open("trade_edges.csv");
    out << "from,to,net_mwh,volume_mwh\n";
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
      for (std::size_t m = n + 1; m < r.nodes.size(); ++m) {
        if (r.trade_volume[n][m] <= 1e-9) continue;
        out << r.nodes[n] << ',' << r.nodes[m] << ',' << num(r.trade_matrix[n][m]) << ','
            << num(r.trade_volume[n][m]) << '\n';
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Runs

RunOutcome run_scenario(const Scenario& scenario, const StudyConfig& config) {
  RunOutcome o;
  o.scenario = scenario;
  const PtdfMatrix ptdf = compute_ptdf(o.scenario);
  o.model = build_centralized(o.scenario, ptdf);
  o.result = solve(o.model.lp);
  switch (o.result.status) {
    case SolveStatus::kOptimal: break;
    case SolveStatus::kInfeasible: throw InfeasibleError("the centralized model is infeasible");
    case SolveStatus::kUnbounded: throw SolverError("the centralized model is unbounded");
    case SolveStatus::kIterationLimit: throw SolverError("iteration limit reached");
  }
  o.certificate = verify_certificate(o.model.lp, o.result);
  o.prices = extract_prices(o.model, o.result);
  o.kkt = kkt_residuals(o.scenario, ptdf, o.model, o.result.primal, o.prices, config.tolerance);
  o.gaps = best_response_gap(o.scenario, ptdf, o.model, o.result.primal, o.prices, config.threads);
  o.ledger = budget_balance(o.scenario, o.model, o.result.primal, o.prices, o.result.objective_value, config.tolerance);
  o.report = make_report(o.scenario, o.model, o.result, o.prices, o.ledger);
  o.report.mode = to_string(config.mode);
  o.report.max_kkt_residual = o.kkt.max_residual();
  for (const ActorGap& g : o.gaps) o.report.max_gap = std::max(o.report.max_gap, g.gap);

  std::vector<std::string> failures;
  if (!o.certificate.accepted(config.tolerance, 1e-8)) failures.push_back("solver certificate rejected");
  if (!o.kkt.pass) {
    for (const KktCondition& c : o.kkt.conditions) {
      if (c.residual > config.tolerance) {
        failures.push_back(fmt::format("{} residual {:.3g} at {}", c.id, c.residual, c.worst_at));
      }
    }
  }
  for (const ActorGap& g : o.gaps) {
    if (!(g.gap <= config.tolerance)) failures.push_back(fmt::format("best-response gap {:.3g} for {}", g.gap, g.actor));
  }
  o.report.certified = failures.empty();
  if (!failures.empty()) {
    std::string msg = "certification failed";
    for (const std::string& f : failures) msg += "\n  " + f;
    if (!config.force) throw CertificationError(msg, o.kkt, o.gaps);
    o.report.forced = true;
  }
  return o;
}

Scenario prepare_scenario(const StudyConfig& config) {
  Scenario s = config.random_scenario ? random_scenario(config.seed) : load_scenario(config.scenario);
  apply_mode(s, config);
  return s;
}

RunOutcome run_study(const StudyConfig& config) {
  const Scenario s = prepare_scenario(config);
  RunOutcome o;
  try {
    o = run_scenario(s, config);
  } catch (const CertificationError& e) {
    fs::create_directories(config.output);
    write_kkt_json(e.kkt, e.gaps, config.output / "kkt_report.json");
    throw;
  }
  const fs::path dir = config.output;
  fs::create_directories(dir);
  write_scenario(o.scenario, dir / "scenario");
  // MPS names carry no commas, so the name,value files stay plain CSV.
  const MpsNames names = mps_names(o.model.lp);
  write_solution(o.model.lp, o.result, dir / "primal.csv", dir / "dual.csv", &names.columns, &names.rows);
  write_prices_csv(o.scenario, o.model, o.prices, dir / "prices.csv");
  write_kkt_json(o.kkt, o.gaps, dir / "kkt_report.json");
  write_ledger_csv(o.ledger, dir / "ledger.csv");
  write_report_json(o.report, dir / "report.json");
  emit_plots_data(o.report, dir);
  {
    auto out = open_out(dir / "study.cfg");
    if (o.report.forced) out << "# " << kWatermark << '\n';
    out << "mode=" << to_string(config.mode) << '\n';
    out << "tolerance=" << num(config.tolerance) << '\n';
    if (config.mode == StudyMode::kRegionalTc) {
      out << "inter_regional_coefficient=" << num(config.inter_regional_coefficient) << '\n';
    }
  }
  return o;
}

std::vector<RunOutcome> run_studies(const std::vector<StudyConfig>& configs, int parallel) {
  const int jobs = static_cast<int>(configs.size());
  std::vector<RunOutcome> out(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  int workers = parallel > 0 ? parallel : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, jobs));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int k = next++; k < jobs; k = next++) {
      try {
        out[k] = run_study(configs[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

RecheckResult recheck_run(const fs::path& run_dir, double tolerance, int threads) {
  const Scenario s = load_scenario(run_dir / "scenario");
  const PtdfMatrix ptdf = compute_ptdf(s);
  const ModelInstance m = build_centralized(s, ptdf);
  const MpsNames names = mps_names(m.lp);
  SolveResult r = import_solution(m.lp, run_dir / "primal.csv", run_dir / "dual.csv", 1.0, &names.columns, &names.rows);
  RecheckResult out;
  out.certificate = verify_certificate(m.lp, r);
  r.status = SolveStatus::kOptimal;  // evaluate the stored point regardless
  const PriceSet prices = extract_prices(m, r);
  out.kkt = kkt_residuals(s, ptdf, m, r.primal, prices, tolerance);
  out.gaps = best_response_gap(s, ptdf, m, r.primal, prices, threads);
  out.ledger = budget_balance(s, m, r.primal, prices, m.lp.objective(r.primal), tolerance);
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

std::vector<DeltaTable> compare_reports(const Report& a, const Report& b) {
  using Entries = std::vector<std::pair<std::string, double>>;
  auto table = [](const std::string& name, const Entries& ea, const Entries& eb) {
    DeltaTable t{name, {}};
    std::vector<std::string> keys;
    for (const auto& [k, v] : ea) keys.push_back(k);
    for (const auto& [k, v] : eb) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    auto lookup = [](const Entries& e, const std::string& k) {
      for (const auto& [key, v] : e) {
        if (key == k) return v;
      }
      return 0.0;
    };
    for (const std::string& k : keys) {
      const double va = lookup(ea, k), vb = lookup(eb, k);
      t.rows.push_back({k, va, vb, vb - va});
    }
    return t;
  };
  auto mix = [](const Report& r) {
    Entries e;
    for (const CapacityShare& c : r.capacity_mix) e.emplace_back(c.technology, c.mw);
    return e;
  };
  auto node_cap = [](const Report& r) {
    Entries e;
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
      for (std::size_t i = 0; i < r.technologies.size(); ++i) {
        e.emplace_back(r.nodes[n] + ":" + r.technologies[i], r.node_capacity[n][i]);
      }
    }
    for (std::size_t l = 0; l < r.lines.size(); ++l) e.emplace_back("line:" + r.lines[l], r.line_capacity[l]);
    return e;
  };
  auto per_node = [](const Report& r, const std::vector<double>& v) {
    Entries e;
    for (std::size_t n = 0; n < r.nodes.size(); ++n) e.emplace_back(r.nodes[n], v[n]);
    return e;
  };
  auto volume = [](const Report& r) {
    Entries e;
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
      for (std::size_t m = n + 1; m < r.nodes.size(); ++m) e.emplace_back(r.nodes[n] + "-" + r.nodes[m], r.trade_volume[n][m]);
    }
    return e;
  };
  auto totals = [](const Report& r) {
    return Entries{{"objective", r.objective},
                   {"total_emissions", r.total_emissions},
                   {"carbon_price", r.carbon_price},
                   {"bilateral_volume", r.total_volume()}};
  };
  return {
      table("capacity_mix", mix(a), mix(b)),
      table("capacity", node_cap(a), node_cap(b)),
      table("average_cost", per_node(a, a.average_cost), per_node(b, b.average_cost)),
      table("net_exports", per_node(a, a.net_exports), per_node(b, b.net_exports)),
      table("trade_volume", volume(a), volume(b)),
      table("totals", totals(a), totals(b)),
  };
}

void write_delta_tables(const std::vector<DeltaTable>& tables, const fs::path& dir) {
  fs::create_directories(dir);
  for (const DeltaTable& t : tables) {
    auto out = open_out(dir / ("delta_" + t.name + ".csv"));
    out << "key,a,b,delta\n";
    for (const DeltaRow& r : t.rows) out << r.key << ',' << num(r.a) << ',' << num(r.b) << ',' << num(r.delta) << '\n';
  }
}

}  // namespace mixmarket
