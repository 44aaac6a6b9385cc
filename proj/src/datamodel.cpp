#include "mixmarket/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace mixmarket {

namespace fs = std::filesystem;

int Scenario::node_index(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int Scenario::technology_index(std::string_view id) const {
  for (std::size_t i = 0; i < technologies.size(); ++i) {
    if (technologies[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> Scenario::generation_technologies() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < technologies.size(); ++i) {
    if (!technologies[i].is_storage()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Scenario::storage_technologies() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < technologies.size(); ++i) {
    if (technologies[i].is_storage()) out.push_back(static_cast<int>(i));
  }
  return out;
}

double annuity(double lifetime_years, double discount_rate) {
  if (!(lifetime_years > 0.0)) {
    throw std::invalid_argument(fmt::format("annuity: lifetime must be positive, got {}", lifetime_years));
  }
  if (!(discount_rate >= 0.0)) {
    throw std::invalid_argument(fmt::format("annuity: discount rate must be >= 0, got {}", discount_rate));
  }
  if (discount_rate == 0.0) return lifetime_years;
  return (1.0 - std::pow(1.0 + discount_rate, -lifetime_years)) / discount_rate;
}

BilateralPreference build_preferences_from_criteria(std::span<const Criterion> criteria,
                                                    const std::vector<Node>& nodes) {
  const int n_nodes = static_cast<int>(nodes.size());
  BilateralPreference pref;
  pref.coefficient.assign(n_nodes, std::vector<double>(n_nodes, 0.0));
  pref.criteria.assign(criteria.begin(), criteria.end());
  for (const Criterion& u : criteria) {
    if (static_cast<int>(u.node_value.size()) != n_nodes) {
      throw InputError(fmt::format("criterion '{}': expected {} node values, got {}", u.name,
                                   n_nodes, u.node_value.size()));
    }
  }
  for (int n = 0; n < n_nodes; ++n) {
    for (int m : nodes[n].neighbors) {
      double sum = 0.0;
      for (const Criterion& u : criteria) {
        auto it = u.characteristic.find({n, m});
        if (it == u.characteristic.end()) {
          throw InputError(fmt::format("criterion '{}': missing trade characteristic for ({}, {})",
                                       u.name, nodes[n].id, nodes[m].id));
        }
        sum += u.node_value[n] * it->second;
      }
      if (sum < 0.0) {
        throw InputError(fmt::format("negative product-differentiation coefficient {} for pair ({}, {})",
                                     sum, nodes[n].id, nodes[m].id));
      }
      pref.coefficient[n][m] = sum;
    }
  }
  return pref;
}

void make_complete_communication_graph(Scenario& scenario) {
  const int n = static_cast<int>(scenario.nodes.size());
  for (int a = 0; a < n; ++a) {
    scenario.nodes[a].neighbors.clear();
    for (int b = 0; b < n; ++b) {
      if (b != a) scenario.nodes[a].neighbors.push_back(b);
    }
  }
}

void validate(const Scenario& s) {
  auto fail = [](const std::string& msg) { throw InputError(msg); };
  if (s.nodes.empty()) fail("scenario has no nodes");
  if (s.timesteps <= 0) fail("timesteps must be positive");
  if (!(s.step_hours > 0.0)) fail("step_hours must be positive");
  if (!(s.carbon_cap >= 0.0)) fail("carbon_cap must be >= 0");
  const int n_nodes = static_cast<int>(s.nodes.size());
  const int n_tech = static_cast<int>(s.technologies.size());
  if (s.slack_node < 0 || s.slack_node >= n_nodes) fail("slack node does not resolve");

  std::set<std::string> ids;
  for (const Technology& t : s.technologies) {
    if (!ids.insert(t.id).second) fail("duplicate technology id " + t.id);
    if (!(t.annuity_factor > 0.0)) fail("technology " + t.id + ": annuity factor must be positive");
    if (t.discount_rate == 0.0 && std::abs(t.annuity_factor - t.lifetime_years) > 1e-12) {
      fail("technology " + t.id + ": zero-rate annuity must equal lifetime");
    }
    if (t.emission_rate < 0.0) fail("technology " + t.id + ": negative emission rate");
    if (t.emission_rate > 0.0 && !t.is_fossil) fail("technology " + t.id + ": emitting technology must be fossil");
    if (t.is_storage()) {
      if (t.emission_rate > 0.0) fail("storage technology " + t.id + " cannot emit");
      for (double eff : {t.charge_efficiency, t.discharge_efficiency}) {
        if (!(eff > 0.0 && eff <= 1.0)) fail("storage technology " + t.id + ": efficiency outside (0,1]");
      }
      if (t.capex_storage < 0.0) fail("storage technology " + t.id + ": negative storage capex");
      if (t.vom != 0.0) fail("storage technology " + t.id + ": variable cost is not priced for storage, must be 0");
    } else if (t.capex_storage != 0.0 || t.charge_efficiency != 1.0 || t.discharge_efficiency != 1.0) {
      fail("generation technology " + t.id + " carries storage-only fields");
    }
    if (t.capex_conversion < 0.0 || t.vom < 0.0) fail("technology " + t.id + ": negative cost");
  }

  ids.clear();
  for (int n = 0; n < n_nodes; ++n) {
    const Node& node = s.nodes[n];
    if (!ids.insert(node.id).second) fail("duplicate node id " + node.id);
    if (!(node.bilateral_share >= 0.0 && node.bilateral_share <= 1.0)) {
      fail(fmt::format("node {}: bilateral share {} outside [0,1]", node.id, node.bilateral_share));
    }
    if (static_cast<int>(node.demand.size()) != s.timesteps) {
      fail(fmt::format("node {}: demand series has length {}, expected {}", node.id,
                       node.demand.size(), s.timesteps));
    }
    for (double d : node.demand) {
      if (!(d >= 0.0)) fail("node " + node.id + ": negative demand");
    }
    auto sized = [&](const std::vector<double>& v, const char* what) {
      if (static_cast<int>(v.size()) != n_tech) fail(fmt::format("node {}: {} not sized per technology", node.id, what));
    };
    sized(node.existing_capacity, "existing capacity");
    sized(node.existing_storage_capacity, "existing storage capacity");
    sized(node.capacity_externality, "capacity externality");
    sized(node.production_externality, "production externality");
    if (static_cast<int>(node.capacity_factor.size()) != n_tech) fail("node " + node.id + ": capacity factors not sized per technology");
    for (int i = 0; i < n_tech; ++i) {
      const auto& cf = node.capacity_factor[i];
      if (static_cast<int>(cf.size()) != s.timesteps) {
        fail(fmt::format("node {}: capacity factor series for {} has length {}, expected {}", node.id,
                         s.technologies[i].id, cf.size(), s.timesteps));
      }
      for (double e : cf) {
        if (!(e >= 0.0 && e <= 1.0)) fail(fmt::format("node {}: capacity factor {} outside [0,1]", node.id, e));
      }
      if (node.existing_capacity[i] < 0.0 || node.existing_storage_capacity[i] < 0.0) {
        fail("node " + node.id + ": negative existing capacity");
      }
      if (!s.technologies[i].is_storage() && node.existing_storage_capacity[i] != 0.0) {
        fail("node " + node.id + ": storage energy capacity given for generation technology");
      }
    }
    for (int m : node.neighbors) {
      if (m < 0 || m >= n_nodes) fail("node " + node.id + ": neighbor does not resolve");
      if (m == n) fail("node " + node.id + " lists itself as a neighbor");
      const auto& back = s.nodes[m].neighbors;
      if (std::find(back.begin(), back.end(), n) == back.end()) {
        fail(fmt::format("communication graph is not symmetric: {} -> {}", node.id, s.nodes[m].id));
      }
    }
    if (!std::is_sorted(node.neighbors.begin(), node.neighbors.end()) ||
        std::adjacent_find(node.neighbors.begin(), node.neighbors.end()) != node.neighbors.end()) {
      fail("node " + node.id + ": neighbor list must be sorted and unique");
    }
  }

  ids.clear();
  for (const Line& l : s.lines) {
    if (!ids.insert(l.id).second) fail("duplicate line id " + l.id);
    if (l.from < 0 || l.from >= n_nodes || l.to < 0 || l.to >= n_nodes) fail("line " + l.id + ": endpoint does not resolve");
    if (l.from == l.to) fail("line " + l.id + ": endpoints coincide");
    if (l.existing_capacity < 0.0) fail("line " + l.id + ": negative existing capacity");
    if (!(l.reactance > 0.0)) fail("line " + l.id + ": reactance must be positive");
    if (!(l.length_km > 0.0)) fail("line " + l.id + ": length must be positive");
    if (!(l.annuity_factor > 0.0)) fail("line " + l.id + ": annuity factor must be positive");
  }

  const auto& coef = s.preferences.coefficient;
  if (!coef.empty()) {
    if (static_cast<int>(coef.size()) != n_nodes) fail("preference matrix not sized per node");
    for (int n = 0; n < n_nodes; ++n) {
      for (int m = 0; m < n_nodes; ++m) {
        if (coef[n][m] < 0.0) {
          fail(fmt::format("negative product-differentiation coefficient for pair ({}, {})", s.nodes[n].id,
                           s.nodes[m].id));
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Scenario directory reader

namespace {

double cell_or(const CsvTable& t, const CsvRow& row, std::optional<std::size_t> col, double fallback) {
  if (!col || row.cells[*col].empty()) return fallback;
  return t.number(row, *col);
}

int resolve_node(const Scenario& s, const CsvTable& t, const CsvRow& row, std::size_t col) {
  const int idx = s.node_index(row.cells[col]);
  if (idx < 0) throw InputError(t.path, row.line, "unknown node '" + row.cells[col] + "'");
  return idx;
}

int resolve_tech(const Scenario& s, const CsvTable& t, const CsvRow& row, std::size_t col) {
  const int idx = s.technology_index(row.cells[col]);
  if (idx < 0) throw InputError(t.path, row.line, "unknown technology '" + row.cells[col] + "'");
  return idx;
}

double parse_number(const fs::path& path, const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InputError(path, 0, fmt::format("malformed value '{}' for key '{}'", text, key));
  }
}

void read_preferences(Scenario& s, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  enum class Block { kNone, kExplicit, kCriterionValue, kCharacteristic } block = Block::kNone;
  const int n_nodes = static_cast<int>(s.nodes.size());
  std::vector<std::vector<double>> explicit_coef(n_nodes, std::vector<double>(n_nodes, 0.0));
  bool any_explicit = false;
  std::vector<Criterion> criteria;
  auto criterion = [&](const std::string& name) -> Criterion& {
    for (auto& c : criteria) {
      if (c.name == name) return c;
    }
    criteria.push_back({name, std::vector<double>(n_nodes, 0.0), {}});
    return criteria.back();
  };
  auto node = [&](const std::string& id, std::size_t line_no) {
    const int idx = s.node_index(id);
    if (idx < 0) throw InputError(path, line_no, "unknown node '" + id + "'");
    return idx;
  };
  auto number = [&](const std::string& text, std::size_t line_no) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw InputError(path, line_no, "malformed number '" + text + "'");
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto cells = split(body, ',');
    const std::string joined(body);
    if (cells == std::vector<std::string>{"from", "to", "coefficient"}) {
      block = Block::kExplicit;
      continue;
    }
    if (cells == std::vector<std::string>{"criterion", "node", "c_value"}) {
      block = Block::kCriterionValue;
      continue;
    }
    if (cells == std::vector<std::string>{"criterion", "from", "to", "r_value"}) {
      block = Block::kCharacteristic;
      continue;
    }
    switch (block) {
      case Block::kNone:
        throw InputError(path, line_no, "data row before a recognised header");
      case Block::kExplicit: {
        if (cells.size() != 3) throw InputError(path, line_no, "expected from,to,coefficient");
        const double v = number(cells[2], line_no);
        if (v < 0.0) throw InputError(path, line_no, "negative product-differentiation coefficient");
        explicit_coef[node(cells[0], line_no)][node(cells[1], line_no)] = v;
        any_explicit = true;
        break;
      }
      case Block::kCriterionValue: {
        if (cells.size() != 3) throw InputError(path, line_no, "expected criterion,node,c_value");
        criterion(cells[0]).node_value[node(cells[1], line_no)] = number(cells[2], line_no);
        break;
      }
      case Block::kCharacteristic: {
        if (cells.size() != 4) throw InputError(path, line_no, "expected criterion,from,to,r_value");
        criterion(cells[0]).characteristic[{node(cells[1], line_no), node(cells[2], line_no)}] =
            number(cells[3], line_no);
        break;
      }
    }
  }
  if (any_explicit && !criteria.empty()) {
    throw InputError(path, 0, "explicit pairs and criteria blocks cannot be mixed");
  }
  if (!criteria.empty()) {
    try {
      s.preferences = build_preferences_from_criteria(criteria, s.nodes);
    } catch (const InputError& e) {
      throw InputError(path, 0, e.what());
    }
  } else {
    s.preferences.coefficient = std::move(explicit_coef);
  }
}

}  // namespace

Scenario load_scenario(const fs::path& dir) {
  Scenario s;
  const auto cfg_path = dir / "scenario.cfg";
  const auto cfg = read_config(cfg_path);
  std::string slack_id;
  for (const auto& [key, value] : cfg) {
    if (key == "timesteps") {
      s.timesteps = static_cast<int>(parse_number(cfg_path, key, value));
    } else if (key == "carbon_cap") {
      s.carbon_cap = (value == "inf" || value == "none") ? Scenario::kNoCap : parse_number(cfg_path, key, value);
    } else if (key == "carbon_cap_mode") {
      if (value == "upper") s.carbon_cap_mode = CarbonCapMode::kUpperBound;
      else if (value == "equality") s.carbon_cap_mode = CarbonCapMode::kEquality;
      else throw InputError(cfg_path, 0, "carbon_cap_mode must be 'upper' or 'equality'");
    } else if (key == "slack_node") {
      slack_id = value;
    } else if (key == "step_hours") {
      s.step_hours = parse_number(cfg_path, key, value);
    } else {
      throw InputError(cfg_path, 0, "unknown key '" + key + "'");
    }
  }
  if (s.timesteps <= 0) throw InputError(cfg_path, 0, "timesteps must be a positive integer");
  const int T = s.timesteps;

  // technologies.csv
  {
    const CsvTable t = read_csv(dir / "technologies.csv");
    const auto c_id = t.column("id"), c_kind = t.column("kind"), c_capex = t.column("capex_conversion"),
               c_vom = t.column("vom"), c_life = t.column("lifetime"), c_rate = t.column("discount_rate");
    const auto c_cs = t.find("capex_storage"), c_em = t.find("emission_rate"), c_in = t.find("charge_eff"),
               c_out = t.find("discharge_eff");
    for (const CsvRow& row : t.rows) {
      Technology tech;
      tech.id = row.cells[c_id];
      const std::string& kind = row.cells[c_kind];
      if (kind == "generation") tech.kind = TechnologyKind::kGeneration;
      else if (kind == "storage") tech.kind = TechnologyKind::kStorage;
      else throw InputError(t.path, row.line, "kind must be 'generation' or 'storage'");
      tech.capex_conversion = t.number(row, c_capex);
      tech.vom = t.number(row, c_vom);
      tech.lifetime_years = t.number(row, c_life);
      tech.discount_rate = t.number(row, c_rate);
      tech.emission_rate = cell_or(t, row, c_em, 0.0);
      tech.is_fossil = tech.emission_rate > 0.0;
      const bool has_storage_fields = (c_cs && !row.cells[*c_cs].empty()) ||
                                      (c_in && !row.cells[*c_in].empty()) ||
                                      (c_out && !row.cells[*c_out].empty());
      if (tech.is_storage()) {
        if (!c_cs || row.cells[*c_cs].empty() || !c_in || row.cells[*c_in].empty() || !c_out ||
            row.cells[*c_out].empty()) {
          throw InputError(t.path, row.line, "storage technology requires capex_storage, charge_eff, discharge_eff");
        }
        tech.capex_storage = t.number(row, *c_cs);
        tech.charge_efficiency = t.number(row, *c_in);
        tech.discharge_efficiency = t.number(row, *c_out);
      } else if (has_storage_fields) {
        throw InputError(t.path, row.line, "generation technology must leave storage columns empty");
      }
      try {
        tech.annuity_factor = annuity(tech.lifetime_years, tech.discount_rate);
      } catch (const std::invalid_argument& e) {
        throw InputError(t.path, row.line, e.what());
      }
      if (s.technology_index(tech.id) >= 0) throw InputError(t.path, row.line, "duplicate technology " + tech.id);
      s.technologies.push_back(std::move(tech));
    }
  }
  const int n_tech = static_cast<int>(s.technologies.size());

  // nodes.csv
  {
    const CsvTable t = read_csv(dir / "nodes.csv");
    const auto c_id = t.column("id"), c_phi = t.column("bilateral_share");
    const auto c_slack = t.find("slack");
    for (const CsvRow& row : t.rows) {
      Node node;
      node.id = row.cells[c_id];
      node.bilateral_share = t.number(row, c_phi);
      if (!(node.bilateral_share >= 0.0 && node.bilateral_share <= 1.0)) {
        throw InputError(t.path, row.line, fmt::format("bilateral_share {} outside [0,1]", node.bilateral_share));
      }
      if (c_slack && cell_or(t, row, c_slack, 0.0) != 0.0) {
        if (!slack_id.empty() && slack_id != node.id) {
          throw InputError(t.path, row.line, "slack flag disagrees with scenario.cfg slack_node");
        }
        slack_id = node.id;
      }
      node.existing_capacity.assign(n_tech, 0.0);
      node.existing_storage_capacity.assign(n_tech, 0.0);
      node.capacity_externality.assign(n_tech, 0.0);
      node.production_externality.assign(n_tech, 0.0);
      node.capacity_factor.assign(n_tech, std::vector<double>(T, 1.0));
      if (s.node_index(node.id) >= 0) throw InputError(t.path, row.line, "duplicate node " + node.id);
      s.nodes.push_back(std::move(node));
    }
    if (s.nodes.empty()) throw InputError(t.path, 0, "no nodes");
  }
  if (slack_id.empty()) throw InputError(cfg_path, 0, "slack_node not given");
  s.slack_node = s.node_index(slack_id);
  if (s.slack_node < 0) throw InputError(cfg_path, 0, "slack_node '" + slack_id + "' does not resolve");

  // demand.csv: one column per node.
  {
    const CsvTable t = read_csv(dir / "demand.csv");
    for (Node& node : s.nodes) {
      const auto col = t.column(node.id);
      for (const CsvRow& row : t.rows) node.demand.push_back(t.number(row, col));
      if (static_cast<int>(node.demand.size()) != T) {
        throw InputError(t.path, t.rows.empty() ? 1 : t.rows.back().line,
                         fmt::format("demand series for {} has length {}, expected {}", node.id,
                                     node.demand.size(), T));
      }
    }
  }

  // capacity_factors.csv: columns "node:technology"; absent columns default to 1.
  if (fs::exists(dir / "capacity_factors.csv")) {
    const CsvTable t = read_csv(dir / "capacity_factors.csv");
    if (static_cast<int>(t.rows.size()) != T) {
      throw InputError(t.path, t.rows.empty() ? 1 : t.rows.back().line,
                       fmt::format("capacity factor series has length {}, expected {}", t.rows.size(), T));
    }
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const std::string& key = t.header[c];
      if (key == "t") continue;
      const auto colon = key.find(':');
      if (colon == std::string::npos) throw InputError(t.path, 1, "column '" + key + "' is not node:technology");
      const int n = s.node_index(key.substr(0, colon));
      const int i = s.technology_index(key.substr(colon + 1));
      if (n < 0 || i < 0) throw InputError(t.path, 1, "column '" + key + "' does not resolve");
      for (int step = 0; step < T; ++step) {
        const double e = t.number(t.rows[step], c);
        if (!(e >= 0.0 && e <= 1.0)) {
          throw InputError(t.path, t.rows[step].line, fmt::format("capacity factor {} outside [0,1]", e));
        }
        s.nodes[n].capacity_factor[i][step] = e;
      }
    }
  }

  if (fs::exists(dir / "existing_capacity.csv")) {
    const CsvTable t = read_csv(dir / "existing_capacity.csv");
    const auto c_n = t.column("node"), c_t = t.column("technology"), c_mw = t.column("mw");
    const auto c_mwh = t.find("mwh");
    for (const CsvRow& row : t.rows) {
      const int n = resolve_node(s, t, row, c_n);
      const int i = resolve_tech(s, t, row, c_t);
      s.nodes[n].existing_capacity[i] = t.number(row, c_mw);
      const double mwh = cell_or(t, row, c_mwh, 0.0);
      if (mwh != 0.0 && !s.technologies[i].is_storage()) {
        throw InputError(t.path, row.line, "MWh capacity given for a generation technology");
      }
      s.nodes[n].existing_storage_capacity[i] = mwh;
    }
  }

  if (fs::exists(dir / "externalities.csv")) {
    const CsvTable t = read_csv(dir / "externalities.csv");
    const auto c_n = t.column("node"), c_t = t.column("technology"), c_cap = t.column("capacity_ex"),
               c_prod = t.column("production_ex");
    for (const CsvRow& row : t.rows) {
      const int n = resolve_node(s, t, row, c_n);
      const int i = resolve_tech(s, t, row, c_t);
      s.nodes[n].capacity_externality[i] = t.number(row, c_cap);
      s.nodes[n].production_externality[i] = t.number(row, c_prod);
    }
  }

  if (fs::exists(dir / "lines.csv")) {
    const CsvTable t = read_csv(dir / "lines.csv");
    const auto c_id = t.column("id"), c_from = t.column("from"), c_to = t.column("to"),
               c_len = t.column("length_km"), c_capex = t.column("capex_per_mw_km"), c_life = t.column("lifetime"),
               c_rate = t.column("discount_rate"), c_cap = t.column("existing_capacity"),
               c_x = t.column("reactance");
    for (const CsvRow& row : t.rows) {
      Line line;
      line.id = row.cells[c_id];
      line.from = resolve_node(s, t, row, c_from);
      line.to = resolve_node(s, t, row, c_to);
      if (line.from == line.to) throw InputError(t.path, row.line, "line endpoints coincide");
      line.length_km = t.number(row, c_len);
      line.capex_per_mw_km = t.number(row, c_capex);
      line.lifetime_years = t.number(row, c_life);
      line.discount_rate = t.number(row, c_rate);
      line.existing_capacity = t.number(row, c_cap);
      line.reactance = t.number(row, c_x);
      if (!(line.reactance > 0.0)) throw InputError(t.path, row.line, "reactance must be positive");
      try {
        line.annuity_factor = annuity(line.lifetime_years, line.discount_rate);
      } catch (const std::invalid_argument& e) {
        throw InputError(t.path, row.line, e.what());
      }
      s.lines.push_back(std::move(line));
    }
  }

  // Communication graph: explicit undirected edges, else complete.
  if (fs::exists(dir / "communication.csv")) {
    const CsvTable t = read_csv(dir / "communication.csv");
    const auto c_a = t.column("node_a"), c_b = t.column("node_b");
    std::vector<std::set<int>> adj(s.nodes.size());
    for (const CsvRow& row : t.rows) {
      const int a = resolve_node(s, t, row, c_a);
      const int b = resolve_node(s, t, row, c_b);
      if (a == b) throw InputError(t.path, row.line, "self-loop in communication graph");
      adj[a].insert(b);
      adj[b].insert(a);
    }
    for (std::size_t n = 0; n < s.nodes.size(); ++n) {
      s.nodes[n].neighbors.assign(adj[n].begin(), adj[n].end());
    }
  } else {
    make_complete_communication_graph(s);
  }

  if (fs::exists(dir / "preferences.csv")) {
    read_preferences(s, dir / "preferences.csv");
  } else {
    s.preferences.coefficient.assign(s.nodes.size(), std::vector<double>(s.nodes.size(), 0.0));
  }

  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// Scenario directory writer

void write_scenario(const Scenario& s, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
    return out;
  };
  auto num = [](double v) { return fmt::format("{}", v); };
  const int T = s.timesteps;
  {
    auto out = open("scenario.cfg");
    out << "timesteps=" << T << "\n";
    out << "carbon_cap=" << (std::isfinite(s.carbon_cap) ? num(s.carbon_cap) : std::string("inf")) << "\n";
    out << "carbon_cap_mode=" << (s.carbon_cap_mode == CarbonCapMode::kEquality ? "equality" : "upper") << "\n";
    out << "slack_node=" << s.nodes[s.slack_node].id << "\n";
    out << "step_hours=" << num(s.step_hours) << "\n";
  }
  {
    auto out = open("technologies.csv");
    out << "id,kind,capex_conversion,capex_storage,vom,lifetime,discount_rate,emission_rate,charge_eff,discharge_eff\n";
    for (const Technology& t : s.technologies) {
      out << t.id << ',' << (t.is_storage() ? "storage" : "generation") << ',' << num(t.capex_conversion) << ','
          << (t.is_storage() ? num(t.capex_storage) : "") << ',' << num(t.vom) << ',' << num(t.lifetime_years)
          << ',' << num(t.discount_rate) << ',' << num(t.emission_rate) << ','
          << (t.is_storage() ? num(t.charge_efficiency) : "") << ','
          << (t.is_storage() ? num(t.discharge_efficiency) : "") << '\n';
    }
  }
  {
    auto out = open("nodes.csv");
    out << "id,bilateral_share,slack\n";
    for (std::size_t n = 0; n < s.nodes.size(); ++n) {
      out << s.nodes[n].id << ',' << num(s.nodes[n].bilateral_share) << ','
          << (static_cast<int>(n) == s.slack_node ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open("demand.csv");
    for (std::size_t n = 0; n < s.nodes.size(); ++n) out << (n ? "," : "") << s.nodes[n].id;
    out << '\n';
    for (int t = 0; t < T; ++t) {
      for (std::size_t n = 0; n < s.nodes.size(); ++n) out << (n ? "," : "") << num(s.nodes[n].demand[t]);
      out << '\n';
    }
  }
  {
    auto out = open("capacity_factors.csv");
    std::vector<std::pair<int, int>> cols;
    for (std::size_t n = 0; n < s.nodes.size(); ++n) {
      for (std::size_t i = 0; i < s.technologies.size(); ++i) {
        const auto& cf = s.nodes[n].capacity_factor[i];
        if (std::any_of(cf.begin(), cf.end(), [](double e) { return e != 1.0; })) {
          cols.emplace_back(static_cast<int>(n), static_cast<int>(i));
        }
      }
    }
    out << 't';
    for (auto [n, i] : cols) out << ',' << s.nodes[n].id << ':' << s.technologies[i].id;
    out << '\n';
    for (int t = 0; t < T; ++t) {
      out << t;
      for (auto [n, i] : cols) out << ',' << num(s.nodes[n].capacity_factor[i][t]);
      out << '\n';
    }
  }
  {
    auto out = open("existing_capacity.csv");
    out << "node,technology,mw,mwh\n";
    for (const Node& node : s.nodes) {
      for (std::size_t i = 0; i < s.technologies.size(); ++i) {
        if (node.existing_capacity[i] != 0.0 || node.existing_storage_capacity[i] != 0.0) {
          out << node.id << ',' << s.technologies[i].id << ',' << num(node.existing_capacity[i]) << ','
              << num(node.existing_storage_capacity[i]) << '\n';
        }
      }
    }
  }
  {
    auto out = open("externalities.csv");
    out << "node,technology,capacity_ex,production_ex\n";
    for (const Node& node : s.nodes) {
      for (std::size_t i = 0; i < s.technologies.size(); ++i) {
        if (node.capacity_externality[i] != 0.0 || node.production_externality[i] != 0.0) {
          out << node.id << ',' << s.technologies[i].id << ',' << num(node.capacity_externality[i]) << ','
              << num(node.production_externality[i]) << '\n';
        }
      }
    }
  }
  {
    auto out = open("lines.csv");
    out << "id,from,to,length_km,capex_per_mw_km,lifetime,discount_rate,existing_capacity,reactance\n";
    for (const Line& l : s.lines) {
      out << l.id << ',' << s.nodes[l.from].id << ',' << s.nodes[l.to].id << ',' << num(l.length_km) << ','
          << num(l.capex_per_mw_km) << ',' << num(l.lifetime_years) << ',' << num(l.discount_rate) << ','
          << num(l.existing_capacity) << ',' << num(l.reactance) << '\n';
    }
  }
  {
    auto out = open("communication.csv");
    out << "node_a,node_b\n";
    for (std::size_t n = 0; n < s.nodes.size(); ++n) {
      for (int m : s.nodes[n].neighbors) {
        if (m > static_cast<int>(n)) out << s.nodes[n].id << ',' << s.nodes[m].id << '\n';
      }
    }
  }
  {
    auto out = open("preferences.csv");
    const auto& pref = s.preferences;
    if (!pref.criteria.empty()) {
      out << "criterion,node,c_value\n";
      for (const Criterion& u : pref.criteria) {
        for (std::size_t n = 0; n < s.nodes.size(); ++n) {
          out << u.name << ',' << s.nodes[n].id << ',' << num(u.node_value[n]) << '\n';
        }
      }
      out << "criterion,from,to,r_value\n";
      for (const Criterion& u : pref.criteria) {
        for (const auto& [pair, r] : u.characteristic) {
          out << u.name << ',' << s.nodes[pair.first].id << ',' << s.nodes[pair.second].id << ',' << num(r) << '\n';
        }
      }
    } else {
      out << "from,to,coefficient\n";
      for (std::size_t n = 0; n < s.nodes.size(); ++n) {
        for (std::size_t m = 0; m < s.nodes.size(); ++m) {
          const double v = pref.at(static_cast<int>(n), static_cast<int>(m));
          if (v != 0.0) out << s.nodes[n].id << ',' << s.nodes[m].id << ',' << num(v) << '\n';
        }
      }
    }
  }
}

}  // namespace mixmarket
