#include "mixmarket/model_builder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

namespace mixmarket {

const char* to_string(Symbol s) {
  switch (s) {
    case Symbol::kCapacity: return "k";
    case Symbol::kStorageCapacity: return "kst";
    case Symbol::kGeneration: return "p";
    case Symbol::kCharge: return "pin";
    case Symbol::kDischarge: return "pout";
    case Symbol::kStateOfCharge: return "soc";
    case Symbol::kPool: return "ppool";
    case Symbol::kEmission: return "e";
    case Symbol::kBilateralPlus: return "pbp";
    case Symbol::kBilateralMinus: return "pbm";
    case Symbol::kGridBilateral: return "zbil";
    case Symbol::kLineCapacity: return "kl";
    case Symbol::kGridPool: return "zpool";
    case Symbol::kFlow: return "f";
  }
  return "?";
}

const char* to_string(Tag t) {
  switch (t) {
    case Tag::k1d: return "1d";
    case Tag::k1e: return "1e";
    case Tag::k1f: return "1f";
    case Tag::k1g: return "1g";
    case Tag::k1h: return "1h";
    case Tag::k1i: return "1i";
    case Tag::k1j: return "1j";
    case Tag::k1k: return "1k";
    case Tag::k2b: return "2b";
    case Tag::k2c: return "2c";
    case Tag::k2d: return "2d";
    case Tag::k5e: return "5e";
    case Tag::k5f: return "5f";
    case Tag::k5g: return "5g";
    case Tag::k5h: return "5h";
    case Tag::kAbsLink: return "abs-link";
  }
  return "?";
}

int ModelInstance::column(const SymbolRef& ref) const {
  auto at2 = [](const Vec2<int>& v, int a, int b) {
    if (a < 0 || a >= static_cast<int>(v.size()) || b < 0 || b >= static_cast<int>(v[a].size())) return -1;
    return v[a][b];
  };
  auto at3 = [&](const Vec3<int>& v, int a, int b, int c) {
    if (a < 0 || a >= static_cast<int>(v.size())) return -1;
    return at2(v[a], b, c);
  };
  auto at1 = [](const std::vector<int>& v, int a) {
    return a < 0 || a >= static_cast<int>(v.size()) ? -1 : v[a];
  };
  switch (ref.symbol) {
    case Symbol::kCapacity: return at2(vars.k, ref.a, ref.b);
    case Symbol::kStorageCapacity: return at2(vars.kst, ref.a, ref.b);
    case Symbol::kGeneration: return at3(vars.p, ref.a, ref.b, ref.c);
    case Symbol::kCharge: return at3(vars.pin, ref.a, ref.b, ref.c);
    case Symbol::kDischarge: return at3(vars.pout, ref.a, ref.b, ref.c);
    case Symbol::kStateOfCharge: return at3(vars.soc, ref.a, ref.b, ref.c);
    case Symbol::kPool: return at2(vars.ppool, ref.a, ref.b);
    case Symbol::kEmission: return at1(vars.e, ref.a);
    case Symbol::kBilateralPlus: return at2(vars.pplus, ref.a, ref.b);
    case Symbol::kBilateralMinus: return at2(vars.pminus, ref.a, ref.b);
    case Symbol::kGridBilateral: return at2(vars.zbil, ref.a, ref.b);
    case Symbol::kLineCapacity: return at1(vars.kline, ref.a);
    case Symbol::kGridPool: return at2(vars.zpool, ref.a, ref.b);
    case Symbol::kFlow: return at2(vars.f, ref.a, ref.b);
  }
  return -1;
}

std::vector<int> ModelInstance::rows_with_tag(Tag tag) const {
  std::vector<int> out;
  for (std::size_t r = 0; r < row_tags.size(); ++r) {
    if (row_tags[r].tag == tag) out.push_back(static_cast<int>(r));
  }
  return out;
}

std::vector<TradePair> trade_pairs(const Scenario& s) {
  std::vector<TradePair> pairs;
  std::map<std::pair<int, int>, int> index;
  for (std::size_t n = 0; n < s.nodes.size(); ++n) {
    for (int m : s.nodes[n].neighbors) {
      index[{static_cast<int>(n), m}] = static_cast<int>(pairs.size());
      pairs.push_back({static_cast<int>(n), m, -1});
    }
  }
  for (TradePair& q : pairs) q.mirror = index.at({q.m, q.n});
  return pairs;
}

bool bilateral_fixed(const Scenario& s, int n, int m) {
  return s.nodes[n].bilateral_share == 0.0 || s.nodes[m].bilateral_share == 0.0;
}

bool pool_fixed(const Scenario& s, int n) { return s.nodes[n].bilateral_share == 1.0; }

AbsSplit linearize_abs(LinearProgram& lp, const std::string& name, double coefficient, bool fixed_zero) {
  if (!(coefficient >= 0.0)) {
    throw InputError(fmt::format("{}: negative absolute-value coefficient {} is not convex", name, coefficient));
  }
  const double up = fixed_zero ? 0.0 : kInf;
  AbsSplit out;
  out.plus = lp.add_column("pbp" + name, 0.0, up, coefficient);
  out.minus = lp.add_column("pbm" + name, 0.0, up, coefficient);
  return out;
}

namespace {

class Builder {
 public:
  Builder(const Scenario& s, const ActorPrices* prices) : s_(s), prices_(prices) {
    m_.num_nodes = static_cast<int>(s.nodes.size());
    m_.num_technologies = static_cast<int>(s.technologies.size());
    m_.num_lines = static_cast<int>(s.lines.size());
    m_.timesteps = s.timesteps;
    m_.pairs = trade_pairs(s);
    m_.pair_index.assign(m_.num_nodes, std::vector<int>(m_.num_nodes, -1));
    for (std::size_t q = 0; q < m_.pairs.size(); ++q) m_.pair_index[m_.pairs[q].n][m_.pairs[q].m] = static_cast<int>(q);

    const int N = m_.num_nodes, I = m_.num_technologies, T = s.timesteps, L = m_.num_lines;
    const int Q = static_cast<int>(m_.pairs.size());
    auto v2 = [](int a, int b) { return Vec2<int>(a, std::vector<int>(b, -1)); };
    auto v3 = [&](int a, int b, int c) { return Vec3<int>(a, v2(b, c)); };
    VariableCatalog& v = m_.vars;
    v.k = v2(N, I);
    v.kst = v2(N, I);
    v.p = v3(N, I, T);
    v.pin = v3(N, I, T);
    v.pout = v3(N, I, T);
    v.soc = v3(N, I, T);
    v.ppool = v2(N, T);
    v.e.assign(N, -1);
    v.pplus = v2(Q, T);
    v.pminus = v2(Q, T);
    v.zbil = v2(Q, T);
    v.kline.assign(L, -1);
    v.zpool = v2(N, T);
    v.f = v2(L, T);
    RowCatalog& r = m_.rows;
    r.r1d = v2(N, T);
    r.r1e = v2(N, T);
    r.r1f = v3(N, I, T);
    r.r1g = v3(N, I, T);
    r.r1h = v3(N, I, T);
    r.r1i = v3(N, I, T);
    r.r1j = v3(N, I, T);
    r.r1k.assign(N, -1);
    r.r2b = v2(L, T);
    r.r2c_up = v2(L, T);
    r.r2c_lo = v2(L, T);
    r.r2d.assign(T, -1);
    r.r5e = v2(Q, T);
    r.r5f = v2(Q, T);
    r.r5g = v2(N, T);
  }

  void node_columns(int n) {
    const Node& node = s_.nodes[n];
    VariableCatalog& v = m_.vars;
    const int T = s_.timesteps;
    for (int i = 0; i < m_.num_technologies; ++i) {
      const Technology& tech = s_.technologies[i];
      const std::string key = fmt::format("[{},{}]", tech.id, node.id);
      v.k[n][i] = col("k" + key, 0.0, kInf, tech.capex_conversion / tech.annuity_factor + node.capacity_externality[i],
                      {Symbol::kCapacity, n, i});
      if (tech.is_storage()) {
        v.kst[n][i] = col("kst" + key, 0.0, kInf, tech.capex_storage / tech.annuity_factor,
                          {Symbol::kStorageCapacity, n, i});
      }
    }
    v.e[n] = col(fmt::format("e[{}]", node.id), -kInf, kInf, prices_ ? prices_->carbon_price : 0.0,
                 {Symbol::kEmission, n});
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < m_.num_technologies; ++i) {
        const Technology& tech = s_.technologies[i];
        const std::string key = fmt::format("[{},{},{}]", tech.id, node.id, t);
        if (tech.is_storage()) {
          v.pin[n][i][t] = col("pin" + key, 0.0, kInf, 0.0, {Symbol::kCharge, n, i, t});
          v.pout[n][i][t] = col("pout" + key, 0.0, kInf, 0.0, {Symbol::kDischarge, n, i, t});
          v.soc[n][i][t] = col("soc" + key, 0.0, kInf, 0.0, {Symbol::kStateOfCharge, n, i, t});
        } else {
          v.p[n][i][t] = col("p" + key, 0.0, kInf, tech.vom + node.production_externality[i],
                             {Symbol::kGeneration, n, i, t});
        }
      }
      const bool fixed = pool_fixed(s_, n);
      v.ppool[n][t] = col(fmt::format("ppool[{},{}]", node.id, t), fixed ? 0.0 : -kInf, fixed ? 0.0 : kInf,
                          prices_ ? prices_->pool_price[n][t] : 0.0, {Symbol::kPool, n, t});
    }
  }

  void trade_columns(int only_node) {
    const int T = s_.timesteps;
    for (std::size_t qi = 0; qi < m_.pairs.size(); ++qi) {
      const TradePair& q = m_.pairs[qi];
      if (only_node >= 0 && q.n != only_node) continue;
      const bool fixed = bilateral_fixed(s_, q.n, q.m);
      const double coef = s_.preferences.at(q.n, q.m);
      for (int t = 0; t < T; ++t) {
        const std::string key = fmt::format("[{},{},{}]", s_.nodes[q.n].id, s_.nodes[q.m].id, t);
        const AbsSplit split = linearize_abs(m_.lp, key, coef, fixed);
        m_.column_symbols.push_back({Symbol::kBilateralPlus, static_cast<int>(qi), t});
        m_.column_symbols.push_back({Symbol::kBilateralMinus, static_cast<int>(qi), t});
        m_.vars.pplus[qi][t] = split.plus;
        m_.vars.pminus[qi][t] = split.minus;
        if (prices_) {
          const double price = prices_->trade_price[qi][t];
          m_.lp.set_cost(split.plus, coef + price);
          m_.lp.set_cost(split.minus, coef - price);
        }
      }
    }
  }

  void tso_columns() {
    const int T = s_.timesteps;
    VariableCatalog& v = m_.vars;
    for (int l = 0; l < m_.num_lines; ++l) {
      const Line& line = s_.lines[l];
      v.kline[l] = col(fmt::format("kl[{}]", line.id), 0.0, kInf,
                       line.length_km * line.capex_per_mw_km / line.annuity_factor, {Symbol::kLineCapacity, l});
    }
    for (int t = 0; t < T; ++t) {
      for (std::size_t qi = 0; qi < m_.pairs.size(); ++qi) {
        const TradePair& q = m_.pairs[qi];
        const bool fixed = bilateral_fixed(s_, q.n, q.m);
        v.zbil[qi][t] = col(fmt::format("zbil[{},{},{}]", s_.nodes[q.n].id, s_.nodes[q.m].id, t),
                            fixed ? 0.0 : -kInf, fixed ? 0.0 : kInf, prices_ ? -prices_->grid_price[qi][t] : 0.0,
                            {Symbol::kGridBilateral, static_cast<int>(qi), t});
      }
      for (int n = 0; n < m_.num_nodes; ++n) {
        const bool fixed = pool_fixed(s_, n);
        v.zpool[n][t] = col(fmt::format("zpool[{},{}]", s_.nodes[n].id, t), fixed ? 0.0 : -kInf,
                            fixed ? 0.0 : kInf, prices_ ? -prices_->pool_price[n][t] : 0.0,
                            {Symbol::kGridPool, n, t});
      }
      for (int l = 0; l < m_.num_lines; ++l) {
        v.f[l][t] = col(fmt::format("f[{},{}]", s_.lines[l].id, t), -kInf, kInf, 0.0, {Symbol::kFlow, l, t});
      }
    }
  }

  void node_rows(int n) {
    const Node& node = s_.nodes[n];
    const VariableCatalog& v = m_.vars;
    RowCatalog& r = m_.rows;
    const double phi = node.bilateral_share;
    const double h = s_.step_hours;
    const int T = s_.timesteps;
    std::vector<Term> terms;
    for (int t = 0; t < T; ++t) {
      auto net_injection = [&](double w) {
        terms.clear();
        for (int i = 0; i < m_.num_technologies; ++i) {
          if (s_.technologies[i].is_storage()) {
            terms.push_back({v.pout[n][i][t], w});
            terms.push_back({v.pin[n][i][t], -w});
          } else {
            terms.push_back({v.p[n][i][t], w});
          }
        }
      };
      if (phi > 0.0) {
        net_injection(phi);
        for (std::size_t qi = 0; qi < m_.pairs.size(); ++qi) {
          if (m_.pairs[qi].n != n) continue;
          terms.push_back({v.pplus[qi][t], -1.0});
          terms.push_back({v.pminus[qi][t], 1.0});
        }
        r.r1d[n][t] = row(fmt::format("1d[{},{}]", node.id, t), phi * node.demand[t], phi * node.demand[t], terms,
                          {Tag::k1d, n, t});
      }
      if (phi < 1.0) {
        net_injection(1.0 - phi);
        terms.push_back({v.ppool[n][t], -1.0});
        const double rhs = (1.0 - phi) * node.demand[t];
        r.r1e[n][t] = row(fmt::format("1e[{},{}]", node.id, t), rhs, rhs, terms, {Tag::k1e, n, t});
      }
      for (int i = 0; i < m_.num_technologies; ++i) {
        const Technology& tech = s_.technologies[i];
        const std::string key = fmt::format("[{},{},{}]", tech.id, node.id, t);
        const double K = node.existing_capacity[i];
        if (!tech.is_storage()) {
          const double E = node.capacity_factor[i][t];
          const Term gen[] = {{v.p[n][i][t], 1.0}, {v.k[n][i], -E * h}};
          r.r1f[n][i][t] = row("1f" + key, -kInf, E * h * K, gen, {Tag::k1f, n, i, t});
          continue;
        }
        const int prev = t == 0 ? T - 1 : t - 1;
        const Term dyn[] = {{v.soc[n][i][t], 1.0},
                            {v.soc[n][i][prev], -1.0},
                            {v.pin[n][i][t], -tech.charge_efficiency},
                            {v.pout[n][i][t], 1.0 / tech.discharge_efficiency}};
        r.r1g[n][i][t] = row("1g" + key, 0.0, 0.0, dyn, {Tag::k1g, n, i, t});
        const Term energy[] = {{v.soc[n][i][t], 1.0}, {v.kst[n][i], -1.0}};
        r.r1h[n][i][t] = row("1h" + key, -kInf, node.existing_storage_capacity[i], energy, {Tag::k1h, n, i, t});
        const Term out[] = {{v.pout[n][i][t], 1.0}, {v.k[n][i], -h}};
        r.r1i[n][i][t] = row("1i" + key, -kInf, h * K, out, {Tag::k1i, n, i, t});
        const Term in[] = {{v.pin[n][i][t], 1.0}, {v.k[n][i], -h}};
        r.r1j[n][i][t] = row("1j" + key, -kInf, h * K, in, {Tag::k1j, n, i, t});
      }
    }
    terms.clear();
    terms.push_back({v.e[n], 1.0});
    for (int i = 0; i < m_.num_technologies; ++i) {
      const Technology& tech = s_.technologies[i];
      if (tech.is_storage() || tech.emission_rate == 0.0) continue;
      for (int t = 0; t < T; ++t) terms.push_back({v.p[n][i][t], -tech.emission_rate});
    }
    r.r1k[n] = row(fmt::format("1k[{}]", node.id), 0.0, 0.0, terms, {Tag::k1k, n});
  }

  void tso_rows(const PtdfMatrix& ptdf) {
    if (ptdf.num_lines != m_.num_lines || ptdf.num_nodes != m_.num_nodes) {
      throw InputError(fmt::format("PTDF is {}x{}, scenario has {} lines and {} nodes", ptdf.num_lines,
                                   ptdf.num_nodes, m_.num_lines, m_.num_nodes));
    }
    const VariableCatalog& v = m_.vars;
    RowCatalog& r = m_.rows;
    const double h = s_.step_hours;
    const int T = s_.timesteps;
    std::vector<Term> terms;
    for (int t = 0; t < T; ++t) {
      for (int l = 0; l < m_.num_lines; ++l) {
        const Line& line = s_.lines[l];
        terms.clear();
        terms.push_back({v.f[l][t], 1.0});
        for (int n = 0; n < m_.num_nodes; ++n) {
          const double w = ptdf(l, n);
          if (w == 0.0) continue;
          for (std::size_t qi = 0; qi < m_.pairs.size(); ++qi) {
            if (m_.pairs[qi].n == n) terms.push_back({v.zbil[qi][t], -w});
          }
          terms.push_back({v.zpool[n][t], -w});
        }
        r.r2b[l][t] = row(fmt::format("2b[{},{}]", line.id, t), 0.0, 0.0, terms, {Tag::k2b, l, t});
        const Term up[] = {{v.f[l][t], 1.0}, {v.kline[l], -h}};
        r.r2c_up[l][t] = row(fmt::format("2cu[{},{}]", line.id, t), -kInf, h * line.existing_capacity, up,
                             {Tag::k2c, l, t, 0});
        const Term lo[] = {{v.f[l][t], 1.0}, {v.kline[l], h}};
        r.r2c_lo[l][t] = row(fmt::format("2cl[{},{}]", line.id, t), -h * line.existing_capacity, kInf, lo,
                             {Tag::k2c, l, t, 1});
      }
      terms.clear();
      for (int n = 0; n < m_.num_nodes; ++n) {
        for (std::size_t qi = 0; qi < m_.pairs.size(); ++qi) {
          if (m_.pairs[qi].n == n) terms.push_back({v.zbil[qi][t], 1.0});
        }
        terms.push_back({v.zpool[n][t], 1.0});
      }
      r.r2d[t] = row(fmt::format("2d[{}]", t), 0.0, 0.0, terms, {Tag::k2d, t});
    }
  }

  void coupling_rows() {
    const VariableCatalog& v = m_.vars;
    RowCatalog& r = m_.rows;
    const int T = s_.timesteps;
    for (int t = 0; t < T; ++t) {
      for (std::size_t qi = 0; qi < m_.pairs.size(); ++qi) {
        const TradePair& q = m_.pairs[qi];
        const std::string key = fmt::format("[{},{},{}]", s_.nodes[q.n].id, s_.nodes[q.m].id, t);
        if (static_cast<int>(qi) < q.mirror) {
          const Term recip[] = {{v.pplus[qi][t], 1.0},
                                {v.pminus[qi][t], -1.0},
                                {v.pplus[q.mirror][t], 1.0},
                                {v.pminus[q.mirror][t], -1.0}};
          const int id = row("5e" + key, 0.0, 0.0, recip, {Tag::k5e, static_cast<int>(qi), t});
          r.r5e[qi][t] = id;
          r.r5e[q.mirror][t] = id;
        }
        const Term link[] = {{v.pplus[qi][t], 1.0}, {v.pminus[qi][t], -1.0}, {v.zbil[qi][t], -1.0}};
        r.r5f[qi][t] = row("5f" + key, 0.0, 0.0, link, {Tag::k5f, static_cast<int>(qi), t});
      }
      for (int n = 0; n < m_.num_nodes; ++n) {
        const Term pool[] = {{v.ppool[n][t], 1.0}, {v.zpool[n][t], -1.0}};
        r.r5g[n][t] = row(fmt::format("5g[{},{}]", s_.nodes[n].id, t), 0.0, 0.0, pool, {Tag::k5g, n, t});
      }
    }
    std::vector<Term> cap;
    for (int n = 0; n < m_.num_nodes; ++n) cap.push_back({v.e[n], 1.0});
    const double lo = s_.carbon_cap_mode == CarbonCapMode::kEquality ? s_.carbon_cap : -kInf;
    r.r5h = row("5h", lo, s_.carbon_cap, cap, {Tag::k5h});
  }

  ModelInstance take() { return std::move(m_); }

 private:
  int col(const std::string& name, double lo, double up, double cost, SymbolRef ref) {
    m_.column_symbols.push_back(ref);
    return m_.lp.add_column(name, lo, up, cost);
  }

  int row(const std::string& name, double lo, double up, std::span<const Term> terms, RowRef ref) {
    m_.row_tags.push_back(ref);
    return m_.lp.add_row(name, lo, up, terms);
  }

  const Scenario& s_;
  const ActorPrices* prices_;
  ModelInstance m_;
};

}  // namespace

ModelInstance build_centralized(const Scenario& scenario, const PtdfMatrix& ptdf) {
  Builder b(scenario, nullptr);
  for (int n = 0; n < static_cast<int>(scenario.nodes.size()); ++n) b.node_columns(n);
  b.trade_columns(-1);
  b.tso_columns();
  for (int n = 0; n < static_cast<int>(scenario.nodes.size()); ++n) b.node_rows(n);
  b.tso_rows(ptdf);
  b.coupling_rows();
  return b.take();
}

ModelInstance build_node_problem(const Scenario& scenario, int n, const ActorPrices& prices) {
  Builder b(scenario, &prices);
  b.node_columns(n);
  b.trade_columns(n);
  b.node_rows(n);
  return b.take();
}

ModelInstance build_tso_problem(const Scenario& scenario, const PtdfMatrix& ptdf, const ActorPrices& prices) {
  Builder b(scenario, &prices);
  b.tso_columns();
  b.tso_rows(ptdf);
  return b.take();
}

ModelSize expected_size(const Scenario& s) {
  const int N = static_cast<int>(s.nodes.size());
  const int S = static_cast<int>(s.storage_technologies().size());
  const int G = static_cast<int>(s.technologies.size()) - S;
  const int T = s.timesteps;
  const int L = static_cast<int>(s.lines.size());
  int Q = 0;
  int with_bilateral = 0, with_pool = 0;
  for (const Node& node : s.nodes) {
    Q += static_cast<int>(node.neighbors.size());
    if (node.bilateral_share > 0.0) ++with_bilateral;
    if (node.bilateral_share < 1.0) ++with_pool;
  }
  ModelSize out;
  out.columns = N * (G + S) + N * S + N * G * T + 3 * N * S * T + N * T + N + 3 * Q * T + L + N * T + L * T;
  out.rows = T * with_bilateral + T * with_pool + N * G * T + 4 * N * S * T + N + 3 * L * T + T + (Q / 2) * T +
             Q * T + N * T + 1;
  return out;
}

// ---------------------------------------------------------------------------
// MPS

namespace {

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-' || c == '+') {
      out.push_back(c);
    } else if (c == '[' || c == ',') {
      out.push_back('_');
    }
  }
  if (out.empty()) out = "_";
  return out;
}

std::string base36(int v) {
  static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string out;
  do {
    out.insert(out.begin(), digits[v % 36]);
    v /= 36;
  } while (v > 0);
  return out;
}

std::vector<std::string> unique_names(const std::vector<std::string>& names, int max_len,
                                      const std::string& reserved) {
  std::vector<std::string> out;
  out.reserve(names.size());
  std::unordered_set<std::string> used = {reserved};
  int counter = 0;
  for (const std::string& raw : names) {
    std::string s = sanitize(raw);
    if (static_cast<int>(s.size()) > max_len) s.resize(max_len);
    if (used.contains(s)) {
      const std::string suffix = "~" + base36(counter++);
      const int keep = std::max(0, max_len - static_cast<int>(suffix.size()));
      s = s.substr(0, std::min<std::size_t>(s.size(), keep)) + suffix;
    }
    used.insert(s);
    out.push_back(s);
  }
  return out;
}

std::string num(double v) { return format_double(v); }

}  // namespace

MpsNames mps_names(const LinearProgram& lp, const MpsOptions& options) {
  if (options.max_name_length < 4) throw std::invalid_argument("MPS names need at least 4 characters");
  MpsNames out;
  out.columns = unique_names(lp.col_names(), options.max_name_length, "");
  out.rows = unique_names(lp.row_names(), options.max_name_length, "OBJ");
  return out;
}

void export_mps(const LinearProgram& lp, const std::filesystem::path& path, const MpsOptions& options,
                const std::filesystem::path& names_path) {
  const MpsNames names = mps_names(lp, options);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto line = [&](const std::string& f1, const std::string& f2, const std::string& f3, const std::string& f4) {
    out << fmt::format(" {:<2} {:<8}  {:<8}  {:>12}", f1, f2, f3, f4) << '\n';
  };

  out << "NAME          " << options.problem_name << '\n';
  out << "ROWS\n";
  out << " N  OBJ\n";
  const int m = lp.num_rows();
  std::vector<char> type(m);
  for (int r = 0; r < m; ++r) {
    const double lo = lp.row_lower()[r], up = lp.row_upper()[r];
    if (lo == up) type[r] = 'E';
    else if (std::isinf(lo) && std::isinf(up)) type[r] = 'N';
    else if (std::isinf(lo)) type[r] = 'L';
    else type[r] = 'G';
    out << ' ' << type[r] << "  " << names.rows[r] << '\n';
  }

  out << "COLUMNS\n";
  const ColumnMatrix A = lp.column_matrix();
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double c = lp.cost()[j];
    bool wrote = false;
    if (c != 0.0) {
      line("", names.columns[j], "OBJ", num(c));
      wrote = true;
    }
    for (int k = A.start[j]; k < A.start[j + 1]; ++k) {
      line("", names.columns[j], names.rows[A.index[k]], num(A.value[k]));
      wrote = true;
    }
    // A column with no entries still has to be declared.
    if (!wrote) line("", names.columns[j], "OBJ", "0");
  }

  out << "RHS\n";
  if (lp.objective_offset() != 0.0) line("", "RHS", "OBJ", num(-lp.objective_offset()));
  for (int r = 0; r < m; ++r) {
    double rhs = 0.0;
    if (type[r] == 'E' || type[r] == 'L') rhs = lp.row_upper()[r];
    else if (type[r] == 'G') rhs = lp.row_lower()[r];
    if (rhs != 0.0) line("", "RHS", names.rows[r], num(rhs));
  }

  bool ranges_header = false;
  for (int r = 0; r < m; ++r) {
    if (type[r] != 'G' || std::isinf(lp.row_upper()[r])) continue;
    if (!ranges_header) {
      out << "RANGES\n";
      ranges_header = true;
    }
    line("", "RNG", names.rows[r], num(lp.row_upper()[r] - lp.row_lower()[r]));
  }

  bool bounds_header = false;
  auto bound = [&](const char* kind, int j, const std::string& value) {
    if (!bounds_header) {
      out << "BOUNDS\n";
      bounds_header = true;
    }
    line(kind, "BND", names.columns[j], value);
  };
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double lo = lp.col_lower()[j], up = lp.col_upper()[j];
    if (lo == up) {
      bound("FX", j, num(lo));
    } else if (std::isinf(lo) && std::isinf(up)) {
      bound("FR", j, "");
    } else {
      if (std::isinf(lo)) bound("MI", j, "");
      else if (lo != 0.0 || up < 0.0) bound("LO", j, num(lo));
      if (!std::isinf(up)) bound("UP", j, num(up));
    }
  }
  out << "ENDATA\n";

  if (!names_path.empty()) {
    std::ofstream map(names_path);
    if (!map) throw std::runtime_error("cannot write " + names_path.string());
    map << "kind,mps_name,symbol\n";
    for (int j = 0; j < lp.num_cols(); ++j) map << "column," << names.columns[j] << ",\"" << lp.col_names()[j] << "\"\n";
    for (int r = 0; r < m; ++r) map << "row," << names.rows[r] << ",\"" << lp.row_names()[r] << "\"\n";
  }
}

LinearProgram read_mps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  enum class Section { kNone, kName, kRows, kColumns, kRhs, kRanges, kBounds, kEnd } section = Section::kNone;

  std::string objective;
  std::vector<std::string> row_names;
  std::vector<char> row_type;
  std::map<std::string, int> row_index;
  std::vector<std::string> col_names;
  std::map<std::string, int> col_index;
  std::vector<double> cost;
  std::vector<std::vector<Term>> rows;
  std::vector<double> rhs;
  std::vector<std::optional<double>> range;
  std::vector<double> lo, up;
  double offset = 0.0;

  std::string text;
  std::size_t line_no = 0;
  auto number = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError(path, line_no, "malformed number '" + s + "'");
    }
  };
  auto row_of = [&](const std::string& name) {
    auto it = row_index.find(name);
    if (it == row_index.end()) throw InputError(path, line_no, "unknown row '" + name + "'");
    return it->second;
  };
  auto col_of = [&](const std::string& name) {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw InputError(path, line_no, "unknown column '" + name + "'");
    return it->second;
  };

  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty() || text[0] == '*') continue;
    std::istringstream ss(text);
    std::vector<std::string> f;
    for (std::string tok; ss >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (!std::isspace(static_cast<unsigned char>(text[0]))) {
      const std::string& head = f[0];
      if (head == "NAME") section = Section::kName;
      else if (head == "ROWS") section = Section::kRows;
      else if (head == "COLUMNS") section = Section::kColumns;
      else if (head == "RHS") section = Section::kRhs;
      else if (head == "RANGES") section = Section::kRanges;
      else if (head == "BOUNDS") section = Section::kBounds;
      else if (head == "ENDATA") section = Section::kEnd;
      else throw InputError(path, line_no, "unknown section '" + head + "'");
      continue;
    }
    switch (section) {
      case Section::kRows: {
        if (f.size() != 2) throw InputError(path, line_no, "expected row type and name");
        const char t = f[0][0];
        if (t == 'N' && objective.empty()) {
          objective = f[1];
          break;
        }
        if (t != 'N' && t != 'E' && t != 'L' && t != 'G') throw InputError(path, line_no, "bad row type");
        row_index[f[1]] = static_cast<int>(row_names.size());
        row_names.push_back(f[1]);
        row_type.push_back(t);
        rows.emplace_back();
        rhs.push_back(0.0);
        range.emplace_back();
        break;
      }
      case Section::kColumns: {
        if (f.size() < 3 || f.size() % 2 == 0) throw InputError(path, line_no, "expected column, row, value pairs");
        if (f[1] == "'MARKER'") throw InputError(path, line_no, "integer markers are not supported");
        auto it = col_index.find(f[0]);
        int j;
        if (it == col_index.end()) {
          j = static_cast<int>(col_names.size());
          col_index[f[0]] = j;
          col_names.push_back(f[0]);
          cost.push_back(0.0);
          lo.push_back(0.0);
          up.push_back(kInf);
        } else {
          j = it->second;
        }
        for (std::size_t k = 1; k + 1 < f.size(); k += 2) {
          const double v = number(f[k + 1]);
          if (f[k] == objective) cost[j] += v;
          else rows[row_of(f[k])].push_back({j, v});
        }
        break;
      }
      case Section::kRhs: {
        const std::size_t first = f.size() % 2 == 1 ? 1 : 0;
        for (std::size_t k = first; k + 1 < f.size(); k += 2) {
          const double v = number(f[k + 1]);
          if (f[k] == objective) offset = -v;
          else rhs[row_of(f[k])] = v;
        }
        break;
      }
      case Section::kRanges: {
        const std::size_t first = f.size() % 2 == 1 ? 1 : 0;
        for (std::size_t k = first; k + 1 < f.size(); k += 2) range[row_of(f[k])] = number(f[k + 1]);
        break;
      }
      case Section::kBounds: {
        if (f.size() < 3) throw InputError(path, line_no, "short bound line");
        const std::string& kind = f[0];
        const int j = col_of(f[2]);
        const bool has_value = f.size() >= 4;
        const double v = has_value ? number(f[3]) : 0.0;
        if (kind == "UP") up[j] = v;
        else if (kind == "LO") lo[j] = v;
        else if (kind == "FX") lo[j] = up[j] = v;
        else if (kind == "FR") { lo[j] = -kInf; up[j] = kInf; }
        else if (kind == "MI") lo[j] = -kInf;
        else if (kind == "PL") up[j] = kInf;
        else if (kind == "BV") { lo[j] = 0.0; up[j] = 1.0; }
        else throw InputError(path, line_no, "unsupported bound type " + kind);
        break;
      }
      case Section::kName:
      case Section::kNone:
      case Section::kEnd:
        throw InputError(path, line_no, "data outside a section");
    }
  }
  if (section != Section::kEnd) throw InputError(path, line_no, "missing ENDATA");

  LinearProgram lp;
  for (std::size_t j = 0; j < col_names.size(); ++j) lp.add_column(col_names[j], lo[j], up[j], cost[j]);
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    double l = -kInf, u = kInf;
    const double b = rhs[r];
    switch (row_type[r]) {
      case 'E':
        l = u = b;
        if (range[r]) (*range[r] >= 0 ? u : l) = b + *range[r];
        break;
      case 'L':
        u = b;
        if (range[r]) l = b - std::abs(*range[r]);
        break;
      case 'G':
        l = b;
        if (range[r]) u = b + std::abs(*range[r]);
        break;
      default:
        break;
    }
    lp.add_row(row_names[r], l, u, rows[r]);
  }
  lp.set_objective_offset(offset);
  return lp;
}

void write_lp_dump(const ModelInstance& model, std::ostream& out) {
  const LinearProgram& lp = model.lp;
  out << "minimize\n ";
  int written = 0;
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double c = lp.cost()[j];
    if (c == 0.0) continue;
    out << (c < 0 ? " - " : (written ? " + " : " ")) << num(std::abs(c)) << ' ' << lp.col_names()[j];
    ++written;
  }
  if (lp.objective_offset() != 0.0) out << " + " << num(lp.objective_offset());
  out << "\nsubject to\n";
  for (int r = 0; r < lp.num_rows(); ++r) {
    out << '[' << to_string(model.row_tags[r].tag) << "] " << lp.row_names()[r] << ":";
    bool first = true;
    for (const Term& t : lp.row(r)) {
      out << (t.coef < 0 ? " - " : (first ? " " : " + "));
      if (std::abs(t.coef) != 1.0) out << num(std::abs(t.coef)) << ' ';
      out << lp.col_names()[t.col];
      first = false;
    }
    if (first) out << " 0";
    const double lo = lp.row_lower()[r], up = lp.row_upper()[r];
    if (lo == up) out << " = " << num(lo);
    else if (std::isinf(lo) && std::isinf(up)) out << " free";
    else if (std::isinf(lo)) out << " <= " << num(up);
    else if (std::isinf(up)) out << " >= " << num(lo);
    else out << " in [" << num(lo) << ", " << num(up) << "]";
    out << '\n';
  }
  out << "bounds\n";
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double lo = lp.col_lower()[j], up = lp.col_upper()[j];
    if (lo == 0.0 && std::isinf(up)) continue;
    out << ' ' << lp.col_names()[j];
    if (lo == up) out << " = " << num(lo) << '\n';
    else out << " in [" << (std::isinf(lo) ? "-inf" : num(lo)) << ", " << (std::isinf(up) ? "inf" : num(up)) << "]\n";
  }
}

}  // namespace mixmarket
