#include "mixmarket/equilibrium.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

namespace mixmarket {

namespace {

template <class T>
Vec2<T> zeros2(std::size_t a, std::size_t b) {
  return Vec2<T>(a, std::vector<T>(b, T{}));
}
template <class T>
Vec3<T> zeros3(std::size_t a, std::size_t b, std::size_t c) {
  return Vec3<T>(a, zeros2<T>(b, c));
}

double at_row(const std::vector<double>& y, int r) { return r < 0 ? 0.0 : y[r]; }
// Negated dual without producing -0.
double neg_row(const std::vector<double>& y, int r) { return 0.0 - at_row(y, r); }

}  // namespace

ActorPrices PriceSet::actor_prices() const {
  ActorPrices out;
  out.trade_price = lambda_bilateral;
  for (std::size_t q = 0; q < out.trade_price.size(); ++q) {
    for (std::size_t t = 0; t < out.trade_price[q].size(); ++t) out.trade_price[q][t] += lambda_grid[q][t];
  }
  out.grid_price = lambda_grid;
  out.pool_price = lambda_pool;
  out.carbon_price = lambda_co2;
  return out;
}

std::vector<std::pair<std::string, std::string>> price_sign_table() {
  return {
      {"pool_price", "marginal system cost of +1 MWh demand, EUR/MWh; equals -lambda_pool"},
      {"lambda_pool", "node pays lambda_pool per MWh of p^pool (net pool injection)"},
      {"lambda_bilateral", "reciprocity multiplier; node pays lambda_bilateral+lambda_grid per MWh of p^bilateral"},
      {"lambda_grid", "coupling multiplier of p^bilateral = z^bilateral; the TSO objective carries -lambda_grid * z^bilateral"},
      {"lambda_co2", "carbon price, EUR/t, >= 0 under an upper-bound cap"},
      {"lambda_flow", "multiplier of f - PTDF*z = 0"},
      {"lambda_system", "multiplier of the system energy balance sum z = 0"},
      {"lambda_bilateral_node", "multiplier of phi*(net - D) - sum p^bilateral = 0"},
      {"lambda_pool_node", "multiplier of (1-phi)*(net - D) - p^pool = 0"},
      {"lambda_co2_node", "multiplier of e - W*sum p = 0"},
      {"lambda_storage", "multiplier of soc_t - soc_t-1 - H_in p_in + p_out/H_out = 0"},
      {"mu_*_up", "upper-limit multiplier, >= 0"},
      {"mu_*_lo", "lower-limit multiplier (reduced cost), >= 0"},
      {"marginal_demand_cost", "phi*d z/d(1d rhs) + (1-phi)*d z/d(1e rhs), EUR/MWh"},
  };
}

PriceSet extract_prices(const ModelInstance& m, const SolveResult& res) {
  if (res.status != SolveStatus::kOptimal) throw SolverError("extract_prices: solve result is not optimal");
  const LinearProgram& lp = m.lp;
  if (static_cast<int>(res.duals.size()) != lp.num_rows() || static_cast<int>(res.primal.size()) != lp.num_cols()) {
    throw SolverError("extract_prices: result does not match the model");
  }
  const auto& y = res.duals;
  // Reduced costs re-derived from the duals.
  std::vector<double> d = lp.cost();
  for (int r = 0; r < lp.num_rows(); ++r) {
    if (y[r] == 0.0) continue;
    for (const Term& t : lp.row(r)) d[t.col] -= y[r] * t.coef;
  }
  auto red = [&](int j) { return j < 0 ? 0.0 : d[j]; };

  const int N = m.num_nodes, I = m.num_technologies, T = m.timesteps, L = m.num_lines;
  const int Q = static_cast<int>(m.pairs.size());
  PriceSet p;
  p.lambda_pool = zeros2<double>(N, T);
  p.pool_price = zeros2<double>(N, T);
  p.lambda_bilateral = zeros2<double>(Q, T);
  p.lambda_grid = zeros2<double>(Q, T);
  p.lambda_flow = zeros2<double>(L, T);
  p.lambda_system.assign(T, 0.0);
  p.lambda_bilateral_node = zeros2<double>(N, T);
  p.lambda_pool_node = zeros2<double>(N, T);
  p.lambda_co2_node.assign(N, 0.0);
  p.lambda_storage = zeros3<double>(N, I, T);
  p.mu_gen_up = p.mu_gen_lo = p.mu_soc_up = p.mu_soc_lo = zeros3<double>(N, I, T);
  p.mu_out_up = p.mu_out_lo = p.mu_in_up = p.mu_in_lo = zeros3<double>(N, I, T);
  p.mu_k_lo = p.mu_kst_lo = zeros2<double>(N, I);
  p.mu_line_up = p.mu_line_lo = zeros2<double>(L, T);
  p.mu_kline_lo.assign(L, 0.0);
  p.marginal_demand_cost = zeros2<double>(N, T);

  const RowCatalog& rc = m.rows;
  const VariableCatalog& v = m.vars;
  p.lambda_co2 = neg_row(y, rc.r5h);
  for (int n = 0; n < N; ++n) {
    p.lambda_co2_node[n] = neg_row(y, rc.r1k[n]);
    for (int i = 0; i < I; ++i) {
      p.mu_k_lo[n][i] = red(v.k[n][i]);
      p.mu_kst_lo[n][i] = red(v.kst[n][i]);
      for (int t = 0; t < T; ++t) {
        p.mu_gen_up[n][i][t] = neg_row(y, rc.r1f[n][i][t]);
        p.mu_gen_lo[n][i][t] = red(v.p[n][i][t]);
        p.lambda_storage[n][i][t] = neg_row(y, rc.r1g[n][i][t]);
        p.mu_soc_up[n][i][t] = neg_row(y, rc.r1h[n][i][t]);
        p.mu_soc_lo[n][i][t] = red(v.soc[n][i][t]);
        p.mu_out_up[n][i][t] = neg_row(y, rc.r1i[n][i][t]);
        p.mu_out_lo[n][i][t] = red(v.pout[n][i][t]);
        p.mu_in_up[n][i][t] = neg_row(y, rc.r1j[n][i][t]);
        p.mu_in_lo[n][i][t] = red(v.pin[n][i][t]);
      }
    }
    for (int t = 0; t < T; ++t) {
      const double y1d = at_row(y, rc.r1d[n][t]);
      const double y1e = at_row(y, rc.r1e[n][t]);
      p.lambda_bilateral_node[n][t] = -y1d;
      p.lambda_pool_node[n][t] = -y1e;
      // Demand enters 1d with weight phi and 1e with 1 - phi.
      double phi = 0.0;
      for (const Term& term : rc.r1d[n][t] >= 0 ? m.lp.row(rc.r1d[n][t]) : std::span<const Term>{}) {
        if (m.column_symbols[term.col].symbol == Symbol::kGeneration ||
            m.column_symbols[term.col].symbol == Symbol::kDischarge) {
          phi = term.coef;
          break;
        }
      }
      if (rc.r1d[n][t] < 0) phi = 0.0;
      else if (rc.r1e[n][t] < 0) phi = 1.0;
      p.marginal_demand_cost[n][t] = phi * y1d + (1.0 - phi) * y1e;
      p.lambda_pool[n][t] = neg_row(y, rc.r5g[n][t]);
      p.pool_price[n][t] = -p.lambda_pool[n][t];
    }
  }
  for (int q = 0; q < Q; ++q) {
    for (int t = 0; t < T; ++t) {
      p.lambda_bilateral[q][t] = neg_row(y, rc.r5e[q][t]);
      p.lambda_grid[q][t] = neg_row(y, rc.r5f[q][t]);
    }
  }
  for (int l = 0; l < L; ++l) {
    p.mu_kline_lo[l] = red(v.kline[l]);
    for (int t = 0; t < T; ++t) {
      p.lambda_flow[l][t] = neg_row(y, rc.r2b[l][t]);
      p.mu_line_up[l][t] = neg_row(y, rc.r2c_up[l][t]);
      p.mu_line_lo[l][t] = at_row(y, rc.r2c_lo[l][t]);
    }
  }
  for (int t = 0; t < T; ++t) p.lambda_system[t] = neg_row(y, rc.r2d[t]);
  return p;
}

// ---------------------------------------------------------------------------
// KKT

const KktCondition& KktReport::at(const std::string& id) const {
  for (const KktCondition& c : conditions) {
    if (c.id == id) return c;
  }
  throw std::out_of_range("no KKT condition " + id);
}

double KktReport::max_residual() const {
  double r = 0.0;
  for (const KktCondition& c : conditions) r = std::max(r, c.residual);
  return r;
}

namespace {

/// Running sum that remembers the largest term.
class Sum {
 public:
  Sum& operator+=(double v) {
    s_ += v;
    big_ = std::max(big_, std::abs(v));
    return *this;
  }
  double residual() const { return std::abs(s_) / std::max(1.0, big_); }
  double value() const { return s_; }
  double scale() const { return std::max(1.0, big_); }

 private:
  double s_ = 0.0;
  double big_ = 0.0;
};

class Conditions {
 public:
  Conditions() {
    static const char* descriptions[31] = {
        "capacity investment stationarity (k)",
        "generation stationarity (p)",
        "storage energy capacity stationarity (k^storage)",
        "state-of-charge stationarity (soc)",
        "discharge stationarity (p^out)",
        "charge stationarity (p^in)",
        "bilateral trade stationarity (p^bilateral, subgradient of |.|)",
        "emission stationarity (e^CO2)",
        "line investment stationarity (k_l)",
        "bilateral grid use stationarity (z^bilateral)",
        "pool grid use and pool trade stationarity (z^pool, p^pool)",
        "flow stationarity (f)",
        "bilateral balance feasibility",
        "pool balance feasibility",
        "storage dynamics feasibility",
        "emission accounting feasibility",
        "flow definition and system balance feasibility",
        "reciprocity feasibility",
        "bilateral coupling feasibility",
        "pool coupling feasibility",
        "carbon cap feasibility and complementarity",
        "generation lower bound complementarity",
        "generation upper bound complementarity",
        "state-of-charge lower bound complementarity",
        "state-of-charge upper bound complementarity",
        "discharge lower bound complementarity",
        "discharge upper bound complementarity",
        "charge lower bound complementarity",
        "charge upper bound complementarity",
        "flow lower limit complementarity",
        "flow upper limit complementarity",
    };
    for (int k = 0; k < 31; ++k) c_.push_back({fmt::format("A.{}", k + 1), descriptions[k], 0.0, ""});
  }

  void update(int id, double r, const std::function<std::string()>& where) {
    KktCondition& c = c_[id - 1];
    if (r > c.residual || (c.worst_at.empty() && r == c.residual && r > 0.0)) {
      c.residual = r;
      c.worst_at = where();
    }
  }

  /// Sign and product check for multiplier mu >= 0 paired with slack >= 0;
  /// slack_scale is the magnitude of the terms forming the slack.
  void complementarity(int id, double mu, double slack, double slack_scale,
                       const std::function<std::string()>& where) {
    const double product = std::abs(mu * slack) / std::max({1.0, std::abs(mu), std::abs(slack)});
    const double r = std::max({product, std::max(0.0, -mu), std::max(0.0, -slack) / std::max(1.0, slack_scale)});
    update(id, r, where);
  }

  std::vector<KktCondition> take() { return std::move(c_); }

 private:
  std::vector<KktCondition> c_;
};

}  // namespace

KktReport kkt_residuals(const Scenario& s, const PtdfMatrix& ptdf, const ModelInstance& m,
                        const std::vector<double>& x, const PriceSet& P, double tolerance) {
  const int N = m.num_nodes, I = m.num_technologies, T = m.timesteps, L = m.num_lines;
  const int Q = static_cast<int>(m.pairs.size());
  const double h = s.step_hours;
  const VariableCatalog& v = m.vars;
  const auto& cn = m.lp.col_names();
  auto X = [&](int j) { return j < 0 ? 0.0 : x[j]; };
  auto name_of = [&](int j) { return [&cn, j] { return cn[j]; }; };
  Conditions c;
  KktReport report;
  report.tolerance = tolerance;

  for (int n = 0; n < N; ++n) {
    const Node& node = s.nodes[n];
    const double phi = node.bilateral_share;
    for (int i = 0; i < I; ++i) {
      const Technology& tech = s.technologies[i];
      const double K = node.existing_capacity[i];
      const double k = X(v.k[n][i]);
      // A.1
      Sum a1, literal;
      a1 += tech.capex_conversion / tech.annuity_factor + node.capacity_externality[i];
      literal += tech.capex_conversion / tech.annuity_factor + node.capacity_externality[i];
      for (int t = 0; t < T; ++t) {
        if (tech.is_storage()) {
          a1 += -h * (P.mu_out_up[n][i][t] + P.mu_in_up[n][i][t]);
          literal += -(P.mu_out_up[n][i][t] + P.mu_in_up[n][i][t]);
        } else {
          a1 += -node.capacity_factor[i][t] * h * P.mu_gen_up[n][i][t];
          literal += -P.mu_gen_up[n][i][t];
        }
      }
      a1 += -P.mu_k_lo[n][i];
      literal += -P.mu_k_lo[n][i];
      c.update(1, a1.residual(), name_of(v.k[n][i]));
      c.complementarity(1, P.mu_k_lo[n][i], k, 0.0, name_of(v.k[n][i]));
      report.literal_a1_residual = std::max(report.literal_a1_residual, literal.residual());

      if (tech.is_storage()) {
        // A.3
        Sum a3;
        a3 += tech.capex_storage / tech.annuity_factor;
        for (int t = 0; t < T; ++t) a3 += -P.mu_soc_up[n][i][t];
        a3 += -P.mu_kst_lo[n][i];
        c.update(3, a3.residual(), name_of(v.kst[n][i]));
        c.complementarity(3, P.mu_kst_lo[n][i], X(v.kst[n][i]), 0.0, name_of(v.kst[n][i]));
        const double kst = X(v.kst[n][i]);
        for (int t = 0; t < T; ++t) {
          const int next = (t + 1) % T;
          const double lam = P.lambda_storage[n][i][t];
          // A.4
          Sum a4;
          if (next != t) {
            a4 += lam;
            a4 += -P.lambda_storage[n][i][next];
          }
          a4 += P.mu_soc_up[n][i][t];
          a4 += -P.mu_soc_lo[n][i][t];
          c.update(4, a4.residual(), name_of(v.soc[n][i][t]));
          // A.5
          Sum a5;
          a5 += phi * P.lambda_bilateral_node[n][t];
          a5 += (1.0 - phi) * P.lambda_pool_node[n][t];
          a5 += lam / tech.discharge_efficiency;
          a5 += P.mu_out_up[n][i][t];
          a5 += -P.mu_out_lo[n][i][t];
          c.update(5, a5.residual(), name_of(v.pout[n][i][t]));
          // A.6
          Sum a6;
          a6 += -phi * P.lambda_bilateral_node[n][t];
          a6 += -(1.0 - phi) * P.lambda_pool_node[n][t];
          a6 += -tech.charge_efficiency * lam;
          a6 += P.mu_in_up[n][i][t];
          a6 += -P.mu_in_lo[n][i][t];
          c.update(6, a6.residual(), name_of(v.pin[n][i][t]));
          // A.15
          const double soc = X(v.soc[n][i][t]), pin = X(v.pin[n][i][t]), pout = X(v.pout[n][i][t]);
          Sum a15;
          a15 += soc;
          if (T > 1) a15 += -X(v.soc[n][i][(t + T - 1) % T]);
          else a15 += -soc;
          a15 += -tech.charge_efficiency * pin;
          a15 += pout / tech.discharge_efficiency;
          c.update(15, a15.residual(), name_of(v.soc[n][i][t]));
          // A.24 - A.29
          c.complementarity(24, P.mu_soc_lo[n][i][t], soc, 0.0, name_of(v.soc[n][i][t]));
          const double energy_cap = node.existing_storage_capacity[i] + kst;
          c.complementarity(25, P.mu_soc_up[n][i][t], energy_cap - soc, std::max(energy_cap, soc),
                            name_of(v.soc[n][i][t]));
          const double power_cap = h * (K + k);
          c.complementarity(26, P.mu_out_lo[n][i][t], pout, 0.0, name_of(v.pout[n][i][t]));
          c.complementarity(27, P.mu_out_up[n][i][t], power_cap - pout, std::max(power_cap, pout),
                            name_of(v.pout[n][i][t]));
          c.complementarity(28, P.mu_in_lo[n][i][t], pin, 0.0, name_of(v.pin[n][i][t]));
          c.complementarity(29, P.mu_in_up[n][i][t], power_cap - pin, std::max(power_cap, pin),
                            name_of(v.pin[n][i][t]));
        }
      } else {
        for (int t = 0; t < T; ++t) {
          // A.2
          Sum a2;
          a2 += tech.vom;
          a2 += node.production_externality[i];
          a2 += phi * P.lambda_bilateral_node[n][t];
          a2 += (1.0 - phi) * P.lambda_pool_node[n][t];
          a2 += P.mu_gen_up[n][i][t];
          a2 += -P.mu_gen_lo[n][i][t];
          a2 += -tech.emission_rate * P.lambda_co2_node[n];
          c.update(2, a2.residual(), name_of(v.p[n][i][t]));
          const double p = X(v.p[n][i][t]);
          const double cap = node.capacity_factor[i][t] * h * (K + k);
          c.complementarity(22, P.mu_gen_lo[n][i][t], p, 0.0, name_of(v.p[n][i][t]));
          c.complementarity(23, P.mu_gen_up[n][i][t], cap - p, std::max(cap, p), name_of(v.p[n][i][t]));
        }
      }
    }

    // A.8
    Sum a8;
    a8 += P.lambda_co2_node[n];
    a8 += P.lambda_co2;
    c.update(8, a8.residual(), name_of(v.e[n]));

    // A.16
    Sum a16;
    a16 += X(v.e[n]);
    for (int i = 0; i < I; ++i) {
      const Technology& tech = s.technologies[i];
      if (tech.is_storage() || tech.emission_rate == 0.0) continue;
      for (int t = 0; t < T; ++t) a16 += -tech.emission_rate * X(v.p[n][i][t]);
    }
    c.update(16, a16.residual(), name_of(v.e[n]));

    for (int t = 0; t < T; ++t) {
      Sum net;
      net += -node.demand[t];
      for (int i = 0; i < I; ++i) {
        if (s.technologies[i].is_storage()) {
          net += X(v.pout[n][i][t]);
          net += -X(v.pin[n][i][t]);
        } else {
          net += X(v.p[n][i][t]);
        }
      }
      // A.13
      Sum a13;
      a13 += phi * net.value();
      for (int q = 0; q < Q; ++q) {
        if (m.pairs[q].n == n) a13 += -(X(v.pplus[q][t]) - X(v.pminus[q][t]));
      }
      c.update(13, a13.residual() * std::max(1.0, std::abs(phi * net.value())) / std::max(1.0, phi * net.scale()),
               [&, n, t] { return fmt::format("1d[{},{}]", node.id, t); });
      // A.14
      Sum a14;
      a14 += (1.0 - phi) * net.value();
      a14 += -X(v.ppool[n][t]);
      c.update(14, std::abs(a14.value()) / std::max({1.0, (1.0 - phi) * net.scale(), std::abs(X(v.ppool[n][t]))}),
               [&, n, t] { return fmt::format("1e[{},{}]", node.id, t); });
      // A.20
      Sum a20;
      a20 += X(v.ppool[n][t]);
      a20 += -X(v.zpool[n][t]);
      c.update(20, a20.residual(), name_of(v.ppool[n][t]));
      // A.11
      if (!pool_fixed(s, n)) {
        Sum a11;
        a11 += -P.lambda_pool[n][t];
        for (int l = 0; l < L; ++l) a11 += -ptdf(l, n) * P.lambda_flow[l][t];
        a11 += P.lambda_system[t];
        c.update(11, a11.residual(), name_of(v.zpool[n][t]));
        Sum a11b;
        a11b += P.lambda_pool[n][t];
        a11b += -P.lambda_pool_node[n][t];
        c.update(11, a11b.residual(), name_of(v.ppool[n][t]));
      }
    }
  }

  // Trades.
  for (int q = 0; q < Q; ++q) {
    const TradePair& pair = m.pairs[q];
    const double E = s.preferences.at(pair.n, pair.m);
    const bool fixed = bilateral_fixed(s, pair.n, pair.m);
    for (int t = 0; t < T; ++t) {
      const double p = X(v.pplus[q][t]) - X(v.pminus[q][t]);
      if (!fixed) {
        // A.7
        Sum g;
        g += -P.lambda_bilateral_node[pair.n][t];
        g += P.lambda_bilateral[q][t];
        g += P.lambda_grid[q][t];
        double r;
        if (p > 1e-9) r = std::abs(E + g.value()) / std::max(E, g.scale());
        else if (p < -1e-9) r = std::abs(-E + g.value()) / std::max(E, g.scale());
        else r = std::max(0.0, std::abs(g.value()) - E) / std::max(E, g.scale());
        c.update(7, r, name_of(v.pplus[q][t]));
        // A.10
        Sum a10;
        a10 += -P.lambda_grid[q][t];
        for (int l = 0; l < L; ++l) a10 += -ptdf(l, pair.n) * P.lambda_flow[l][t];
        a10 += P.lambda_system[t];
        c.update(10, a10.residual(), name_of(v.zbil[q][t]));
      }
      // A.18
      if (q < pair.mirror) {
        Sum a18;
        a18 += p;
        a18 += X(v.pplus[pair.mirror][t]) - X(v.pminus[pair.mirror][t]);
        c.update(18, a18.residual(), name_of(v.pplus[q][t]));
      }
      // A.19
      Sum a19;
      a19 += p;
      a19 += -X(v.zbil[q][t]);
      c.update(19, a19.residual(), name_of(v.zbil[q][t]));
    }
  }

  // Carbon.
  {
    double total = 0.0, scale = 1.0;
    for (int n = 0; n < N; ++n) {
      total += X(v.e[n]);
      scale = std::max(scale, std::abs(X(v.e[n])));
    }
    auto where = [] { return std::string("5h"); };
    if (std::isinf(s.carbon_cap)) {
      c.update(21, std::abs(P.lambda_co2), where);
    } else if (s.carbon_cap_mode == CarbonCapMode::kEquality) {
      c.update(21, std::abs(total - s.carbon_cap) / std::max(scale, s.carbon_cap), where);
    } else {
      c.complementarity(21, P.lambda_co2, s.carbon_cap - total, std::max(scale, s.carbon_cap), where);
    }
  }

  // Lines.
  for (int l = 0; l < L; ++l) {
    const Line& line = s.lines[l];
    const double kl = X(v.kline[l]);
    Sum a9;
    a9 += line.length_km * line.capex_per_mw_km / line.annuity_factor;
    for (int t = 0; t < T; ++t) a9 += -h * (P.mu_line_up[l][t] + P.mu_line_lo[l][t]);
    a9 += -P.mu_kline_lo[l];
    c.update(9, a9.residual(), name_of(v.kline[l]));
    c.complementarity(9, P.mu_kline_lo[l], kl, 0.0, name_of(v.kline[l]));
    const double cap = h * (line.existing_capacity + kl);
    for (int t = 0; t < T; ++t) {
      const double f = X(v.f[l][t]);
      Sum a12;
      a12 += P.lambda_flow[l][t];
      a12 += P.mu_line_up[l][t];
      a12 += -P.mu_line_lo[l][t];
      c.update(12, a12.residual(), name_of(v.f[l][t]));
      Sum a17;
      a17 += f;
      for (int n = 0; n < N; ++n) {
        double z = X(v.zpool[n][t]);
        for (int q = 0; q < Q; ++q) {
          if (m.pairs[q].n == n) z += X(v.zbil[q][t]);
        }
        a17 += -ptdf(l, n) * z;
      }
      c.update(17, a17.residual(), name_of(v.f[l][t]));
      c.complementarity(30, P.mu_line_lo[l][t], f + cap, std::max(std::abs(f), cap), name_of(v.f[l][t]));
      c.complementarity(31, P.mu_line_up[l][t], cap - f, std::max(std::abs(f), cap), name_of(v.f[l][t]));
    }
  }
  for (int t = 0; t < T; ++t) {
    Sum sys;
    for (int n = 0; n < N; ++n) sys += X(v.zpool[n][t]);
    for (int q = 0; q < Q; ++q) sys += X(v.zbil[q][t]);
    c.update(17, sys.residual(), [t] { return fmt::format("2d[{}]", t); });
  }

  report.conditions = c.take();
  report.pass = report.max_residual() <= tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// Best response

std::vector<ActorGap> best_response_gap(const Scenario& s, const PtdfMatrix& ptdf, const ModelInstance& central,
                                        const std::vector<double>& x, const PriceSet& prices, int threads,
                                        const Tolerances& tol) {
  const ActorPrices ap = prices.actor_prices();
  const int N = static_cast<int>(s.nodes.size());
  std::vector<ActorGap> gaps(N + 1);
  auto run = [&](int actor) {
    const ModelInstance sub = actor < N ? build_node_problem(s, actor, ap) : build_tso_problem(s, ptdf, ap);
    std::vector<double> slice(sub.lp.num_cols());
    for (int j = 0; j < sub.lp.num_cols(); ++j) {
      const int cj = central.column(sub.column_symbols[j]);
      if (cj < 0) throw std::logic_error("actor variable missing from the centralized model");
      slice[j] = x[cj];
    }
    ActorGap g;
    g.actor = actor < N ? s.nodes[actor].id : "TSO";
    g.slice_cost = sub.lp.objective(slice);
    const SolveResult res = solve(sub.lp, tol);
    g.status = res.status;
    if (res.status == SolveStatus::kOptimal) {
      g.optimal_cost = res.objective_value;
      g.gap = (g.slice_cost - g.optimal_cost) / (1.0 + std::abs(g.optimal_cost));
    } else {
      g.optimal_cost = res.status == SolveStatus::kUnbounded ? -std::numeric_limits<double>::infinity()
                                                             : std::numeric_limits<double>::quiet_NaN();
      g.gap = std::numeric_limits<double>::infinity();
    }
    gaps[actor] = g;
  };
  const int jobs = N + 1;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, jobs);
  if (workers == 1) {
    for (int a = 0; a < jobs; ++a) run(a);
    return gaps;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int a = next++; a < jobs; a = next++) run(a);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return gaps;
}

// ---------------------------------------------------------------------------
// Ledger

Ledger budget_balance(const Scenario& s, const ModelInstance& m, const std::vector<double>& x, const PriceSet& P,
                      double objective, double tolerance) {
  const int N = m.num_nodes, I = m.num_technologies, T = m.timesteps, L = m.num_lines;
  const int Q = static_cast<int>(m.pairs.size());
  const VariableCatalog& v = m.vars;
  auto X = [&](int j) { return j < 0 ? 0.0 : x[j]; };
  Ledger led;
  led.objective = objective;
  led.carbon_cap = s.carbon_cap;
  for (int n = 0; n < N; ++n) {
    const Node& node = s.nodes[n];
    NodeAccount a;
    a.node = node.id;
    for (int i = 0; i < I; ++i) {
      const Technology& tech = s.technologies[i];
      a.investment += tech.capex_conversion / tech.annuity_factor * X(v.k[n][i]);
      a.externality += node.capacity_externality[i] * X(v.k[n][i]);
      if (tech.is_storage()) {
        a.investment += tech.capex_storage / tech.annuity_factor * X(v.kst[n][i]);
        continue;
      }
      for (int t = 0; t < T; ++t) {
        a.operating += tech.vom * X(v.p[n][i][t]);
        a.externality += node.production_externality[i] * X(v.p[n][i][t]);
      }
    }
    for (int q = 0; q < Q; ++q) {
      if (m.pairs[q].n != n) continue;
      const double E = s.preferences.at(n, m.pairs[q].m);
      for (int t = 0; t < T; ++t) {
        a.externality += E * (X(v.pplus[q][t]) + X(v.pminus[q][t]));
        a.bilateral_payment +=
            (P.lambda_bilateral[q][t] + P.lambda_grid[q][t]) * (X(v.pplus[q][t]) - X(v.pminus[q][t]));
      }
    }
    for (int t = 0; t < T; ++t) {
      a.pool_payment += P.lambda_pool[n][t] * X(v.ppool[n][t]);
      a.demand += node.demand[t];
    }
    a.carbon_payment = P.lambda_co2 * X(v.e[n]);
    a.total = a.investment + a.operating + a.externality + a.bilateral_payment + a.pool_payment + a.carbon_payment;
    a.zero_demand = a.demand <= 0.0;
    a.average_cost = a.zero_demand ? a.total : a.total / a.demand;
    led.total_emissions += X(v.e[n]);
    led.nodes.push_back(a);
  }
  for (int l = 0; l < L; ++l) {
    const Line& line = s.lines[l];
    led.tso_investment += line.length_km * line.capex_per_mw_km / line.annuity_factor * X(v.kline[l]);
  }
  for (int t = 0; t < T; ++t) {
    for (int q = 0; q < Q; ++q) led.tso_congestion_income += P.lambda_grid[q][t] * X(v.zbil[q][t]);
    for (int n = 0; n < N; ++n) led.tso_congestion_income += P.lambda_pool[n][t] * X(v.zpool[n][t]);
  }
  led.tso_net_cost = led.tso_investment - led.tso_congestion_income;
  led.government_revenue = P.lambda_co2 * led.total_emissions;

  // Operator: reciprocity and coupling payments cancel pairwise.
  double imbalance = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int q = 0; q < Q; ++q) {
      const int mir = m.pairs[q].mirror;
      const double p = X(v.pplus[q][t]) - X(v.pminus[q][t]);
      if (q < mir) imbalance += P.lambda_bilateral[q][t] * (p + X(v.pplus[mir][t]) - X(v.pminus[mir][t]));
      imbalance += P.lambda_grid[q][t] * (p - X(v.zbil[q][t]));
    }
    for (int n = 0; n < N; ++n) imbalance += P.lambda_pool[n][t] * (X(v.ppool[n][t]) - X(v.zpool[n][t]));
  }
  led.operator_imbalance = std::abs(imbalance);

  const double cap_scale = std::max(1.0, std::isinf(s.carbon_cap) ? led.total_emissions : s.carbon_cap);
  led.cap_binding = std::isfinite(s.carbon_cap) &&
                    (s.carbon_cap_mode == CarbonCapMode::kEquality ||
                     s.carbon_cap - led.total_emissions <= tolerance * cap_scale);
  led.carbon_revenue_error = led.cap_binding ? std::abs(led.government_revenue - P.lambda_co2 * s.carbon_cap)
                                             : std::abs(led.government_revenue);

  double node_sum = 0.0;
  for (const NodeAccount& a : led.nodes) node_sum += a.total;
  led.reconciliation_error = std::abs(node_sum + led.tso_net_cost - led.government_revenue - objective);
  const double scale = std::max(1.0, std::abs(objective));
  led.ok = led.operator_imbalance <= tolerance * scale && led.carbon_revenue_error <= tolerance * scale &&
           led.reconciliation_error <= tolerance * scale;
  return led;
}

// ---------------------------------------------------------------------------
// Output

void write_prices_csv(const Scenario& s, const ModelInstance& m, const PriceSet& P,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::map<std::string, std::string> note;
  for (const auto& [family, text] : price_sign_table()) note[family] = text;
  auto row = [&](const std::string& family, const std::string& idx, double value) {
    const std::string& text = note.count(family) ? note[family] : note[family.substr(0, 3) == "mu_" ? (family.ends_with("_up") ? "mu_*_up" : "mu_*_lo") : family];
    out << family << ',' << idx << ',' << format_double(value) << ",\"" << text << "\"\n";
  };
  out << "family,indices,value,convention\n";
  const int N = m.num_nodes, I = m.num_technologies, T = m.timesteps, L = m.num_lines;
  auto nt = [&](int n, int t) { return fmt::format("{}:{}", s.nodes[n].id, t); };
  auto qt = [&](int q, int t) {
    return fmt::format("{}:{}:{}", s.nodes[m.pairs[q].n].id, s.nodes[m.pairs[q].m].id, t);
  };
  auto lt = [&](int l, int t) { return fmt::format("{}:{}", s.lines[l].id, t); };
  auto nit = [&](int n, int i, int t) { return fmt::format("{}:{}:{}", s.nodes[n].id, s.technologies[i].id, t); };
  row("lambda_co2", "", P.lambda_co2);
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) row("pool_price", nt(n, t), P.pool_price[n][t]);
  }
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) row("lambda_pool", nt(n, t), P.lambda_pool[n][t]);
  }
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) row("marginal_demand_cost", nt(n, t), P.marginal_demand_cost[n][t]);
  }
  for (std::size_t q = 0; q < m.pairs.size(); ++q) {
    for (int t = 0; t < T; ++t) row("lambda_bilateral", qt(q, t), P.lambda_bilateral[q][t]);
  }
  for (std::size_t q = 0; q < m.pairs.size(); ++q) {
    for (int t = 0; t < T; ++t) row("lambda_grid", qt(q, t), P.lambda_grid[q][t]);
  }
  for (int l = 0; l < L; ++l) {
    for (int t = 0; t < T; ++t) row("lambda_flow", lt(l, t), P.lambda_flow[l][t]);
  }
  for (int t = 0; t < T; ++t) row("lambda_system", std::to_string(t), P.lambda_system[t]);
  for (int n = 0; n < N; ++n) {
    row("lambda_co2_node", s.nodes[n].id, P.lambda_co2_node[n]);
    for (int t = 0; t < T; ++t) {
      row("lambda_bilateral_node", nt(n, t), P.lambda_bilateral_node[n][t]);
      row("lambda_pool_node", nt(n, t), P.lambda_pool_node[n][t]);
    }
  }
  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < I; ++i) {
      row("mu_k_lo", fmt::format("{}:{}", s.nodes[n].id, s.technologies[i].id), P.mu_k_lo[n][i]);
      const bool storage = s.technologies[i].is_storage();
      if (storage) row("mu_kst_lo", fmt::format("{}:{}", s.nodes[n].id, s.technologies[i].id), P.mu_kst_lo[n][i]);
      for (int t = 0; t < T; ++t) {
        if (storage) {
          row("lambda_storage", nit(n, i, t), P.lambda_storage[n][i][t]);
          row("mu_soc_up", nit(n, i, t), P.mu_soc_up[n][i][t]);
          row("mu_soc_lo", nit(n, i, t), P.mu_soc_lo[n][i][t]);
          row("mu_out_up", nit(n, i, t), P.mu_out_up[n][i][t]);
          row("mu_out_lo", nit(n, i, t), P.mu_out_lo[n][i][t]);
          row("mu_in_up", nit(n, i, t), P.mu_in_up[n][i][t]);
          row("mu_in_lo", nit(n, i, t), P.mu_in_lo[n][i][t]);
        } else {
          row("mu_gen_up", nit(n, i, t), P.mu_gen_up[n][i][t]);
          row("mu_gen_lo", nit(n, i, t), P.mu_gen_lo[n][i][t]);
        }
      }
    }
  }
  for (int l = 0; l < L; ++l) {
    row("mu_kline_lo", s.lines[l].id, P.mu_kline_lo[l]);
    for (int t = 0; t < T; ++t) {
      row("mu_line_up", lt(l, t), P.mu_line_up[l][t]);
      row("mu_line_lo", lt(l, t), P.mu_line_lo[l][t]);
    }
  }
}

void write_kkt_json(const KktReport& report, const std::vector<ActorGap>& gaps, const std::filesystem::path& path) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["tolerance"] = report.tolerance;
  j["pass"] = report.pass;
  ordered_json conditions = ordered_json::object();
  for (const KktCondition& c : report.conditions) {
    conditions[c.id] = {{"residual", c.residual}, {"description", c.description}, {"worst_at", c.worst_at}};
  }
  j["conditions"] = conditions;
  j["literal_A.1_residual"] = report.literal_a1_residual;
  ordered_json actors = ordered_json::array();
  for (const ActorGap& g : gaps) {
    actors.push_back({{"actor", g.actor},
                      {"slice_cost", g.slice_cost},
                      {"optimal_cost", std::isfinite(g.optimal_cost) ? ordered_json(g.optimal_cost) : ordered_json()},
                      {"gap", std::isfinite(g.gap) ? ordered_json(g.gap) : ordered_json()},
                      {"status", to_string(g.status)}});
  }
  j["best_response"] = actors;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_ledger_csv(const Ledger& led, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "account,investment,operating,externality,bilateral_payment,pool_payment,carbon_payment,total,demand_mwh,"
         "average_cost\n";
  auto f = [](double v) { return format_double(v); };
  for (const NodeAccount& a : led.nodes) {
    out << "node:" << a.node << ',' << f(a.investment) << ',' << f(a.operating) << ',' << f(a.externality) << ','
        << f(a.bilateral_payment) << ',' << f(a.pool_payment) << ',' << f(a.carbon_payment) << ',' << f(a.total)
        << ',' << f(a.demand) << ',' << (a.zero_demand ? std::string("") : f(a.average_cost)) << '\n';
  }
  out << "tso," << f(led.tso_investment) << ",0,0," << f(-led.tso_congestion_income) << ",0,0,"
      << f(led.tso_net_cost) << ",,\n";
  out << "government,0,0,0,0,0," << f(-led.government_revenue) << ',' << f(-led.government_revenue) << ",,\n";
  out << "# objective," << f(led.objective) << '\n';
  out << "# reconciliation_error," << f(led.reconciliation_error) << '\n';
  out << "# operator_imbalance," << f(led.operator_imbalance) << '\n';
  out << "# carbon_revenue_error," << f(led.carbon_revenue_error) << '\n';
  out << "# cap_binding," << (led.cap_binding ? 1 : 0) << '\n';
}

}  // namespace mixmarket
