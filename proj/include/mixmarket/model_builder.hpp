#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixmarket/datamodel.hpp"
#include "mixmarket/linear_program.hpp"
#include "mixmarket/network.hpp"

namespace mixmarket {

enum class Symbol {
  kCapacity,         // k_{i,n}
  kStorageCapacity,  // k^storage_{i,n}
  kGeneration,       // p_{i,n,t}
  kCharge,           // p^in_{i,n,t}
  kDischarge,        // p^out_{i,n,t}
  kStateOfCharge,    // soc_{i,n,t}
  kPool,             // p^pool_{n,t}
  kEmission,         // e^CO2_n
  kBilateralPlus,    // p^bilateral+_{n,m,t}
  kBilateralMinus,   // p^bilateral-_{n,m,t}
  kGridBilateral,    // z^bilateral_{n,m,t}
  kLineCapacity,     // k_l
  kGridPool,         // z^pool_{n,t}
  kFlow,             // f_{l,t}
};

enum class Tag { k1d, k1e, k1f, k1g, k1h, k1i, k1j, k1k, k2b, k2c, k2d, k5e, k5f, k5g, k5h, kAbsLink };

const char* to_string(Symbol s);
const char* to_string(Tag t);

/// Indices are (node or line or pair, technology, step); -1 when unused.
struct SymbolRef {
  Symbol symbol;
  int a = -1;
  int b = -1;
  int c = -1;
};

struct RowRef {
  Tag tag;
  int a = -1;
  int b = -1;
  int c = -1;
};

template <class T>
using Vec2 = std::vector<std::vector<T>>;
template <class T>
using Vec3 = std::vector<std::vector<std::vector<T>>>;

/// LP column of every decision symbol, -1 where the symbol does not exist
/// (storage families on generation technologies and vice versa, or a family
/// outside the sub-problem being built).
struct VariableCatalog {
  Vec2<int> k, kst;                // [n][i]
  Vec3<int> p, pin, pout, soc;     // [n][i][t]
  Vec2<int> ppool;                 // [n][t]
  std::vector<int> e;              // [n]
  Vec2<int> pplus, pminus, zbil;   // [q][t], q an ordered trade pair
  std::vector<int> kline;          // [l]
  Vec2<int> zpool;                 // [n][t]
  Vec2<int> f;                     // [l][t]
};

struct RowCatalog {
  Vec2<int> r1d, r1e;                      // [n][t]
  Vec3<int> r1f, r1g, r1h, r1i, r1j;       // [n][i][t]
  std::vector<int> r1k;                    // [n]
  Vec2<int> r2b, r2c_up, r2c_lo;           // [l][t]
  std::vector<int> r2d;                    // [t]
  Vec2<int> r5e, r5f;                      // [q][t]; r5e shared by q and its mirror
  Vec2<int> r5g;                           // [n][t]
  int r5h = -1;
};

/// Ordered neighbor pair (n, m) with m in omega_n.
struct TradePair {
  int n = 0;
  int m = 0;
  int mirror = 0;  // index of (m, n)
};

struct ModelInstance {
  LinearProgram lp;
  VariableCatalog vars;
  RowCatalog rows;
  std::vector<TradePair> pairs;
  Vec2<int> pair_index;  // [n][m] -> q or -1
  std::vector<SymbolRef> column_symbols;
  std::vector<RowRef> row_tags;
  int num_nodes = 0;
  int num_technologies = 0;
  int num_lines = 0;
  int timesteps = 0;

  /// Column of a symbol, or -1.
  int column(const SymbolRef& ref) const;
  /// Row ids carrying a given tag.
  std::vector<int> rows_with_tag(Tag tag) const;
};

/// Trade pairs of the communication graph, in (n, m) lexicographic order.
std::vector<TradePair> trade_pairs(const Scenario& scenario);

/// True when the bilateral variables of pair (n, m) are pinned to zero.
bool bilateral_fixed(const Scenario& scenario, int n, int m);
/// True when the pool variables of node n are pinned to zero.
bool pool_fixed(const Scenario& scenario, int n);

struct AbsSplit {
  int plus = -1;
  int minus = -1;
};

/// Adds x+ and x- >= 0 with cost coefficient each, so that coefficient*|x|
/// is represented by coefficient*(x+ + x-) with x = x+ - x-.
AbsSplit linearize_abs(LinearProgram& lp, const std::string& name, double coefficient, bool fixed_zero = false);

/// Centralized planning LP of the mixed-market model.
ModelInstance build_centralized(const Scenario& scenario, const PtdfMatrix& ptdf);

/// Prices seen by the individual actors, in the sign of their own objectives:
/// a node pays trade_price[q][t] per MWh of p^bilateral, pool_price[n][t] per
/// MWh of p^pool and carbon_price per ton; the TSO is paid grid_price[q][t]
/// per MWh of z^bilateral and pool_price[n][t] per MWh of z^pool.
struct ActorPrices {
  Vec2<double> trade_price;  // [q][t]   lambda^bilateral_{n,m,t} + lambda^grid_{n,m,t}
  Vec2<double> grid_price;   // [q][t]   lambda^grid_{n,m,t}
  Vec2<double> pool_price;   // [n][t]   lambda^pool_{n,t}
  double carbon_price = 0.0; // lambda^CO2
};

/// Node n's own planning problem at fixed prices. Only node n's variables and
/// rows are present in the catalog.
ModelInstance build_node_problem(const Scenario& scenario, int n, const ActorPrices& prices);
/// The TSO's problem at fixed prices.
ModelInstance build_tso_problem(const Scenario& scenario, const PtdfMatrix& ptdf, const ActorPrices& prices);

/// Number of columns and rows build_centralized produces, from closed-form
/// counts over the index sets.
struct ModelSize {
  int columns = 0;
  int rows = 0;
};
ModelSize expected_size(const Scenario& scenario);

struct MpsOptions {
  int max_name_length = 8;
  std::string problem_name = "MIXMKT";
};

/// Fixed-format MPS. Names are shortened symbolic names, made unique by
/// suffixing; `names_path`, if given, receives a CSV mapping each MPS name
/// back to the full symbolic name.
void export_mps(const LinearProgram& lp, const std::filesystem::path& path, const MpsOptions& options = {},
                const std::filesystem::path& names_path = {});

/// MPS names export_mps assigns to columns and rows.
struct MpsNames {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
};
MpsNames mps_names(const LinearProgram& lp, const MpsOptions& options = {});

/// Reads fixed or free MPS (whitespace-separated fields; names must not
/// contain spaces).
LinearProgram read_mps(const std::filesystem::path& path);

/// Human-readable dump: one constraint per line with its tag.
void write_lp_dump(const ModelInstance& model, std::ostream& out);

}  // namespace mixmarket
