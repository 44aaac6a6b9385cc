#include "mixmarket/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "mixmarket/csv.hpp"

namespace mixmarket {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

enum class VarState : unsigned char { kBasic, kLower, kUpper, kFree };

// Product-form update: column `pos` of the eta matrix holds `val` at `idx`
// (off-diagonal) and `pivot_inv` on the diagonal.
struct Eta {
  int pos = 0;
  double pivot_inv = 1.0;
  std::vector<int> idx;
  std::vector<double> val;
};

constexpr int kRefactorInterval = 80;
constexpr double kPivotTol = 1e-9;
constexpr double kZeroTol = 1e-12;
constexpr long kStallLimit = 60;

// Computational form: structural columns 0..n-1, then one logical column per
// row with coefficient -1, so A x - s = 0 and s carries the row bounds.
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const Tolerances& tol)
      : lp_(lp), tol_(tol), A_(lp.column_matrix()) {
    m_ = lp.num_rows();
    n_ = lp.num_cols();
    total_ = n_ + m_;
    lb_.resize(total_);
    ub_.resize(total_);
    cost_.assign(total_, 0.0);
    weight_.assign(total_, 1.0);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = lp.col_lower()[j];
      ub_[j] = lp.col_upper()[j];
      cost_[j] = lp.cost()[j];
      double norm = 1.0;
      for (int k = A_.start[j]; k < A_.start[j + 1]; ++k) {
        norm += A_.value[k] * A_.value[k];
      }
      weight_[j] = norm;
    }
    for (int r = 0; r < m_; ++r) {
      lb_[n_ + r] = lp.row_lower()[r];
      ub_[n_ + r] = lp.row_upper()[r];
      weight_[n_ + r] = 2.0;
    }
  }

  SolveResult run() {
    initialize();
    SolveResult result;
    long iter = 0;
    int since_refactor = 0;
    long stall = 0;
    bool bland = false;
    std::vector<double> work(m_), alpha(m_);
    std::vector<char> rejected(total_, 0);
    bool any_rejected = false;

    while (true) {
      if (iter >= tol_.max_iterations) {
        result.status = SolveStatus::kIterationLimit;
        break;
      }
      if (since_refactor >= kRefactorInterval) {
        refactor();
        since_refactor = 0;
        if (any_rejected) {
          std::fill(rejected.begin(), rejected.end(), 0);
          any_rejected = false;
        }
      }

      const bool phase_one = fill_phase_costs(work);
      btran(work);  // work now holds row multipliers pi
      pi_ = work;

      // Pricing.
      int entering = -1;
      int direction = 0;
      double best = 0.0;
      double entering_d = 0.0;
      for (int j = 0; j < total_; ++j) {
        const VarState s = state_[j];
        if (s == VarState::kBasic || lb_[j] == ub_[j] || rejected[j]) continue;
        const double d = (phase_one ? 0.0 : cost_[j]) - column_dot(j, work);
        int dir = 0;
        if (s == VarState::kLower && d < -tol_.optimality) dir = 1;
        else if (s == VarState::kUpper && d > tol_.optimality) dir = -1;
        else if (s == VarState::kFree && std::abs(d) > tol_.optimality) dir = d < 0 ? 1 : -1;
        if (dir == 0) continue;
        if (bland) {
          entering = j;
          direction = dir;
          entering_d = d;
          break;
        }
        const double score = d * d / weight_[j];
        if (score > best) {
          best = score;
          entering = j;
          direction = dir;
          entering_d = d;
        }
      }

      if (entering < 0) {
        if (since_refactor > 0 || any_rejected) {
          refactor();
          since_refactor = 0;
          std::fill(rejected.begin(), rejected.end(), 0);
          any_rejected = false;
          continue;
        }
        result.status = phase_one ? SolveStatus::kInfeasible : SolveStatus::kOptimal;
        if (phase_one) result.farkas = pi_;
        break;
      }

      load_column(entering, alpha);
      ftran(alpha);

      // Ratio test (Harris two-pass; textbook min-ratio under Bland's rule).
      const double range = ub_[entering] - lb_[entering];
      double theta_max = kInf;
      for (int i = 0; i < m_; ++i) {
        const double a = alpha[i];
        if (std::abs(a) < kPivotTol) continue;
        const double rate = -direction * a;
        const double lim = step_limit(head_[i], rate, bland ? 0.0 : tol_.feasibility * 0.1);
        theta_max = std::min(theta_max, lim);
      }
      int leave_pos = -1;
      double theta = kInf;
      double best_pivot = 0.0;
      if (theta_max < kInf) {
        for (int i = 0; i < m_; ++i) {
          const double a = alpha[i];
          if (std::abs(a) < kPivotTol) continue;
          const double rate = -direction * a;
          const double lim = step_limit(head_[i], rate, 0.0);
          if (lim > theta_max) continue;
          if (bland) {
            if (leave_pos < 0 || lim < theta ||
                (lim == theta && head_[i] < head_[leave_pos])) {
              leave_pos = i;
              theta = lim;
            }
          } else if (std::abs(a) > best_pivot) {
            best_pivot = std::abs(a);
            leave_pos = i;
            theta = lim;
          }
        }
      }

      const bool flip = range < kInf && (leave_pos < 0 || range <= theta);
      if (!flip && leave_pos < 0) {
        if (!phase_one) {
          result.status = SolveStatus::kUnbounded;
          std::vector<double> ray(n_, 0.0);
          if (entering < n_) ray[entering] = direction;
          for (int i = 0; i < m_; ++i) {
            if (head_[i] < n_) ray[head_[i]] = -direction * alpha[i];
          }
          result.ray = std::move(ray);
          break;
        }
        rejected[entering] = 1;
        any_rejected = true;
        continue;
      }
      if (flip) theta = range;
      theta = std::max(theta, 0.0);

      // Progress tracking for the anti-cycling fallback.
      const double improvement = theta * std::abs(entering_d);
      if (improvement > 1e-11 * (1.0 + std::abs(objective_estimate_))) {
        stall = 0;
        bland = false;
      } else if (++stall > kStallLimit) {
        bland = true;
      }
      objective_estimate_ -= improvement;

      const bool leave_lower =
          !flip && blocks_at_lower(head_[leave_pos], -direction * alpha[leave_pos]);
      for (int i = 0; i < m_; ++i) {
        if (alpha[i] != 0.0) x_[head_[i]] -= direction * alpha[i] * theta;
      }
      if (flip) {
        x_[entering] = direction > 0 ? ub_[entering] : lb_[entering];
        state_[entering] = direction > 0 ? VarState::kUpper : VarState::kLower;
      } else {
        x_[entering] += direction * theta;
        const int leaving = head_[leave_pos];
        settle_leaving(leaving, leave_lower);
        head_[leave_pos] = entering;
        where_[entering] = leave_pos;
        where_[leaving] = -1;
        state_[entering] = VarState::kBasic;
        push_eta(leave_pos, alpha);
        ++since_refactor;
      }
      ++iter;
    }

    result.iterations = iter;
    if (result.status == SolveStatus::kOptimal) {
      finish(result);
    } else {
      result.primal.assign(x_.begin(), x_.begin() + n_);
    }
    return result;
  }

 private:
  void initialize() {
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::kFree);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lb_[j])) {
        x_[j] = lb_[j];
        state_[j] = VarState::kLower;
      } else if (std::isfinite(ub_[j])) {
        x_[j] = ub_[j];
        state_[j] = VarState::kUpper;
      }
    }
    head_.resize(m_);
    where_.assign(total_, -1);
    for (int r = 0; r < m_; ++r) {
      head_[r] = n_ + r;
      where_[n_ + r] = r;
      state_[n_ + r] = VarState::kBasic;
    }
    if (!factorize()) throw SolverError("initial basis is singular");
    good_head_ = head_;
    compute_basic_values();
  }

  bool factorize() {
    etas_.clear();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(m_) * 2);
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (j >= n_) {
        triplets.emplace_back(j - n_, i, -1.0);
      } else {
        for (int k = A_.start[j]; k < A_.start[j + 1]; ++k) {
          triplets.emplace_back(A_.index[k], i, A_.value[k]);
        }
      }
    }
    Eigen::SparseMatrix<double> basis(m_, m_);
    basis.setFromTriplets(triplets.begin(), triplets.end());
    basis.makeCompressed();
    if (m_ == 0) return true;
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    return lu_.info() == Eigen::Success;
  }

  // Refactor the current basis; on singularity fall back to the last basis
  // that factored cleanly, moving displaced variables to a bound.
  void refactor() {
    if (!factorize()) {
      std::vector<char> keep(total_, 0);
      for (int j : good_head_) keep[j] = 1;
      for (int i = 0; i < m_; ++i) {
        const int j = head_[i];
        if (!keep[j]) {
          where_[j] = -1;
          if (std::isfinite(lb_[j]) && (!std::isfinite(ub_[j]) ||
                                         std::abs(x_[j] - lb_[j]) <= std::abs(x_[j] - ub_[j]))) {
            x_[j] = lb_[j];
            state_[j] = VarState::kLower;
          } else if (std::isfinite(ub_[j])) {
            x_[j] = ub_[j];
            state_[j] = VarState::kUpper;
          } else {
            x_[j] = 0.0;
            state_[j] = VarState::kFree;
          }
        }
      }
      head_ = good_head_;
      for (int i = 0; i < m_; ++i) {
        where_[head_[i]] = i;
        state_[head_[i]] = VarState::kBasic;
      }
      if (!factorize()) throw SolverError("basis factorization failed");
    }
    good_head_ = head_;
    compute_basic_values();
  }

  void compute_basic_values() {
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
      if (j >= n_) {
        rhs[j - n_] += x_[j];
      } else {
        for (int k = A_.start[j]; k < A_.start[j + 1]; ++k) {
          rhs[A_.index[k]] -= A_.value[k] * x_[j];
        }
      }
    }
    ftran(rhs);
    for (int i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
  }

  void load_column(int j, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (j >= n_) {
      out[j - n_] = -1.0;
    } else {
      for (int k = A_.start[j]; k < A_.start[j + 1]; ++k) out[A_.index[k]] = A_.value[k];
    }
  }

  double column_dot(int j, const std::vector<double>& y) const {
    if (j >= n_) return -y[j - n_];
    double sum = 0.0;
    for (int k = A_.start[j]; k < A_.start[j + 1]; ++k) sum += A_.value[k] * y[A_.index[k]];
    return sum;
  }

  void ftran(std::vector<double>& v) const {
    if (m_ == 0) return;
    Eigen::Map<Eigen::VectorXd> vec(v.data(), m_);
    Eigen::VectorXd sol = lu_.solve(vec);
    vec = sol;
    for (const Eta& e : etas_) {
      const double vr = v[e.pos];
      if (vr == 0.0) continue;
      v[e.pos] = vr * e.pivot_inv;
      for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] += e.val[k] * vr;
    }
  }

  void btran(std::vector<double>& w) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double sum = it->pivot_inv * w[it->pos];
      for (std::size_t k = 0; k < it->idx.size(); ++k) sum += it->val[k] * w[it->idx[k]];
      w[it->pos] = sum;
    }
    Eigen::Map<Eigen::VectorXd> vec(w.data(), m_);
    Eigen::VectorXd sol = lu_.transpose().solve(vec);
    vec = sol;
  }

  void push_eta(int pos, const std::vector<double>& alpha) {
    Eta e;
    e.pos = pos;
    const double pivot = alpha[pos];
    e.pivot_inv = 1.0 / pivot;
    for (int i = 0; i < m_; ++i) {
      if (i == pos || std::abs(alpha[i]) <= kZeroTol) continue;
      e.idx.push_back(i);
      e.val.push_back(-alpha[i] / pivot);
    }
    etas_.push_back(std::move(e));
  }

  // Fills basic costs for the current phase; returns true in phase one.
  bool fill_phase_costs(std::vector<double>& cb) {
    bool infeasible = false;
    const double ptol = tol_.feasibility * 0.1;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (x_[j] < lb_[j] - ptol) {
        cb[i] = -1.0;
        infeasible = true;
      } else if (x_[j] > ub_[j] + ptol) {
        cb[i] = 1.0;
        infeasible = true;
      } else {
        cb[i] = 0.0;
      }
    }
    if (!infeasible) {
      for (int i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
      if (was_phase_one_) objective_estimate_ = current_objective();
    } else if (!was_phase_one_) {
      objective_estimate_ = 0.0;
    }
    was_phase_one_ = infeasible;
    return infeasible;
  }

  double current_objective() const {
    double sum = 0.0;
    for (int j = 0; j < n_; ++j) sum += cost_[j] * x_[j];
    return sum;
  }

  // Largest step before basic variable j, moving at `rate`, hits the bound it
  // is heading to. Infeasible variables stop when they reach feasibility.
  double step_limit(int j, double rate, double relax) const {
    const double xj = x_[j];
    const double ptol = tol_.feasibility * 0.1;
    if (xj < lb_[j] - ptol) {
      return rate > 0 ? std::max(0.0, (lb_[j] + relax - xj) / rate) : kInf;
    }
    if (xj > ub_[j] + ptol) {
      return rate < 0 ? std::max(0.0, (xj - ub_[j] + relax) / -rate) : kInf;
    }
    if (rate < 0) {
      return std::isfinite(lb_[j]) ? std::max(0.0, (xj - lb_[j] + relax) / -rate) : kInf;
    }
    return std::isfinite(ub_[j]) ? std::max(0.0, (ub_[j] + relax - xj) / rate) : kInf;
  }

  // Bound that basic variable j reaches when it blocks a step at `rate`.
  bool blocks_at_lower(int j, double rate) const {
    const double ptol = tol_.feasibility * 0.1;
    if (x_[j] < lb_[j] - ptol) return true;
    if (x_[j] > ub_[j] + ptol) return false;
    return rate < 0;
  }

  void settle_leaving(int j, bool to_lower) {
    if (lb_[j] == ub_[j]) to_lower = true;
    x_[j] = to_lower ? lb_[j] : ub_[j];
    state_[j] = to_lower ? VarState::kLower : VarState::kUpper;
  }

  void finish(SolveResult& result) {
    std::vector<double> cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
    btran(cb);
    result.duals.assign(m_, 0.0);
    for (int r = 0; r < m_; ++r) {
      result.duals[r] = state_[n_ + r] == VarState::kBasic ? 0.0 : cb[r];
    }
    result.primal.assign(x_.begin(), x_.begin() + n_);
    result.reduced_costs.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] != VarState::kBasic) {
        result.reduced_costs[j] = cost_[j] - column_dot(j, result.duals);
      }
    }
    result.row_activity = lp_.row_activity(result.primal);
    result.objective_value = lp_.objective(result.primal);
  }

  const LinearProgram& lp_;
  Tolerances tol_;
  ColumnMatrix A_;
  int m_ = 0, n_ = 0, total_ = 0;
  std::vector<double> lb_, ub_, cost_, weight_;
  std::vector<double> x_, pi_;
  std::vector<VarState> state_;
  std::vector<int> head_, where_, good_head_;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  double objective_estimate_ = 0.0;
  bool was_phase_one_ = true;
};

}  // namespace

SolveResult solve(const LinearProgram& lp, const Tolerances& tol) {
  if (tol.feasibility <= 0 || tol.gap <= 0 || tol.optimality <= 0) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  Simplex simplex(lp, tol);
  return simplex.run();
}

CertificateReport verify_certificate(const LinearProgram& lp,
                                     const SolveResult& result) {
  CertificateReport rep;
  const auto& x = result.primal;
  const auto& y = result.duals;
  const int n = lp.num_cols();
  const int m = lp.num_rows();
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != m) {
    throw std::invalid_argument("solution does not match the model dimensions");
  }
  const auto activity = lp.row_activity(x);

  auto at_bound = [](double v, double bound) {
    return std::isfinite(bound) && std::abs(v - bound) <= 1e-9 * (1.0 + std::abs(bound));
  };

  // Primal feasibility.
  for (int r = 0; r < m; ++r) {
    const double viol = std::max({0.0, lp.row_lower()[r] - activity[r],
                                  activity[r] - lp.row_upper()[r]});
    if (viol > rep.primal_residual) {
      rep.primal_residual = viol;
      rep.worst_primal_row = r;
    }
  }
  for (int j = 0; j < n; ++j) {
    const double viol = std::max({0.0, lp.col_lower()[j] - x[j], x[j] - lp.col_upper()[j]});
    rep.primal_residual = std::max(rep.primal_residual, viol);
  }

  // Reduced costs from the row duals alone.
  std::vector<double> d(lp.cost());
  for (int r = 0; r < m; ++r) {
    if (y[r] == 0.0) continue;
    for (const Term& t : lp.row(r)) d[t.col] -= y[r] * t.coef;
  }

  double dual_obj = lp.objective_offset();
  auto account = [&](double mult, double value, double lo, double up, int id) {
    double viol = 0.0;
    if (lo == up) {
      viol = 0.0;
    } else if (at_bound(value, lo) && !at_bound(value, up)) {
      viol = std::max(0.0, -mult);
    } else if (at_bound(value, up) && !at_bound(value, lo)) {
      viol = std::max(0.0, mult);
    } else if (!at_bound(value, lo) && !at_bound(value, up)) {
      viol = std::abs(mult);
    }
    if (viol > rep.dual_residual) {
      rep.dual_residual = viol;
      rep.worst_dual_col = id;
    }
    double comp = 0.0;
    if (mult > 0) comp = std::isfinite(lo) ? mult * std::abs(value - lo) : 0.0;
    if (mult < 0) comp = std::isfinite(up) ? -mult * std::abs(up - value) : 0.0;
    rep.complementarity = std::max(rep.complementarity, comp);
    const double bound = mult >= 0 ? lo : up;
    dual_obj += mult * (std::isfinite(bound) ? bound : value);
  };
  for (int j = 0; j < n; ++j) account(d[j], x[j], lp.col_lower()[j], lp.col_upper()[j], j);
  for (int r = 0; r < m; ++r) {
    account(y[r], activity[r], lp.row_lower()[r], lp.row_upper()[r], -(r + 2));
  }

  rep.primal_objective = lp.objective(x);
  rep.dual_objective = dual_obj;
  rep.relative_gap = std::abs(rep.primal_objective - rep.dual_objective) /
                     (1.0 + std::abs(rep.primal_objective));
  return rep;
}

namespace {

std::unordered_map<std::string, double> read_named_values(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2) throw InputError(path, 1, "expected columns name,value");
  std::unordered_map<std::string, double> values;
  for (const CsvRow& row : table.rows) {
    if (!values.emplace(row.cells[0], table.number(row, 1)).second) {
      throw InputError(path, row.line, "duplicate entity '" + row.cells[0] + "'");
    }
  }
  return values;
}

}  // namespace

SolveResult import_solution(const LinearProgram& lp,
                            const std::filesystem::path& primal_csv,
                            const std::filesystem::path& dual_csv,
                            double dual_sign,
                            const std::vector<std::string>* col_names,
                            const std::vector<std::string>* row_names) {
  const auto& cols = col_names ? *col_names : lp.col_names();
  const auto& rows = row_names ? *row_names : lp.row_names();
  const auto primal = read_named_values(primal_csv);
  const auto duals = read_named_values(dual_csv);
  SolveResult result;
  result.primal.resize(lp.num_cols());
  for (int j = 0; j < lp.num_cols(); ++j) {
    auto it = primal.find(cols[j]);
    if (it == primal.end()) throw InputError(primal_csv, 0, "missing value for column " + cols[j]);
    result.primal[j] = it->second;
  }
  result.duals.resize(lp.num_rows());
  for (int r = 0; r < lp.num_rows(); ++r) {
    auto it = duals.find(rows[r]);
    if (it == duals.end()) throw InputError(dual_csv, 0, "missing dual for row " + rows[r]);
    result.duals[r] = dual_sign * it->second;
  }
  result.reduced_costs = lp.cost();
  for (int r = 0; r < lp.num_rows(); ++r) {
    for (const Term& t : lp.row(r)) result.reduced_costs[t.col] -= result.duals[r] * t.coef;
  }
  result.row_activity = lp.row_activity(result.primal);
  result.objective_value = lp.objective(result.primal);
  const CertificateReport rep = verify_certificate(lp, result);
  if (!rep.accepted()) {
    throw SolverError(fmt::format(
        "imported solution rejected: primal {:.3g}, dual {:.3g}, complementarity {:.3g}, gap {:.3g}",
        rep.primal_residual, rep.dual_residual, rep.complementarity, rep.relative_gap));
  }
  result.status = SolveStatus::kOptimal;
  return result;
}

void write_solution(const LinearProgram& lp, const SolveResult& result,
                    const std::filesystem::path& primal_csv,
                    const std::filesystem::path& dual_csv,
                    const std::vector<std::string>* col_names,
                    const std::vector<std::string>* row_names) {
  const auto& cols = col_names ? *col_names : lp.col_names();
  const auto& rows = row_names ? *row_names : lp.row_names();
  std::ofstream p(primal_csv);
  p << "name,value\n";
  for (int j = 0; j < lp.num_cols(); ++j) {
    p << cols[j] << ',' << fmt::format("{:.17g}", result.primal[j]) << '\n';
  }
  std::ofstream d(dual_csv);
  d << "name,value\n";
  for (int r = 0; r < lp.num_rows(); ++r) {
    d << rows[r] << ',' << fmt::format("{:.17g}", result.duals[r]) << '\n';
  }
  if (!p || !d) throw std::runtime_error("failed to write solution files");
}

}  // namespace mixmarket
