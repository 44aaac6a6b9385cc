#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixmarket/linear_program.hpp"

namespace mixmarket {

// Dual sign convention, used by every module downstream of the solver:
//
//   dual[r] = d(optimal objective) / d(bound of row r)
//   reduced_cost[j] = cost[j] - sum_r dual[r] * A[r][j]
//
// so the Lagrangian reads  L = c'x - sum_r dual[r] * (a_r x - b_r) - d'x.
// A binding "<=" row in a minimization has dual <= 0, a binding ">=" row has
// dual >= 0, and a column at its lower bound has reduced cost >= 0.

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(SolveStatus status);

struct Tolerances {
  double feasibility = 1e-8;
  double gap = 1e-8;
  /// Absolute reduced-cost threshold for pricing.
  double optimality = 1e-9;
  long max_iterations = 2'000'000;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kIterationLimit;
  std::vector<double> primal;         // per column
  std::vector<double> row_activity;   // per row, A x
  std::vector<double> duals;          // per row
  std::vector<double> reduced_costs;  // per column
  double objective_value = 0.0;
  long iterations = 0;
  /// Row multipliers proving infeasibility (phase-one duals), when available.
  std::optional<std::vector<double>> farkas;
  /// Improving primal direction proving unboundedness, when available.
  std::optional<std::vector<double>> ray;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded primal revised simplex with sparse LU basis factorization and
/// product-form updates. Deterministic for identical input.
SolveResult solve(const LinearProgram& lp, const Tolerances& tol = {});

struct CertificateReport {
  double primal_residual = 0.0;      // max row/bound violation
  double dual_residual = 0.0;        // max dual-feasibility violation
  double complementarity = 0.0;      // max |multiplier * slack|
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;         // |primal - dual| / (1 + |primal|)
  int worst_primal_row = -1;
  int worst_dual_col = -1;           // column index, or -(row + 2) for a row

  bool accepted(double residual_tol = 1e-6, double gap_tol = 1e-8) const {
    return primal_residual <= residual_tol && dual_residual <= residual_tol &&
           complementarity <= residual_tol && relative_gap <= gap_tol;
  }
};

/// Recomputes every optimality residual from primal values and row duals
/// alone. Reduced costs are re-derived as c - A'y; the reduced costs stored in
/// the result are not trusted.
CertificateReport verify_certificate(const LinearProgram& lp,
                                     const SolveResult& result);

/// Reads "(entity name, value)" CSV files produced by an external solver for
/// the names written to MPS. dual_sign converts the external convention into
/// ours (-1 when the solver reports d obj / d rhs with the opposite sign).
/// The returned result has status kOptimal only if verify_certificate accepts.
SolveResult import_solution(const LinearProgram& lp,
                            const std::filesystem::path& primal_csv,
                            const std::filesystem::path& dual_csv,
                            double dual_sign = 1.0,
                            const std::vector<std::string>* col_names = nullptr,
                            const std::vector<std::string>* row_names = nullptr);

/// Writes (entity name, value) files in the import format.
void write_solution(const LinearProgram& lp, const SolveResult& result,
                    const std::filesystem::path& primal_csv,
                    const std::filesystem::path& dual_csv,
                    const std::vector<std::string>* col_names = nullptr,
                    const std::vector<std::string>* row_names = nullptr);

}  // namespace mixmarket
