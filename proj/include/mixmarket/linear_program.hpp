#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixmarket {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One nonzero of a constraint row: (column index, coefficient).
struct Term {
  int col;
  double coef;
};

/// Column-compressed view of the constraint matrix.
struct ColumnMatrix {
  int num_rows = 0;
  int num_cols = 0;
  std::vector<int> start;  // size num_cols + 1
  std::vector<int> index;
  std::vector<double> value;
};

/// A linear program in bounded form:
///
///   min  cost' x + offset
///   s.t. row_lower <= A x <= row_upper
///        col_lower <=   x <= col_upper
///
/// Equality rows have row_lower == row_upper. Infinite bounds use kInf.
class LinearProgram {
 public:
  int add_column(std::string name, double lower, double upper, double cost);
  int add_row(std::string name, double lower, double upper,
              std::span<const Term> terms);

  void set_cost(int col, double cost) { cost_[col] = cost; }
  void set_column_bounds(int col, double lower, double upper);
  void set_row_bounds(int row, double lower, double upper);
  void set_objective_offset(double offset) { offset_ = offset; }

  int num_cols() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(row_lower_.size()); }
  std::size_t num_nonzeros() const { return row_terms_.size(); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& col_lower() const { return col_lower_; }
  const std::vector<double>& col_upper() const { return col_upper_; }
  const std::vector<double>& row_lower() const { return row_lower_; }
  const std::vector<double>& row_upper() const { return row_upper_; }
  const std::vector<std::string>& col_names() const { return col_names_; }
  const std::vector<std::string>& row_names() const { return row_names_; }
  double objective_offset() const { return offset_; }

  /// Terms of row r, in insertion order with duplicate columns merged.
  std::span<const Term> row(int r) const {
    return {row_terms_.data() + row_start_[r],
            row_terms_.data() + row_start_[r + 1]};
  }

  ColumnMatrix column_matrix() const;

  /// A x for a full primal vector.
  std::vector<double> row_activity(std::span<const double> x) const;
  double objective(std::span<const double> x) const;

 private:
  std::vector<double> cost_, col_lower_, col_upper_;
  std::vector<std::string> col_names_;
  std::vector<double> row_lower_, row_upper_;
  std::vector<std::string> row_names_;
  std::vector<Term> row_terms_;
  std::vector<int> row_start_{0};
  double offset_ = 0.0;
};

}  // namespace mixmarket
