#include "mixmarket/linear_program.hpp"

#include <algorithm>
#include <stdexcept>

namespace mixmarket {

int LinearProgram::add_column(std::string name, double lower, double upper,
                              double cost) {
  if (lower > upper) {
    throw std::invalid_argument("column " + name + ": lower bound exceeds upper");
  }
  cost_.push_back(cost);
  col_lower_.push_back(lower);
  col_upper_.push_back(upper);
  col_names_.push_back(std::move(name));
  return num_cols() - 1;
}

int LinearProgram::add_row(std::string name, double lower, double upper,
                           std::span<const Term> terms) {
  if (lower > upper) {
    throw std::invalid_argument("row " + name + ": lower bound exceeds upper");
  }
  // Merge duplicate columns, keep first-seen order, drop exact zeros.
  const std::size_t begin = row_terms_.size();
  for (const Term& t : terms) {
    if (t.col < 0 || t.col >= num_cols()) {
      throw std::out_of_range("row " + name + ": column index out of range");
    }
    auto first = row_terms_.begin() + static_cast<std::ptrdiff_t>(begin);
    auto it = std::find_if(first, row_terms_.end(),
                           [&](const Term& e) { return e.col == t.col; });
    if (it != row_terms_.end()) {
      it->coef += t.coef;
    } else {
      row_terms_.push_back(t);
    }
  }
  auto first = row_terms_.begin() + static_cast<std::ptrdiff_t>(begin);
  row_terms_.erase(std::remove_if(first, row_terms_.end(),
                                  [](const Term& e) { return e.coef == 0.0; }),
                   row_terms_.end());
  row_start_.push_back(static_cast<int>(row_terms_.size()));
  row_lower_.push_back(lower);
  row_upper_.push_back(upper);
  row_names_.push_back(std::move(name));
  return num_rows() - 1;
}

void LinearProgram::set_column_bounds(int col, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("column bounds crossed");
  col_lower_[col] = lower;
  col_upper_[col] = upper;
}

void LinearProgram::set_row_bounds(int row, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("row bounds crossed");
  row_lower_[row] = lower;
  row_upper_[row] = upper;
}

ColumnMatrix LinearProgram::column_matrix() const {
  ColumnMatrix m;
  m.num_rows = num_rows();
  m.num_cols = num_cols();
  m.start.assign(m.num_cols + 1, 0);
  for (const Term& t : row_terms_) ++m.start[t.col + 1];
  for (int j = 0; j < m.num_cols; ++j) m.start[j + 1] += m.start[j];
  m.index.resize(row_terms_.size());
  m.value.resize(row_terms_.size());
  std::vector<int> fill(m.start.begin(), m.start.end() - 1);
  for (int r = 0; r < m.num_rows; ++r) {
    for (const Term& t : row(r)) {
      const int pos = fill[t.col]++;
      m.index[pos] = r;
      m.value[pos] = t.coef;
    }
  }
  return m;
}

std::vector<double> LinearProgram::row_activity(std::span<const double> x) const {
  std::vector<double> activity(num_rows(), 0.0);
  for (int r = 0; r < num_rows(); ++r) {
    double sum = 0.0;
    for (const Term& t : row(r)) sum += t.coef * x[t.col];
    activity[r] = sum;
  }
  return activity;
}

double LinearProgram::objective(std::span<const double> x) const {
  double sum = offset_;
  for (int j = 0; j < num_cols(); ++j) sum += cost_[j] * x[j];
  return sum;
}

}  // namespace mixmarket
