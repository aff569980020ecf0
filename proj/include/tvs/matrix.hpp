#pragma once

#include <span>
#include <string>
#include <vector>

namespace tvs {

// Dense column-major matrix; columns are the semantic unit (one column
// per variable), so col(j) is contiguous.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, 0.0) {}

  double& operator()(int i, int j) { return v_[static_cast<size_t>(j) * rows_ + i]; }
  double operator()(int i, int j) const { return v_[static_cast<size_t>(j) * rows_ + i]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  std::span<double> col(int j) { return {v_.data() + static_cast<size_t>(j) * rows_, static_cast<size_t>(rows_)}; }
  std::span<const double> col(int j) const {
    return {v_.data() + static_cast<size_t>(j) * rows_, static_cast<size_t>(rows_)};
  }

  std::vector<double> row(int i) const {
    std::vector<double> r(cols_);
    for (int j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

// Tabular data: n x d covariate matrix with named columns plus a binary
// response column.
struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> names;
  std::string response_name = "y";

  int n_rows() const { return x.rows(); }
  int n_cols() const { return x.cols(); }

  int column_index(const std::string& name) const;
  Dataset select_rows(const std::vector<int>& rows) const;

  // n x (d+1) matrix with the response appended as the last column.
  Matrix with_response() const;
};

}  // namespace tvs
