#include "tvs/matrix.hpp"

#include "tvs/common.hpp"

namespace tvs {

int Dataset::column_index(const std::string& name) const {
  for (size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<int>(j);
  throw data_error("unknown column '" + name + "'");
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
  Dataset out;
  out.names = names;
  out.response_name = response_name;
  out.x = Matrix(static_cast<int>(rows.size()), x.cols());
  out.y.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out.x(static_cast<int>(i), j) = x(rows[i], j);
    out.y[i] = y[rows[i]];
  }
  return out;
}

Matrix Dataset::with_response() const {
  Matrix m(x.rows(), x.cols() + 1);
  for (int j = 0; j < x.cols(); ++j)
    for (int i = 0; i < x.rows(); ++i) m(i, j) = x(i, j);
  for (int i = 0; i < x.rows(); ++i) m(i, x.cols()) = y[i];
  return m;
}

}  // namespace tvs
