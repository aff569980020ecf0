#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace tvs {

// Thrown when an iterative numeric procedure fails to converge or a
// numeric precondition (positive definiteness, finiteness) is violated.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for malformed or degenerate input data (bad CSV, constant
// columns, single-class labels, schema mismatches).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Global worker budget for parallel sections. 0 means hardware default.
void set_jobs(int jobs);
int effective_jobs();

// Runs fn(i) for i in [0, n). Items are distributed over workers by
// index, so results must not depend on execution order.
void parallel_for(int n, const std::function<void(int)>& fn);

inline double clamp_unit(double u) {
  const double eps = 1e-10;
  if (u < eps) return eps;
  if (u > 1.0 - eps) return 1.0 - eps;
  return u;
}

}  // namespace tvs
