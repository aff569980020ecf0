#pragma once

#include <string>
#include <vector>

#include "tvs/matrix.hpp"

namespace tvs {

enum class AssociationMeasure { kendall, pearson };

struct OrderSpec {
  std::vector<int> sensitive;  // covariate column indices
  double threshold = 0.5;      // rho* in (0,1)
  AssociationMeasure measure = AssociationMeasure::kendall;
};

struct OrderResult {
  std::vector<int> order;  // order[p] = covariate column at position p
  std::vector<int> k_set;  // columns highly associated with a sensitive one
  Matrix association;      // d x d symmetric
};

// Pairwise association matrix of the covariates; unit diagonal. Throws
// data_error on constant columns.
Matrix association_matrix(const Dataset& data, AssociationMeasure measure);

// Privacy-aware covariate order: sensitive columns first, then the
// columns whose association with a sensitive one exceeds the threshold
// (sorted by descending worst-case association, ties toward the lower
// column index), then the rest in column order. The response is
// implicitly last.
OrderResult find_order(const Dataset& data, const OrderSpec& spec);

struct OrderDiagnostics {
  bool sensitive_block_ok = false;
  bool k_block_ok = false;
  bool rest_ok = false;
  int safe_truncation_bound = 0;  // d + 1 - |K| - |S|
  bool all_ok() const { return sensitive_block_ok && k_block_ok && rest_ok; }
};

// Checks the block placement invariants of an order against the given
// sensitive and K sets, and reports the safe truncation bound.
OrderDiagnostics validate_order(const std::vector<int>& order, const std::vector<int>& sensitive,
                                const std::vector<int>& k_set, int d);

}  // namespace tvs
