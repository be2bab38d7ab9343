#pragma once

#include <span>
#include <vector>

#include "symlab/linalg.hpp"

namespace symlab {

struct TransportArc {
  int source = 0;
  int sink = 0;
  double mass = 0.0;
};

struct TransportResult {
  double cost = 0.0;
  std::vector<TransportArc> plan;  // arcs with positive mass
  long long pivots = 0;
};

/// Exact balanced transportation problem
///   min sum_ij cost(i,j) f_ij  s.t.  sum_j f_ij = supply_i, sum_i f_ij = demand_j, f >= 0
/// solved with a primal network simplex (block-search pivoting, strongly
/// feasible spanning trees). Supplies and demands must be nonnegative with
/// equal totals; a total mismatch below 1e-9 is absorbed by rescaling demand.
TransportResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                                const Matrix& cost);

}  // namespace symlab
