#pragma once
#include <vector>

#include "pointdc/tensor.hpp"

namespace pointdc {

// Minimum-total-cost assignment of every row to a distinct column, for
// cost [n,m] with n <= m. Returns the column chosen for each row.
//
// The solver (shortest augmenting paths with potentials, O(n^2 m)) is
// deterministic. Among exchange-equivalent optima, a post-pass prefers the
// lexicographically smallest (row, column) pairing, which is how exact ties
// are resolved throughout the repo.
std::vector<int> min_cost_assignment(const Tensor& cost);

}  // namespace pointdc
