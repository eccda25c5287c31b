#pragma once

#include <cstddef>
#include <vector>

#include "gemmix/matrix.hpp"

namespace gemmix {

// Minimum-cost perfect assignment on a square cost matrix (Hungarian method,
// O(n^3)). Returns assignment[row] = column.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost);

// Assignment of estimated components to true components minimizing the total
// squared distance. result[k] is the true component matched to estimate k.
std::vector<std::size_t> match_components(const Means& estimates, const Means& truth);

}  // namespace gemmix
