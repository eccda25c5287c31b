#include "gemmix/matching.hpp"

#include <limits>
#include <stdexcept>

namespace gemmix {

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    for (const auto& r : cost) {
        if (r.size() != n) throw std::invalid_argument("assignment cost matrix must be square");
    }
    // Potentials u (rows), v (columns); p[j] is the row matched to column j,
    // with index 0 as the virtual source.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

std::vector<std::size_t> match_components(const Means& estimates, const Means& truth) {
    if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols()) {
        throw std::invalid_argument("estimate and truth must have the same shape");
    }
    const std::size_t m = truth.rows();
    std::vector<std::vector<double>> cost(m, std::vector<double>(m));
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < m; ++i) cost[k][i] = squared_distance(estimates.row(k), truth.row(i));
    }
    return solve_assignment(cost);
}

}  // namespace gemmix
