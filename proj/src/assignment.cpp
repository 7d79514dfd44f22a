#include "pointdc/assignment.hpp"

#include <limits>

namespace pointdc {

std::vector<int> min_cost_assignment(const Tensor& cost) {
    if (cost.ndim() != 2) throw ShapeError("min_cost_assignment expects a [n,m] cost matrix");
    const int n = cost.dim(0), m = cost.dim(1);
    if (n == 0) return {};
    if (n > m) throw UsageError("min_cost_assignment requires rows <= columns");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    auto c = [&](int i, int j) { return cost.at(i - 1, j - 1); };  // 1-based view

    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);    // row matched to column j
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = c(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (p[static_cast<std::size_t>(j)] != 0)
            assign[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;

    // Lexicographic tie resolution: swap matched columns between two rows
    // whenever it keeps the total cost identical and lowers (assign[i1], assign[i2]).
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i1 = 0; i1 < n; ++i1) {
            for (int i2 = i1 + 1; i2 < n; ++i2) {
                const int j1 = assign[static_cast<std::size_t>(i1)];
                const int j2 = assign[static_cast<std::size_t>(i2)];
                if (j2 >= j1) continue;
                const double now = cost.at(i1, j1) + cost.at(i2, j2);
                const double swapped = cost.at(i1, j2) + cost.at(i2, j1);
                if (swapped == now) {
                    assign[static_cast<std::size_t>(i1)] = j2;
                    assign[static_cast<std::size_t>(i2)] = j1;
                    changed = true;
                }
            }
        }
    }
    return assign;
}

}  // namespace pointdc
