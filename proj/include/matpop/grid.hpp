#ifndef MATPOP_GRID_HPP
#define MATPOP_GRID_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "matpop/num/rootfind.hpp"

namespace matpop {

/// Maturity grid on [0,1] with cells growing geometrically away from the
/// degenerate point m = 0, where characteristics accumulate. The ratio is
/// chosen so the first cell has the requested width; falls back to uniform
/// when the request is unsatisfiable.
inline std::vector<double> graded_maturity_grid(int nodes, double min_cell) {
    const int n = std::max(nodes, 3);
    const int cells = n - 1;
    std::vector<double> m(n);
    if (min_cell * cells >= 1.0 || min_cell <= 0.0) {
        for (int i = 0; i < n; ++i) m[i] = (double)i / cells;
        return m;
    }
    auto total = [&](double r) {
        // sum_{k=0}^{cells-1} min_cell * r^k
        return min_cell * (std::pow(r, cells) - 1.0) / (r - 1.0);
    };
    const double ratio = num::bisect([&](double r) { return total(r) - 1.0; },
                                     1.0 + 1e-12, 2.0, 1e-14, 200);
    m[0] = 0.0;
    double h = min_cell;
    for (int i = 1; i < n; ++i) {
        m[i] = m[i - 1] + h;
        h *= ratio;
    }
    m[n - 1] = 1.0;
    return m;
}

/// Midpoint refinement: every cell is split exactly in two.
inline std::vector<double> refine_grid(const std::vector<double>& m) {
    std::vector<double> out;
    out.reserve(2 * m.size() - 1);
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        out.push_back(m[i]);
        out.push_back(0.5 * (m[i] + m[i + 1]));
    }
    out.push_back(m.back());
    return out;
}

}  // namespace matpop

#endif
