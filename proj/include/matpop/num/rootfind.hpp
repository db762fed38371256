#ifndef MATPOP_NUM_ROOTFIND_HPP
#define MATPOP_NUM_ROOTFIND_HPP

#include <cmath>
#include <functional>

#include "matpop/errors.hpp"

namespace matpop::num {

/// Bisection on [lo, hi]; f(lo) and f(hi) must have opposite signs.
/// Returns the bracket midpoint once its width drops below xtol.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double xtol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw RootFindError("bisect: root not bracketed");
    for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace matpop::num

#endif
