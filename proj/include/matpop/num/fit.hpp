#ifndef MATPOP_NUM_FIT_HPP
#define MATPOP_NUM_FIT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace matpop::num {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;  // root-mean-square residual
};

inline LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit fit;
    const std::size_t n = x.size();
    if (n < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

}  // namespace matpop::num

#endif
