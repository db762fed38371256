#include "matpop/num/interp.hpp"

#include <algorithm>
#include <cmath>

#include "matpop/errors.hpp"

namespace matpop::num {

std::size_t find_cell(std::span<const double> x, double v) {
    if (x.size() < 2) return 0;
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::ptrdiff_t i = (it - x.begin()) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, (std::ptrdiff_t)x.size() - 2);
    return (std::size_t)i;
}

PchipCurve::PchipCurve(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2) throw Error("PchipCurve needs >= 2 matched samples");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i + 1] > x_[i])) throw Error("PchipCurve abscissae must increase");
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    d_[0] = s[0];
    d_[n - 1] = s[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] * s[i] <= 0.0) {
            d_[i] = 0.0;  // local extremum: flat slope preserves monotone pieces
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }
    // Endpoint limiter (Fritsch-Carlson): keep within 3x the boundary secant.
    auto limit = [](double d, double s0) {
        if (s0 == 0.0) return 0.0;
        if (d * s0 <= 0.0) return 0.0;
        return std::abs(d) > 3.0 * std::abs(s0) ? 3.0 * s0 : d;
    };
    d_[0] = limit(d_[0], s[0]);
    d_[n - 1] = limit(d_[n - 1], s[n - 2]);
}

double PchipCurve::operator()(double v) const {
    const std::size_t i = find_cell(x_, v);
    const double h = x_[i + 1] - x_[i];
    const double t = (v - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
}

double PchipCurve::derivative(double v) const {
    const std::size_t i = find_cell(x_, v);
    const double h = x_[i + 1] - x_[i];
    const double t = (v - x_[i]) / h;
    const double t2 = t * t;
    const double dh00 = (6 * t2 - 6 * t) / h;
    const double dh10 = 3 * t2 - 4 * t + 1;
    const double dh01 = (-6 * t2 + 6 * t) / h;
    const double dh11 = 3 * t2 - 2 * t;
    return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
}

LinearCurve::LinearCurve(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2) throw Error("LinearCurve needs >= 2 samples");
}

double LinearCurve::operator()(double v) const {
    const std::size_t i = find_cell(x_, v);
    const double t = (v - x_[i]) / (x_[i + 1] - x_[i]);
    const double tc = std::clamp(t, 0.0, 1.0);
    return y_[i] + tc * (y_[i + 1] - y_[i]);
}

}  // namespace matpop::num
