#ifndef MATPOP_NUM_INTERP_HPP
#define MATPOP_NUM_INTERP_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace matpop::num {

/// Index i with x[i] <= v < x[i+1], clamped to [0, n-2]. x strictly increasing.
std::size_t find_cell(std::span<const double> x, double v);

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Reproduces monotone data without overshoot; exact on linear data.
class PchipCurve {
public:
    PchipCurve() = default;
    PchipCurve(std::vector<double> x, std::vector<double> y);
    double operator()(double v) const;
    double derivative(double v) const;
    bool empty() const { return x_.empty(); }
    const std::vector<double>& abscissae() const { return x_; }
    const std::vector<double>& ordinates() const { return y_; }

private:
    std::vector<double> x_, y_, d_;  // d_ = node slopes
};

/// Piecewise-linear interpolant, clamped at the ends.
class LinearCurve {
public:
    LinearCurve() = default;
    LinearCurve(std::vector<double> x, std::vector<double> y);
    double operator()(double v) const;
    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_, y_;
};

}  // namespace matpop::num

#endif
