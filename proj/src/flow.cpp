#include "matpop/flow.hpp"

#include <algorithm>
#include <cmath>

#include "matpop/errors.hpp"

namespace matpop {

CharacteristicFlow::CharacteristicFlow(Velocity velocity, FlowSettings settings)
    : velocity_(std::move(velocity)),
      settings_(settings),
      backend_(velocity_.kind == Velocity::Kind::Power ? Backend::Analytic : Backend::Numeric) {}

double CharacteristicFlow::chi(double s, double m) const {
    if (s > 1e-12) throw Error("chi: only backward times s <= 0 are defined");
    if (m <= 0.0) return 0.0;
    if (s >= 0.0) return m;
    if (backend_ == Backend::Analytic) {
        const double alpha = velocity_.alpha, p = velocity_.p;
        if (p == 1.0) return m * std::exp(alpha * s);
        // chi^{1-p} grows linearly backward in time.
        const double e = 1.0 - p;  // negative
        return std::pow(std::pow(m, e) + alpha * (p - 1.0) * (-s), 1.0 / e);
    }
    return chi_numeric(-s, m);
}

// Embedded Fehlberg 4(5) pair on d(chi)/du = -V(chi), u in [0, back_time].
double CharacteristicFlow::chi_numeric(double back_time, double m) const {
    const auto& V = velocity_;
    double u = 0.0;
    double x = m;
    double h = std::min(back_time, 0.1);
    const double tol_floor = settings_.abs_tol;
    int steps = 0;
    while (u < back_time) {
        if (x < settings_.freeze_threshold) {
            // Frozen-coefficient exponential step to the end.
            const double c = V(x) / std::max(x, 1e-300);
            return x * std::exp(-c * (back_time - u));
        }
        if (++steps > 2000000)
            throw Error("chi: adaptive integration failed to reach requested time");
        h = std::min(h, back_time - u);
        auto f = [&](double y) { return -V(std::max(y, 0.0)); };
        const double k1 = h * f(x);
        const double k2 = h * f(x + k1 / 4.0);
        const double k3 = h * f(x + 3.0 / 32.0 * k1 + 9.0 / 32.0 * k2);
        const double k4 = h * f(x + 1932.0 / 2197.0 * k1 - 7200.0 / 2197.0 * k2 +
                                7296.0 / 2197.0 * k3);
        const double k5 = h * f(x + 439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 -
                                845.0 / 4104.0 * k4);
        const double k6 = h * f(x - 8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 +
                                1859.0 / 4104.0 * k4 - 11.0 / 40.0 * k5);
        const double x4 = x + 25.0 / 216.0 * k1 + 1408.0 / 2565.0 * k3 +
                          2197.0 / 4104.0 * k4 - k5 / 5.0;
        const double x5 = x + 16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 +
                          28561.0 / 56430.0 * k4 - 9.0 / 50.0 * k5 + 2.0 / 55.0 * k6;
        const double err = std::abs(x5 - x4);
        const double tol = std::max(tol_floor, settings_.rel_tol * std::abs(x));
        if (err <= tol || h <= 1e-14) {
            u += h;
            x = std::max(x5, 0.0);
        }
        const double grow = (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
        h *= std::clamp(grow, 0.2, 4.0);
    }
    return x;
}

double CharacteristicFlow::time_of_flight(double m1, double m2) const {
    if (!(m1 > 0.0)) throw Error("time_of_flight: m1 must be positive (integral diverges at 0)");
    if (m2 < m1) throw Error("time_of_flight: requires m1 <= m2");
    if (m1 == m2) return 0.0;
    if (backend_ == Backend::Analytic) {
        const double alpha = velocity_.alpha, p = velocity_.p;
        if (p == 1.0) return std::log(m2 / m1) / alpha;
        return (std::pow(m1, 1.0 - p) - std::pow(m2, 1.0 - p)) / (alpha * (p - 1.0));
    }
    const auto& V = velocity_;
    return num::integrate([&](double s) { return 1.0 / V(s); }, m1, m2,
                          {16, std::max(1e-3, (m2 - m1) / 8.0), 1e-13, 18});
}

SurvivalKernel::SurvivalKernel(const ModelCoefficients& coeffs, const CharacteristicFlow& flow,
                               Field field, num::QuadratureSettings quad)
    : flow_(flow),
      rate_(field == Field::Resting ? coeffs.resting_loss : coeffs.apoptosis),
      velocity_(coeffs.velocity),
      field_(field),
      quad_(quad) {}

double SurvivalKernel::mortality(double m) const {
    return rate_(m) + velocity_.derivative(m);
}

double SurvivalKernel::operator()(double t, double m) const {
    if (t < 0.0) throw Error("survival kernel: t must be >= 0");
    if (t == 0.0) return 1.0;
    const double integral = num::integrate(
        [&](double s) { return mortality(flow_.chi(-s, m)); }, 0.0, t, quad_);
    return std::exp(-integral);
}

}  // namespace matpop
