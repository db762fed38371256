#ifndef MATPOP_FLOW_HPP
#define MATPOP_FLOW_HPP

#include "matpop/model.hpp"
#include "matpop/num/quadrature.hpp"

namespace matpop {

struct FlowSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    // Below this maturity the velocity is frozen to its local linearization
    // and the step taken as an exact exponential; the flow is exponentially
    // slow there and adaptive steps would collapse.
    double freeze_threshold = 1e-8;
};

/**
 * Backward characteristic flow chi(s, m), s <= 0: the maturity at past time
 * s of the trajectory that reaches maturity m at time 0. Solves
 * d(chi)/ds = V(chi) with chi(0, m) = m; chi(s, 0) = 0 for all s.
 *
 * The power velocity family has a closed form; other velocities are
 * integrated with an adaptive embedded Runge-Kutta pair.
 */
class CharacteristicFlow {
public:
    enum class Backend { Analytic, Numeric };

    explicit CharacteristicFlow(Velocity velocity, FlowSettings settings = {});

    double chi(double s, double m) const;
    /// Time for a cell to mature from m1 to m2 (0 < m1 <= m2): the integral
    /// of 1/V between them. Rejects m1 = 0, where it diverges.
    double time_of_flight(double m1, double m2) const;

    Backend backend() const { return backend_; }
    const Velocity& velocity() const { return velocity_; }

private:
    double chi_numeric(double back_time, double m) const;

    Velocity velocity_;
    FlowSettings settings_;
    Backend backend_;
};

/**
 * Survival fraction along a characteristic: attenuation by mortality plus
 * the velocity divergence. The resting field uses delta + V', the
 * proliferating field gamma + V'.
 */
class SurvivalKernel {
public:
    enum class Field { Resting, Proliferating };

    SurvivalKernel(const ModelCoefficients& coeffs, const CharacteristicFlow& flow,
                   Field field, num::QuadratureSettings quad = {});

    /// exp(-int_0^t [rate(chi(-s,m)) + V'(chi(-s,m))] ds), t >= 0.
    double operator()(double t, double m) const;

    /// rate(m) + V'(m), the exponent's integrand at zero offset.
    double mortality(double m) const;

    Field field() const { return field_; }

private:
    CharacteristicFlow flow_;
    RateField rate_;
    Velocity velocity_;
    Field field_;
    num::QuadratureSettings quad_;
};

}  // namespace matpop

#endif
