#ifndef MATPOP_MODEL_HPP
#define MATPOP_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "matpop/num/interp.hpp"

namespace matpop {

/**
 * Maturation velocity V. The power family V(m) = alpha * m^p (alpha > 0,
 * p >= 1) is closed-form and guarantees that the time of flight from any
 * m0 > 0 diverges as m0 -> 0. Arbitrary velocities enter as tabulated
 * samples with monotone interpolation; the divergence property of a
 * tabulated velocity cannot be verified and is reported as assumed.
 */
struct Velocity {
    enum class Kind { Power, Tabulated };
    Kind kind = Kind::Power;
    double alpha = 0.2;
    double p = 1.0;
    num::PchipCurve table;

    double operator()(double m) const;
    double derivative(double m) const;

    static Velocity power(double alpha, double p);
    static Velocity tabulated(std::vector<double> m, std::vector<double> v);
};

/// Division age tau(m): time spent in the proliferating phase by a cell
/// committing at maturity m. Continuously differentiable, positive.
struct DivisionAge {
    enum class Kind { Constant, Affine, Tabulated };
    Kind kind = Kind::Constant;
    double tau0 = 1.0;
    double tau1 = 0.0;  // affine slope
    num::PchipCurve table;

    double operator()(double m) const;
    double derivative(double m) const;
    double max_on_unit() const;  // max over [0,1]

    static DivisionAge constant(double tau0);
    static DivisionAge affine(double tau0, double tau1);
    static DivisionAge tabulated(std::vector<double> m, std::vector<double> v);
};

/**
 * Division map g: a mother dividing at maturity m yields daughters at
 * maturity g(m). Strictly increasing with g(m) <= m. The inverse is clamped:
 * g^{-1}(m) = 1 and (g^{-1})'(m) = 0 for m > g(1), which is the form every
 * downstream formula consumes.
 */
struct DivisionMap {
    enum class Kind { Linear, Tabulated };
    Kind kind = Kind::Linear;
    double slope = 0.5;  // g(m) = slope * m
    num::PchipCurve table;          // g on [0,1]
    num::PchipCurve inverse_table;  // g^{-1} on [0, g(1)]

    double operator()(double m) const;
    /// (g^{-1}(m), (g^{-1})'(m)) with the clamp applied.
    std::pair<double, double> inverse(double m) const;
    double g1() const;  // g(1)

    static DivisionMap linear(double slope);
    static DivisionMap tabulated(std::vector<double> m, std::vector<double> v);
};

/// Nonnegative mortality-style rate (delta or gamma).
struct RateField {
    enum class Kind { Constant, Tabulated };
    Kind kind = Kind::Constant;
    double value = 0.0;
    num::PchipCurve table;

    double operator()(double m) const;
    double max_on_unit(int grid = 2001) const;
    double min_on_unit(int grid = 2001) const;

    static RateField constant(double v);
    static RateField tabulated(std::vector<double> m, std::vector<double> v);
};

/**
 * Reintroduction rate beta(m, x): rate at which resting cells of maturity m
 * re-enter proliferation when the local resting density is x. The Hill form
 *
 *     beta(m, x) = beta0(m) * theta(m)^n / (theta(m)^n + x^n)   for x >= 0
 *     beta(m, x) = beta0(m)                                     for x <  0
 *
 * is decreasing in x, so x * beta(m, x) is Lipschitz with constant
 * sup_m beta0(m) and the regulation property (beta(m,x)-beta(m,0))*x <= 0
 * holds for all x.
 */
struct Reintroduction {
    enum class Kind { Hill, Custom };
    Kind kind = Kind::Hill;
    RateField beta0 = RateField::constant(0.04);
    RateField threshold = RateField::constant(0.5);  // theta(m)
    double n = 1.0;
    std::function<double(double, double)> custom;

    double operator()(double m, double x) const;
    bool is_hill() const { return kind == Kind::Hill; }
    double beta0_sup(int grid = 2001) const;

    static Reintroduction hill(RateField beta0, RateField threshold, double n);
    static Reintroduction custom_fn(std::function<double(double, double)> f);
};

struct ModelCoefficients {
    Velocity velocity;
    DivisionAge division_age;
    DivisionMap division_map;
    RateField resting_loss;    // delta
    RateField apoptosis;       // gamma
    Reintroduction reintroduction;
};

double eval_beta(const ModelCoefficients& coeffs, double m, double x);

enum class CheckStatus { Pass, Fail, Assumed };

struct HypothesisCheck {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    double worst_m = 0.0;
    double worst_value = 0.0;
    std::string note;
};

struct ValidationReport {
    std::vector<HypothesisCheck> checks;
    bool ok() const;
    std::string summary() const;
};

/**
 * Evaluates the structural hypotheses on a uniform maturity grid:
 * velocity positivity and the slow-start divergence, positivity of tau,
 * the commitment-time condition tau'(m) + 1/V(m) > 0 (checked away from
 * m = 0 where it holds automatically), monotonicity of g and g(m) <= m.
 */
ValidationReport validate_coefficients(const ModelCoefficients& coeffs,
                                       int grid_resolution = 1000);

/**
 * Age-integrated initial state: mu_bar(m) for the resting phase and the
 * proliferating surface gamma(m, a). Only mu_bar is observable in the
 * reduced system, so no age-resolved resting distribution is stored.
 */
struct InitialData {
    std::function<double(double)> mu_bar;
    std::function<double(double, double)> gamma;

    static InitialData zero();
    /// Gamma(m, a) = beta(m, mu(m)) * mu(m) * age_profile(a); with
    /// age_profile(0) = 1 this matches the boundary flux at t = 0.
    static InitialData compatible(const ModelCoefficients& coeffs,
                                  std::function<double(double)> mu,
                                  std::function<double(double)> age_profile);
};

struct CompatReport {
    double max_rel_deviation = 0.0;
    double worst_m = 0.0;
    bool pass = true;
    double tol = 0.0;
};

/// Checks gamma(m, 0) = beta(m, mu_bar(m)) * mu_bar(m) on a grid. Failure is
/// reported, not fatal: existence does not require it, only continuity of
/// the sources across the initial-data seam does.
CompatReport check_compatibility(const InitialData& data, const ModelCoefficients& coeffs,
                                 double tol = 1e-9, int grid_resolution = 1000);

}  // namespace matpop

#endif
