#ifndef MATPOP_TESTS_SUPPORT_HPP
#define MATPOP_TESTS_SUPPORT_HPP

// Shared fixtures and closed-form oracles for the linear-velocity test
// family: V = alpha m, constant division age, halving division map. Every
// quantity here is written straight from the closed forms, independent of
// the library's computation paths.

#include <cmath>
#include <functional>

#include "matpop/analysis.hpp"
#include "matpop/model.hpp"
#include "matpop/num/quadrature.hpp"
#include "matpop/num/rootfind.hpp"
#include "matpop/runner.hpp"
#include "matpop/solver.hpp"

namespace testsupport {

struct CanonicalParams {
    double alpha = 0.2;
    double tau0 = 1.0;
    double g_slope = 0.5;
    double delta0 = 0.05;
    double gamma0 = 0.1;
    double beta0 = 0.04;
    double theta_half = 0.5;
    double hill_n = 2.0;
    double mu0 = 0.1;
    double mu1 = -0.05;
    double age_rate = 0.5;
};

inline matpop::ModelCoefficients canonical_coeffs(const CanonicalParams& p = {}) {
    matpop::ModelCoefficients c;
    c.velocity = matpop::Velocity::power(p.alpha, 1.0);
    c.division_age = matpop::DivisionAge::constant(p.tau0);
    c.division_map = matpop::DivisionMap::linear(p.g_slope);
    c.resting_loss = matpop::RateField::constant(p.delta0);
    c.apoptosis = matpop::RateField::constant(p.gamma0);
    c.reintroduction = matpop::Reintroduction::hill(matpop::RateField::constant(p.beta0),
                                                    matpop::RateField::constant(p.theta_half),
                                                    p.hill_n);
    return c;
}

inline matpop::InitialData canonical_data(const matpop::ModelCoefficients& coeffs,
                                          const CanonicalParams& p = {}) {
    const double mu0 = p.mu0, mu1 = p.mu1, rate = p.age_rate;
    return matpop::InitialData::compatible(
        coeffs, [mu0, mu1](double m) { return mu0 + mu1 * m; },
        [rate](double a) { return std::exp(-rate * a); });
}

inline matpop::CommitmentMaps canonical_maps(const CanonicalParams& p = {}) {
    return matpop::CommitmentMapsBuilder(canonical_coeffs(p)).build_factors();
}

// --- closed forms for the canonical family ---------------------------------

inline double chi_cf(double s, double m, double alpha = 0.2) {
    return m * std::exp(alpha * s);  // s <= 0
}

inline double tof_cf(double m1, double m2, double alpha = 0.2) {
    return std::log(m2 / m1) / alpha;
}

inline double theta_cf(double m, double alpha = 0.2, double tau0 = 1.0) {
    return m * std::exp(-alpha * tau0);
}

inline double ginv_cf(double m, double slope = 0.5) {
    return std::min(m / slope, 1.0);
}

inline double ginv_prime_cf(double m, double slope = 0.5) {
    return (m > slope) ? 0.0 : 1.0 / slope;
}

inline double delta_cf(double m, const CanonicalParams& p = {}) {
    return theta_cf(ginv_cf(m, p.g_slope), p.alpha, p.tau0);
}

inline double K_cf(double t, const CanonicalParams& p = {}) {
    return std::exp(-(p.delta0 + p.alpha) * t);
}

inline double xi_cf(double t, const CanonicalParams& p = {}) {
    return std::exp(-(p.gamma0 + p.alpha) * t);
}

inline double zeta_cf(double m, const CanonicalParams& p = {}) {
    if (m > p.g_slope) return 0.0;
    return (2.0 / p.g_slope) * xi_cf(p.tau0, p);
}

inline double beta_cf(double x, const CanonicalParams& p = {}) {
    if (x < 0.0) return p.beta0;
    const double thn = std::pow(p.theta_half, p.hill_n);
    return p.beta0 * thn / (thn + std::pow(x, p.hill_n));
}

inline double mu_cf(double m, const CanonicalParams& p = {}) {
    return p.mu0 + p.mu1 * m;
}

inline double gamma_surface_cf(double m, double a, const CanonicalParams& p = {}) {
    const double mb = mu_cf(m, p);
    return beta_cf(mb, p) * mb * std::exp(-p.age_rate * a);
}

/**
 * Closed-form evaluation of the integrated-formulation operator applied to a
 * gridded field, for the canonical family. Quadrature panels are aligned to
 * the field's time grid (the integrand has kinks there from bilinear
 * interpolation) and split at the delay seam s = tau0 and at the clamp
 * crossing where the transported maturity passes g(1).
 */
inline double oracle_H(double t, double m, const matpop::SolutionField& N,
                       const CanonicalParams& p = {}, int panel_order = 6) {
    const double alpha = p.alpha;
    auto m_at = [&](double s) { return chi_cf(-(t - s), m, alpha); };

    auto loss_integrand = [&](double s) {
        const double ms = m_at(s);
        const double x = N.eval(s, ms);
        return K_cf(t - s, p) * beta_cf(x, p) * x;
    };
    auto birth_integrand = [&](double s) {
        const double ms = m_at(s);
        double F;
        if (s <= p.tau0) {
            const double gp = ginv_prime_cf(ms, p.g_slope);
            if (gp == 0.0) {
                F = 0.0;
            } else {
                const double y = ginv_cf(ms, p.g_slope);
                F = 2.0 * gp * xi_cf(s, p) *
                    gamma_surface_cf(chi_cf(-s, y, alpha), p.tau0 - s, p);
            }
        } else {
            const double d = delta_cf(ms, p);
            const double x = N.eval(s - p.tau0, d);
            F = zeta_cf(ms, p) * beta_cf(x, p) * x;
        }
        return K_cf(t - s, p) * F;
    };

    // Panel breakpoints: every grid time, the delay seam, the clamp crossing.
    std::vector<double> breaks;
    for (int i = 0;; ++i) {
        const double s = i * N.dt;
        if (s >= t - 1e-14) break;
        if (s > 0.0) breaks.push_back(s);
    }
    if (p.tau0 < t) breaks.push_back(p.tau0);
    if (m > p.g_slope) {
        // m_at(s) = g_slope at s = t - log(m / g_slope) / alpha
        const double s_cross = t - std::log(m / p.g_slope) / alpha;
        if (s_cross > 0.0 && s_cross < t) breaks.push_back(s_cross);
    }
    breaks.push_back(t);
    std::sort(breaks.begin(), breaks.end());

    double loss = 0.0, birth = 0.0;
    double lo = 0.0;
    for (double hi : breaks) {
        if (hi - lo > 1e-14) {
            loss += matpop::num::integrate_panel(loss_integrand, lo, hi, panel_order);
            birth += matpop::num::integrate_panel(birth_integrand, lo, hi, panel_order);
        }
        lo = hi;
    }
    return K_cf(t, p) * mu_cf(chi_cf(-t, m, alpha), p) - loss + birth;
}

}  // namespace testsupport

#endif
