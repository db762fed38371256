#ifndef MATPOP_COMMITMENT_HPP
#define MATPOP_COMMITMENT_HPP

#include <utility>
#include <vector>

#include "matpop/flow.hpp"
#include "matpop/model.hpp"
#include "matpop/num/interp.hpp"

namespace matpop {

struct CommitmentOptions {
    int table_nodes = 513;
    double table_min_cell = 1e-4;
    double theta_xtol = 1e-12;
    int theta_max_iter = 80;
    FlowSettings flow;
    num::QuadratureSettings kernel_quad;
};

class CommitmentMaps;

/**
 * Computes the commitment geometry of the model:
 *
 *   theta(m)  maturity at commitment of a cell dividing at maturity m; the
 *             unique root of time_of_flight(x, m) = tau(x), located by
 *             bisection on a strictly decreasing function;
 *   delta(m)  = theta(g^{-1}(m)), commitment maturity of the mother of a
 *             daughter born at maturity m;
 *   zeta(m)   = 2 (g^{-1})'(m) xi(tau(delta(m)), g^{-1}(m)), the delayed
 *             birth-rate factor (zero beyond g(1) where the inverse clamps);
 *   pi(m)     = 1 / (1 + V(theta(m)) tau'(theta(m))), the division-age
 *             boundary factor (identically 1 for constant tau).
 */
class CommitmentMapsBuilder {
public:
    CommitmentMapsBuilder(ModelCoefficients coeffs, CommitmentOptions options = {});

    /// Direct bisection solve; residual |tof(theta, m) - tau(theta)| below
    /// tolerance. A bracketing failure means the commitment-time condition
    /// was violated upstream.
    double theta(double m) const;
    std::pair<double, double> g_inverse(double m) const;
    double delta_map(double m) const;

    /// Tabulates all maps on a graded grid and freezes the derived scalars.
    CommitmentMaps build_factors() const;

    const CharacteristicFlow& flow() const { return flow_; }

private:
    ModelCoefficients coeffs_;
    CommitmentOptions options_;
    CharacteristicFlow flow_;
};

/// Immutable tabulated commitment geometry, cheap to evaluate. Holds the
/// flow and both survival kernels so downstream consumers need one handle.
class CommitmentMaps {
public:
    double theta(double m) const;
    std::pair<double, double> g_inverse(double m) const;
    double delta(double m) const;
    double pi_factor(double m) const;
    double zeta(double m) const;

    double tau_max() const { return tau_max_; }
    double tau_delta_min() const { return tau_delta_min_; }
    double kappa() const { return kappa_; }
    double zeta_norm() const { return zeta_norm_; }
    double g1() const { return g1_; }

    const ModelCoefficients& coeffs() const { return coeffs_; }
    const CharacteristicFlow& flow() const { return flow_; }
    const SurvivalKernel& kernel_resting() const { return kernel_resting_; }
    const SurvivalKernel& kernel_proliferating() const { return kernel_prolif_; }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& theta_table() const { return theta_vals_; }
    const std::vector<double>& delta_table() const { return delta_vals_; }
    const std::vector<double>& ginv_table() const { return ginv_vals_; }
    const std::vector<double>& ginv_prime_table() const { return ginv_prime_vals_; }
    const std::vector<double>& pi_table() const { return pi_vals_; }
    const std::vector<double>& zeta_table() const { return zeta_vals_; }

private:
    friend class CommitmentMapsBuilder;
    CommitmentMaps(ModelCoefficients coeffs, CharacteristicFlow flow,
                   num::QuadratureSettings kernel_quad);

    ModelCoefficients coeffs_;
    CharacteristicFlow flow_;
    SurvivalKernel kernel_resting_;
    SurvivalKernel kernel_prolif_;

    std::vector<double> grid_;
    std::vector<double> theta_vals_, delta_vals_, ginv_vals_, ginv_prime_vals_;
    std::vector<double> pi_vals_, zeta_vals_;
    num::PchipCurve theta_interp_;

    double tau_max_ = 0.0;
    double tau_delta_min_ = 0.0;
    double kappa_ = 0.0;
    double zeta_norm_ = 0.0;
    double g1_ = 0.0;
};

}  // namespace matpop

#endif
