#ifndef MATPOP_ANALYSIS_HPP
#define MATPOP_ANALYSIS_HPP

#include <cstdint>
#include <vector>

#include "matpop/solver.hpp"

namespace matpop {

/**
 * Constants witnessing the trivial equilibrium's stability:
 *
 *   delta_tilde = inf (delta + V'),  gamma_tilde = inf (gamma + V'),
 *   kappa = sup |(g^{-1})'|,         lipschitz = L near zero,
 *
 * a decay rate rho in (0, delta_tilde) with
 * L < (delta_tilde - rho) / (1 + |zeta| e^{rho tau_max}), and the prefactor
 *
 *   c = (delta_tilde - rho) eps / (delta_tilde - rho - L (1 + |zeta| e^{rho tau_max})).
 *
 * rho is taken at the midpoint of its feasible interval to leave slack for
 * discretization error in envelope checks.
 */
struct StabilityCertificate {
    double delta_tilde = 0.0;
    double gamma_tilde = 0.0;
    double kappa = 0.0;
    double lipschitz = 0.0;
    bool lipschitz_exact = false;  // Hill form: L = sup beta0
    double zeta_norm = 0.0;
    double tau_max = 0.0;
    double eps = 0.0;

    double rho = 0.0;
    double rho_sup = 0.0;
    double c = 0.0;
    bool feasible = false;

    double margin = 0.0;        // min(gamma_tilde, delta_tilde) - L (1 + 2 kappa)
    bool local_ok = false;      // L (1 + 2 kappa) < delta_tilde
    bool local_both_ok = false; // L (1 + 2 kappa) < min(gamma_tilde, delta_tilde)
    bool global_ok = false;     // globally Lipschitz reintroduction + both margins
};

StabilityCertificate stability_certificate(const ModelCoefficients& coeffs,
                                           const CommitmentMaps& maps, double eps_neighborhood,
                                           int grid_resolution = 2001);

struct PositivityReport {
    double min_N = 0.0;
    double min_P = 0.0;
    double min_regulation_sample = 0.0;  // min of (beta(m,x)-beta(m,0)) * -x over samples
    bool regulation_ok = false;          // (beta(m,x)-beta(m,0)) x <= 0 sampled
    bool data_nonnegative = false;
    double min_group_reintroduction = 0.0;  // (beta(m,0)-beta(m,N)) N on grid nodes
    double min_group_birth = 0.0;           // birth source samples
    bool applicable = false;
    bool pass = false;
    double tol = -1e-10;
    std::uint64_t seed = 0;
};

/// Checks the computed fields against the positivity theorem: under the
/// regulation property of beta and nonnegative data, both populations stay
/// nonnegative. Also verifies the sign structure of the shifted-operator
/// integrand with shift beta(.,0), which is what makes the theorem work.
PositivityReport positivity_audit(const SolutionField& N, const SolutionField& P,
                                  const InitialData& data, const CommitmentMaps& maps,
                                  std::uint64_t seed = 1, double tol = -1e-10);

struct DecayFit {
    double rate = 0.0;          // fitted decay rate, m = 0 node excluded
    double rate_with_m0 = 0.0;  // same fit including the m = 0 node
    double prefactor = 0.0;
    double rms = 0.0;
    bool infinite_decay = false;  // field identically zero past t_start
    bool envelope_checked = false;
    bool envelope_ok = false;
    int envelope_violations = 0;
};

/// Least-squares fit of log sup_m |N(t, .)| on [t_start, T]; when a feasible
/// certificate is supplied, also checks the exponential envelope
/// sup_m |N(t,m)| <= c e^{-rho (t - tau_max)} node-by-node for t >= tau_max.
DecayFit decay_rate_estimate(const SolutionField& N, double t_start,
                             const StabilityCertificate* certificate = nullptr);

struct ContinuityReport {
    std::vector<double> t;
    std::vector<double> deviation;  // ||N1(t,.) - N2(t,.)|| on the grid
    std::vector<double> bound;      // data_distance * C(t)
    double data_distance = 0.0;     // ||mu1-mu2|| + ||Gamma1-Gamma2||
    double max_ratio = 0.0;
    double grow_constant = 0.0;     // C(horizon)
    bool within_bound = false;
};

/// Solves both data sets and compares the deviation curve against the
/// Gronwall-type constant C(t) = K max{1, C~} exp(L(R) K (1 + |zeta|) t).
ContinuityReport continuity_probe(const InitialData& data1, const InitialData& data2,
                                  const CommitmentMaps& maps, double horizon,
                                  const GridSpec& grid = {}, const SolverOptions& options = {});

}  // namespace matpop

#endif
