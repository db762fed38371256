#ifndef MATPOP_SOLVER_HPP
#define MATPOP_SOLVER_HPP

#include <functional>
#include <vector>

#include "matpop/commitment.hpp"
#include "matpop/model.hpp"

namespace matpop {

struct GridSpec {
    int maturity_nodes = 200;
    double min_cell = 1e-4;   // smallest maturity cell, adjacent to m = 0
    double dt = 0.0;          // 0: derive from dt_factor
    double dt_factor = 20.0;  // dt = tau_delta_min / dt_factor
    std::vector<double> explicit_nodes;  // overrides the graded grid when set
};

struct SolverOptions {
    double tol = 1e-10;        // sup-norm Picard convergence tolerance
    int max_iterations = 400;  // per window
    double q_target = 0.5;     // desired contraction estimate per window
    int threads = 1;
    int max_window_retries = 8;
};

/**
 * Gridded history-carrying field on [t_begin, t_end] x [0,1]. Rows at t <= 0
 * hold the constant history extension; interpolation is bilinear and exact
 * at nodes.
 */
struct SolutionField {
    double t_begin = 0.0;
    double dt = 1.0;
    std::vector<double> m;
    int nt = 0;
    std::vector<double> values;  // row-major: values[i * m.size() + j]

    int nm() const { return (int)m.size(); }
    double time(int i) const { return t_begin + i * dt; }
    double end_time() const { return time(nt - 1); }
    double& at(int i, int j) { return values[(std::size_t)i * m.size() + j]; }
    double at(int i, int j) const { return values[(std::size_t)i * m.size() + j]; }

    double eval(double t, double mat) const;
    double max_abs_row(int i) const;
    double sup_abs() const;
    /// Index of the t = 0 row.
    int zero_row() const;
};

/// Field spanning [-ceil(tau_max/dt)*dt, ceil(horizon/dt)*dt] with every row
/// at t <= 0 set to mu_bar (the history extension) and later rows zeroed.
SolutionField make_initial_field(const std::vector<double>& mgrid, double dt, double tau_max,
                                 double horizon, const std::function<double(double)>& mu_bar);

/**
 * Delayed birth source feeding the resting equation. For t within the
 * initial layer (t <= tau(delta(m))) the value is read off the initial
 * proliferating surface transported along characteristics; afterwards it is
 * zeta(m) beta(delta(m), x) x with x the delayed resting density.
 */
double birth_source(double t, double m, double x, const CommitmentMaps& maps,
                    const InitialData& data);

/// Division-age boundary flux drained from the proliferating equation;
/// mirrors birth_source with (theta, pi, xi) in place of (delta, zeta).
double cytokinesis_loss(double t, double m, double x, const CommitmentMaps& maps,
                        const InitialData& data);

/// Age integral of the initial proliferating surface up to tau(theta(m)).
double gamma_bar(const InitialData& data, const CommitmentMaps& maps, double m);

struct PicardStepResult {
    SolutionField field;
    double sup_change = 0.0;
};

/**
 * One application of the integrated-formulation operator to the rows after
 * window_start (a grid time >= 0); rows at and before window_start are the
 * fixed data. window_start = 0 is the plain operator with the initial
 * kernel term; later starts use the restarted kernel term.
 */
PicardStepResult picard_step(const SolutionField& field, const InitialData& data,
                             const CommitmentMaps& maps, double window_start = 0.0,
                             const SolverOptions& options = {});

/// Direct quadrature of the proliferating equation given a resting solution.
SolutionField proliferating_field(const SolutionField& N, const InitialData& data,
                                  const CommitmentMaps& maps, const SolverOptions& options = {});

/**
 * The exponentially shifted operator family applied to a field: for any
 * continuous shift a, a fixed point of the plain operator is reproduced
 * unchanged. Used by the positivity audit, where a(m) = beta(m, 0) makes
 * every integrand group nonnegative.
 */
SolutionField apply_shifted_picard(const SolutionField& N, const std::function<double(double)>& shift,
                                   const InitialData& data, const CommitmentMaps& maps,
                                   const SolverOptions& options = {});

/// sup over grid nodes of |N - H(N)| with H applied per window of the given
/// partition (times >= 0, first must be 0).
double fixed_point_residual(const SolutionField& N, const InitialData& data,
                            const CommitmentMaps& maps,
                            const std::vector<double>& window_starts = {0.0},
                            const SolverOptions& options = {});

struct WindowReport {
    double t_begin = 0.0;
    double t_end = 0.0;
    double contraction_q = 0.0;  // kernel_bound * (1 + |zeta|) * L(r) * width
    double radius = 0.0;         // Lipschitz radius r
    int iterations = 0;
    double final_change = 0.0;
    int retries = 0;
    std::vector<double> changes;  // sup-norm change per iterate
};

struct SolveDiagnostics {
    std::vector<WindowReport> windows;
    double residual_sup = 0.0;
    double kernel_bound = 1.0;
    double zeta_norm = 0.0;
    double lipschitz = 0.0;
    double tau_max = 0.0;
    double tau_delta_min = 0.0;
    double dt = 0.0;
    int maturity_nodes = 0;
    double horizon = 0.0;
};

struct SolveResult {
    SolutionField N;
    SolutionField P;
    SolveDiagnostics diagnostics;
};

/**
 * Windowed Picard iteration of the integrated formulation. Window lengths
 * are chosen so the contraction estimate stays at q_target (always < 1),
 * shrinking on divergence; the proliferating field is then obtained by
 * direct quadrature. Throws SolverError when a window cannot be contracted
 * at a single time step or the iteration cap is exceeded.
 */
SolveResult solve(const InitialData& data, const CommitmentMaps& maps, double horizon,
                  const GridSpec& grid = {}, const SolverOptions& options = {});

/// Local Lipschitz constant of x |-> x beta(m, x) over |x| <= radius,
/// estimated by dense sampling in both arguments.
double lipschitz_xbeta(const Reintroduction& beta, double radius, int m_samples = 201,
                       int x_samples = 801);

/// max over grid nodes of |f|.
double sup_grid(const std::function<double(double)>& f, const std::vector<double>& grid);

/// sup of |gamma| over its age-bounded domain, sampled.
double gamma_sup_on_domain(const InitialData& data, const CommitmentMaps& maps,
                           int m_samples = 201, int a_samples = 33);

}  // namespace matpop

#endif
