#include "matpop/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "matpop/num/fit.hpp"
#include "matpop/num/rng.hpp"
#include "matpop/num/rootfind.hpp"

namespace matpop {

StabilityCertificate stability_certificate(const ModelCoefficients& coeffs,
                                           const CommitmentMaps& maps, double eps_neighborhood,
                                           int grid_resolution) {
    StabilityCertificate cert;
    cert.eps = eps_neighborhood;
    cert.tau_max = maps.tau_max();
    cert.kappa = maps.kappa();
    cert.zeta_norm = maps.zeta_norm();

    const int n = std::max(grid_resolution, 8);
    double dmin = 1e300, gmin = 1e300;
    for (int i = 0; i <= n; ++i) {
        const double m = (double)i / n;
        const double vp = coeffs.velocity.derivative(m);
        dmin = std::min(dmin, coeffs.resting_loss(m) + vp);
        gmin = std::min(gmin, coeffs.apoptosis(m) + vp);
    }
    cert.delta_tilde = dmin;
    cert.gamma_tilde = gmin;

    if (coeffs.reintroduction.is_hill()) {
        cert.lipschitz = coeffs.reintroduction.beta0_sup(n);
        cert.lipschitz_exact = true;
    } else {
        cert.lipschitz = lipschitz_xbeta(coeffs.reintroduction, eps_neighborhood);
        cert.lipschitz_exact = false;
    }

    const double L = cert.lipschitz;
    cert.margin = std::min(cert.gamma_tilde, cert.delta_tilde) - L * (1.0 + 2.0 * cert.kappa);
    cert.local_ok = L * (1.0 + 2.0 * cert.kappa) < cert.delta_tilde;
    cert.local_both_ok = cert.margin > 0.0;
    cert.global_ok = cert.lipschitz_exact && cert.local_both_ok;

    // Feasible decay rates satisfy L (1 + |zeta| e^{rho tau_max}) + rho < delta_tilde.
    auto phi = [&](double rho) {
        return L * (1.0 + cert.zeta_norm * std::exp(rho * cert.tau_max)) + rho -
               cert.delta_tilde;
    };
    if (cert.delta_tilde > 0.0 && phi(0.0) < 0.0) {
        cert.feasible = true;
        cert.rho_sup = (phi(cert.delta_tilde) <= 0.0)
                           ? cert.delta_tilde
                           : num::bisect(phi, 0.0, cert.delta_tilde, 1e-14, 200);
        cert.rho = 0.5 * cert.rho_sup;
        cert.c = (cert.delta_tilde - cert.rho) * eps_neighborhood /
                 (cert.delta_tilde - cert.rho -
                  L * (1.0 + cert.zeta_norm * std::exp(cert.rho * cert.tau_max)));
    }
    return cert;
}

PositivityReport positivity_audit(const SolutionField& N, const SolutionField& P,
                                  const InitialData& data, const CommitmentMaps& maps,
                                  std::uint64_t seed, double tol) {
    PositivityReport rep;
    rep.tol = tol;
    rep.seed = seed;
    const ModelCoefficients& coeffs = maps.coeffs();

    // Regulation property of the reintroduction rate, sampled.
    num::Rng rng(seed);
    const double range = std::max(1.0, 2.0 * N.sup_abs());
    rep.min_regulation_sample = 0.0;
    rep.regulation_ok = true;
    for (int k = 0; k < 512; ++k) {
        const double m = rng.uniform(0.0, 1.0);
        const double x = rng.uniform(-range, range);
        const double v = (eval_beta(coeffs, m, x) - eval_beta(coeffs, m, 0.0)) * x;
        rep.min_regulation_sample = std::min(rep.min_regulation_sample, -v);
        if (v > 1e-14) rep.regulation_ok = false;
    }

    // Data signs.
    double data_min = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double m = i / 200.0;
        data_min = std::min(data_min, data.mu_bar(m));
        const double amax = coeffs.division_age(maps.theta(m));
        for (int k = 0; k <= 8; ++k) data_min = std::min(data_min, data.gamma(m, amax * k / 8.0));
    }
    rep.data_nonnegative = data_min >= tol;

    rep.min_N = *std::min_element(N.values.begin(), N.values.end());
    rep.min_P = *std::min_element(P.values.begin(), P.values.end());

    // Sign structure of the shifted-operator integrand with shift beta(.,0):
    // the reintroduction group (beta(m,0) - beta(m,N)) N and the birth source
    // must both be nonnegative.
    rep.min_group_reintroduction = 0.0;
    const int hist = N.zero_row();
    for (int i = hist; i < N.nt; ++i)
        for (int j = 0; j < N.nm(); ++j) {
            const double x = N.at(i, j);
            const double v = (eval_beta(coeffs, N.m[j], 0.0) - eval_beta(coeffs, N.m[j], x)) * x;
            rep.min_group_reintroduction = std::min(rep.min_group_reintroduction, v);
        }
    rep.min_group_birth = 0.0;
    const int ti_stride = std::max(1, (N.nt - hist) / 40);
    const int mj_stride = std::max(1, N.nm() / 40);
    for (int i = hist; i < N.nt; i += ti_stride)
        for (int j = 0; j < N.nm(); j += mj_stride) {
            const double t = N.time(i);
            const double m = N.m[j];
            const double d = maps.delta(m);
            const double tau_d = coeffs.division_age(d);
            const double x = (t > tau_d) ? N.eval(t - tau_d, d) : 0.0;
            rep.min_group_birth =
                std::min(rep.min_group_birth, birth_source(t, m, x, maps, data));
        }

    rep.applicable = rep.regulation_ok && rep.data_nonnegative;
    rep.pass = rep.applicable && rep.min_N >= tol && rep.min_P >= tol;
    return rep;
}

DecayFit decay_rate_estimate(const SolutionField& N, double t_start,
                             const StabilityCertificate* certificate) {
    DecayFit fit;
    std::vector<double> ts, ys, ys_m0;
    for (int i = 0; i < N.nt; ++i) {
        const double t = N.time(i);
        if (t < t_start - 1e-12) continue;
        double sup = 0.0, sup_all = 0.0;
        for (int j = 0; j < N.nm(); ++j) {
            const double v = std::abs(N.at(i, j));
            sup_all = std::max(sup_all, v);
            if (j > 0) sup = std::max(sup, v);
        }
        if (sup > 0.0 && sup_all > 0.0) {
            ts.push_back(t - t_start);
            ys.push_back(std::log(sup));
            ys_m0.push_back(std::log(sup_all));
        }
    }
    if (ts.size() < 2) {
        fit.infinite_decay = true;
        return fit;
    }
    const auto line = num::linear_fit(ts, ys);
    fit.rate = -line.slope;
    fit.prefactor = std::exp(line.intercept);
    fit.rms = line.rms;
    fit.rate_with_m0 = -num::linear_fit(ts, ys_m0).slope;

    if (certificate && certificate->feasible) {
        fit.envelope_checked = true;
        fit.envelope_ok = true;
        const double tau_max = certificate->tau_max;
        for (int i = 0; i < N.nt; ++i) {
            const double t = N.time(i);
            if (t < tau_max - 1e-12) continue;
            const double cap = certificate->c * std::exp(-certificate->rho * (t - tau_max));
            if (N.max_abs_row(i) > cap * (1.0 + 1e-12)) {
                fit.envelope_ok = false;
                ++fit.envelope_violations;
            }
        }
    }
    return fit;
}

ContinuityReport continuity_probe(const InitialData& data1, const InitialData& data2,
                                  const CommitmentMaps& maps, double horizon,
                                  const GridSpec& grid, const SolverOptions& options) {
    ContinuityReport rep;
    const SolveResult r1 = solve(data1, maps, horizon, grid, options);
    const SolveResult r2 = solve(data2, maps, horizon, grid, options);

    const int hist = r1.N.zero_row();
    double mu_dist = 0.0;
    for (int j = 0; j < r1.N.nm(); ++j)
        mu_dist = std::max(mu_dist,
                           std::abs(data1.mu_bar(r1.N.m[j]) - data2.mu_bar(r1.N.m[j])));
    double gamma_dist = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double m = i / 200.0;
        const double amax = maps.coeffs().division_age(maps.theta(m));
        for (int k = 0; k <= 16; ++k) {
            const double a = amax * k / 16.0;
            gamma_dist = std::max(gamma_dist, std::abs(data1.gamma(m, a) - data2.gamma(m, a)));
        }
    }
    rep.data_distance = mu_dist + gamma_dist;

    // C(t) = K max{1, C~} e^{L(R) K (1 + |zeta|) t} with R = 1 + running sup.
    double sup1 = 0.0;
    for (int i = hist; i < r1.N.nt; ++i) sup1 = std::max(sup1, r1.N.max_abs_row(i));
    const double R = 1.0 + sup1;
    const double L = lipschitz_xbeta(maps.coeffs().reintroduction, R);
    const double K = r1.diagnostics.kernel_bound;
    double C_tilde = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double m = i / 100.0;
        const auto [gi, gp] = maps.g_inverse(m);
        if (gp == 0.0) continue;
        const double amax = maps.coeffs().division_age(maps.theta(m));
        for (int k = 0; k <= 8; ++k)
            C_tilde = std::max(C_tilde,
                               std::abs(2.0 * gp * maps.kernel_proliferating()(amax * k / 8.0, gi)));
    }
    const double front = K * std::max(1.0, C_tilde);
    const double rate = L * K * (1.0 + maps.zeta_norm());

    rep.within_bound = true;
    for (int i = hist; i < r1.N.nt; ++i) {
        const double t = r1.N.time(i);
        double dev = 0.0;
        for (int j = 0; j < r1.N.nm(); ++j)
            dev = std::max(dev, std::abs(r1.N.at(i, j) - r2.N.at(i, j)));
        const double bound = rep.data_distance * front * std::exp(rate * t);
        rep.t.push_back(t);
        rep.deviation.push_back(dev);
        rep.bound.push_back(bound);
        if (rep.data_distance > 0.0)
            rep.max_ratio = std::max(rep.max_ratio, dev / rep.data_distance);
        if (dev > bound + 1e-12) rep.within_bound = false;
    }
    rep.grow_constant = front * std::exp(rate * r1.N.end_time());
    return rep;
}

}  // namespace matpop
