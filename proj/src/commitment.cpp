#include "matpop/commitment.hpp"

#include <algorithm>
#include <cmath>

#include "matpop/errors.hpp"
#include "matpop/grid.hpp"

namespace matpop {

CommitmentMapsBuilder::CommitmentMapsBuilder(ModelCoefficients coeffs, CommitmentOptions options)
    : coeffs_(std::move(coeffs)), options_(options), flow_(coeffs_.velocity, options.flow) {}

double CommitmentMapsBuilder::theta(double m) const {
    if (m <= 0.0) return 0.0;  // continuous extension at the degenerate point
    const auto& tau = coeffs_.division_age;
    // f(x) = tof(x, m) - tau(x) is continuous and strictly decreasing on
    // (0, m], with f(m) = -tau(m) < 0 and f -> +inf as x -> 0.
    auto f = [&](double x) { return flow_.time_of_flight(x, m) - tau(x); };
    double lo = 0.5 * m;
    int halvings = 0;
    while (f(lo) <= 0.0) {
        lo *= 0.5;
        if (++halvings > 600)
            throw RootFindError(
                "theta: could not bracket the commitment maturity; "
                "the commitment-time condition is likely violated");
    }
    return num::bisect(f, lo, m, options_.theta_xtol, options_.theta_max_iter);
}

std::pair<double, double> CommitmentMapsBuilder::g_inverse(double m) const {
    return coeffs_.division_map.inverse(m);
}

double CommitmentMapsBuilder::delta_map(double m) const {
    return theta(g_inverse(m).first);
}

CommitmentMaps::CommitmentMaps(ModelCoefficients coeffs, CharacteristicFlow flow,
                               num::QuadratureSettings kernel_quad)
    : coeffs_(std::move(coeffs)),
      flow_(std::move(flow)),
      kernel_resting_(coeffs_, flow_, SurvivalKernel::Field::Resting, kernel_quad),
      kernel_prolif_(coeffs_, flow_, SurvivalKernel::Field::Proliferating, kernel_quad) {}

CommitmentMaps CommitmentMapsBuilder::build_factors() const {
    CommitmentMaps maps(coeffs_, flow_, options_.kernel_quad);
    maps.g1_ = coeffs_.division_map.g1();

    // Graded grid with the clamp point g(1) inserted as a node, so the
    // tabulated zeta keeps its one-sided value there.
    std::vector<double> grid = graded_maturity_grid(options_.table_nodes, options_.table_min_cell);
    grid.push_back(maps.g1_);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               grid.end());
    maps.grid_ = grid;

    const auto& tau = coeffs_.division_age;
    const auto& V = coeffs_.velocity;
    const std::size_t n = grid.size();
    maps.theta_vals_.resize(n);
    maps.delta_vals_.resize(n);
    maps.ginv_vals_.resize(n);
    maps.ginv_prime_vals_.resize(n);
    maps.pi_vals_.resize(n);
    maps.zeta_vals_.resize(n);

    for (std::size_t i = 0; i < n; ++i) maps.theta_vals_[i] = theta(grid[i]);
    maps.theta_interp_ = num::PchipCurve(grid, maps.theta_vals_);

    maps.tau_max_ = tau.max_on_unit();
    maps.tau_delta_min_ = 1e300;
    maps.kappa_ = 0.0;
    maps.zeta_norm_ = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double m = grid[i];
        const auto [gi, gip] = g_inverse(m);
        maps.ginv_vals_[i] = gi;
        maps.ginv_prime_vals_[i] = gip;
        maps.kappa_ = std::max(maps.kappa_, std::abs(gip));

        const double th = maps.theta_vals_[i];
        maps.pi_vals_[i] = 1.0 / (1.0 + V(th) * tau.derivative(th));

        const double d = maps.theta_interp_(gi);
        maps.delta_vals_[i] = d;
        maps.tau_delta_min_ = std::min(maps.tau_delta_min_, tau(d));

        const double z = (gip == 0.0) ? 0.0 : 2.0 * gip * maps.kernel_prolif_(tau(d), gi);
        maps.zeta_vals_[i] = z;
        maps.zeta_norm_ = std::max(maps.zeta_norm_, std::abs(z));
    }
    if (!(maps.tau_delta_min_ > 0.0))
        throw ValidationError("division age must be positive along the daughter map");
    return maps;
}

double CommitmentMaps::theta(double m) const {
    if (m <= 0.0) return 0.0;
    if (m >= 1.0) return theta_vals_.back();
    return theta_interp_(m);
}

std::pair<double, double> CommitmentMaps::g_inverse(double m) const {
    return coeffs_.division_map.inverse(m);
}

double CommitmentMaps::delta(double m) const {
    return theta(coeffs_.division_map.inverse(m).first);
}

double CommitmentMaps::pi_factor(double m) const {
    const double th = theta(m);
    return 1.0 / (1.0 + coeffs_.velocity(th) * coeffs_.division_age.derivative(th));
}

double CommitmentMaps::zeta(double m) const {
    const auto [gi, gip] = coeffs_.division_map.inverse(m);
    if (gip == 0.0) return 0.0;
    const double d = theta(gi);
    return 2.0 * gip * kernel_prolif_(coeffs_.division_age(d), gi);
}

}  // namespace matpop
