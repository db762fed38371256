#include "matpop/num/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "matpop/errors.hpp"

namespace matpop::num {

namespace {

// Newton iteration on Legendre polynomials; nodes symmetric about 0.
GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

double panel(const std::function<double(double)>& f, double a, double b, const GaussRule& r) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (size_t q = 0; q < r.nodes.size(); ++q)
        sum += r.weights[q] * f(mid + half * r.nodes[q]);
    return half * sum;
}

double adaptive_panel(const std::function<double(double)>& f, double a, double b,
                      const GaussRule& full, const GaussRule& half_rule,
                      double tol, int depth, int max_depth) {
    const double coarse = panel(f, a, b, half_rule);
    const double fine = panel(f, a, b, full);
    const double scale = std::max(1.0, std::abs(fine));
    if (std::abs(fine - coarse) <= tol * scale) return fine;
    if (depth >= max_depth)
        throw QuadratureError("quadrature failed to converge on subinterval", a, b);
    const double mid = 0.5 * (a + b);
    return adaptive_panel(f, a, mid, full, half_rule, tol, depth + 1, max_depth) +
           adaptive_panel(f, mid, b, full, half_rule, tol, depth + 1, max_depth);
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureSettings& settings) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, settings);
    const GaussRule& full = gauss_legendre(settings.order);
    const GaussRule& coarse = gauss_legendre(std::max(2, settings.order / 2));
    const int n_panels = std::max(1, (int)std::ceil((b - a) / settings.panel_width));
    const double h = (b - a) / n_panels;
    double total = 0.0;
    for (int k = 0; k < n_panels; ++k) {
        const double lo = a + k * h;
        const double hi = (k == n_panels - 1) ? b : lo + h;
        total += adaptive_panel(f, lo, hi, full, coarse, settings.refine_tol, 0,
                                settings.max_depth);
    }
    return total;
}

double integrate_panel(const std::function<double(double)>& f, double a, double b, int order) {
    if (a == b) return 0.0;
    return panel(f, a, b, gauss_legendre(order));
}

}  // namespace matpop::num
