#ifndef MATPOP_NUM_QUADRATURE_HPP
#define MATPOP_NUM_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace matpop::num {

struct GaussRule {
    std::vector<double> nodes;    // on [-1,1]
    std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order, cached after first use.
const GaussRule& gauss_legendre(int order);

struct QuadratureSettings {
    int order = 16;                // nodes per panel
    double panel_width = 1.0;      // max panel length before splitting
    double refine_tol = 1e-12;     // panel disagreement triggering subdivision
    int max_depth = 14;
};

/// Composite Gauss-Legendre on [a,b]. Each panel is checked against the
/// half-order rule and subdivided on disagreement; exhausting max_depth
/// raises QuadratureError carrying the offending subinterval.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureSettings& settings = {});

/// Single fixed panel, no error control. Used in hot paths where the
/// integrand is known to be smooth over [a,b].
double integrate_panel(const std::function<double(double)>& f, double a, double b,
                       int order = 16);

}  // namespace matpop::num

#endif
