#include <doctest.h>

#include <cmath>

#include "matpop/grid.hpp"
#include "matpop/num/fit.hpp"
#include "matpop/num/interp.hpp"
#include "matpop/num/quadrature.hpp"
#include "matpop/num/rootfind.hpp"

using namespace matpop;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    // order-16 rule is exact through degree 31
    auto f = [](double x) { return 7.0 * std::pow(x, 9) - 3.0 * x * x + 1.0; };
    const double exact = 7.0 / 10.0 * std::pow(2.0, 10) - std::pow(2.0, 3) + 2.0;
    CHECK(num::integrate_panel(f, 0.0, 2.0, 16) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("adaptive quadrature handles mild stiffness and reports failure") {
    const double v = num::integrate([](double x) { return std::exp(-50.0 * x); }, 0.0, 4.0);
    CHECK(v == doctest::Approx(1.0 / 50.0).epsilon(1e-12));

    // a genuinely nasty integrand exhausts the subdivision depth
    auto spike = [](double x) { return (x == 0.5) ? 1e308 : 1.0 / std::sqrt(std::abs(x - 0.5)); };
    CHECK_THROWS_AS(num::integrate(spike, 0.0, 1.0, {16, 1.0, 1e-14, 6}), QuadratureError);
}

TEST_CASE("pchip reproduces linear data exactly and preserves monotonicity") {
    std::vector<double> x{0.0, 0.1, 0.35, 0.9, 1.0};
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * v - 1.0);
    num::PchipCurve lin(x, y);
    CHECK(lin(0.6234) == doctest::Approx(2.5 * 0.6234 - 1.0).epsilon(1e-15));
    CHECK(lin.derivative(0.77) == doctest::Approx(2.5).epsilon(1e-12));

    std::vector<double> ym{0.0, 0.02, 0.5, 0.51, 2.0};
    num::PchipCurve mono(x, ym);
    double prev = mono(0.0);
    for (int i = 1; i <= 500; ++i) {
        const double v = mono(i / 500.0);
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
}

TEST_CASE("find_cell clamps to valid cells") {
    std::vector<double> x{0.0, 0.25, 0.5, 1.0};
    CHECK(num::find_cell(x, -1.0) == 0);
    CHECK(num::find_cell(x, 0.3) == 1);
    CHECK(num::find_cell(x, 1.0) == 2);
    CHECK(num::find_cell(x, 2.0) == 2);
}

TEST_CASE("bisection locates a bracketed root") {
    const double r = num::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-13);
    CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(num::bisect([](double x) { return x * x + 1.0; }, 0.0, 1.0), RootFindError);
}

TEST_CASE("linear fit recovers slope and intercept") {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(0.3 * i);
        ys.push_back(-0.7 * 0.3 * i + 4.2);
    }
    const auto fit = num::linear_fit(xs, ys);
    CHECK(fit.slope == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(4.2).epsilon(1e-12));
    CHECK(fit.rms < 1e-12);
}

TEST_CASE("graded maturity grid has the requested structure") {
    const auto g = graded_maturity_grid(200, 1e-4);
    REQUIRE(g.size() == 200);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[1] == doctest::Approx(1e-4).epsilon(1e-9));
    // geometric growth of cells
    const double r1 = (g[2] - g[1]) / (g[1] - g[0]);
    const double r2 = (g[100] - g[99]) / (g[99] - g[98]);
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-6));

    const auto fine = refine_grid(g);
    REQUIRE(fine.size() == 399);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(fine[2 * i] == g[i]);
}
