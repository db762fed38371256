#include <doctest.h>

#include <cmath>

#include "matpop/commitment.hpp"
#include "support.hpp"

using namespace matpop;
using namespace testsupport;

TEST_CASE("theta closed form for the linear family") {
    CommitmentMapsBuilder builder(canonical_coeffs());
    CHECK(builder.theta(1.0) == doctest::Approx(std::exp(-0.2)).epsilon(1e-10));
    CHECK(builder.theta(1.0) == doctest::Approx(0.818731).epsilon(1e-6));
    CHECK(builder.theta(0.4) == doctest::Approx(0.4 * std::exp(-0.2)).epsilon(1e-10));
    CHECK(builder.theta(0.4) == doctest::Approx(0.327492).epsilon(1e-6));

    const double tiny = builder.theta(1e-6);
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-6);
}

TEST_CASE("theta reports a bracketing failure for a nonpositive division age") {
    auto coeffs = canonical_coeffs();
    coeffs.division_age = DivisionAge::constant(-1.0);
    CommitmentMapsBuilder builder(coeffs);
    CHECK_THROWS_AS(builder.theta(1.0), RootFindError);
}

TEST_CASE("clamped division-map inverse") {
    CommitmentMapsBuilder builder(canonical_coeffs());
    auto [v1, d1] = builder.g_inverse(0.3);
    CHECK(v1 == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(d1 == doctest::Approx(2.0).epsilon(1e-14));
    auto [v2, d2] = builder.g_inverse(0.7);
    CHECK(v2 == 1.0);
    CHECK(d2 == 0.0);

    CanonicalParams ident;
    ident.g_slope = 1.0;
    CommitmentMapsBuilder identity(canonical_coeffs(ident));
    auto [v3, d3] = identity.g_inverse(0.42);
    CHECK(v3 == doctest::Approx(0.42).epsilon(1e-14));
    CHECK(d3 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("daughter-to-mother commitment map") {
    CommitmentMapsBuilder builder(canonical_coeffs());
    CHECK(builder.delta_map(0.3) == doctest::Approx(0.6 * std::exp(-0.2)).epsilon(1e-10));
    CHECK(builder.delta_map(0.3) == doctest::Approx(0.491238).epsilon(1e-6));
    CHECK(builder.delta_map(0.8) == doctest::Approx(std::exp(-0.2)).epsilon(1e-10));
    CHECK(builder.delta_map(0.0) == 0.0);
}

TEST_CASE("build_factors tabulates the maps and scalars") {
    const auto maps = canonical_maps();

    CHECK(maps.tau_max() == 1.0);
    CHECK(maps.tau_delta_min() == 1.0);
    CHECK(maps.kappa() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(maps.g1() == doctest::Approx(0.5).epsilon(1e-14));

    SUBCASE("pi is identically one for constant division age") {
        for (double m : {0.0, 0.2, 0.5, 0.77, 1.0})
            CHECK(maps.pi_factor(m) == doctest::Approx(1.0).epsilon(1e-14));
        for (double v : maps.pi_table()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("zeta matches the closed form and clamps past g(1)") {
        CHECK(maps.zeta(0.25) == doctest::Approx(4.0 * std::exp(-0.3)).epsilon(1e-9));
        CHECK(maps.zeta(0.25) == doctest::Approx(2.963273).epsilon(1e-6));
        CHECK(maps.zeta(0.7) == 0.0);
        CHECK(maps.zeta_norm() == doctest::Approx(4.0 * std::exp(-0.3)).epsilon(1e-9));
    }
    SUBCASE("fixed-point identity of the commitment maturity on the grid") {
        const auto& flow = maps.flow();
        const auto& tau = maps.coeffs().division_age;
        for (std::size_t i = 0; i < maps.grid().size(); ++i) {
            const double m = maps.grid()[i];
            if (m <= 0.0) continue;
            const double th = maps.theta_table()[i];
            CHECK(std::abs(th - flow.chi(-tau(th), m)) < 1e-8);
        }
    }
    SUBCASE("mother-map identity on the grid") {
        const auto& flow = maps.flow();
        const auto& tau = maps.coeffs().division_age;
        for (std::size_t i = 0; i < maps.grid().size(); ++i) {
            const double m = maps.grid()[i];
            if (m <= 0.0) continue;
            const double d = maps.delta_table()[i];
            const double gi = maps.ginv_table()[i];
            CHECK(std::abs(d - flow.chi(-tau(d), gi)) < 1e-8);
        }
    }
    SUBCASE("monotonicity of the tabulated maps") {
        const auto& g = maps.grid();
        for (std::size_t i = 1; i < g.size(); ++i) {
            CHECK(maps.theta_table()[i] > maps.theta_table()[i - 1]);
            CHECK(maps.delta_table()[i] >= maps.delta_table()[i - 1] - 1e-14);
            CHECK(maps.theta_table()[i] <= maps.delta_table()[i] + 1e-12);
            if (g[i] > maps.g1())
                CHECK(maps.delta_table()[i] ==
                      doctest::Approx(maps.theta_table().back()).epsilon(1e-10));
        }
    }
}

TEST_CASE("pi factor for an affine division age") {
    CanonicalParams p;
    auto coeffs = canonical_coeffs(p);
    coeffs.division_age = DivisionAge::affine(1.0, 0.5);
    const auto maps = CommitmentMapsBuilder(coeffs).build_factors();
    for (double m : {0.3, 0.6, 1.0}) {
        const double th = maps.theta(m);
        const double expected = 1.0 / (1.0 + 0.2 * th * 0.5);
        CHECK(maps.pi_factor(m) == doctest::Approx(expected).epsilon(1e-10));
        CHECK(maps.pi_factor(m) < 1.0);
    }
    // the commitment identity still holds with maturity-dependent tau
    const auto& flow = maps.flow();
    for (double m : {0.2, 0.5, 0.9}) {
        const double th = maps.theta(m);
        CHECK(std::abs(th - flow.chi(-(1.0 + 0.5 * th), m)) < 1e-8);
    }
}
