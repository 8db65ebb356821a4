#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "celldx/reduced.hpp"

using namespace celldx;

namespace {
const CellParams& cell() {
    static CellParams p = CellParams::fresh();
    return p;
}
} // namespace

TEST_CASE("solid rate forcing") {
    REQUIRE(solid_rate_forcing(4.4, cell(), Electrode::Negative) ==
            Catch::Approx(27.733955763981278).epsilon(1e-12));
    // trajectory with exactly that slope zeroes the residual
    double f = solid_rate_forcing(4.4, cell(), Electrode::Negative);
    REQUIRE(residual_solid(f, 4.4, cell(), Electrode::Negative) == 0.0);
    REQUIRE(residual_solid(0.0, 0.0, cell(), Electrode::Negative) == 0.0);
    // linearity in current
    double f2 = solid_rate_forcing(2.2, cell(), Electrode::Negative);
    REQUIRE(f == Catch::Approx(2.0 * f2).epsilon(1e-12));
}

TEST_CASE("liquid coefficient table") {
    auto n = LiquidCoefficients::for_side(cell(), Electrode::Negative);
    auto p = LiquidCoefficients::for_side(cell(), Electrode::Positive);

    REQUIRE(n.k == Catch::Approx(-6.5e-05).epsilon(1e-12));
    REQUIRE(p.k == Catch::Approx(1.5e-05).epsilon(1e-12));
    REQUIRE(n.alpha == Catch::Approx(-4.1490547932231745e-12).epsilon(1e-12));
    REQUIRE(p.alpha == Catch::Approx(4.1490547932231745e-12).epsilon(1e-12));
    REQUIRE(n.beta == Catch::Approx(-3.1254999999999997e-13).epsilon(1e-12));
    REQUIRE(p.beta == Catch::Approx(1.2058200000000004e-12).epsilon(1e-12));
    REQUIRE(n.gamma == Catch::Approx(3.7947331922020455e-15).epsilon(1e-12));
    REQUIRE(p.gamma == Catch::Approx(1.182045075282665e-13).epsilon(1e-12));

    REQUIRE(n.drive() == Catch::Approx(n.alpha / n.beta).epsilon(1e-15));
    REQUIRE(n.rate() == Catch::Approx(n.gamma / n.beta).epsilon(1e-15));
}

TEST_CASE("liquid residual vanishes on closed forms") {
    for (auto side : {Electrode::Negative, Electrode::Positive}) {
        auto c = LiquidCoefficients::for_side(cell(), side);

        // rest: no current, no deviation
        REQUIRE(residual_liquid(0.0, 0.0, 0.0, c) == 0.0);

        // fixed point under constant current
        double I = 4.4;
        double ce_star = c.alpha * I / c.gamma;
        REQUIRE(residual_liquid(0.0, ce_star, I, c) == Catch::Approx(0.0).margin(1e-9));

        // relaxing exponential toward the fixed point
        double r = c.gamma / c.beta;
        double dev0 = 37.0;
        for (double t : {0.0, 1.0, 5.0, 20.0}) {
            double ce = ce_star + dev0 * std::exp(-r * t);
            double ce_dot = -r * dev0 * std::exp(-r * t);
            REQUIRE(residual_liquid(ce_dot, ce, I, c) == Catch::Approx(0.0).margin(1e-7));
        }
    }
}
