#include <cmath>
#include <limits>

#include <doctest.h>

#include "modecert/density.hpp"

using namespace modecert;

TEST_CASE("segment_mass closed forms") {
    CHECK(segment_mass(0.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(segment_mass(0.0, -1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    // tiny slope branch agrees with the closed form across the switchover
    double a = -0.3;
    for (double d : {1e-7, 1e-8, 1e-9, -1e-8}) {
        double exact = std::exp(a) * std::expm1(d) / d;
        CHECK(segment_mass(a, a + d, 1.0) == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK_THROWS_AS(segment_mass(0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(segment_mass(std::numeric_limits<double>::infinity(), 0.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("evaluation on and off the support") {
    PiecewiseLogLinearDensity flat({0.0, 1.0}, {0.0, 0.0});
    CHECK(flat.eval_log(0.5) == 0.0);
    CHECK(flat.eval_log(2.0) == -std::numeric_limits<double>::infinity());
    PiecewiseLogLinearDensity ramp({0.0, 1.0}, {0.0, -1.0});
    CHECK(ramp.eval_log(0.25) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(ramp.total_mass() == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("construction validation") {
    CHECK_THROWS_AS(PiecewiseLogLinearDensity({1.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLogLinearDensity({0.0}, {0.0}), std::invalid_argument);
    // convex value pattern must be rejected
    CHECK_THROWS_AS(PiecewiseLogLinearDensity({0.0, 1.0, 2.0}, {0.0, -1.0, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        PiecewiseLogLinearDensity({0.0, 1.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}),
        std::invalid_argument);
}

TEST_CASE("cdf is monotone and matches mass") {
    PiecewiseLogLinearDensity d({0.0, 1.0, 2.0}, {-1.0, 0.0, -1.0});
    CHECK(d.cdf(0.0) == 0.0);
    CHECK(d.cdf(2.0) == doctest::Approx(d.total_mass()).epsilon(1e-14));
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
        double c = d.cdf(0.05 * i);
        CHECK(c >= prev);
        prev = c;
    }
    // evaluation exactly at an interior knot
    CHECK(d.cdf(1.0) == doctest::Approx(segment_mass(-1.0, 0.0, 1.0)).epsilon(1e-14));
}

TEST_CASE("modal interval") {
    PiecewiseLogLinearDensity peak({0.0, 1.0, 2.0}, {-1.0, 0.0, -1.0});
    ModeSummary ms = peak.mode_summary();
    CHECK(ms.mode == 1.0);
    CHECK(ms.modal_lo == 1.0);
    CHECK(ms.modal_hi == 1.0);
    CHECK(ms.max_log_density == 0.0);

    PiecewiseLogLinearDensity plateau({0.0, 1.0, 2.0, 3.0}, {-1.0, 0.0, 0.0, -1.0});
    ms = plateau.mode_summary();
    CHECK(ms.modal_lo == 1.0);
    CHECK(ms.modal_hi == 2.0);
    CHECK(ms.mode == ms.modal_lo);
}

TEST_CASE("json round trip") {
    PiecewiseLogLinearDensity d({-0.5, 0.25, 2.0}, {-1.25, -0.125, -3.75});
    auto j = d.to_json();
    PiecewiseLogLinearDensity back = PiecewiseLogLinearDensity::from_json(j);
    REQUIRE(back.knots().size() == d.knots().size());
    for (std::size_t i = 0; i < d.knots().size(); ++i) {
        CHECK(back.knots()[i] == d.knots()[i]);
        CHECK(back.values()[i] == d.values()[i]);
    }
    CHECK(back.total_mass() == d.total_mass()); // bit-identical arithmetic
}

TEST_CASE("kl divergence") {
    // KL between two piecewise densities with identical support: numeric
    // reference by dense Simpson on the explicit integrand
    PiecewiseLogLinearDensity f({0.0, 1.0, 2.0}, {-1.0, 0.0, -1.0});
    double mass = f.total_mass();
    PiecewiseLogLinearDensity fn({0.0, 1.0, 2.0},
                                 {-1.0 - std::log(mass), -std::log(mass), -1.0 - std::log(mass)});
    PiecewiseLogLinearDensity g({0.0, 2.0}, {std::log(0.5), std::log(0.5)});
    double kl = kl_divergence(fn, g);
    // reference: integral of f log(f/g)
    double ref = 0.0;
    int N = 200000;
    for (int i = 0; i < N; ++i) {
        double x = (i + 0.5) * 2.0 / N;
        double lf = fn.eval_log(x);
        ref += std::exp(lf) * (lf - std::log(0.5)) * (2.0 / N);
    }
    CHECK(kl == doctest::Approx(ref).epsilon(1e-6));
    CHECK(kl_divergence(fn, fn) == doctest::Approx(0.0).epsilon(1e-10));

    // support violation: g vanishes where f has mass -> +inf sentinel
    PiecewiseLogLinearDensity narrow({0.5, 1.5}, {0.0, 0.0});
    CHECK(std::isinf(kl_divergence(fn, narrow)));
}
