#include <cmath>

#include <doctest.h>

#include "modecert/distributions.hpp"
#include "modecert/solver.hpp"

using namespace modecert;

TEST_CASE("two-point sample gives the uniform density") {
    Sample s = Sample::from_observations({0.0, 1.0});
    FitReport r = fit(s);
    REQUIRE(r.converged);
    CHECK(std::fabs(r.density.values()[0]) < 1e-12);
    CHECK(std::fabs(r.density.values()[1]) < 1e-12);
    CHECK(std::fabs(r.log_likelihood) < 1e-12);
    CharacterizationReport c = check_characterization(r, s);
    CHECK(c.knot_cdf_residual <= 1e-12); // residual 0 at both endpoints
}

TEST_CASE("fit invariants on a mid-size sample") {
    auto d = ReferenceDistribution::parse("gamma:3,1");
    Sample s = d.sample(100, 21, 0);
    FitReport r = fit(s);
    REQUIRE(r.converged);
    CHECK(r.max_characterization_residual <= 1e-7);
    CHECK(std::fabs(r.density.total_mass() - 1.0) <= 1e-8);
    CHECK(r.density.concavity_violation() <= 1e-9);
    CHECK(r.density.support_lo() == s.min());
    CHECK(r.density.support_hi() == s.max());

    CharacterizationReport c = check_characterization(r, s);
    CHECK(c.knot_cdf_residual <= 1e-9); // |Fn - Fhat| <= 1/n at every kink
    CHECK(c.integral_sign_violation <= 1e-9);
}

TEST_CASE("perturbed fit fails the characterization check (negative control)") {
    auto d = ReferenceDistribution::parse("gamma:3,1");
    Sample s = d.sample(100, 21, 0);
    FitReport r = fit(s);
    std::vector<double> vals = r.density.values();
    for (double& v : vals) v += 0.01; // keeps concavity, inflates the mass to ~1.01
    FitReport broken = r;
    broken.density = PiecewiseLogLinearDensity(r.density.knots(), vals);
    CharacterizationReport c = check_characterization(broken, s);
    CHECK(c.integral_sign_violation > 1e-5);
}

TEST_CASE("affine equivariance of the unconstrained fit") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    Sample base = d.sample(120, 5, 0);
    FitReport rb = fit(base);
    for (double sigma : {0.5, 2.0, 10.0}) {
        for (double mu : {-3.0, 0.0, 7.0}) {
            CAPTURE(sigma);
            CAPTURE(mu);
            std::vector<double> xs = base.points();
            std::vector<double> counts = base.weights();
            std::vector<double> obs;
            for (std::size_t i = 0; i < xs.size(); ++i) obs.push_back(sigma * xs[i] + mu);
            Sample t = Sample::from_observations(obs);
            FitReport rt = fit(t);
            REQUIRE(rt.converged);
            for (std::size_t j = 0; j < xs.size(); ++j) {
                CHECK(rt.density.knots()[j] ==
                      doctest::Approx(sigma * rb.density.knots()[j] + mu).epsilon(1e-12));
                CHECK(rt.density.values()[j] ==
                      doctest::Approx(rb.density.values()[j] - std::log(sigma)).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("constrained fit at the unconstrained mode reproduces it") {
    auto d = ReferenceDistribution::parse("beta:2,3");
    Sample s = d.sample(150, 9, 0);
    FitReport r = fit(s);
    double mhat = r.density.mode_summary().mode;
    ConstrainedFitReport rc = fit_constrained(s, mhat);
    REQUIRE(rc.converged);
    CHECK(std::fabs(r.log_likelihood - rc.log_likelihood) <= 1e-7);
    // sup-norm agreement on the shared support
    double sup = 0.0;
    for (double x : s.points())
        sup = std::max(sup, std::fabs(r.density.eval_log(x) - rc.density.eval_log(x)));
    CHECK(sup <= 1e-7);
}

TEST_CASE("constrained fit invariants") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    Sample s = d.sample(100, 31, 0);
    for (double m : {-1.5, -0.2, 0.4, 2.5}) {
        CAPTURE(m);
        ConstrainedFitReport r = fit_constrained(s, m);
        REQUIRE(r.converged);
        CHECK(r.integral_identity_residual <= 1e-9);
        // m lies in the modal interval
        ModeSummary ms = r.density.mode_summary();
        CHECK(ms.modal_lo <= m + 1e-10);
        CHECK(ms.modal_hi >= m - 1e-10);
        // slope signs: >= 0 left of m, <= 0 right of m
        const auto& kn = r.density.knots();
        const auto& vals = r.density.values();
        for (std::size_t j = 0; j + 1 < kn.size(); ++j) {
            double slope = (vals[j + 1] - vals[j]) / (kn[j + 1] - kn[j]);
            if (kn[j + 1] <= m) CHECK(slope >= -1e-10);
            if (kn[j] >= m) CHECK(slope <= 1e-10);
        }
        ConstrainedCharacterizationReport c = check_constrained_characterization(r, s);
        CHECK(c.mass_identity_residual <= 1e-9);
        CHECK(c.knot_cdf_residual <= 1e-9);
        CHECK(c.left_violation <= 1e-7);
        CHECK(c.right_violation <= 1e-7);
    }
}

TEST_CASE("constrained knot residuals respect the 1/n bound (normal, m = 0)") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    Sample s = d.sample(100, 17, 0);
    ConstrainedFitReport r = fit_constrained(s, 0.0);
    REQUIRE(r.converged);
    ConstrainedCharacterizationReport c = check_constrained_characterization(r, s);
    CHECK(c.knot_cdf_residual <= 1e-9);
}

TEST_CASE("m outside the data extends the support monotonically") {
    Sample s = Sample::from_observations({0.0, 1.0});
    ConstrainedFitReport r = fit_constrained(s, 2.0);
    REQUIRE(r.converged);
    CHECK(r.density.support_lo() == 0.0);
    CHECK(r.density.support_hi() == 2.0);
    const auto& kn = r.density.knots();
    const auto& vals = r.density.values();
    for (std::size_t j = 0; j + 1 < kn.size(); ++j)
        CHECK((vals[j + 1] - vals[j]) / (kn[j + 1] - kn[j]) >= -1e-10); // non-decreasing
}

TEST_CASE("constrained log-likelihood never exceeds the unconstrained one") {
    auto d = ReferenceDistribution::parse("chisq:4");
    Sample s = d.sample(80, 3, 0);
    FitReport r = fit(s);
    for (double m : {0.5, 2.0, 4.0, 9.0}) {
        ConstrainedFitReport rc = fit_constrained(s, m);
        CHECK(rc.log_likelihood <= r.log_likelihood + 1e-7);
    }
}

TEST_CASE("joint affine equivariance of the constrained fit") {
    auto d = ReferenceDistribution::parse("gamma:3,1");
    Sample base = d.sample(60, 13, 0);
    double m = 2.3;
    ConstrainedFitReport rb = fit_constrained(base, m);
    double sigma = 2.0, mu = -3.0;
    std::vector<double> obs;
    for (double x : base.points()) obs.push_back(sigma * x + mu);
    ConstrainedFitReport rt = fit_constrained(Sample::from_observations(obs), sigma * m + mu);
    REQUIRE(rt.converged);
    for (std::size_t j = 0; j < rb.density.knots().size(); ++j) {
        CHECK(rt.density.knots()[j] ==
              doctest::Approx(sigma * rb.density.knots()[j] + mu).epsilon(1e-12));
        CHECK(rt.density.values()[j] ==
              doctest::Approx(rb.density.values()[j] - std::log(sigma)).epsilon(1e-7));
    }
}

TEST_CASE("mode coinciding with a data point adds no duplicate knot") {
    Sample s = Sample::from_observations({0.0, 0.5, 1.0});
    ConstrainedFitReport r = fit_constrained(s, 0.5);
    CHECK(r.density.knots().size() == 3);
}

TEST_CASE("population projection certificate") {
    // projecting a distribution onto its own mode is a fixed point
    auto g = ReferenceDistribution::parse("gamma:3,1");
    auto F = [&](double x) { return g.cdf(x); };
    ProjectionCheckReport ok = population_projection_check(F, F, g.mode(), 0.0, 40.0);
    CHECK(ok.max_violation() <= 1e-9);

    // wrong projection: a left-shifted normal piles mass left of m and
    // breaks the left integral inequality by a wide margin
    auto nrm = ReferenceDistribution::parse("normal:0,1");
    auto Fshift = [&](double x) { return nrm.cdf(x + 1.0); };
    auto Fn = [&](double x) { return nrm.cdf(x); };
    ProjectionCheckReport bad = population_projection_check(Fshift, Fn, 0.0, -10.0, 10.0);
    CHECK(bad.max_violation() > 1e-1);
}
