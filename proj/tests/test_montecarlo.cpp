#include <cmath>
#include <cstdlib>
#include <vector>

#include <doctest.h>

#include "modecert/montecarlo.hpp"

using namespace modecert;

TEST_CASE("type-7 quantiles") {
    std::vector<double> one = {3.0};
    CHECK(quantile_type7(one, 0.3) == 3.0);
    std::vector<double> v = {1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 1.0) == 5.0);
    CHECK(quantile_type7(v, 0.5) == 3.0);
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(2.0)); // h = 1 + 0.25*4 = 2
    CHECK(quantile_type7(v, 0.1) == doctest::Approx(1.4));  // h = 1.4
    CHECK_THROWS(quantile_type7({}, 0.5));
}

TEST_CASE("ks distance") {
    std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    CHECK(ks_distance(a, a) == doctest::Approx(0.0));
    std::vector<double> b = {11.0, 12.0};
    CHECK(ks_distance(a, b) == doctest::Approx(1.0));
    std::vector<double> c = {1.5, 2.5, 3.5, 4.5};
    CHECK(ks_distance(a, c) == doctest::Approx(0.25));
}

TEST_CASE("simulate_null basics and reproducibility") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    SimulationReport r1 = simulate_null(d, 0.0, 40, 8, 99);
    CHECK(r1.statistics.size() + r1.failures == 8);
    CHECK(r1.failures == 0);
    for (double s : r1.statistics) CHECK(s >= 0.0);
    CHECK(r1.quantiles.size() == r1.quantile_levels.size());

    SimulationReport r2 = simulate_null(d, 0.0, 40, 8, 99);
    CHECK(r1.statistics == r2.statistics); // bitwise identical rerun

    // a different stream offset gives a different set of replications, but
    // overlapping offsets reproduce the shared replications exactly
    SimulationReport r3 = simulate_null(d, 0.0, 40, 8, 99, 4);
    for (int i = 0; i < 4; ++i) CHECK(r3.statistics[i] == r1.statistics[i + 4]);
}

TEST_CASE("results do not depend on the worker count") {
    auto d = ReferenceDistribution::parse("gamma:3,1");
    setenv("MODECERT_THREADS", "1", 1);
    SimulationReport serial = simulate_null(d, 2.0, 30, 10, 5);
    setenv("MODECERT_THREADS", "4", 1);
    SimulationReport parallel = simulate_null(d, 2.0, 30, 10, 5);
    unsetenv("MODECERT_THREADS");
    CHECK(serial.statistics == parallel.statistics);
}

TEST_CASE("single replication report") {
    auto d = ReferenceDistribution::parse("beta:2,3");
    SimulationReport r = simulate_null(d, d.mode(), 25, 1, 7);
    CHECK(r.statistics.size() == 1);
    CHECK(r.quantile(0.5) == r.statistics[0]);
}

TEST_CASE("estimate_critical_values yields a valid strictly decreasing table") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    CriticalValueTable t =
        estimate_critical_values(d, 50, 60, {0.05, 0.10, 0.25, 0.50}, 11);
    REQUIRE(t.alphas().size() == 4);
    CHECK(t.alphas().front() == 0.05);
    for (std::size_t i = 1; i < t.d().size(); ++i) CHECK(t.d()[i] < t.d()[i - 1]);
    CHECK(t.meta().dist == "normal:0,1");
    CHECK(t.meta().n == 50);
    CHECK(t.meta().M == 60);
    CHECK(t.meta().seed == 11);

    CriticalValueTable t2 =
        estimate_critical_values(d, 50, 60, {0.05, 0.10, 0.25, 0.50}, 11);
    CHECK(t.d() == t2.d()); // same seed, same table
}

TEST_CASE("coverage_study runs and reports sane numbers") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    CriticalValueTable t = estimate_critical_values(d, 40, 80, {0.05, 0.10, 0.25, 0.50}, 3);
    SimulationReport r = coverage_study(d, 40, 20, {0.90, 0.50}, t, 13);
    REQUIRE(r.coverage.size() == 2);
    CHECK(r.coverage[0] >= 0.0);
    CHECK(r.coverage[0] <= 1.0);
    CHECK(r.coverage[0] >= r.coverage[1]); // higher level covers at least as often
    CHECK(r.mean_length[0] >= r.mean_length[1]);
    CHECK(r.mean_length[1] > 0.0);
    CHECK(r.failures == 0);
}

TEST_CASE("pivotality_check harness on tiny runs") {
    std::vector<ReferenceDistribution> dists = {
        ReferenceDistribution::parse("normal:0,1"),
        ReferenceDistribution::parse("gamma:3,1")};
    PivotalityReport r = pivotality_check(dists, 30, 12, 21);
    REQUIRE(r.names.size() == 2);
    REQUIRE(r.statistics_sorted.size() == 2);
    CHECK(std::is_sorted(r.statistics_sorted[0].begin(), r.statistics_sorted[0].end()));
    CHECK(r.ks.size() == 2);
    CHECK(r.ks[0][0] == doctest::Approx(0.0));
    CHECK(r.ks[0][1] == doctest::Approx(r.ks[1][0]));
    CHECK(r.ks[0][1] <= 1.0);
}

TEST_CASE("alternative_consistency harness on tiny runs") {
    auto d = ReferenceDistribution::parse("normal:0,1");
    // testing a badly wrong mode: stat/n should be clearly positive already
    ConsistencyReport r = alternative_consistency(d, 4.0, {30, 60}, 2, 31);
    REQUIRE(r.n_grid.size() == 2);
    REQUIRE(r.mean_stat_over_n.size() == 2);
    CHECK(r.mean_stat_over_n[0] > 0.0);
    CHECK(r.mean_stat_over_n[1] > 0.0);
}
