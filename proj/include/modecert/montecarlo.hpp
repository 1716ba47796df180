#pragma once

// Parallel, seeded replication engine: null-distribution simulation of
// 2 log lambda_n(mode), critical-value estimation, coverage/length studies
// of the inverted-test confidence interval, pivotality comparisons across
// generating distributions, and fixed-alternative consistency checks.
//
// Determinism contract: replication r draws from a counter-based stream
// keyed by (seed, r), and results are stored by replication index, so a run
// is bit-identical no matter how many workers execute it (cap workers with
// MODECERT_THREADS).

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "modecert/distributions.hpp"
#include "modecert/inference.hpp"
#include "modecert/sample.hpp"
#include "modecert/solver.hpp"

namespace modecert {

namespace detail {

inline unsigned worker_count(std::size_t jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("MODECERT_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0 && static_cast<unsigned long>(v) < hw) hw = static_cast<unsigned>(v);
    }
    if (jobs < hw) hw = static_cast<unsigned>(jobs);
    return hw;
}

// Runs f(0..njobs-1) over a worker pool; f must not throw.
template <class F>
inline void parallel_for(std::size_t njobs, F&& f) {
    unsigned nw = worker_count(njobs);
    if (nw <= 1) {
        for (std::size_t i = 0; i < njobs; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (unsigned t = 0; t < nw; ++t)
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < njobs; i = next.fetch_add(1)) f(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

// Type-7 quantile (linear interpolation of order statistics) on a sorted
// ascending vector.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_type7: empty vector");
    if (sorted.size() == 1) return sorted[0];
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    double fl = std::floor(h);
    std::size_t j = static_cast<std::size_t>(std::max(0.0, fl));
    if (j + 1 >= sorted.size()) return sorted.back();
    return sorted[j] + (h - fl) * (sorted[j + 1] - sorted[j]);
}

struct SimulationReport {
    std::string dist;
    std::size_t n = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    double m_true = 0.0;
    std::vector<double> statistics;      // per surviving replication, in rep order
    std::vector<double> quantile_levels; // probabilities for `quantiles`
    std::vector<double> quantiles;
    std::vector<double> levels;      // confidence levels (coverage studies)
    std::vector<double> coverage;    // per level
    std::vector<double> mean_length; // per level
    std::size_t failures = 0;
    double wall_seconds = 0.0;

    double quantile(double p) const {
        std::vector<double> s = statistics;
        std::sort(s.begin(), s.end());
        return quantile_type7(s, p);
    }
};

// M replications of 2 log lambda_n(m_true) under `dist`.  Replication r
// uses stream (stream_offset + r).  Failures (exceptions or non-converged
// fits) are dropped, counted, and capped at 1% of M.
inline SimulationReport simulate_null(const ReferenceDistribution& dist, double m_true,
                                      std::size_t n, std::size_t M, std::uint64_t seed,
                                      std::uint64_t stream_offset = 0,
                                      const SolverOptions& opts = {}) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> stats(M, std::numeric_limits<double>::quiet_NaN());
    detail::parallel_for(M, [&](std::size_t r) {
        try {
            Sample s = dist.sample(n, seed, stream_offset + r);
            LrTestResult res = lr_statistic(s, m_true, opts);
            if (res.converged) stats[r] = res.stat;
        } catch (const std::exception&) {
            // leave NaN: counted as a failure below
        }
    });
    SimulationReport rep;
    rep.dist = dist.name();
    rep.n = n;
    rep.M = M;
    rep.seed = seed;
    rep.m_true = m_true;
    rep.statistics.reserve(M);
    for (double v : stats) {
        if (std::isnan(v)) ++rep.failures;
        else rep.statistics.push_back(v);
    }
    if (rep.failures * 100 > M)
        throw std::runtime_error("simulate_null: more than 1% of replications failed");
    std::vector<double> sorted = rep.statistics;
    std::sort(sorted.begin(), sorted.end());
    rep.quantile_levels = {0.5, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99};
    for (double p : rep.quantile_levels) rep.quantiles.push_back(quantile_type7(sorted, p));
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Upper-alpha empirical quantiles of the null statistics in an existing
// report, made strictly decreasing in alpha by a pool-adjacent-violators
// pass plus a hair of tie-breaking when Monte-Carlo noise inverts adjacent
// levels.
inline CriticalValueTable critical_values_from(const SimulationReport& rep,
                                               std::vector<double> alphas) {
    if (alphas.empty()) throw std::invalid_argument("critical_values_from: empty alpha grid");
    std::vector<double> sorted = rep.statistics;
    std::sort(sorted.begin(), sorted.end());
    std::sort(alphas.begin(), alphas.end());
    std::vector<double> d(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) d[i] = quantile_type7(sorted, 1.0 - alphas[i]);
    // isotonic (non-increasing in alpha) via pool-adjacent-violators
    {
        std::vector<double> val, wt;
        std::vector<std::size_t> cnt;
        for (double v : d) {
            val.push_back(v);
            cnt.push_back(1);
            while (val.size() > 1 && val[val.size() - 2] < val.back()) {
                double merged = (val[val.size() - 2] * cnt[cnt.size() - 2] +
                                 val.back() * cnt.back()) /
                                (cnt[cnt.size() - 2] + cnt.back());
                cnt[cnt.size() - 2] += cnt.back();
                val[val.size() - 2] = merged;
                val.pop_back();
                cnt.pop_back();
            }
        }
        std::size_t k = 0;
        for (std::size_t b = 0; b < val.size(); ++b)
            for (std::size_t c = 0; c < cnt[b]; ++c) d[k++] = val[b];
        for (std::size_t i = 1; i < d.size(); ++i) // strictness
            if (!(d[i] < d[i - 1])) d[i] = d[i - 1] - 1e-12;
    }
    TableMeta meta;
    meta.dist = rep.dist;
    meta.n = rep.n;
    meta.M = rep.M;
    meta.seed = rep.seed;
    return CriticalValueTable(std::move(alphas), std::move(d), meta);
}

inline CriticalValueTable estimate_critical_values(const ReferenceDistribution& dist,
                                                   std::size_t n, std::size_t M,
                                                   std::vector<double> alphas, std::uint64_t seed,
                                                   const SolverOptions& opts = {}) {
    return critical_values_from(simulate_null(dist, dist.mode(), n, M, seed, 0, opts),
                                std::move(alphas));
}

// Coverage and mean length of the inverted-test interval at each confidence
// level, over M replications.
inline SimulationReport coverage_study(const ReferenceDistribution& dist, std::size_t n,
                                       std::size_t M, const std::vector<double>& levels,
                                       const CriticalValueTable& table, std::uint64_t seed,
                                       const CiOptions& ci_opts = {},
                                       const SolverOptions& opts = {}) {
    if (levels.empty()) throw std::invalid_argument("coverage_study: empty level list");
    auto t0 = std::chrono::steady_clock::now();
    const double m0 = dist.mode();
    const std::size_t L = levels.size();
    std::vector<std::vector<double>> cover(L, std::vector<double>(M, std::numeric_limits<double>::quiet_NaN()));
    std::vector<std::vector<double>> length(L, std::vector<double>(M, 0.0));
    detail::parallel_for(M, [&](std::size_t r) {
        try {
            Sample s = dist.sample(n, seed, r);
            LrProfile profile(s, opts);
            if (!profile.unconstrained().converged) return;
            std::vector<double> alphas;
            for (double lv : levels) alphas.push_back(1.0 - lv);
            std::vector<ConfidenceInterval> cis = confidence_intervals(profile, alphas, table, ci_opts);
            for (std::size_t li = 0; li < L; ++li) {
                cover[li][r] = (m0 >= cis[li].lower && m0 <= cis[li].upper) ? 1.0 : 0.0;
                length[li][r] = cis[li].upper - cis[li].lower;
            }
        } catch (const std::exception&) {
            for (std::size_t li = 0; li < L; ++li) cover[li][r] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    SimulationReport rep;
    rep.dist = dist.name();
    rep.n = n;
    rep.M = M;
    rep.seed = seed;
    rep.m_true = m0;
    rep.levels = levels;
    for (std::size_t li = 0; li < L; ++li) {
        double csum = 0.0, lsum = 0.0;
        std::size_t ok = 0;
        for (std::size_t r = 0; r < M; ++r) {
            if (std::isnan(cover[li][r])) continue;
            csum += cover[li][r];
            lsum += length[li][r];
            ++ok;
        }
        if (li == 0) rep.failures = M - ok;
        if (ok == 0) throw std::runtime_error("coverage_study: all replications failed");
        rep.coverage.push_back(csum / static_cast<double>(ok));
        rep.mean_length.push_back(lsum / static_cast<double>(ok));
    }
    if (rep.failures * 100 > M)
        throw std::runtime_error("coverage_study: more than 1% of replications failed");
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Two-sample Kolmogorov-Smirnov sup distance between sorted vectors.
inline double ks_distance(const std::vector<double>& a_sorted, const std::vector<double>& b_sorted) {
    double na = static_cast<double>(a_sorted.size()), nb = static_cast<double>(b_sorted.size());
    std::size_t i = 0, j = 0;
    double ks = 0.0;
    while (i < a_sorted.size() && j < b_sorted.size()) {
        // compare the ECDFs just after the smaller of the next values,
        // consuming ties on both sides together
        double x = std::min(a_sorted[i], b_sorted[j]);
        while (i < a_sorted.size() && a_sorted[i] == x) ++i;
        while (j < b_sorted.size() && b_sorted[j] == x) ++j;
        ks = std::max(ks, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return ks;
}

struct PivotalityReport {
    std::vector<std::string> names;
    std::vector<std::vector<double>> statistics_sorted; // per distribution
    std::vector<std::vector<double>> ks;                // pairwise matrix
    std::size_t n = 0, M = 0;
};

// Null ECDFs of 2 log lambda_n(mode) per distribution and their pairwise
// sup distances.  Each distribution gets a disjoint stream block.
inline PivotalityReport pivotality_check(const std::vector<ReferenceDistribution>& dists,
                                         std::size_t n, std::size_t M, std::uint64_t seed,
                                         const SolverOptions& opts = {}) {
    PivotalityReport rep;
    rep.n = n;
    rep.M = M;
    for (std::size_t k = 0; k < dists.size(); ++k) {
        SimulationReport sr = simulate_null(dists[k], dists[k].mode(), n, M, seed,
                                            static_cast<std::uint64_t>(k) * M, opts);
        std::sort(sr.statistics.begin(), sr.statistics.end());
        rep.names.push_back(dists[k].name());
        rep.statistics_sorted.push_back(std::move(sr.statistics));
    }
    rep.ks.assign(dists.size(), std::vector<double>(dists.size(), 0.0));
    for (std::size_t a = 0; a < dists.size(); ++a)
        for (std::size_t b = a + 1; b < dists.size(); ++b)
            rep.ks[a][b] = rep.ks[b][a] =
                ks_distance(rep.statistics_sorted[a], rep.statistics_sorted[b]);
    return rep;
}

struct ConsistencyReport {
    std::vector<std::size_t> n_grid;
    std::vector<double> mean_stat_over_n; // mean of stat/n at each n
    double target = std::numeric_limits<double>::quiet_NaN(); // 2 K(f0, f_m^0) when known
};

// Fixed alternative m outside the modal interval of f0: stat/n should
// approach 2 K(f0, f_m^0) as n grows (consistency of the test).
inline ConsistencyReport alternative_consistency(const ReferenceDistribution& dist, double m,
                                                 const std::vector<std::size_t>& n_grid,
                                                 std::size_t reps, std::uint64_t seed,
                                                 const SolverOptions& opts = {}) {
    ConsistencyReport rep;
    rep.n_grid = n_grid;
    std::uint64_t offset = 0;
    for (std::size_t n : n_grid) {
        std::vector<double> vals(reps, std::numeric_limits<double>::quiet_NaN());
        detail::parallel_for(reps, [&](std::size_t r) {
            try {
                Sample s = dist.sample(n, seed, offset + r);
                vals[r] = lr_statistic(s, m, opts).stat / static_cast<double>(n);
            } catch (const std::exception&) {
            }
        });
        double sum = 0.0;
        std::size_t ok = 0;
        for (double v : vals)
            if (!std::isnan(v)) { sum += v; ++ok; }
        if (ok == 0) throw std::runtime_error("alternative_consistency: all replications failed");
        rep.mean_stat_over_n.push_back(sum / static_cast<double>(ok));
        offset += reps;
    }
    return rep;
}

} // namespace modecert
