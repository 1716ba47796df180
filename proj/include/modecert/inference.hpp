#pragma once

// Likelihood-ratio inference for the mode of a log-concave density:
// the statistic 2 log lambda_n(m), calibration against a simulated
// critical-value table, p-values, and confidence intervals by test
// inversion over a grid with bisection-refined endpoints.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modecert/sample.hpp"
#include "modecert/solver.hpp"

namespace modecert {

struct LrTestResult {
    double m = 0.0;
    double stat = 0.0; // 2 log lambda_n(m)
    double loglik_u = 0.0;
    double loglik_c = 0.0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> reject_at; // level alpha the decision refers to
    bool reject = false;
    std::size_t n = 0;
    bool clamped = false; // true if a tiny negative stat was clamped to zero
    bool converged = true;
};

struct TableMeta {
    std::string dist;
    std::size_t n = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    std::string quantile = "type-7";
};

class CriticalValueTable {
  public:
    CriticalValueTable() = default;
    CriticalValueTable(std::vector<double> alphas, std::vector<double> d, TableMeta meta)
        : alphas_(std::move(alphas)), d_(std::move(d)), meta_(std::move(meta)) {
        if (alphas_.size() != d_.size() || alphas_.size() < 2)
            throw std::invalid_argument("CriticalValueTable: need >= 2 matching (alpha, d) pairs");
        // normalize to ascending alpha
        std::vector<std::size_t> idx(alphas_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return alphas_[a] < alphas_[b]; });
        std::vector<double> as(alphas_.size()), ds(d_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) { as[i] = alphas_[idx[i]]; ds[i] = d_[idx[i]]; }
        alphas_ = std::move(as);
        d_ = std::move(ds);
        for (std::size_t i = 0; i + 1 < alphas_.size(); ++i) {
            if (!(alphas_[i + 1] > alphas_[i]))
                throw std::invalid_argument("CriticalValueTable: duplicate alpha");
            if (!(d_[i + 1] < d_[i]))
                throw std::invalid_argument("CriticalValueTable: d not strictly decreasing in alpha");
        }
    }

    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& d() const { return d_; }
    const TableMeta& meta() const { return meta_; }
    double min_alpha() const { return alphas_.front(); }
    double max_alpha() const { return alphas_.back(); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["alphas"] = alphas_;
        j["d"] = d_;
        j["meta"] = {{"dist", meta_.dist},
                     {"n", meta_.n},
                     {"M", meta_.M},
                     {"seed", meta_.seed},
                     {"quantile", meta_.quantile}};
        return j;
    }

    static CriticalValueTable from_json(const nlohmann::json& j) {
        TableMeta meta;
        if (j.contains("meta")) {
            const auto& m = j.at("meta");
            meta.dist = m.value("dist", std::string{});
            meta.n = m.value("n", std::size_t{0});
            meta.M = m.value("M", std::size_t{0});
            meta.seed = m.value("seed", std::uint64_t{0});
            meta.quantile = m.value("quantile", std::string{"type-7"});
        }
        return CriticalValueTable(j.at("alphas").get<std::vector<double>>(),
                                  j.at("d").get<std::vector<double>>(), meta);
    }

    static CriticalValueTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open table file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

  private:
    std::vector<double> alphas_;
    std::vector<double> d_;
    TableMeta meta_;
};

// Monotone piecewise-linear interpolation in alpha; exact at nodes;
// extrapolation is an error.
inline double critical_value(const CriticalValueTable& table, double alpha) {
    const auto& a = table.alphas();
    const auto& d = table.d();
    if (!(alpha >= a.front() && alpha <= a.back()))
        throw std::out_of_range("critical_value: alpha outside table range");
    auto it = std::lower_bound(a.begin(), a.end(), alpha);
    std::size_t j = static_cast<std::size_t>(it - a.begin());
    if (j < a.size() && a[j] == alpha) return d[j];
    double w = (alpha - a[j - 1]) / (a[j] - a[j - 1]);
    return d[j - 1] + w * (d[j] - d[j - 1]);
}

// Empirical upper-tail p-value, add-one adjusted so it is never zero.
inline double p_value(double stat, const std::vector<double>& null_samples_sorted) {
    if (null_samples_sorted.empty()) throw std::invalid_argument("p_value: empty null sample");
    auto it = std::lower_bound(null_samples_sorted.begin(), null_samples_sorted.end(), stat);
    std::size_t ge = static_cast<std::size_t>(null_samples_sorted.end() - it);
    return (1.0 + static_cast<double>(ge)) / (1.0 + static_cast<double>(null_samples_sorted.size()));
}

// Evaluates 2 log lambda_n(m) for many m against one cached unconstrained
// fit; this is the workhorse for tests and for CI inversion.
class LrProfile {
  public:
    LrProfile(const Sample& sample, const SolverOptions& opts = {})
        : sample_(sample), opts_(opts), unconstrained_(fit(sample, opts)) {}

    const FitReport& unconstrained() const { return unconstrained_; }
    const Sample& sample() const { return sample_; }

    LrTestResult at(double m) const {
        ConstrainedFitReport c = fit_constrained(sample_, m, opts_);
        LrTestResult r;
        r.m = m;
        r.n = sample_.n();
        r.loglik_u = unconstrained_.log_likelihood;
        r.loglik_c = c.log_likelihood;
        r.stat = 2.0 * (r.loglik_u - r.loglik_c);
        r.converged = unconstrained_.converged && c.converged;
        if (r.stat < 0.0 && r.stat >= -1e-7) {
            r.stat = 0.0;
            r.clamped = true;
        }
        return r;
    }

  private:
    Sample sample_;
    SolverOptions opts_;
    FitReport unconstrained_;
};

inline LrTestResult lr_statistic(const Sample& sample, double m, const SolverOptions& opts = {}) {
    return LrProfile(sample, opts).at(m);
}

inline LrTestResult lr_test(const Sample& sample, double m, double alpha,
                            const CriticalValueTable& table, const SolverOptions& opts = {}) {
    double d = critical_value(table, alpha); // throws on out-of-range alpha first
    LrTestResult r = lr_statistic(sample, m, opts);
    r.reject_at = alpha;
    r.reject = r.stat > d; // strict inequality: stat == d_alpha accepts
    return r;
}

struct ConfidenceInterval {
    double level = 0.0; // 1 - alpha
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> grid;
    std::vector<char> grid_accepted;
    bool gap_flag = false;
};

struct CiOptions {
    int grid_points = 201;
    double refine_rel = 1e-4; // endpoint bisection tolerance, x data range
};

// Inverts the tests for several levels at once, evaluating the statistic on
// the shared grid a single time.
inline std::vector<ConfidenceInterval>
confidence_intervals(const LrProfile& profile, const std::vector<double>& alphas,
                     const CriticalValueTable& table, const CiOptions& ci_opts = {}) {
    std::vector<double> ds;
    for (double a : alphas) ds.push_back(critical_value(table, a));
    const Sample& s = profile.sample();
    const double R = s.max() - s.min();
    const double lo = s.min() - R, hi = s.max() + R;
    const double mode_hat = profile.unconstrained().density.mode_summary().mode;

    const int G = std::max(ci_opts.grid_points, 3);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(G) + 1);
    for (int i = 0; i < G; ++i) grid.push_back(lo + (hi - lo) * i / (G - 1));
    // the unconstrained mode is always accepted (stat = 0); keep it on the grid
    grid.push_back(mode_hat);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> stat(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) stat[i] = profile.at(grid[i]).stat;

    const double tol = ci_opts.refine_rel * R;
    std::vector<ConfidenceInterval> out;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const double d = ds[a];
        ConfidenceInterval ci;
        ci.level = 1.0 - alphas[a];
        ci.grid = grid;
        ci.grid_accepted.resize(grid.size());
        std::size_t first = grid.size(), last = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ci.grid_accepted[i] = stat[i] <= d ? 1 : 0;
            if (ci.grid_accepted[i]) { first = std::min(first, i); last = i; }
        }
        if (first == grid.size())
            throw std::runtime_error("confidence_interval: empty accepted set (numerical failure)");
        for (std::size_t i = first; i <= last; ++i)
            if (!ci.grid_accepted[i]) { ci.gap_flag = true; break; }
        auto accept = [&](double m) { return profile.at(m).stat <= d; };
        auto bisect = [&](double inside, double outside) {
            while (std::fabs(outside - inside) > tol) {
                double mid = 0.5 * (inside + outside);
                (accept(mid) ? inside : outside) = mid;
            }
            return inside;
        };
        ci.lower = (first == 0) ? grid.front() : bisect(grid[first], grid[first - 1]);
        ci.upper = (last + 1 == grid.size()) ? grid.back() : bisect(grid[last], grid[last + 1]);
        out.push_back(std::move(ci));
    }
    return out;
}

inline ConfidenceInterval confidence_interval(const LrProfile& profile, double alpha,
                                              const CriticalValueTable& table,
                                              const CiOptions& ci_opts = {}) {
    return confidence_intervals(profile, {alpha}, table, ci_opts).front();
}

inline ConfidenceInterval confidence_interval(const Sample& sample, double alpha,
                                              const CriticalValueTable& table,
                                              const CiOptions& ci_opts = {},
                                              const SolverOptions& opts = {}) {
    LrProfile profile(sample, opts);
    return confidence_interval(profile, alpha, table, ci_opts);
}

} // namespace modecert
