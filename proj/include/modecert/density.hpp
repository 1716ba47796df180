#pragma once

// Concave piecewise-linear log-densities and exact arithmetic on them:
// evaluation, normalization integrals, CDFs, modal intervals, and
// Kullback-Leibler divergences.  All values are immutable after
// construction and all operations are pure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace modecert {

inline constexpr double kConcavitySlack = 1e-10;
inline constexpr double kFlatSlopeTol = 1e-10;
inline constexpr double kMassTol = 1e-8;

// Integral of exp over one linear segment: len * (e^b - e^a)/(b - a).
// Switches to a short series at |b-a| < 1e-8; the two branches agree to
// 1e-12 relative across the switchover.
inline double segment_mass(double a, double b, double len) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(len > 0.0))
        throw std::invalid_argument("segment_mass: non-finite endpoint or non-positive length");
    double d = b - a;
    if (std::fabs(d) > 1e-8)
        return len * std::exp(a) * std::expm1(d) / d;
    return len * std::exp(0.5 * (a + b)) * (1.0 + d * d / 24.0);
}

struct ModeSummary {
    double modal_lo = 0.0;
    double modal_hi = 0.0;
    double mode = 0.0; // == modal_lo
    double max_log_density = 0.0;
};

class PiecewiseLogLinearDensity {
  public:
    PiecewiseLogLinearDensity() = default;
    PiecewiseLogLinearDensity(std::vector<double> knots, std::vector<double> values)
        : knots_(std::move(knots)), values_(std::move(values)) {
        validate();
    }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    double support_lo() const { return knots_.front(); }
    double support_hi() const { return knots_.back(); }

    void validate() const {
        if (knots_.size() < 2 || knots_.size() != values_.size())
            throw std::invalid_argument("PiecewiseLogLinearDensity: need >= 2 knots with matching values");
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j)
            if (!(knots_[j + 1] - knots_[j] > 0.0))
                throw std::invalid_argument("PiecewiseLogLinearDensity: knots not strictly increasing");
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("PiecewiseLogLinearDensity: non-finite value");
        // Concavity up to representation noise: a slope over a gap of width
        // d is only determined to ~ ulp(value)/d, so the allowance grows for
        // narrow gaps (order statistics of large samples sit ~1e-7 apart).
        constexpr double eps = std::numeric_limits<double>::epsilon();
        double prev = std::numeric_limits<double>::infinity();
        double prev_gap = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
            double gap = knots_[j + 1] - knots_[j];
            double s = (values_[j + 1] - values_[j]) / gap;
            double vmax = std::max({std::fabs(values_[j]), std::fabs(values_[j + 1]), 1.0});
            double noise = 8.0 * eps * vmax * (1.0 / gap + 1.0 / prev_gap);
            if (s > prev + kConcavitySlack * std::max(1.0, std::fabs(prev)) + noise)
                throw std::invalid_argument("PiecewiseLogLinearDensity: slopes not non-increasing");
            prev = s;
            prev_gap = gap;
        }
    }

    // Worst concavity violation, max_j (s_{j+1} - s_j); <= 0 when concave.
    double concavity_violation() const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 2 < knots_.size(); ++j) {
            double s0 = (values_[j + 1] - values_[j]) / (knots_[j + 1] - knots_[j]);
            double s1 = (values_[j + 2] - values_[j + 1]) / (knots_[j + 2] - knots_[j + 1]);
            worst = std::max(worst, s1 - s0);
        }
        return worst;
    }

    // Linear interpolation of the log-density; -inf outside [t0, tk].
    double eval_log(double x) const {
        if (x < knots_.front() || x > knots_.back())
            return -std::numeric_limits<double>::infinity();
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
        std::size_t j = (it == knots_.end()) ? knots_.size() - 2 : static_cast<std::size_t>(it - knots_.begin()) - 1;
        double w = (x - knots_[j]) / (knots_[j + 1] - knots_[j]);
        return values_[j] + w * (values_[j + 1] - values_[j]);
    }

    double total_mass() const {
        double m = 0.0;
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j)
            m += segment_mass(values_[j], values_[j + 1], knots_[j + 1] - knots_[j]);
        return m;
    }

    // Unnormalized CDF: cdf(t0)=0, cdf(tk)=total_mass(), monotone.
    double cdf(double x) const {
        if (x <= knots_.front()) return 0.0;
        double m = 0.0;
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
            if (x >= knots_[j + 1]) {
                m += segment_mass(values_[j], values_[j + 1], knots_[j + 1] - knots_[j]);
            } else {
                if (x > knots_[j]) m += segment_mass(values_[j], eval_log(x), x - knots_[j]);
                break;
            }
        }
        return m;
    }

    // Maximal closed interval on which the log-density attains its maximum.
    // A segment counts as flat iff its slope is within kFlatSlopeTol of zero.
    ModeSummary mode_summary() const {
        std::size_t jmax = 0;
        for (std::size_t j = 1; j < values_.size(); ++j)
            if (values_[j] > values_[jmax]) jmax = j;
        std::size_t lo = jmax, hi = jmax;
        while (lo > 0) {
            double s = (values_[lo] - values_[lo - 1]) / (knots_[lo] - knots_[lo - 1]);
            if (std::fabs(s) <= kFlatSlopeTol) --lo; else break;
        }
        while (hi + 1 < values_.size()) {
            double s = (values_[hi + 1] - values_[hi]) / (knots_[hi + 1] - knots_[hi]);
            if (std::fabs(s) <= kFlatSlopeTol) ++hi; else break;
        }
        ModeSummary ms;
        ms.modal_lo = knots_[lo];
        ms.modal_hi = knots_[hi];
        ms.mode = ms.modal_lo;
        ms.max_log_density = values_[jmax];
        return ms;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"knots", knots_}, {"values", values_}};
    }

    static PiecewiseLogLinearDensity from_json(const nlohmann::json& j) {
        return PiecewiseLogLinearDensity(j.at("knots").get<std::vector<double>>(),
                                         j.at("values").get<std::vector<double>>());
    }

  private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

// A density seen only through its log-pdf, support, and the interior points
// where the log-pdf is not smooth.  Adapts both piecewise-log-linear and
// analytic densities to the divergence / projection routines.
struct DensityView {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    std::function<double(double)> log_pdf;
    std::vector<double> breakpoints; // interior kinks, sorted

    static DensityView of(const PiecewiseLogLinearDensity& d) {
        DensityView v;
        v.lo = d.support_lo();
        v.hi = d.support_hi();
        v.log_pdf = [d](double x) { return d.eval_log(x); };
        v.breakpoints.assign(d.knots().begin() + 1, d.knots().end() - 1);
        return v;
    }
};

namespace detail {

// Adaptive Simpson on [a,b], absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    double m = 0.5 * (a + b);
    return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 48);
}

// Split [a,b] at the given sorted breakpoints and integrate piece by piece.
inline double integrate_with_breaks(const std::function<double(double)>& f, double a, double b,
                                    const std::vector<double>& breaks, double tol) {
    std::vector<double> cuts{a};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    double total = 0.0;
    double per = tol / static_cast<double>(cuts.size());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate(f, cuts[i], cuts[i + 1], per);
    return total;
}

// Shrink an infinite or very wide support to the region where exp(logf)
// times a slowly growing log-ratio is non-negligible.
inline double find_cut(const std::function<double(double)>& logf, double from, double dir_sign,
                       double peak) {
    double step = 1.0, x = from;
    for (int i = 0; i < 200; ++i) {
        double cand = x + dir_sign * step;
        if (logf(cand) < peak - 60.0) return cand;
        x = cand;
        step *= 1.5;
    }
    return x;
}

} // namespace detail

// K(f, g) = integral of f * log(f/g); +inf when the support of f is not
// contained in that of g (documented sentinel, not a fault).
inline double kl_divergence(const DensityView& f, const DensityView& g, double abs_tol = 1e-9) {
    const double inf = std::numeric_limits<double>::infinity();
    if (f.lo < g.lo - 1e-12 || f.hi > g.hi + 1e-12) return inf;

    // locate a rough peak of f to anchor tail cutoffs
    double probe_lo = std::isfinite(f.lo) ? f.lo : -1.0;
    double probe_hi = std::isfinite(f.hi) ? f.hi : 1.0;
    double peak = -inf;
    for (int i = 0; i <= 64; ++i) {
        double x = probe_lo + (probe_hi - probe_lo) * i / 64.0;
        peak = std::max(peak, f.log_pdf(x));
    }
    if (!std::isfinite(f.lo)) peak = std::max(peak, f.log_pdf(0.0));

    double a = std::isfinite(f.lo) ? f.lo : detail::find_cut(f.log_pdf, probe_lo, -1.0, peak);
    double b = std::isfinite(f.hi) ? f.hi : detail::find_cut(f.log_pdf, probe_hi, +1.0, peak);

    bool support_violated = false;
    auto integrand = [&](double x) -> double {
        double lf = f.log_pdf(x);
        if (lf < peak - 700.0 || lf == -inf) return 0.0;
        double lg = g.log_pdf(x);
        if (lg == -inf || !std::isfinite(lg)) {
            if (lf > peak - 40.0) support_violated = true;
            return 0.0;
        }
        return std::exp(lf) * (lf - lg);
    };

    std::vector<double> breaks = f.breakpoints;
    breaks.insert(breaks.end(), g.breakpoints.begin(), g.breakpoints.end());
    std::sort(breaks.begin(), breaks.end());
    double val = detail::integrate_with_breaks(integrand, a, b, breaks, abs_tol);
    if (support_violated) return inf;
    return val;
}

inline double kl_divergence(const PiecewiseLogLinearDensity& f, const PiecewiseLogLinearDensity& g,
                            double abs_tol = 1e-9) {
    return kl_divergence(DensityView::of(f), DensityView::of(g), abs_tol);
}

} // namespace modecert
