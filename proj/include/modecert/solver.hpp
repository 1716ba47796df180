#pragma once

// Maximum likelihood estimation of log-concave densities, unconstrained and
// with the modal interval forced to contain a given point m.
//
// Both fits maximize  Pn(phi) - integral(exp(phi)) + 1  over concave
// piecewise-linear phi.  The solver is an active-set Newton method on the
// values at the current kink set: between kinks phi is linear, the reduced
// problem is smooth and strictly concave with a tridiagonal Hessian, and
// kinks are added where the integrated-CDF optimality profile dips negative.
// The mode constraint adds two slope-sign rows around m; when one becomes
// tight the adjacent kink values are merged (flat segment) and released
// again when the one-sided profile at m asks for it.
//
// The sample is standardized to [0,1] internally, which makes affine
// equivariance of the fit exact up to floating-point rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "modecert/density.hpp"
#include "modecert/sample.hpp"

namespace modecert {

struct SolverOptions {
    double tol = 1e-7;      // characterization residual tolerance (standardized units)
    int max_iter = 500;     // outer (active-set) iteration cap
    double obj_tol = 1e-12; // objective improvement stopping threshold
};

struct FitReport {
    PiecewiseLogLinearDensity density;
    double log_likelihood = 0.0; // n * Pn(log fhat)
    int iterations = 0;
    double max_characterization_residual = 0.0;
    bool converged = false;
};

struct ConstrainedFitReport {
    PiecewiseLogLinearDensity density;
    double mode = 0.0;
    double log_likelihood = 0.0;
    int iterations = 0;
    double max_characterization_residual = 0.0;
    double integral_identity_residual = 0.0;
    bool converged = false;
};

namespace detail {

// --- numerically stable pieces of J(a,b,delta) = delta (e^b - e^a)/(b-a) ---
// All take d = b - a and are written so that J and its first and second
// partials are delta * e^a * (series in d).

inline double j_g0(double d) { // (e^d - 1)/d
    if (std::fabs(d) < 1e-3)
        return 1.0 + d * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d / 120.0)));
    return std::expm1(d) / d;
}

inline double j_g1m(double d) { // (e^d - 1 - d)/d^2   -> dJ/da factor
    if (std::fabs(d) < 1e-3)
        return 0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d * (1.0 / 120.0 + d / 720.0)));
    return (std::expm1(d) - d) / (d * d);
}

inline double j_g1(double d) { // (e^d(d-1) + 1)/d^2   -> dJ/db factor
    if (std::fabs(d) < 1e-3)
        return 0.5 + d * (1.0 / 3.0 + d * (1.0 / 8.0 + d * (1.0 / 30.0 + d / 144.0)));
    return (std::expm1(d) * (d - 1.0) + d) / (d * d);
}

inline double j_h2(double d) { // (e^d(d^2-2d+2) - 2)/d^3  -> d2J/db2 factor
    if (std::fabs(d) < 1e-3)
        return 1.0 / 3.0 + d * (0.25 + d * (0.1 + d * (1.0 / 36.0 + d / 168.0)));
    double q = d * d - 2.0 * d + 2.0;
    return (std::expm1(d) * q + d * d - 2.0 * d) / (d * d * d);
}

inline double j_h11(double d) { // (d + e^d(d-2) + 2)/d^3  -> d2J/dadb factor
    if (std::fabs(d) < 1e-3)
        return 1.0 / 6.0 + d * (1.0 / 12.0 + d * (1.0 / 40.0 + d * (1.0 / 180.0 + d / 1008.0)));
    return (std::expm1(d) * (d - 2.0) + 2.0 * d) / (d * d * d);
}

// Double integral of exp over a linear segment:
//   int_0^delta int_0^v exp(a + (b-a)u/delta) du dv = delta^2 e^a g1m(b-a).
inline double segment_double_mass(double a, double b, double len) {
    return len * len * std::exp(a) * j_g1m(b - a);
}

// ---------------------------------------------------------------------------

class ActiveSetCore {
  public:
    // u: strictly increasing standardized knots; w: weights (sum 1, zero
    // allowed); im: index of the mode knot, or -1 for the unconstrained fit.
    ActiveSetCore(std::vector<double> u, std::vector<double> w, int im)
        : u_(std::move(u)), w_(std::move(w)), im_(im), k_(u_.size()) {
        Wpre_.resize(k_);
        Spre_.resize(k_);
        double cw = 0.0, cs = 0.0;
        for (std::size_t i = 0; i < k_; ++i) {
            cw += w_[i];
            cs += w_[i] * u_[i];
            Wpre_[i] = cw;
            Spre_[i] = cs;
        }
        phi_.assign(k_, 0.0);
    }

    void run(const SolverOptions& opts) {
        init_kinks();
        double prev_obj = -std::numeric_limits<double>::infinity();
        int outer = 0;
        for (; outer < opts.max_iter; ++outer) {
            solve_subspace();
            double viol = scan_violations();
            worst_violation_ = viol;
            double obj = objective();
            bool small_gain = (obj - prev_obj) <= opts.obj_tol;
            prev_obj = obj;
            if (viol <= 1e-12 || (viol <= opts.tol && small_gain && outer > 0)) break;
            if (!apply_worst_action()) break; // nothing actionable
        }
        iterations_ = outer + 1;
        converged_ = worst_violation_ <= opts.tol;
        // exact renormalization: shifting all values by -log(mass) preserves
        // every constraint and can only improve the objective
        double mass = 0.0;
        for (std::size_t p = 0; p + 1 < kinks_.size(); ++p) {
            int jl = kinks_[p], jr = kinks_[p + 1];
            mass += segment_mass(y_[p], y_[p + 1], u_[jr] - u_[jl]);
        }
        double shift = -std::log(mass);
        for (double& v : y_) v += shift;
        interpolate_all();
    }

    const std::vector<double>& phi() const { return phi_; }
    int iterations() const { return iterations_; }
    bool converged() const { return converged_; }
    double worst_violation() const { return worst_violation_; }

    double objective() const {
        double data = 0.0;
        for (std::size_t p = 0; p + 1 < kinks_.size(); ++p)
            data += seg_data_term(p);
        double mass = 0.0;
        for (std::size_t p = 0; p + 1 < kinks_.size(); ++p) {
            int jl = kinks_[p], jr = kinks_[p + 1];
            mass += segment_mass(y_[p], y_[p + 1], u_[jr] - u_[jl]);
        }
        return data - mass + 1.0;
    }

  private:
    // ---- state ----
    std::vector<double> u_, w_, Wpre_, Spre_;
    int im_;
    std::size_t k_;
    std::vector<int> kinks_;   // sorted knot indices; endpoints (and im) always present
    std::vector<double> y_;    // phi at kinks
    bool flatL_ = false, flatR_ = false; // pinned zero-slope segment next to m
    std::vector<double> phi_;
    int iterations_ = 0;
    bool converged_ = false;
    double worst_violation_ = std::numeric_limits<double>::infinity();
    std::vector<int> pending_adds_; // knot indices to turn into kinks
    bool pending_releaseL_ = false, pending_releaseR_ = false;

    void init_kinks() {
        kinks_ = {0, static_cast<int>(k_) - 1};
        if (im_ > 0 && im_ < static_cast<int>(k_) - 1)
            kinks_.insert(kinks_.begin() + 1, im_);
        // moment-matched Gaussian log-density as the starting point
        double mu = Spre_.back();
        double var = 0.0;
        for (std::size_t i = 0; i < k_; ++i) var += w_[i] * (u_[i] - mu) * (u_[i] - mu);
        double sd = std::sqrt(std::max(var, 1e-4));
        y_.clear();
        for (int j : kinks_) {
            double z = (u_[j] - mu) / sd;
            y_.push_back(-0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI));
        }
        flatL_ = flatR_ = false;
    }

    std::size_t kink_pos(int j) const {
        return static_cast<std::size_t>(std::lower_bound(kinks_.begin(), kinks_.end(), j) - kinks_.begin());
    }

    // data-term Pn contribution of segment p (between kinks p and p+1),
    // linear in (y_p, y_{p+1}); includes the left kink's own weight, and the
    // right endpoint's weight on the last segment.
    double seg_data_term(std::size_t p) const {
        double bl, br;
        seg_data_coeffs(p, bl, br);
        return bl * y_[p] + br * y_[p + 1];
    }

    void seg_data_coeffs(std::size_t p, double& bl, double& br) const {
        int jl = kinks_[p], jr = kinks_[p + 1];
        double d = u_[jr] - u_[jl];
        double sw = Wpre_[jr - 1] - Wpre_[jl];  // weight strictly inside
        double sx = Spre_[jr - 1] - Spre_[jl];
        bl = w_[jl] + (sw * u_[jr] - sx) / d;
        br = (sx - sw * u_[jl]) / d;
        if (p + 2 == kinks_.size()) br += w_[jr];
    }

    // group index per kink position: merges kinks joined by a pinned flat
    // segment around m
    void build_groups(std::vector<int>& grp, int& ngroups) const {
        grp.assign(kinks_.size(), 0);
        int g = 0;
        std::size_t pm = (im_ >= 0) ? kink_pos(im_) : 0;
        for (std::size_t p = 0; p < kinks_.size(); ++p) {
            if (p > 0) {
                bool merged = (im_ >= 0) && ((flatL_ && p == pm) || (flatR_ && p == pm + 1));
                if (!merged) ++g;
            }
            grp[p] = g;
        }
        ngroups = g + 1;
    }

    // gradient and (negated) tridiagonal Hessian over group values
    void grad_hess(const std::vector<int>& grp, int ng, std::vector<double>& g,
                   std::vector<double>& hd, std::vector<double>& ho) const {
        g.assign(ng, 0.0);
        hd.assign(ng, 0.0);       // diagonal of -Hessian
        ho.assign(ng > 1 ? ng - 1 : 0, 0.0); // off-diagonal of -Hessian
        for (std::size_t p = 0; p + 1 < kinks_.size(); ++p) {
            int jl = kinks_[p], jr = kinks_[p + 1];
            double len = u_[jr] - u_[jl];
            double a = y_[p], b = y_[p + 1], d = b - a;
            double ea = std::exp(a);
            double J = len * ea * j_g0(d);
            double Ja = len * ea * j_g1m(d);
            double Jb = len * ea * j_g1(d);
            double Jbb = len * ea * j_h2(d);
            double Jab = len * ea * j_h11(d);
            double Jaa = J - 2.0 * Jab - Jbb;
            double bl, br;
            seg_data_coeffs(p, bl, br);
            int gl = grp[p], gr = grp[p + 1];
            g[gl] += bl - Ja;
            g[gr] += br - Jb;
            hd[gl] += Jaa;
            hd[gr] += Jbb;
            if (gl == gr) {
                hd[gl] += 2.0 * Jab;
            } else {
                ho[gl] += Jab;
            }
        }
    }

    static bool solve_tridiag(std::vector<double> hd, std::vector<double> ho,
                              std::vector<double> rhs, std::vector<double>& x) {
        const int n = static_cast<int>(hd.size());
        x.assign(n, 0.0);
        for (int i = 1; i < n; ++i) {
            if (hd[i - 1] <= 0.0) return false;
            double m = ho[i - 1] / hd[i - 1];
            hd[i] -= m * ho[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        if (hd[n - 1] <= 0.0) return false;
        x[n - 1] = rhs[n - 1] / hd[n - 1];
        for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - ho[i] * x[i + 1]) / hd[i];
        return true;
    }

    double objective_at(const std::vector<double>& y) const {
        double val = 0.0;
        for (std::size_t p = 0; p + 1 < kinks_.size(); ++p) {
            double bl, br;
            seg_data_coeffs(p, bl, br);
            int jl = kinks_[p], jr = kinks_[p + 1];
            val += bl * y[p] + br * y[p + 1];
            val -= segment_mass(y[p], y[p + 1], u_[jr] - u_[jl]);
        }
        return val + 1.0;
    }

    double slope(std::size_t p, const std::vector<double>& y) const {
        return (y[p + 1] - y[p]) / (u_[kinks_[p + 1]] - u_[kinks_[p]]);
    }

    // Newton iterations on the current working set.  Returns when the
    // reduced gradient is negligible.  Boundary hits deactivate kinks or pin
    // flat segments and continue within the same call.
    void solve_subspace() {
        for (int it = 0; it < 400; ++it) {
            std::vector<int> grp;
            int ng = 0;
            build_groups(grp, ng);
            std::vector<double> g, hd, ho, dirg;
            grad_hess(grp, ng, g, hd, ho);
            double gmax = 0.0;
            for (double v : g) gmax = std::max(gmax, std::fabs(v));
            if (gmax < 1e-13) return;
            double ridge = 0.0;
            while (!solve_tridiag(add_ridge(hd, ridge), ho, g, dirg)) {
                ridge = (ridge == 0.0) ? 1e-12 : ridge * 100.0;
                if (ridge > 1e6) return;
            }
            // direction on kink values
            std::vector<double> dir(kinks_.size());
            for (std::size_t p = 0; p < kinks_.size(); ++p) dir[p] = dirg[grp[p]];
            double slope0 = 0.0;
            for (int gi = 0; gi < ng; ++gi) slope0 += g[gi] * dirg[gi];
            if (!(slope0 > 0.0)) return;

            // maximal feasible step
            double tmax = std::numeric_limits<double>::infinity();
            int block_kind = 0; // 1 = concavity at kink position, 2 = flat left, 3 = flat right
            std::size_t block_pos = 0;
            std::size_t pm = (im_ >= 0) ? kink_pos(im_) : static_cast<std::size_t>(-1);
            for (std::size_t p = 1; p + 1 < kinks_.size(); ++p) {
                if (im_ >= 0 && p == pm) continue; // covered by the slope-sign rows
                double c = slope(p - 1, y_) - slope(p, y_);
                double dc = slope(p - 1, dir) - slope(p, dir);
                if (dc < -1e-300) {
                    double t = std::max(c, 0.0) / (-dc);
                    if (t < tmax) { tmax = t; block_kind = 1; block_pos = p; }
                }
            }
            if (im_ >= 0 && pm > 0 && !flatL_) {
                double c = slope(pm - 1, y_);
                double dc = slope(pm - 1, dir);
                if (dc < -1e-300) {
                    double t = std::max(c, 0.0) / (-dc);
                    if (t < tmax) { tmax = t; block_kind = 2; block_pos = pm; }
                }
            }
            if (im_ >= 0 && pm + 1 < kinks_.size() && !flatR_) {
                double c = -slope(pm, y_);
                double dc = -slope(pm, dir);
                if (dc < -1e-300) {
                    double t = std::max(c, 0.0) / (-dc);
                    if (t < tmax) { tmax = t; block_kind = 3; block_pos = pm; }
                }
            }

            auto activate = [&]() {
                if (block_kind == 1) {
                    kinks_.erase(kinks_.begin() + static_cast<long>(block_pos));
                    y_.erase(y_.begin() + static_cast<long>(block_pos));
                } else if (block_kind == 2) {
                    flatL_ = true;
                    y_[block_pos - 1] = y_[block_pos];
                } else {
                    flatR_ = true;
                    y_[block_pos + 1] = y_[block_pos];
                }
            };
            if (block_kind != 0 && tmax < 1e-13) {
                // the boundary passes through the current point: activate the
                // blocking constraint and recompute the direction
                activate();
                continue;
            }
            double t0 = std::min(1.0, tmax);
            double f0 = objective_at(y_);
            double t = t0;
            bool accepted = false;
            std::vector<double> ytrial(y_.size());
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t p = 0; p < y_.size(); ++p) ytrial[p] = y_[p] + t * dir[p];
                if (objective_at(ytrial) >= f0 + 1e-4 * t * slope0) { accepted = true; break; }
                t *= 0.5;
            }
            if (!accepted) return; // no progress possible along Newton direction
            y_ = ytrial;
            if (block_kind != 0 && t == tmax) activate();
        }
    }

    static std::vector<double> add_ridge(std::vector<double> hd, double r) {
        if (r > 0.0)
            for (double& v : hd) v += r;
        return hd;
    }

    void interpolate_all() {
        for (std::size_t p = 0; p + 1 < kinks_.size(); ++p) {
            int jl = kinks_[p], jr = kinks_[p + 1];
            phi_[jl] = y_[p];
            for (int j = jl + 1; j < jr; ++j) {
                double lam = (u_[j] - u_[jl]) / (u_[jr] - u_[jl]);
                phi_[j] = y_[p] + lam * (y_[p + 1] - y_[p]);
            }
        }
        phi_[kinks_.back()] = y_.back();
    }

    // Optimality profile scan.  Computes, at every knot,
    //   H_L(t) = int_{t_0}^{t} (Fn - Fhat) dv     (used left of m, and
    //                                              everywhere when unconstrained)
    //   H_R(t) = int_{t}^{t_k} (Fhat - Fn) dv     (used right of m)
    // and returns the worst violation (positive value = dip below zero).
    // Records one corrective kink per inter-kink gap (the gap's deepest dip)
    // plus any flat-segment releases asked for at m.
    double scan_violations() {
        interpolate_all();
        const std::size_t k = k_;
        std::vector<double> HL(k, 0.0);
        double fhat = 0.0, intFn = 0.0, intFhat = 0.0;
        for (std::size_t j = 0; j + 1 < k; ++j) {
            double len = u_[j + 1] - u_[j];
            intFn += Wpre_[j] * len;
            intFhat += fhat * len + segment_double_mass(phi_[j], phi_[j + 1], len);
            fhat += segment_mass(phi_[j], phi_[j + 1], len);
            HL[j + 1] = intFn - intFhat;
        }
        double HLtot = HL[k - 1];
        pending_adds_.clear();
        pending_releaseL_ = pending_releaseR_ = false;
        double worst = 0.0;
        double gap_best = 0.0;
        int gap_arg = -1;
        std::size_t next_kink = 1; // kinks_[0] == 0 always
        auto flush_gap = [&]() {
            if (gap_arg >= 0 && gap_best > 1e-13) pending_adds_.push_back(gap_arg);
            gap_best = 0.0;
            gap_arg = -1;
        };
        for (std::size_t j = 1; j + 1 < k; ++j) {
            int ji = static_cast<int>(j);
            if (next_kink < kinks_.size() && kinks_[next_kink] == ji) {
                flush_gap();
                ++next_kink;
                continue;
            }
            if (ji == im_) { flush_gap(); continue; }
            double v = (im_ < 0 || ji < im_) ? -HL[j] : HLtot - HL[j];
            worst = std::max(worst, v);
            if (v > gap_best) { gap_best = v; gap_arg = ji; }
        }
        flush_gap();
        if (im_ < 0) {
            worst = std::max(worst, std::fabs(HLtot)); // equality at the right end
        } else {
            // one-sided conditions at m itself: release a pinned flat segment
            if (flatL_ && -HL[static_cast<std::size_t>(im_)] > 1e-13) {
                worst = std::max(worst, -HL[static_cast<std::size_t>(im_)]);
                pending_releaseL_ = true;
            }
            if (flatR_ && HLtot - HL[static_cast<std::size_t>(im_)] > 1e-13) {
                worst = std::max(worst, HLtot - HL[static_cast<std::size_t>(im_)]);
                pending_releaseR_ = true;
            }
        }
        return worst;
    }

    bool apply_worst_action() {
        bool acted = false;
        if (pending_releaseL_) { flatL_ = false; acted = true; }
        if (pending_releaseR_) { flatR_ = false; acted = true; }
        for (int j : pending_adds_) {
            std::size_t pos = kink_pos(j);
            if (pos < kinks_.size() && kinks_[pos] == j) continue;
            kinks_.insert(kinks_.begin() + static_cast<long>(pos), j);
            y_.insert(y_.begin() + static_cast<long>(pos), phi_[static_cast<std::size_t>(j)]);
            acted = true;
        }
        return acted;
    }
};

} // namespace detail

// ---------------------------------------------------------------------------

inline FitReport fit(const Sample& sample, const SolverOptions& opts = {}) {
    const auto& x = sample.points();
    const double lo = x.front(), scale = x.back() - x.front();
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - lo) / scale;
    detail::ActiveSetCore core(u, sample.weights(), -1);
    core.run(opts);
    std::vector<double> vals = core.phi();
    const double lg = std::log(scale);
    for (double& v : vals) v -= lg;
    FitReport r;
    r.density = PiecewiseLogLinearDensity(x, vals);
    double pn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) pn += sample.weights()[i] * vals[i];
    r.log_likelihood = static_cast<double>(sample.n()) * pn;
    r.iterations = core.iterations();
    r.converged = core.converged();
    r.max_characterization_residual = core.worst_violation();
    return r;
}

inline ConstrainedFitReport fit_constrained(const Sample& sample, double m,
                                            const SolverOptions& opts = {}) {
    if (!std::isfinite(m)) throw std::invalid_argument("fit_constrained: m must be finite");
    const auto& x = sample.points();
    const double lo = std::min(x.front(), m);
    const double hi = std::max(x.back(), m);
    const double scale = hi - lo;

    // knot set = data points plus m (unless m coincides with a data point)
    std::vector<double> knots = x;
    std::vector<double> w = sample.weights();
    auto it = std::lower_bound(knots.begin(), knots.end(), m);
    std::size_t pos = static_cast<std::size_t>(it - knots.begin());
    bool coincides = false;
    if (pos < knots.size() && std::fabs(knots[pos] - m) < 1e-12 * scale) coincides = true;
    if (pos > 0 && std::fabs(knots[pos - 1] - m) < 1e-12 * scale) { coincides = true; --pos; }
    if (!coincides) {
        knots.insert(knots.begin() + static_cast<long>(pos), m);
        w.insert(w.begin() + static_cast<long>(pos), 0.0);
    }
    std::vector<double> u(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) u[i] = (knots[i] - lo) / scale;

    detail::ActiveSetCore core(u, w, static_cast<int>(pos));
    core.run(opts);
    std::vector<double> vals = core.phi();
    const double lg = std::log(scale);
    for (double& v : vals) v -= lg;

    ConstrainedFitReport r;
    r.density = PiecewiseLogLinearDensity(knots, vals);
    r.mode = m;
    double pn = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) pn += w[i] * vals[i];
    r.log_likelihood = static_cast<double>(sample.n()) * pn;
    r.iterations = core.iterations();
    r.converged = core.converged();
    r.max_characterization_residual = core.worst_violation();
    r.integral_identity_residual = std::fabs(r.density.total_mass() - 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// Finite-sample optimality certificates, recomputed from the fitted density
// and the sample (independent of solver internals).

struct CharacterizationReport {
    // max over knots of the fitted density of |Fn(tau) - Fhat(tau)| - 1/n
    double knot_cdf_residual = 0.0;
    // max positive value of int_{X(1)}^x (Fhat - Fn) dv  (must be ~<= 0)
    double integral_sign_violation = 0.0;
};

struct ConstrainedCharacterizationReport {
    double mass_identity_residual = 0.0; // |Fn(inf) - Fhat0(inf)| = |1 - total mass|
    double knot_cdf_residual = 0.0;
    double left_violation = 0.0;  // max positive -H_L over t <= m
    double right_violation = 0.0; // max positive -H_R over t >= m
};

namespace detail {

// H_L(t) at every density knot: int_{lo}^{t} (Fn - Fhat) dv, with Fn built
// from the sample.  Returns HL plus the total (HL at the right end).
inline std::vector<double> hl_profile(const PiecewiseLogLinearDensity& d, const Sample& s) {
    const auto& t = d.knots();
    const auto& v = d.values();
    std::vector<double> HL(t.size(), 0.0);
    double fhat = 0.0, intFn = 0.0, intFhat = 0.0;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
        double len = t[j + 1] - t[j];
        intFn += s.ecdf(t[j]) * len;
        intFhat += fhat * len + segment_double_mass(v[j], v[j + 1], len);
        fhat += segment_mass(v[j], v[j + 1], len);
        HL[j + 1] = intFn - intFhat;
    }
    return HL;
}

inline bool value_is_kink(const PiecewiseLogLinearDensity& d, std::size_t j) {
    if (j == 0 || j + 1 == d.knots().size()) return true;
    double sl = (d.values()[j] - d.values()[j - 1]) / (d.knots()[j] - d.knots()[j - 1]);
    double sr = (d.values()[j + 1] - d.values()[j]) / (d.knots()[j + 1] - d.knots()[j]);
    double scale = d.knots().back() - d.knots().front();
    return (sl - sr) * scale > 1e-8;
}

} // namespace detail

inline CharacterizationReport check_characterization(const FitReport& fit, const Sample& sample) {
    const auto& d = fit.density;
    CharacterizationReport rep;
    double inv_n = 1.0 / static_cast<double>(sample.n());
    rep.knot_cdf_residual = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.knots().size(); ++j) {
        if (!detail::value_is_kink(d, j)) continue;
        double r = std::fabs(sample.ecdf(d.knots()[j]) - d.cdf(d.knots()[j])) - inv_n;
        rep.knot_cdf_residual = std::max(rep.knot_cdf_residual, r);
    }
    auto HL = detail::hl_profile(d, sample);
    for (double h : HL) rep.integral_sign_violation = std::max(rep.integral_sign_violation, -h);
    return rep;
}

inline ConstrainedCharacterizationReport
check_constrained_characterization(const ConstrainedFitReport& fit, const Sample& sample) {
    const auto& d = fit.density;
    ConstrainedCharacterizationReport rep;
    rep.mass_identity_residual = std::fabs(d.total_mass() - 1.0);
    double inv_n = 1.0 / static_cast<double>(sample.n());
    rep.knot_cdf_residual = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.knots().size(); ++j) {
        if (!detail::value_is_kink(d, j)) continue;
        // the 1/n bound holds at kinks away from m; at m itself neither
        // one-sided profile needs to touch zero, so no identity is available
        if (d.knots()[j] == fit.mode) continue;
        double r = std::fabs(sample.ecdf(d.knots()[j]) - d.cdf(d.knots()[j])) - inv_n;
        rep.knot_cdf_residual = std::max(rep.knot_cdf_residual, r);
    }
    auto HL = detail::hl_profile(d, sample);
    double total = HL.back();
    // H_L applies left of m, H_R = total - H_L applies right of m
    for (std::size_t j = 0; j < d.knots().size(); ++j) {
        if (d.knots()[j] <= fit.mode)
            rep.left_violation = std::max(rep.left_violation, -HL[j]);
        if (d.knots()[j] >= fit.mode)
            rep.right_violation = std::max(rep.right_violation, total - HL[j]);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Population-level projection certificate (the analogue of the finite-sample
// characterization): F_m is the CDF of a candidate projection with mode m,
// G the CDF being projected.  Checks
//   int_{-inf}^x F_m <= int_{-inf}^x G      for x <= m,
//   int_x^{inf} (1-F_m) <= int_x^{inf} (1-G) for x >= m
// on a grid and reports the largest positive violations.

struct ProjectionCheckReport {
    double max_left_violation = 0.0;
    double max_right_violation = 0.0;
    double max_violation() const { return std::max(max_left_violation, max_right_violation); }
};

inline ProjectionCheckReport
population_projection_check(const std::function<double(double)>& Fm,
                            const std::function<double(double)>& G, double m, double lo, double hi,
                            int grid = 2000) {
    ProjectionCheckReport rep;
    // cumulative integrals by composite Simpson between grid nodes
    std::vector<double> xs(static_cast<std::size_t>(grid) + 1);
    for (int i = 0; i <= grid; ++i) xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / grid;
    double IF = 0.0, IG = 0.0;
    for (int i = 0; i <= grid; ++i) {
        double x = xs[static_cast<std::size_t>(i)];
        if (i > 0) {
            double a = xs[static_cast<std::size_t>(i) - 1], h = x - a, mid = a + 0.5 * h;
            IF += h / 6.0 * (Fm(a) + 4.0 * Fm(mid) + Fm(x));
            IG += h / 6.0 * (G(a) + 4.0 * G(mid) + G(x));
        }
        if (x <= m) rep.max_left_violation = std::max(rep.max_left_violation, IF - IG);
    }
    // right side: int_x^hi (1-F) = (hi - x) - (IF_total - IF(x)); accumulate backwards
    double JF = 0.0, JG = 0.0;
    for (int i = grid; i >= 0; --i) {
        double x = xs[static_cast<std::size_t>(i)];
        if (i < grid) {
            double b = xs[static_cast<std::size_t>(i) + 1], h = b - x, mid = x + 0.5 * h;
            JF += h / 6.0 * ((1 - Fm(x)) + 4.0 * (1 - Fm(mid)) + (1 - Fm(b)));
            JG += h / 6.0 * ((1 - G(x)) + 4.0 * (1 - G(mid)) + (1 - G(b)));
        }
        if (x >= m) rep.max_right_violation = std::max(rep.max_right_violation, JF - JG);
    }
    return rep;
}

} // namespace modecert
