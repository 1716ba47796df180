#pragma once

// Analytic reference families with exact mode constants, CDFs, and
// reproducible samplers, plus the three-piece exponential projection of
// the Laplace density onto densities with mode at 1.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "modecert/density.hpp"
#include "modecert/rng.hpp"
#include "modecert/sample.hpp"

namespace modecert {

struct UndefinedConstant : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Regularized lower incomplete gamma P(a,x): series for x < a+1, continued
// fraction otherwise.
inline double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double beta_cf(double a, double b, double x) {
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = 1.0 + aa / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = 1.0 + aa / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h;
}

// Regularized incomplete beta I_x(a,b).
inline double beta_inc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

// Marsaglia-Tsang gamma deviate, shape >= 1 handled directly.
inline double gamma_deviate(CounterRng& rng, double shape) {
    if (shape < 1.0) {
        double u = rng.next_double();
        return gamma_deviate(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double z = normal_quantile(rng.next_double());
        double v = 1.0 + c * z;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = rng.next_double();
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
    }
}

} // namespace detail

class ReferenceDistribution {
  public:
    enum class Family { Normal, Gamma, Beta, Weibull, Laplace, Logistic, Gumbel, ChiSquared, Uniform };

    ReferenceDistribution(Family f, double p1 = 0.0, double p2 = 1.0) : family_(f), p1_(p1), p2_(p2) {
        switch (family_) {
            case Family::Normal:
            case Family::Laplace:
                if (!(p2_ > 0)) throw std::invalid_argument("scale must be positive");
                break;
            case Family::Gamma:
            case Family::Weibull:
            case Family::Beta:
                if (!(p1_ > 0) || !(p2_ > 0)) throw std::invalid_argument("parameters must be positive");
                break;
            case Family::ChiSquared:
                if (!(p1_ > 0)) throw std::invalid_argument("df must be positive");
                break;
            case Family::Uniform:
                if (!(p2_ > p1_)) throw std::invalid_argument("need a < b");
                break;
            default: break;
        }
    }

    Family family() const { return family_; }
    double p1() const { return p1_; }
    double p2() const { return p2_; }

    // "normal:0,1", "gamma:3,1", "beta:2,3", "weibull:1.5,1", "laplace:0,1",
    // "logistic", "gumbel", "chisq:4", "uniform:0,1"
    static ReferenceDistribution parse(const std::string& spec) {
        std::string name = spec;
        double a = 0.0, b = 1.0;
        bool have_params = false;
        auto colon = spec.find(':');
        if (colon != std::string::npos) {
            name = spec.substr(0, colon);
            std::string rest = spec.substr(colon + 1);
            auto comma = rest.find(',');
            try {
                if (comma == std::string::npos) {
                    a = std::stod(rest);
                } else {
                    a = std::stod(rest.substr(0, comma));
                    b = std::stod(rest.substr(comma + 1));
                }
            } catch (const std::exception&) {
                throw std::invalid_argument("bad distribution spec: " + spec);
            }
            have_params = true;
        }
        if (name == "normal") return {Family::Normal, have_params ? a : 0.0, have_params ? b : 1.0};
        if (name == "gamma") return {Family::Gamma, a, b};
        if (name == "beta") return {Family::Beta, a, b};
        if (name == "weibull") return {Family::Weibull, a, b};
        if (name == "laplace") return {Family::Laplace, have_params ? a : 0.0, have_params ? b : 1.0};
        if (name == "logistic") return {Family::Logistic, 0.0, 1.0};
        if (name == "gumbel") return {Family::Gumbel, 0.0, 1.0};
        if (name == "chisq") return {Family::ChiSquared, a, 2.0};
        if (name == "uniform") return {Family::Uniform, have_params ? a : 0.0, have_params ? b : 1.0};
        throw std::invalid_argument("unknown distribution: " + name);
    }

    std::string name() const {
        switch (family_) {
            case Family::Normal: return "normal:" + num(p1_) + "," + num(p2_);
            case Family::Gamma: return "gamma:" + num(p1_) + "," + num(p2_);
            case Family::Beta: return "beta:" + num(p1_) + "," + num(p2_);
            case Family::Weibull: return "weibull:" + num(p1_) + "," + num(p2_);
            case Family::Laplace: return "laplace:" + num(p1_) + "," + num(p2_);
            case Family::Logistic: return "logistic";
            case Family::Gumbel: return "gumbel";
            case Family::ChiSquared: return "chisq:" + num(p1_);
            case Family::Uniform: return "uniform:" + num(p1_) + "," + num(p2_);
        }
        return "?";
    }

    double support_lo() const {
        switch (family_) {
            case Family::Gamma:
            case Family::Weibull:
            case Family::ChiSquared: return 0.0;
            case Family::Beta: return 0.0;
            case Family::Uniform: return p1_;
            default: return -std::numeric_limits<double>::infinity();
        }
    }

    double support_hi() const {
        switch (family_) {
            case Family::Beta: return 1.0;
            case Family::Uniform: return p2_;
            default: return std::numeric_limits<double>::infinity();
        }
    }

    double log_density(double x) const {
        const double ninf = -std::numeric_limits<double>::infinity();
        switch (family_) {
            case Family::Normal: {
                double z = (x - p1_) / p2_;
                return -0.5 * z * z - std::log(p2_) - 0.5 * std::log(2.0 * M_PI);
            }
            case Family::Gamma: {
                if (x <= 0.0) return ninf;
                return (p1_ - 1.0) * std::log(x) - x / p2_ - std::lgamma(p1_) - p1_ * std::log(p2_);
            }
            case Family::Beta: {
                if (x <= 0.0 || x >= 1.0) return ninf;
                return (p1_ - 1.0) * std::log(x) + (p2_ - 1.0) * std::log1p(-x) +
                       std::lgamma(p1_ + p2_) - std::lgamma(p1_) - std::lgamma(p2_);
            }
            case Family::Weibull: {
                if (x <= 0.0) return ninf;
                double z = x / p2_;
                return std::log(p1_ / p2_) + (p1_ - 1.0) * std::log(z) - std::pow(z, p1_);
            }
            case Family::Laplace:
                return -std::fabs(x - p1_) / p2_ - std::log(2.0 * p2_);
            case Family::Logistic:
                return -x - 2.0 * std::log1p(std::exp(-x));
            case Family::Gumbel:
                return -x - std::exp(-x);
            case Family::ChiSquared: {
                double k = p1_;
                if (x <= 0.0) return ninf;
                return (k / 2.0 - 1.0) * std::log(x) - x / 2.0 - std::lgamma(k / 2.0) -
                       (k / 2.0) * std::log(2.0);
            }
            case Family::Uniform:
                return (x >= p1_ && x <= p2_) ? -std::log(p2_ - p1_) : ninf;
        }
        return ninf;
    }

    double cdf(double x) const {
        switch (family_) {
            case Family::Normal: return 0.5 * std::erfc(-(x - p1_) / (p2_ * std::sqrt(2.0)));
            case Family::Gamma: return x <= 0.0 ? 0.0 : detail::gamma_p(p1_, x / p2_);
            case Family::Beta:
                return detail::beta_inc(p1_, p2_, std::min(std::max(x, 0.0), 1.0));
            case Family::Weibull:
                return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / p2_, p1_));
            case Family::Laplace: {
                double z = (x - p1_) / p2_;
                return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
            }
            case Family::Logistic: return 1.0 / (1.0 + std::exp(-x));
            case Family::Gumbel: return std::exp(-std::exp(-x));
            case Family::ChiSquared: return x <= 0.0 ? 0.0 : detail::gamma_p(p1_ / 2.0, x / 2.0);
            case Family::Uniform:
                return std::min(std::max((x - p1_) / (p2_ - p1_), 0.0), 1.0);
        }
        return 0.0;
    }

    // True iff the family has a unique mode with strictly negative log-density
    // curvature there (Laplace and Uniform fail).
    bool has_curved_mode() const {
        switch (family_) {
            case Family::Laplace:
            case Family::Uniform: return false;
            case Family::Gamma: return p1_ > 1.0;
            case Family::Beta: return p1_ > 1.0 && p2_ > 1.0;
            case Family::Weibull: return p1_ > 1.0;
            case Family::ChiSquared: return p1_ > 2.0;
            default: return true;
        }
    }

    double mode() const {
        switch (family_) {
            case Family::Normal: return p1_;
            case Family::Gamma:
                if (p1_ <= 1.0) return 0.0;
                return (p1_ - 1.0) * p2_;
            case Family::Beta:
                if (!(p1_ > 1.0 && p2_ > 1.0)) throw UndefinedConstant("Beta mode needs a,b > 1");
                return (p1_ - 1.0) / (p1_ + p2_ - 2.0);
            case Family::Weibull:
                if (p1_ <= 1.0) return 0.0;
                return p2_ * std::pow((p1_ - 1.0) / p1_, 1.0 / p1_);
            case Family::Laplace: return p1_;
            case Family::Logistic: return 0.0;
            case Family::Gumbel: return 0.0;
            case Family::ChiSquared:
                if (p1_ <= 2.0) return 0.0;
                return p1_ - 2.0;
            case Family::Uniform: return p1_; // left end of the modal interval
        }
        return 0.0;
    }

    double f_at_mode() const { return std::exp(log_density(mode())); }

    // phi''(m), closed form per family; throws for flat-mode families.
    double phi2_at_mode() const {
        if (!has_curved_mode()) throw UndefinedConstant("phi''(m) undefined for " + name());
        double m = mode();
        switch (family_) {
            case Family::Normal: return -1.0 / (p2_ * p2_);
            case Family::Gamma: return -(p1_ - 1.0) / (m * m);
            case Family::Beta:
                return -(p1_ - 1.0) / (m * m) - (p2_ - 1.0) / ((1.0 - m) * (1.0 - m));
            case Family::Weibull: {
                double k = p1_, lam = p2_;
                return -(k - 1.0) / (m * m) - k * (k - 1.0) * std::pow(m, k - 2.0) / std::pow(lam, k);
            }
            case Family::Logistic: return -0.5;
            case Family::Gumbel: return -1.0;
            case Family::ChiSquared: return -(p1_ / 2.0 - 1.0) / (m * m);
            default: break;
        }
        throw UndefinedConstant("phi''(m) undefined");
    }

    double f2_at_mode() const { return f_at_mode() * phi2_at_mode(); }

    // Inverse-CDF draw for the closed-form families; Marsaglia-Tsang and
    // transforms for Gamma, Beta, ChiSquared.
    double sample_one(CounterRng& rng) const {
        double u;
        switch (family_) {
            case Family::Normal: return p1_ + p2_ * normal_quantile(rng.next_double());
            case Family::Gamma: return p2_ * detail::gamma_deviate(rng, p1_);
            case Family::Beta: {
                double g1 = detail::gamma_deviate(rng, p1_);
                double g2 = detail::gamma_deviate(rng, p2_);
                return g1 / (g1 + g2);
            }
            case Family::Weibull:
                u = rng.next_double();
                return p2_ * std::pow(-std::log1p(-u), 1.0 / p1_);
            case Family::Laplace: {
                u = rng.next_double() - 0.5;
                return p1_ - p2_ * std::copysign(std::log1p(-2.0 * std::fabs(u)), u);
            }
            case Family::Logistic:
                u = rng.next_double();
                return std::log(u / (1.0 - u));
            case Family::Gumbel:
                u = rng.next_double();
                return -std::log(-std::log(u));
            case Family::ChiSquared: return 2.0 * detail::gamma_deviate(rng, p1_ / 2.0);
            case Family::Uniform:
                u = rng.next_double();
                return p1_ + (p2_ - p1_) * u;
        }
        return 0.0;
    }

    std::vector<double> draw(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) const {
        CounterRng rng(seed, stream);
        std::vector<double> xs(n);
        for (auto& x : xs) x = sample_one(rng);
        return xs;
    }

    Sample sample(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) const {
        if (n < 2) throw std::invalid_argument("sample: need n >= 2");
        return Sample::from_observations(draw(n, seed, stream));
    }

    DensityView view() const {
        DensityView v;
        v.lo = support_lo();
        v.hi = support_hi();
        auto self = *this;
        v.log_pdf = [self](double x) { return self.log_density(x); };
        if (family_ == Family::Laplace) v.breakpoints = {p1_};
        return v;
    }

  private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return buf;
    }

    Family family_;
    double p1_, p2_;
};

struct Table1Constants {
    double mode;
    double f_at_mode;
    double f2_at_mode;
    double phi2_at_mode;
};

inline Table1Constants table1_constants(const ReferenceDistribution& d) {
    if (!d.has_curved_mode())
        throw UndefinedConstant("no curved mode for " + d.name());
    return {d.mode(), d.f_at_mode(), d.f2_at_mode(), d.phi2_at_mode()};
}

// C(f0) = ((4!)^2 f0(m) / f0''(m)^2)^{1/5}, the scale constant of the
// n^{-1/5} limit law for the mode of the unconstrained MLE.
inline double mode_constant_C(const ReferenceDistribution& d) {
    auto c = table1_constants(d);
    return std::pow(576.0 * c.f_at_mode / (c.f2_at_mode * c.f2_at_mode), 0.2);
}

// gamma1 = (f0(m)^4 |phi0''(m)|^3 / (4!)^3)^{1/5},
// gamma2 = ((4!)^2 / (f0(m) |phi0''(m)|^2))^{1/5}.
struct ScalingConstants {
    double gamma1;
    double gamma2;
};

inline ScalingConstants scaling_constants(const ReferenceDistribution& d) {
    auto c = table1_constants(d);
    double f = c.f_at_mode, a2 = std::fabs(c.phi2_at_mode);
    double g1 = std::pow(f * f * f * f * a2 * a2 * a2 / (24.0 * 24.0 * 24.0), 0.2);
    double g2 = std::pow(576.0 / (f * a2 * a2), 0.2);
    return {g1, g2};
}

// C(x0, phi0) = (|phi0''| / (4! f0^2))^{1/5}; satisfies gamma1*gamma2^2 * C = 1.
inline double curvature_constant(const ReferenceDistribution& d) {
    auto c = table1_constants(d);
    return std::pow(std::fabs(c.phi2_at_mode) / (24.0 * c.f_at_mode * c.f_at_mode), 0.2);
}

// ---------------------------------------------------------------------------
// Projection of Laplace(0,1) onto log-concave densities with mode at 1:
// the three-piece exponential family g_a, a in (0,1], with
// c(a) = 1/(2 e^a - (2+a)) and a* solving c(a)^2 = exp(-(a-1)).

struct LaplaceProjection {
    double a_star = 0.0;
    double c_star = 0.0;
    double kl = 0.0; // K(Laplace(0,1), g_{a*})

    static double c_of_a(double a) { return 1.0 / (2.0 * std::exp(a) - (2.0 + a)); }

    double log_density(double x) const {
        const double lhalf = -std::log(2.0);
        if (x <= -a_star) return lhalf + x;
        if (x <= 1.0) return lhalf - a_star;
        return lhalf - a_star - c_star * (x - 1.0);
    }

    double cdf(double x) const {
        double ea = std::exp(-a_star);
        if (x <= -a_star) return 0.5 * std::exp(x);
        if (x <= 1.0) return 0.5 * ea + 0.5 * ea * (x + a_star);
        return 1.0 - 0.5 * (ea / c_star) * std::exp(-c_star * (x - 1.0));
    }

    DensityView view() const {
        DensityView v;
        auto self = *this;
        v.log_pdf = [self](double x) { return self.log_density(x); };
        v.breakpoints = {-a_star, 1.0};
        return v;
    }
};

// Root of h(a) = c(a)^2 - exp(-(a-1)) on (0,1] by bisection; the root is
// bracketed analytically on that interval.
inline LaplaceProjection solve_laplace_projection() {
    auto h = [](double a) {
        double c = LaplaceProjection::c_of_a(a);
        return c * c - std::exp(-(a - 1.0));
    };
    double lo = 1e-9, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (h(lo) * h(mid) <= 0.0) hi = mid; else lo = mid;
        if (hi - lo < 1e-15) break;
    }
    LaplaceProjection p;
    p.a_star = 0.5 * (lo + hi);
    p.c_star = LaplaceProjection::c_of_a(p.a_star);
    ReferenceDistribution laplace(ReferenceDistribution::Family::Laplace, 0.0, 1.0);
    p.kl = kl_divergence(laplace.view(), p.view());
    return p;
}

} // namespace modecert
