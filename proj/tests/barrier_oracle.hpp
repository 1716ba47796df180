// Independent reference optimizer used to cross-validate the production
// solver on small instances.  Maximizes
//   sum_i w_i * phi(x_i) - integral(exp(phi)) + 1
// over the full vector of knot values with a log-barrier on the shape
// constraints, using Barzilai-Borwein gradient ascent and composite Simpson
// quadrature.  Shares no code with the production solver.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "modecert/sample.hpp"

namespace oracle {

// linear interpolation of (t, y) at x; x must be inside [t.front(), t.back()]
inline double interp(const std::vector<double>& t, const std::vector<double>& y, double x) {
    std::size_t j = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin());
    if (j == 0) j = 1;
    if (j == t.size()) j = t.size() - 1;
    double lam = (x - t[j - 1]) / (t[j] - t[j - 1]);
    return (1.0 - lam) * y[j - 1] + lam * y[j];
}

constexpr int kSimpsonSub = 64; // per segment, even

// integral of exp(linear interpolant) plus its gradient and Hessian w.r.t.
// the knot values (the Hessian is dense storage for simplicity; K <= 7 here)
inline double simpson_mass(const std::vector<double>& t, const std::vector<double>& y,
                           std::vector<double>* grad = nullptr,
                           std::vector<std::vector<double>>* hess = nullptr) {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    if (hess)
        for (auto& row : *hess) std::fill(row.begin(), row.end(), 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
        double len = t[j + 1] - t[j];
        double h = len / kSimpsonSub;
        for (int k = 0; k <= kSimpsonSub; ++k) {
            double wq = (k == 0 || k == kSimpsonSub) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            wq *= h / 3.0;
            double lam = static_cast<double>(k) / kSimpsonSub;
            double e = std::exp((1.0 - lam) * y[j] + lam * y[j + 1]);
            total += wq * e;
            if (grad) {
                (*grad)[j] += wq * e * (1.0 - lam);
                (*grad)[j + 1] += wq * e * lam;
            }
            if (hess) {
                (*hess)[j][j] += wq * e * (1.0 - lam) * (1.0 - lam);
                (*hess)[j][j + 1] += wq * e * lam * (1.0 - lam);
                (*hess)[j + 1][j] += wq * e * lam * (1.0 - lam);
                (*hess)[j + 1][j + 1] += wq * e * lam * lam;
            }
        }
    }
    return total;
}

// objective evaluated without the production density class
inline double reference_objective(const std::vector<double>& t, const std::vector<double>& y,
                                  const modecert::Sample& s) {
    double pn = 0.0;
    for (std::size_t i = 0; i < s.points().size(); ++i)
        pn += s.weights()[i] * interp(t, y, s.points()[i]);
    return pn - simpson_mass(t, y) + 1.0;
}

struct BarrierProblem {
    std::vector<double> t;                 // knots, sorted
    std::vector<double> w;                 // data weight at each knot (0 at m)
    std::vector<std::vector<double>> rows; // linear constraints rows[k] . y >= 0

    double constraint(std::size_t k, const std::vector<double>& y) const {
        double c = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) c += rows[k][j] * y[j];
        return c;
    }

    // returns -inf when infeasible
    double value(const std::vector<double>& y, double mu) const {
        double v = -simpson_mass(t, y) + 1.0;
        for (std::size_t j = 0; j < y.size(); ++j) v += w[j] * y[j];
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double c = constraint(k, y);
            if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
            v += mu * std::log(c);
        }
        return v;
    }

    std::vector<double> gradient(const std::vector<double>& y, double mu,
                                 std::vector<std::vector<double>>* hess = nullptr) const {
        std::vector<double> g(y.size());
        simpson_mass(t, y, &g, hess);
        if (hess) // Hessian of the barrier objective: -(mass Hessian) - mu a a^T / c^2
            for (auto& row : *hess)
                for (double& v : row) v = -v;
        for (std::size_t j = 0; j < y.size(); ++j) g[j] = w[j] - g[j];
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double c = constraint(k, y);
            for (std::size_t j = 0; j < y.size(); ++j) {
                g[j] += mu * rows[k][j] / c;
                if (hess)
                    for (std::size_t l = 0; l < y.size(); ++l)
                        (*hess)[j][l] -= mu * rows[k][j] * rows[k][l] / (c * c);
            }
        }
        return g;
    }
};

// solve A x = b in place via Gaussian elimination with partial pivoting;
// returns false if A is numerically singular
inline bool solve_dense(std::vector<std::vector<double>> A, std::vector<double> b,
                        std::vector<double>& x) {
    std::size_t K = b.size();
    for (std::size_t col = 0; col < K; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < K; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        if (std::fabs(A[piv][col]) < 1e-300) return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < K; ++r) {
            double f = A[r][col] / A[col][col];
            for (std::size_t cc = col; cc < K; ++cc) A[r][cc] -= f * A[col][cc];
            b[r] -= f * b[col];
        }
    }
    x.assign(K, 0.0);
    for (std::size_t r = K; r-- > 0;) {
        double acc = b[r];
        for (std::size_t cc = r + 1; cc < K; ++cc) acc -= A[r][cc] * x[cc];
        x[r] = acc / A[r][r];
    }
    return true;
}

// adds +/- (slope on segment j) to a constraint row
inline void add_slope(std::vector<double>& row, const std::vector<double>& t, std::size_t j,
                      double sign) {
    double inv = sign / (t[j + 1] - t[j]);
    row[j] -= inv;
    row[j + 1] += inv;
}

// mode == nullptr builds the unconstrained problem
inline BarrierProblem make_problem(const modecert::Sample& s, const double* mode) {
    BarrierProblem p;
    p.t = s.points();
    p.w = s.weights();
    std::size_t im = p.t.size(); // sentinel: no mode knot
    if (mode) {
        auto it = std::lower_bound(p.t.begin(), p.t.end(), *mode);
        im = static_cast<std::size_t>(it - p.t.begin());
        if (it == p.t.end() || *it != *mode) {
            p.t.insert(it, *mode);
            p.w.insert(p.w.begin() + static_cast<std::ptrdiff_t>(im), 0.0);
        }
    }
    std::size_t K = p.t.size();
    for (std::size_t j = 1; j + 1 < K; ++j) {
        if (mode && j == im) continue; // concavity at m implied by the sign rows
        std::vector<double> row(K, 0.0);
        add_slope(row, p.t, j - 1, 1.0);
        add_slope(row, p.t, j, -1.0);
        p.rows.push_back(row);
    }
    if (mode) {
        if (im > 0) { // non-negative slope left of m
            std::vector<double> row(K, 0.0);
            add_slope(row, p.t, im - 1, 1.0);
            p.rows.push_back(row);
        }
        if (im + 1 < K) { // non-positive slope right of m
            std::vector<double> row(K, 0.0);
            add_slope(row, p.t, im, -1.0);
            p.rows.push_back(row);
        }
    }
    return p;
}

// maximize with a decreasing barrier weight; warm start across levels
inline std::vector<double> barrier_solve(const BarrierProblem& p, double center) {
    std::size_t K = p.t.size();
    std::vector<double> y(K);
    double scale = std::max(1e-3, p.t.back() - p.t.front());
    for (std::size_t j = 0; j < K; ++j) {
        double d = (p.t[j] - center) / scale;
        y[j] = -d * d; // strictly concave and strictly feasible start
    }
    std::vector<std::vector<double>> H(K, std::vector<double>(K, 0.0));
    for (double mu = 1e-2; mu >= 0.5e-9; mu *= 0.1) {
        double gtol = (mu > 1e-8) ? 1e-8 : 1e-11;
        for (int iter = 0; iter < 200; ++iter) {
            double v = p.value(y, mu);
            std::vector<double> g = p.gradient(y, mu, &H);
            double gmax = 0.0;
            for (double gj : g) gmax = std::max(gmax, std::fabs(gj));
            if (gmax < gtol) break;
            // damped Newton: H is negative definite, so d = solve(-H, g)
            std::vector<std::vector<double>> negH(K, std::vector<double>(K));
            for (std::size_t a = 0; a < K; ++a)
                for (std::size_t b = 0; b < K; ++b) negH[a][b] = -H[a][b];
            std::vector<double> d;
            double gd = 0.0;
            if (solve_dense(negH, g, d))
                for (std::size_t j = 0; j < K; ++j) gd += g[j] * d[j];
            if (gd <= 0.0) { // numerically unusable direction: gradient step
                d = g;
                gd = 0.0;
                for (double gj : g) gd += gj * gj;
            }
            double step = 1.0;
            std::vector<double> yn(K);
            bool moved = false;
            for (int bt = 0; bt < 80; ++bt) {
                for (std::size_t j = 0; j < K; ++j) yn[j] = y[j] + step * d[j];
                double vn = p.value(yn, mu);
                if (std::isfinite(vn) && vn >= v + 1e-4 * step * gd) {
                    y.swap(yn);
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break; // line search exhausted: accept current point
        }
    }
    return y;
}

} // namespace oracle
