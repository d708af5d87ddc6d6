#pragma once

// Box-constrained limited-memory quasi-Newton maximizer (projected L-BFGS with
// an Armijo backtracking search along the projected path). Iterates are
// always feasible and the objective never decreases.

#include <gnbo/common.hpp>

#include <cmath>
#include <deque>
#include <limits>

namespace gnbo {

struct LbfgsOptions {
    int max_iters = 100;
    int memory = 8;
    double step_tol = 1e-8;
    double grad_tol = 1e-6;
    double armijo = 1e-4;
    int max_backtracks = 30;
};

struct LbfgsResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
};

namespace detail {
    inline Vector project(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

    // Ascent gradient with components that push out of the box zeroed.
    inline Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi)
    {
        Vector pg = g;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if ((x[i] <= lo[i] && g[i] < 0.0) || (x[i] >= hi[i] && g[i] > 0.0))
                pg[i] = 0.0;
        return pg;
    }
} // namespace detail

/// Maximize `f` over the box [lo, hi]. `f(x, grad)` returns the value and
/// writes the gradient into `grad`.
template <typename F>
LbfgsResult maximize_box(F&& f, Vector x0, const Vector& lo, const Vector& hi, const LbfgsOptions& opt = {})
{
    const Eigen::Index n = x0.size();
    LbfgsResult res;
    Vector x = detail::project(x0, lo, hi);
    Vector g(n);
    double fx = f(x, g);
    ++res.evaluations;
    if (!std::isfinite(fx))
        throw NonFiniteAcquisition("maximize_box: non-finite objective at start");

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int it = 0; it < opt.max_iters; ++it) {
        res.iterations = it + 1;
        Vector pg = detail::projected_gradient(x, g, lo, hi);
        if (!pg.allFinite() || pg.lpNorm<Eigen::Infinity>() < opt.grad_tol)
            break;

        // Two-loop recursion on the ascent problem (equivalently minimizing -f).
        Vector q = pg;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        } else {
            q /= std::max(1.0, pg.norm());
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Vector dir = q;
        for (Eigen::Index i = 0; i < n; ++i)
            if (pg[i] == 0.0)
                dir[i] = 0.0;
        if (!(dir.dot(pg) > 0.0) || !dir.allFinite()) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = pg / std::max(1.0, pg.norm());
        }

        double t = 1.0;
        bool accepted = false;
        Vector x_new(n), g_new(n);
        double f_new = fx;
        for (int bt = 0; bt < opt.max_backtracks; ++bt, t *= 0.5) {
            x_new = detail::project(x + t * dir, lo, hi);
            const Vector step = x_new - x;
            if (step.lpNorm<Eigen::Infinity>() < opt.step_tol)
                break;
            f_new = f(x_new, g_new);
            ++res.evaluations;
            if (std::isfinite(f_new) && f_new >= fx + opt.armijo * g.dot(step)) {
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;

        const Vector s = x_new - x;
        const Vector y = g - g_new; // curvature of -f
        const double sy = s.dot(y);
        x = x_new;
        const double f_old = fx;
        fx = f_new;
        if (g_new.allFinite())
            g = g_new;
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        if (s.lpNorm<Eigen::Infinity>() < opt.step_tol)
            break;
        if (std::abs(fx - f_old) <= 1e-15 * std::max(1.0, std::abs(fx)))
            break;
    }
    res.x = x;
    res.value = fx;
    return res;
}

/// Gradient of `f` by central differences, falling back to one-sided
/// differences where a central stencil would leave the box.
template <typename F>
Vector fd_gradient(F&& f, const Vector& x, double fx, double h, const Vector& lo, const Vector& hi)
{
    Vector g(x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const bool up = xi + h <= hi[i];
        const bool down = xi - h >= lo[i];
        if (up && down) {
            xp[i] = xi + h;
            const double fp = f(xp);
            xp[i] = xi - h;
            const double fm = f(xp);
            g[i] = (fp - fm) / (2.0 * h);
        } else if (up) {
            xp[i] = xi + h;
            g[i] = (f(xp) - fx) / h;
        } else if (down) {
            xp[i] = xi - h;
            g[i] = (fx - f(xp)) / h;
        } else {
            g[i] = 0.0;
        }
        xp[i] = xi;
    }
    return g;
}

} // namespace gnbo
