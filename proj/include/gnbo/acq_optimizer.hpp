#pragma once

// Acquisition maximization over a box: scrambled-Sobol raw pool, Boltzmann
// restart selection on z-scored pool values, then projected L-BFGS
// refinement with finite-difference gradients on the unit cube.

#include <gnbo/optim.hpp>
#include <gnbo/random.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

namespace gnbo {

using AcquisitionFn = std::function<double(const Vector&)>;

struct OptSpec {
    std::size_t raw_samples = 512;
    std::size_t num_restarts = 10;
    Box bounds;
    int max_refine_iters = 100;
    double fd_step = 1e-6;
    double step_tol = 1e-8;
    double grad_tol = 1e-6;

    void validate() const
    {
        if (raw_samples < 1 || num_restarts < 1)
            throw InvalidArgument("OptSpec: raw_samples and num_restarts must be >= 1");
        if (num_restarts > raw_samples)
            throw InvalidArgument("OptSpec: num_restarts must not exceed raw_samples");
        if (bounds.dim() == 0)
            throw InvalidArgument("OptSpec: empty bounds");
    }
};

struct RefineResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
};

struct OptDiagnostics {
    PointMatrix pool;
    std::vector<double> pool_values;
    double best_raw_value = 0.0;
    std::vector<std::size_t> restart_indices;
    std::vector<double> refined_values;
    std::size_t best_restart = 0;
    double value = 0.0;
};

inline PointMatrix draw_raw_pool(const OptSpec& spec, std::uint64_t seed)
{
    spec.validate();
    return scrambled_sobol(spec.raw_samples, spec.bounds, derive_seed(seed, "raw-pool"));
}

namespace detail {
    inline std::string format_point(const Vector& x)
    {
        std::ostringstream os;
        os << '[';
        for (Eigen::Index i = 0; i < x.size(); ++i)
            os << (i ? ", " : "") << x[i];
        os << ']';
        return os.str();
    }

    inline std::vector<double> zscores(std::span<const double> v)
    {
        const double n = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v)
            ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / n);
        std::vector<double> z(v.size(), 0.0);
        if (sd > 0.0)
            for (std::size_t i = 0; i < v.size(); ++i)
                z[i] = (v[i] - mean) / sd;
        return z;
    }
} // namespace detail

/// Sample k distinct pool indices without replacement, P(i) proportional to
/// exp(zscore(values)_i).
inline std::vector<std::size_t> boltzmann_restart_indices(std::span<const double> values, std::size_t k,
                                                          std::uint64_t seed)
{
    if (k > values.size())
        throw InvalidArgument("boltzmann_restarts: k exceeds pool size");
    for (double v : values)
        if (!std::isfinite(v))
            throw NonFiniteAcquisition("boltzmann_restarts: non-finite acquisition value in pool");
    const std::vector<double> z = detail::zscores(values);
    const double zmax = *std::max_element(z.begin(), z.end());
    std::vector<double> w(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        w[i] = std::exp(z[i] - zmax);

    CounterRng rng(derive_seed(seed, "boltzmann"));
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<bool> taken(values.size(), false);
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!taken[i])
                total += w[i];
        double u = rng.uniform() * total;
        std::size_t pick = values.size();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (taken[i])
                continue;
            pick = i;
            u -= w[i];
            if (u <= 0.0)
                break;
        }
        taken[pick] = true;
        chosen.push_back(pick);
    }
    return chosen;
}

inline PointMatrix boltzmann_restarts(const PointMatrix& pool, std::span<const double> values, std::size_t k,
                                      std::uint64_t seed)
{
    require_dim(static_cast<Eigen::Index>(values.size()), pool.rows(), "boltzmann_restarts");
    const auto idx = boltzmann_restart_indices(values, k, seed);
    PointMatrix out(static_cast<Eigen::Index>(k), pool.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = pool.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

/// Locally maximize `acq` from `start`. The result is feasible and never
/// worse than the start.
inline RefineResult refine(const Vector& start, const AcquisitionFn& acq, const OptSpec& spec)
{
    const Box& box = spec.bounds;
    require_dim(start.size(), static_cast<Eigen::Index>(box.dim()), "refine");
    const double f0 = acq(start);
    if (!std::isfinite(f0))
        throw NonFiniteAcquisition("refine: non-finite acquisition at start " + detail::format_point(start));

    const Eigen::Index d = start.size();
    const Vector lo = Vector::Zero(d);
    const Vector hi = Vector::Ones(d);
    auto f_unit = [&](const Vector& u) { return acq(box.from_unit(u)); };
    auto f_with_grad = [&](const Vector& u, Vector& g) {
        const double v = f_unit(u);
        g = std::isfinite(v) ? fd_gradient(f_unit, u, v, spec.fd_step, lo, hi) : Vector::Zero(d);
        return v;
    };
    LbfgsOptions opt;
    opt.max_iters = spec.max_refine_iters;
    opt.step_tol = spec.step_tol;
    opt.grad_tol = spec.grad_tol;
    const Vector u0 = box.to_unit(start).cwiseMax(0.0).cwiseMin(1.0);
    const LbfgsResult r = maximize_box(f_with_grad, u0, lo, hi, opt);

    RefineResult out;
    if (r.value >= f0) {
        out.x = box.clamp(box.from_unit(r.x));
        out.value = acq(out.x);
        if (!(out.value >= f0)) {
            out.x = start;
            out.value = f0;
        }
    } else {
        out.x = start;
        out.value = f0;
    }
    out.iterations = r.iterations;
    return out;
}

/// Boltzmann restarts from an already evaluated pool, forcing the pool
/// argmax into the start set, then refinement.
inline std::pair<Vector, OptDiagnostics> optimize_from_pool(const AcquisitionFn& acq, const PointMatrix& pool,
                                                            std::vector<double> pool_values, const OptSpec& spec,
                                                            std::uint64_t seed)
{
    spec.validate();
    OptDiagnostics diag;
    for (Eigen::Index i = 0; i < pool.rows(); ++i)
        if (!std::isfinite(pool_values[static_cast<std::size_t>(i)]))
            throw NonFiniteAcquisition("optimize_acquisition: non-finite acquisition at "
                                       + detail::format_point(pool.row(i).transpose()));
    const std::size_t k = std::min(spec.num_restarts, static_cast<std::size_t>(pool.rows()));
    auto idx = boltzmann_restart_indices(pool_values, k, derive_seed(seed, "restarts"));
    const auto best_raw = static_cast<std::size_t>(
        std::distance(pool_values.begin(), std::max_element(pool_values.begin(), pool_values.end())));
    if (std::find(idx.begin(), idx.end(), best_raw) == idx.end())
        idx.back() = best_raw;

    Vector best_x;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const RefineResult rr = refine(pool.row(static_cast<Eigen::Index>(idx[r])).transpose(), acq, spec);
        diag.refined_values.push_back(rr.value);
        if (rr.value > best_v) {
            best_v = rr.value;
            best_x = rr.x;
            diag.best_restart = r;
        }
    }
    diag.best_raw_value = pool_values[best_raw];
    diag.restart_indices = std::move(idx);
    diag.pool = pool;
    diag.pool_values = std::move(pool_values);
    diag.value = best_v;
    return {best_x, std::move(diag)};
}

inline std::pair<Vector, OptDiagnostics> optimize_acquisition(const AcquisitionFn& acq, const OptSpec& spec,
                                                              std::uint64_t seed)
{
    const PointMatrix pool = draw_raw_pool(spec, seed);
    std::vector<double> values(static_cast<std::size_t>(pool.rows()));
    for (Eigen::Index i = 0; i < pool.rows(); ++i)
        values[static_cast<std::size_t>(i)] = acq(pool.row(i).transpose());
    return optimize_from_pool(acq, pool, std::move(values), spec, seed);
}

} // namespace gnbo
