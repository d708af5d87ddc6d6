#pragma once

// Data for the 1-d acquisition profile and the top-k solution plots.

#include <gnbo/io.hpp>

namespace gnbo {

struct AcquisitionProfile {
    std::vector<std::string> methods;
    std::vector<double> x;
    std::vector<std::vector<double>> columns; ///< one per method, aligned with x
    Incumbent incumbent;

    const std::vector<double>& column(const std::string& m) const
    {
        const auto it = std::find(methods.begin(), methods.end(), m);
        if (it == methods.end())
            throw InvalidArgument("profile has no column '" + m + "'");
        return columns[static_cast<std::size_t>(it - methods.begin())];
    }
};

/// Fit surrogates on `data` and evaluate each acquisition on a uniform grid
/// of `grid_n` points spanning the bounds. EI-GN pool statistics are taken
/// over the grid itself.
inline AcquisitionProfile acquisition_profile(const Problem& problem, const Dataset& data,
                                              const std::vector<std::string>& methods, std::size_t grid_n,
                                              const AcquisitionConfig& acfg = {}, FitConfig fcfg = {})
{
    if (problem.dim != 1)
        throw InvalidArgument("acquisition_profile: problem must be 1-d");
    if (grid_n < 2)
        throw InvalidArgument("acquisition_profile: grid_n must be >= 2");
    require_dim(data.dim(), 1, "acquisition_profile");

    AcquisitionProfile out;
    out.methods = methods;
    const double lo = problem.bounds.lower[0], hi = problem.bounds.upper[0];
    for (std::size_t i = 0; i < grid_n; ++i)
        out.x.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_n - 1));

    const GPModel f_model = fit(data.X, data.y, fcfg, problem.bounds);
    std::optional<GradientSurrogate> g_model;
    out.incumbent = select_incumbent(data, acfg);
    const double f_best = data.y.maxCoeff();

    std::vector<double> ef, es;
    for (const auto& m : methods) {
        const Method meth = parse_method(m);
        std::vector<double> col;
        if (meth == Method::Ei || meth == Method::LogEi) {
            for (double x : out.x) {
                const Posterior p = f_model.posterior(Vector::Constant(1, x));
                const double s = std::sqrt(p.var);
                col.push_back(meth == Method::Ei ? ei(p.mean, s, f_best) : log_ei(p.mean, std::max(s, 1e-10), f_best));
            }
        } else if (meth == Method::EiGn) {
            if (!g_model)
                g_model = fit_gradient_models(data.X, data.grads, fcfg, problem.bounds);
            EiGnAcquisition acq{&f_model, &*g_model, out.incumbent, acfg, std::nullopt};
            ef.clear();
            es.clear();
            for (double x : out.x) {
                const auto [a, b] = acq.components(Vector::Constant(1, x));
                ef.push_back(a);
                es.push_back(b);
            }
            std::optional<PoolStats> pool;
            if (acfg.rescale == Rescale::PoolZscore)
                pool = make_pool_stats(ef, es);
            for (std::size_t i = 0; i < ef.size(); ++i)
                col.push_back(ei_gn(ef[i], es[i], acfg, pool));
        } else {
            throw InvalidArgument("acquisition_profile: '" + m + "' has no acquisition surface");
        }
        out.columns.push_back(std::move(col));
    }
    return out;
}

inline void write_profile_csv(std::ostream& os, const AcquisitionProfile& p)
{
    os << 'x';
    for (const auto& m : p.methods)
        os << ',' << m;
    os << '\n';
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        os << format_double(p.x[i]);
        for (const auto& c : p.columns)
            os << ',' << format_double(c[i]);
        os << '\n';
    }
}

/// Indices of interior local maxima (strictly above both neighbours, plateaus
/// counted once at their left end).
inline std::vector<std::size_t> local_maxima(const std::vector<double>& v)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (!(v[i] > v[i - 1]))
            continue;
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[i])
            ++j;
        if (j + 1 < v.size() && v[j + 1] < v[i])
            out.push_back(i);
        i = j;
    }
    return out;
}

/// Seeded design for the 1-d mixture profile: `n` scrambled-Sobol points.
inline Dataset profile_design(const Problem& problem, std::size_t n, std::uint64_t seed)
{
    Dataset data;
    const PointMatrix X = scrambled_sobol(n, problem.bounds, derive_seed(seed, "profile-design"));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Vector x = X.row(i).transpose();
        const Evaluation e = problem(x);
        data.append(x, e.f, e.grad);
    }
    return data;
}

// ---- top-k distinct solutions ----------------------------------------------

struct TopSolution {
    Vector x;
    double f = 0.0;
};

struct TopSolutions {
    std::vector<TopSolution> points;
    bool short_of_k = false; ///< fewer than k distinct points were available
};

/// The k highest-f queries whose pairwise distances are all >= min_dist,
/// chosen greedily in descending f (ties by query order).
inline TopSolutions top_distinct(const std::vector<TraceRecord>& records, std::size_t k, double min_dist = 1e-3)
{
    if (k < 1)
        throw InvalidArgument("top_distinct: k must be >= 1");
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return records[a].y > records[b].y; });
    TopSolutions out;
    for (std::size_t i : order) {
        if (out.points.size() == k)
            break;
        bool distinct = true;
        for (const auto& p : out.points)
            if ((p.x - records[i].x).norm() < min_dist) {
                distinct = false;
                break;
            }
        if (distinct)
            out.points.push_back({records[i].x, records[i].y});
    }
    out.short_of_k = out.points.size() < k;
    return out;
}

inline double mean_pairwise_distance(const TopSolutions& t)
{
    const std::size_t n = t.points.size();
    if (n < 2)
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += (t.points[i].x - t.points[j].x).norm();
    return sum / static_cast<double>(n * (n - 1) / 2);
}

inline void write_top_solutions_csv(std::ostream& os, const TopSolutions& t, std::size_t dim)
{
    for (std::size_t j = 0; j < dim; ++j)
        os << 'x' << (j + 1) << ',';
    os << "f,fewer_than_k\n";
    for (const auto& p : t.points) {
        for (Eigen::Index j = 0; j < p.x.size(); ++j)
            os << format_double(p.x[j]) << ',';
        os << format_double(p.f) << ',' << (t.short_of_k ? 1 : 0) << '\n';
    }
}

/// Run BO with `cfg` and return its top-k distinct queries.
inline TopSolutions emit_top_solutions(const RunConfig& cfg, std::size_t k, Trace* trace_out = nullptr)
{
    Trace t = run_bo(cfg);
    if (!t.complete())
        throw Error("top solutions: run failed: " + t.error);
    TopSolutions out = top_distinct(t.records, k);
    if (trace_out)
        *trace_out = std::move(t);
    return out;
}

} // namespace gnbo
