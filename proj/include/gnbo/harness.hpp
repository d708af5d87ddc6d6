#pragma once

// The BO loop, multi-seed suites and their aggregation.

#include <gnbo/acq_optimizer.hpp>
#include <gnbo/acquisition.hpp>
#include <gnbo/objectives.hpp>
#include <gnbo/thompson.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace gnbo {

enum class Method { EiGn, Ei, LogEi, Ts, Sobol };

inline const char* to_string(Method m)
{
    switch (m) {
    case Method::EiGn: return "ei_gn";
    case Method::Ei: return "ei";
    case Method::LogEi: return "log_ei";
    case Method::Ts: return "ts";
    case Method::Sobol: return "sobol";
    }
    return "?";
}

inline Method parse_method(const std::string& s)
{
    if (s == "ei_gn" || s == "ei-gn" || s == "eign")
        return Method::EiGn;
    if (s == "ei")
        return Method::Ei;
    if (s == "log_ei" || s == "logei")
        return Method::LogEi;
    if (s == "ts")
        return Method::Ts;
    if (s == "sobol")
        return Method::Sobol;
    throw InvalidArgument("unknown acquisition '" + s + "'");
}

inline Rescale parse_rescale(const std::string& s)
{
    if (s == "none")
        return Rescale::None;
    if (s == "pool_zscore" || s == "zscore")
        return Rescale::PoolZscore;
    throw InvalidArgument("unknown rescale mode '" + s + "'");
}

inline IncumbentRule parse_incumbent_rule(const std::string& s)
{
    if (s == "g_incumbent" || s == "g")
        return IncumbentRule::GIncumbent;
    if (s == "f_incumbent" || s == "f")
        return IncumbentRule::FIncumbent;
    throw InvalidArgument("unknown incumbent rule '" + s + "'");
}

/// One BO run. Unset or zero-valued counts mean "use the problem default";
/// budget and n_init must be >= 1 when given.
struct RunConfig {
    std::string problem = "hartmann6";
    Method acquisition = Method::EiGn;
    double alpha = 0.6;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> n_init;
    std::uint64_t seed = 0;
    std::size_t raw_samples = 0;
    std::size_t num_restarts = 0;
    bool table_literal = false;
    IncumbentRule incumbent_rule = IncumbentRule::GIncumbent;
    Rescale rescale = Rescale::PoolZscore;
    int fit_restarts = 5;
    std::size_t ts_candidates = 0;
    int max_refine_iters = 100;
    std::string output_dir = "results";
};

/// RunConfig with every default filled in from the problem.
struct ResolvedConfig {
    RunConfig cfg;
    std::size_t dim = 0;
    Box bounds;

    const RunConfig* operator->() const { return &cfg; }
};

inline ResolvedConfig resolve(RunConfig cfg, const Problem& p)
{
    if (cfg.alpha < 0.0)
        throw InvalidArgument("alpha must be >= 0");
    const auto& def = p.defaults;
    if (cfg.budget && *cfg.budget < 1)
        throw InvalidArgument("budget must be >= 1");
    if (cfg.n_init && *cfg.n_init < 1)
        throw InvalidArgument("n_init must be >= 1");
    if (!cfg.n_init)
        cfg.n_init = def.n_init > 0 ? def.n_init : 3 * p.dim;
    if (!cfg.budget)
        cfg.budget = def.budget > 0 ? def.budget : 25 * p.dim;
    const std::size_t t_raw = def.table_raw_samples > 0 ? def.table_raw_samples : 10;
    const std::size_t t_res = def.table_num_restarts > 0 ? def.table_num_restarts : 512;
    std::size_t raw = cfg.table_literal ? t_raw : std::max(t_raw, t_res);
    std::size_t restarts = cfg.table_literal ? t_res : std::min(t_raw, t_res);
    if (cfg.raw_samples > 0)
        raw = cfg.raw_samples;
    if (cfg.num_restarts > 0)
        restarts = cfg.num_restarts;
    cfg.raw_samples = raw;
    cfg.num_restarts = std::min(restarts, raw);
    if (cfg.ts_candidates == 0)
        cfg.ts_candidates = 1024 * std::min<std::size_t>(p.dim, 8);
    if (cfg.fit_restarts < 1)
        throw InvalidArgument("fit_restarts must be >= 1");
    return {cfg, p.dim, p.bounds};
}

struct TraceRecord {
    std::size_t iteration = 0; ///< 0 for the initial design
    Vector x;
    double y = 0.0;
    Vector grad;
    double best_f = 0.0;
    double acq_value = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    std::string status = "ok"; ///< "init", "ok" or "fallback: <reason>"
};

struct Trace {
    ResolvedConfig config;
    std::vector<TraceRecord> records;
    std::string error; ///< non-empty if the run aborted early

    bool complete() const { return error.empty(); }

    /// Best observed f after the initial design (t = 0) and after each BO iteration.
    std::vector<double> best_curve() const
    {
        std::vector<double> curve;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const bool last_init = records[i].iteration == 0 && (i + 1 == records.size() || records[i + 1].iteration != 0);
            if (records[i].iteration > 0 || last_init)
                curve.push_back(records[i].best_f);
        }
        return curve;
    }

    /// argmax of observed y.
    Vector recommendation() const
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < records.size(); ++i)
            if (records[i].y > records[best].y)
                best = i;
        return records.empty() ? Vector{} : records[best].x;
    }
};

namespace detail {
    struct SurrogateConfigs {
        FitConfig f;
        FitConfig grad;
    };

    inline SurrogateConfigs surrogate_configs(const std::string& problem, int restarts)
    {
        SurrogateConfigs s;
        if (auto gs = gp_sample_spec(problem)) {
            s.f = surrogate_config_for(*gs);
            s.grad = s.f;
            if (gs->mode == GPSampleMode::Within) {
                // Derivative processes have their own scale; keep the prior
                // lengthscale but standardize each gradient column.
                s.grad.standardize_outputs = true;
                s.grad.noise = 1e-6;
            }
        }
        s.f.restarts = restarts;
        s.grad.restarts = restarts;
        return s;
    }

    inline Dataset make_dataset(const std::vector<TraceRecord>& recs, std::size_t d)
    {
        Dataset data;
        data.X.resize(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(d));
        data.y.resize(static_cast<Eigen::Index>(recs.size()));
        data.grads.resize(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            data.X.row(r) = recs[i].x.transpose();
            data.y[r] = recs[i].y;
            data.grads.row(r) = recs[i].grad.transpose();
        }
        return data;
    }
} // namespace detail

/// Acquisition closures built from fitted surrogates for one BO iteration.
struct EiGnAcquisition {
    const GPModel* f_model;
    const GradientSurrogate* grad_model;
    Incumbent incumbent;
    AcquisitionConfig cfg;
    std::optional<PoolStats> pool;

    std::pair<double, double> components(const Vector& x) const
    {
        const Posterior p = f_model->posterior(x);
        const double ef = ei(p.mean, std::sqrt(p.var), incumbent.f_plus);
        const PosteriorGradient pg = floor_variance(posterior_gradient(*grad_model, x));
        return {ef, ei_s_bar(pg, incumbent.grad_plus)};
    }

    double operator()(const Vector& x) const
    {
        const auto [ef, es] = components(x);
        return ei_gn(ef, es, cfg, pool);
    }
};

/// Algorithm loop: initial Sobol design, then per iteration fit surrogates,
/// build the acquisition, maximize it, evaluate, append.
inline Trace run_bo(const RunConfig& raw_cfg)
{
    const Problem problem = make_problem(raw_cfg.problem);
    Trace trace;
    trace.config = resolve(raw_cfg, problem);
    const RunConfig& cfg = trace.config.cfg;
    const std::size_t budget = *cfg.budget, n_init = *cfg.n_init;

    const std::uint64_t master = cfg.seed;
    const std::uint64_t init_seed = derive_seed(master, "init");
    const std::size_t d = problem.dim;
    const Box& box = problem.bounds;
    using clock = std::chrono::steady_clock;

    double best = -std::numeric_limits<double>::infinity();
    auto append = [&](std::size_t it, const Vector& x, double acq, double ms, std::string status) {
        const Evaluation e = problem(x);
        best = std::max(best, e.f);
        TraceRecord r;
        r.iteration = it;
        r.x = x;
        r.y = e.f;
        r.grad = e.grad;
        r.best_f = best;
        r.acq_value = acq;
        r.wall_ms = ms;
        r.status = std::move(status);
        trace.records.push_back(std::move(r));
    };

    try {
        const PointMatrix init = scrambled_sobol(n_init, box, init_seed);
        for (Eigen::Index i = 0; i < init.rows(); ++i)
            append(0, init.row(i).transpose(), std::numeric_limits<double>::quiet_NaN(), 0.0, "init");
    } catch (const std::exception& e) {
        trace.error = std::string("initial design: ") + e.what();
        return trace;
    }

    const auto configs = detail::surrogate_configs(cfg.problem, cfg.fit_restarts);
    OptSpec opt;
    opt.raw_samples = cfg.raw_samples;
    opt.num_restarts = cfg.num_restarts;
    opt.bounds = box;
    opt.max_refine_iters = cfg.max_refine_iters;

    std::optional<KernelSpec> f_warm;
    std::vector<KernelSpec> grad_warm;

    for (std::size_t t = 1; t <= budget; ++t) {
        const auto start = clock::now();
        const std::uint64_t acq_seed = derive_seed(master, "acq-opt", t);
        Vector x_next;
        double acq_value = std::numeric_limits<double>::quiet_NaN();
        std::string status = "ok";
        try {
            const Dataset data = detail::make_dataset(trace.records, d);
            if (cfg.acquisition == Method::Sobol) {
                x_next = scrambled_sobol(1, box, init_seed, n_init + t - 1).row(0).transpose();
            } else {
                FitConfig fc = configs.f;
                fc.seed = derive_seed(master, "fit", t);
                fc.warm_start = f_warm;
                const GPModel f_model = fit(data.X, data.y, fc, box);
                if (!fc.fixed_hyperparams)
                    f_warm = f_model.kernel();

                if (cfg.acquisition == Method::Ts) {
                    const PointMatrix cand = scrambled_sobol(cfg.ts_candidates, box, derive_seed(master, "ts-candidates", t));
                    const Eigen::Index idx = thompson_select_index(f_model, cand, derive_seed(master, "ts", t));
                    x_next = cand.row(idx).transpose();
                } else if (cfg.acquisition == Method::Ei || cfg.acquisition == Method::LogEi) {
                    const double f_plus = data.y.maxCoeff();
                    AcquisitionFn acq;
                    if (cfg.acquisition == Method::Ei)
                        acq = [&](const Vector& x) {
                            const Posterior p = f_model.posterior(x);
                            return ei(p.mean, std::sqrt(p.var), f_plus);
                        };
                    else
                        acq = [&](const Vector& x) {
                            const Posterior p = f_model.posterior(x);
                            return log_ei(p.mean, std::max(std::sqrt(p.var), 1e-10), f_plus);
                        };
                    auto [x, diag] = optimize_acquisition(acq, opt, acq_seed);
                    x_next = x;
                    acq_value = diag.value;
                } else {
                    FitConfig gc = configs.grad;
                    gc.seed = derive_seed(master, "grad-fit", t);
                    const GradientSurrogate g_model
                        = fit_gradient_models(data.X, data.grads, gc, box, grad_warm.empty() ? nullptr : &grad_warm);
                    if (!gc.fixed_hyperparams) {
                        grad_warm.clear();
                        for (const auto& m : g_model.models)
                            grad_warm.push_back(m.kernel());
                    }
                    AcquisitionConfig ac{cfg.alpha, cfg.rescale, cfg.incumbent_rule};
                    EiGnAcquisition acq{&f_model, &g_model, select_incumbent(data, ac), ac, std::nullopt};
                    if (ac.rescale == Rescale::None) {
                        auto [x, diag] = optimize_acquisition(std::cref(acq), opt, acq_seed);
                        x_next = x;
                        acq_value = diag.value;
                    } else {
                        const PointMatrix pool = draw_raw_pool(opt, acq_seed);
                        std::vector<double> ef(static_cast<std::size_t>(pool.rows())), es(ef.size());
                        for (Eigen::Index i = 0; i < pool.rows(); ++i)
                            std::tie(ef[static_cast<std::size_t>(i)], es[static_cast<std::size_t>(i)])
                                = acq.components(pool.row(i).transpose());
                        acq.pool = make_pool_stats(ef, es);
                        std::vector<double> values(ef.size());
                        for (std::size_t i = 0; i < ef.size(); ++i)
                            values[i] = ei_gn(ef[i], es[i], ac, acq.pool);
                        auto [x, diag] = optimize_from_pool(std::cref(acq), pool, std::move(values), opt, acq_seed);
                        x_next = x;
                        acq_value = diag.value;
                    }
                }
            }
        } catch (const FactorizationFailed& e) {
            status = std::string("fallback: ") + e.what();
        } catch (const NonFiniteAcquisition& e) {
            status = std::string("fallback: ") + e.what();
        } catch (const DegenerateVariance& e) {
            status = std::string("fallback: ") + e.what();
        } catch (const NonpositiveVariance& e) {
            status = std::string("fallback: ") + e.what();
        }
        if (status != "ok") {
            x_next = scrambled_sobol(1, box, derive_seed(master, "fallback"), t - 1).row(0).transpose();
            acq_value = std::numeric_limits<double>::quiet_NaN();
        }
        const double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        try {
            append(t, box.clamp(x_next), acq_value, ms, std::move(status));
        } catch (const std::exception& e) {
            trace.error = "iteration " + std::to_string(t) + ": " + e.what();
            return trace;
        }
    }
    return trace;
}

/// Per-iteration aggregate of best-f curves across seeds for one method.
struct SummaryRow {
    std::size_t iteration = 0;
    std::string method;
    double mean_best_f = 0.0;
    double stderr_best_f = 0.0;
    std::size_t n_seeds = 0;
};

struct SuiteResult {
    std::vector<Trace> traces; ///< in input order
    std::vector<std::string> failures;
    std::vector<SummaryRow> summary;
};

/// Mean and standard error (sample std / sqrt n) of equal-length curves.
inline std::vector<SummaryRow> summarize(const std::vector<const Trace*>& runs, const std::string& method)
{
    std::vector<SummaryRow> rows;
    if (runs.empty())
        return rows;
    std::vector<std::vector<double>> curves;
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const Trace* t : runs) {
        curves.push_back(t->best_curve());
        len = std::min(len, curves.back().size());
    }
    const double n = static_cast<double>(curves.size());
    for (std::size_t it = 0; it < len; ++it) {
        double mean = 0.0;
        for (const auto& c : curves)
            mean += c[it];
        mean /= n;
        double ss = 0.0;
        for (const auto& c : curves)
            ss += (c[it] - mean) * (c[it] - mean);
        const double se = curves.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        rows.push_back({it, method, mean, se, curves.size()});
    }
    return rows;
}

/// Run every configuration (optionally on several threads) and aggregate by
/// method. Aggregation order follows (method name, seed), not completion order.
inline SuiteResult run_suite(const std::vector<RunConfig>& cfgs, unsigned threads = 1)
{
    if (cfgs.empty())
        throw InvalidArgument("run_suite: no configurations");
    SuiteResult out;
    out.traces.resize(cfgs.size());
    std::vector<std::string> errors(cfgs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfgs.size(); i = next++) {
            try {
                out.traces[i] = run_bo(cfgs[i]);
                if (!out.traces[i].complete())
                    errors[i] = out.traces[i].error;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    std::map<std::string, std::vector<std::pair<std::uint64_t, const Trace*>>> by_method;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const std::string m = to_string(cfgs[i].acquisition);
        if (!errors[i].empty()) {
            out.failures.push_back(cfgs[i].problem + "/" + m + "/seed " + std::to_string(cfgs[i].seed) + ": " + errors[i]);
            continue;
        }
        by_method[m].push_back({cfgs[i].seed, &out.traces[i]});
    }
    for (auto& [m, runs] : by_method) {
        std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<const Trace*> ptrs;
        for (const auto& r : runs)
            ptrs.push_back(r.second);
        auto rows = summarize(ptrs, m);
        out.summary.insert(out.summary.end(), rows.begin(), rows.end());
    }
    return out;
}

} // namespace gnbo
