#pragma once

// Benchmark objectives with analytic gradients, all in maximization form.

#include <gnbo/gp.hpp>
#include <gnbo/random.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace gnbo {

struct Evaluation {
    double f = 0.0;
    Vector grad;
};

using ObjectiveFn = std::function<Evaluation(const Vector&)>;

/// Default experiment settings for a problem. `table_raw_samples` and
/// `table_num_restarts` are stored in the column order the `--table1-literal`
/// flag uses; `resolve` decides which one is the pool size.
struct ProblemDefaults {
    std::size_t n_init = 0;
    std::size_t budget = 0;
    std::size_t table_raw_samples = 0;
    std::size_t table_num_restarts = 0;
};

struct Problem {
    std::string name;
    std::size_t dim = 0;
    Box bounds;
    ObjectiveFn eval;
    std::optional<double> known_best{};
    std::string known_best_provenance{};
    ProblemDefaults defaults{};

    Evaluation operator()(const Vector& x) const
    {
        require_dim(x.size(), static_cast<Eigen::Index>(dim), name.c_str());
        return eval(x);
    }
};

namespace objectives {

    inline Evaluation hartmann6(const Vector& x)
    {
        static constexpr double a[4] = {1.0, 1.2, 3.0, 3.2};
        static constexpr double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                           {0.05, 10, 17, 0.1, 8, 14},
                                           {3, 3.5, 1.7, 10, 17, 8},
                                           {17, 8, 0.05, 10, 0.1, 14}};
        static constexpr double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                           {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                           {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                           {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
        Evaluation e{0.0, Vector::Zero(6)};
        for (int i = 0; i < 4; ++i) {
            double inner = 0.0;
            for (int j = 0; j < 6; ++j)
                inner += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
            const double t = a[i] * std::exp(-inner);
            e.f += t;
            for (int j = 0; j < 6; ++j)
                e.grad[j] += -2.0 * A[i][j] * (x[j] - P[i][j]) * t;
        }
        return e;
    }

    inline Evaluation shekel4(const Vector& x)
    {
        static constexpr double beta[10] = {0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
        static constexpr double C[4][10] = {{4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                            {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6},
                                            {4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                            {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6}};
        Evaluation e{0.0, Vector::Zero(4)};
        for (int i = 0; i < 10; ++i) {
            double s = beta[i];
            for (int j = 0; j < 4; ++j)
                s += (x[j] - C[j][i]) * (x[j] - C[j][i]);
            e.f += 1.0 / s;
            for (int j = 0; j < 4; ++j)
                e.grad[j] += -2.0 * (x[j] - C[j][i]) / (s * s);
        }
        return e;
    }

    /// Cosine mixture, already a maximization problem: 0.1 sum cos(5 pi x) - ||x||^2.
    inline Evaluation cosine_mixture(const Vector& x)
    {
        constexpr double w = 5.0 * std::numbers::pi;
        Evaluation e{0.0, Vector(x.size())};
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            e.f += 0.1 * std::cos(w * x[i]) - x[i] * x[i];
            e.grad[i] = -0.1 * w * std::sin(w * x[i]) - 2.0 * x[i];
        }
        return e;
    }

    inline Evaluation griewank(const Vector& x)
    {
        const Eigen::Index d = x.size();
        std::vector<double> c(static_cast<std::size_t>(d)), s(static_cast<std::size_t>(d)), root(static_cast<std::size_t>(d));
        double prod = 1.0;
        double sq = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto k = static_cast<std::size_t>(i);
            root[k] = std::sqrt(static_cast<double>(i + 1));
            c[k] = std::cos(x[i] / root[k]);
            s[k] = std::sin(x[i] / root[k]);
            prod *= c[k];
            sq += x[i] * x[i];
        }
        Evaluation e{-(1.0 + sq / 4000.0 - prod), Vector(d)};
        for (Eigen::Index j = 0; j < d; ++j) {
            double others = 1.0;
            for (Eigen::Index i = 0; i < d; ++i)
                if (i != j)
                    others *= c[static_cast<std::size_t>(i)];
            const auto k = static_cast<std::size_t>(j);
            e.grad[j] = -(x[j] / 2000.0 + s[k] / root[k] * others);
        }
        return e;
    }

    inline Evaluation ackley(const Vector& x)
    {
        constexpr double a = 20.0, b = 0.2, c = 2.0 * std::numbers::pi;
        const double d = static_cast<double>(x.size());
        const double r = std::sqrt(x.squaredNorm() / d);
        double cs = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            cs += std::cos(c * x[i]);
        const double e1 = std::exp(-b * r);
        const double e2 = std::exp(cs / d);
        Evaluation e{a * e1 + e2 - a - std::numbers::e, Vector(x.size())};
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            // The cone term has no gradient at the origin; use 0 there.
            const double radial = r > 0.0 ? -a * b * e1 * x[i] / (d * r) : 0.0;
            e.grad[i] = radial - e2 * c * std::sin(c * x[i]) / d;
        }
        return e;
    }

    inline Evaluation holder_table(const Vector& x)
    {
        const double r = std::hypot(x[0], x[1]);
        const double arg = 1.0 - r / std::numbers::pi;
        const double E = std::exp(std::abs(arg));
        const double s1 = std::sin(x[0]), c1 = std::cos(x[0]);
        const double s2 = std::sin(x[1]), c2 = std::cos(x[1]);
        const double p = s1 * c2 * E;
        const double sgn = p >= 0.0 ? 1.0 : -1.0;
        const double darg = arg >= 0.0 ? 1.0 : -1.0;
        double dA0 = 0.0, dA1 = 0.0;
        if (r > 0.0) {
            dA0 = -darg * x[0] / (std::numbers::pi * r);
            dA1 = -darg * x[1] / (std::numbers::pi * r);
        }
        Evaluation e{std::abs(p), Vector(2)};
        e.grad[0] = sgn * (c1 * c2 * E + p * dA0);
        e.grad[1] = sgn * (-s1 * s2 * E + p * dA1);
        return e;
    }

    /// 1-d mixture with a wide local basin at 0.25 and a narrow global one at 0.85.
    inline Evaluation gaussian_mixture_1d(const Vector& x)
    {
        const double t = x[0];
        const double u1 = (t - 0.25) / 0.06;
        const double u2 = (t - 0.85) / 0.01;
        const double e1 = 0.85 * std::exp(-0.5 * u1 * u1);
        const double e2 = std::exp(-0.5 * u2 * u2);
        Evaluation e{e1 + e2 - 0.05 * t, Vector(1)};
        e.grad[0] = -e1 * u1 / 0.06 - e2 * u2 / 0.01 - 0.05;
        return e;
    }

} // namespace objectives

/// Largest per-coordinate relative error |fd - g| / max(|g|, 1) of the
/// analytic gradient against central differences.
inline double finite_diff_check(const Problem& problem, const Vector& x, double h)
{
    if (!(h > 0.0))
        throw InvalidArgument("finite_diff_check: step must be positive");
    const Evaluation e = problem(x);
    double worst = 0.0;
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double fp = problem(xp).f;
        xp[i] = x[i] - h;
        const double fm = problem(xp).f;
        xp[i] = x[i];
        const double fd = (fp - fm) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - e.grad[i]) / std::max(std::abs(e.grad[i]), 1.0));
    }
    return worst;
}

enum class GPSampleMode { Within, Out };

struct GPSampleSpec {
    std::size_t dim = 1;
    std::uint64_t seed = 0;
    GPSampleMode mode = GPSampleMode::Within;

    double prior_lengthscale() const { return 0.4 / std::sqrt(static_cast<double>(dim)); }
    std::size_t n_anchor() const { return 200 * dim; }
    KernelSpec prior() const { return KernelSpec::rbf(Vector::Constant(1, prior_lengthscale()), 1.0); }

    void validate() const
    {
        if (dim < 1)
            throw InvalidArgument("GPSampleSpec: dim must be >= 1");
    }
};

/// Anchors and coefficients of a GP-sample objective: f(x) = sum_i alpha_i k(x, X_i).
struct GPSampleFunction {
    PointMatrix anchors;
    Vector alpha;
    Vector values; ///< f at the anchors, K alpha
    double jitter = 0.0;
};

/// Joint prior draw L z at Sobol anchors (L from K + jitter I) conditioned
/// noiselessly: alpha = (K + jitter I)^-1 L z. With zero jitter the anchor
/// values equal the draw; otherwise they are its smooth part K alpha.
inline GPSampleFunction gp_sample_function(const GPSampleSpec& spec)
{
    spec.validate();
    GPSampleFunction g;
    g.anchors = scrambled_sobol(spec.n_anchor(), spec.dim, derive_seed(spec.seed, "gp-anchors"));
    const Matrix K = eval_kernel_matrix(spec.prior(), g.anchors, 0.0);
    const CholeskyResult chol = adaptive_cholesky(K);
    CounterRng rng(derive_seed(spec.seed, "gp-draw"));
    const Vector z = normal_vector(rng, g.anchors.rows());
    g.alpha = chol.L.transpose().triangularView<Eigen::Upper>().solve(z);
    g.values = K * g.alpha;
    g.jitter = chol.jitter;
    return g;
}

/// GP-prior sample turned into a deterministic objective: the noiseless
/// posterior mean conditioned on a joint prior draw at Sobol anchors.
inline Problem make_gp_sample_objective(const GPSampleSpec& spec)
{
    const std::size_t d = spec.dim;
    auto g = std::make_shared<const GPSampleFunction>(gp_sample_function(spec));
    const KernelSpec prior = spec.prior();

    Problem p;
    p.name = std::string(spec.mode == GPSampleMode::Within ? "gp-within-" : "gp-out-") + std::to_string(d);
    p.dim = d;
    p.bounds = Box::unit(d);
    const double inv_l2 = 1.0 / (prior.lengthscales[0] * prior.lengthscales[0]);
    p.eval = [g, inv_l2](const Vector& x) {
        const PointMatrix& X = g->anchors;
        const Vector& a = g->alpha;
        Evaluation e{0.0, Vector::Zero(x.size())};
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const Vector diff = x - X.row(i).transpose();
            const double k = std::exp(-0.5 * diff.squaredNorm() * inv_l2);
            e.f += a[i] * k;
            e.grad -= (a[i] * k * inv_l2) * diff;
        }
        return e;
    };
    const std::size_t init = 3 * d;
    if (d == 7)
        p.defaults = {init, 175, 10, 512};
    else if (d == 8)
        p.defaults = {init, 200, 20, 1024};
    else if (d == 9)
        p.defaults = {init, 250, 20, 1024};
    else
        p.defaults = {init, 25 * d, 10, 512};
    return p;
}

/// Surrogate settings for a GP-sample objective: the generating prior with no
/// refitting (within) or a refitted Matern-5/2 ARD model (out).
inline FitConfig surrogate_config_for(const GPSampleSpec& spec)
{
    FitConfig cfg;
    if (spec.mode == GPSampleMode::Within) {
        cfg.family = KernelFamily::RBF;
        cfg.ard = false;
        cfg.fixed_hyperparams = spec.prior();
        cfg.standardize_outputs = false;
        cfg.noise = 0.0;
    } else {
        cfg.family = KernelFamily::Matern52;
        cfg.ard = true;
        cfg.hyperpriors = HyperpriorSpec{};
    }
    return cfg;
}

namespace detail {
    inline Problem analytic_problem(std::string name, std::size_t d, Box box, ObjectiveFn fn, double best,
                                    std::string provenance, ProblemDefaults defaults)
    {
        Problem p;
        p.name = std::move(name);
        p.dim = d;
        p.bounds = std::move(box);
        p.eval = std::move(fn);
        p.known_best = best;
        p.known_best_provenance = std::move(provenance);
        p.defaults = defaults;
        return p;
    }

    inline std::optional<GPSampleSpec> parse_gp_sample_name(const std::string& name)
    {
        GPSampleSpec spec;
        std::string rest;
        if (name.rfind("gp-within-", 0) == 0) {
            spec.mode = GPSampleMode::Within;
            rest = name.substr(10);
        } else if (name.rfind("gp-out-", 0) == 0) {
            spec.mode = GPSampleMode::Out;
            rest = name.substr(7);
        } else {
            return std::nullopt;
        }
        std::string dim_part = rest;
        const auto at = rest.find('@');
        if (at != std::string::npos) {
            dim_part = rest.substr(0, at);
            const std::string seed_part = rest.substr(at + 1);
            if (seed_part.empty() || seed_part.find_first_not_of("0123456789") != std::string::npos)
                return std::nullopt;
            spec.seed = std::stoull(seed_part);
        }
        if (dim_part.empty() || dim_part.find_first_not_of("0123456789") != std::string::npos || dim_part.size() > 3)
            return std::nullopt;
        spec.dim = std::stoul(dim_part);
        if (spec.dim < 1)
            return std::nullopt;
        return spec;
    }
} // namespace detail

inline const std::vector<std::string>& analytic_problem_names()
{
    static const std::vector<std::string> names{"shekel4", "hartmann6", "cosine8", "griewank10",
                                                "ackley14", "holder", "fig2mix"};
    return names;
}

inline bool is_known_problem(const std::string& name)
{
    for (const auto& n : analytic_problem_names())
        if (n == name)
            return true;
    return detail::parse_gp_sample_name(name).has_value();
}

/// Registry lookup: "shekel4", "hartmann6", "cosine8", "griewank10",
/// "ackley14", "holder", "fig2mix", "gp-within-<d>[@seed]", "gp-out-<d>[@seed]".
inline Problem make_problem(const std::string& name)
{
    using namespace objectives;
    const std::string derived = "derived: multi-start local search on the implemented function";
    if (name == "shekel4")
        return detail::analytic_problem(name, 4, Box::cube(4, 0, 10), shekel4, 10.536443153484, derived, {12, 125, 8, 256});
    if (name == "hartmann6")
        return detail::analytic_problem(name, 6, Box::cube(6, 0, 1), hartmann6, 3.322368011415, derived, {18, 150, 10, 512});
    if (name == "cosine8")
        return detail::analytic_problem(name, 8, Box::cube(8, -1, 1), cosine_mixture, 0.8, "derived: value at the origin",
                                        {24, 200, 20, 1024});
    if (name == "griewank10")
        return detail::analytic_problem(name, 10, Box::cube(10, -10, 10), griewank, 0.0, "derived: value at the origin",
                                        {30, 300, 20, 1024});
    if (name == "ackley14")
        return detail::analytic_problem(name, 14, Box::cube(14, -5, 5), ackley, 0.0, "derived: value at the origin",
                                        {42, 500, 20, 1024});
    if (name == "holder")
        return detail::analytic_problem(name, 2, Box::cube(2, -10, 10), holder_table, 19.208502567887, derived,
                                        {6, 50, 10, 512});
    if (name == "fig2mix")
        return detail::analytic_problem(name, 1, Box::cube(1, 0, 1), gaussian_mixture_1d, 0.957500125000, derived,
                                        {3, 20, 10, 512});
    if (auto spec = detail::parse_gp_sample_name(name)) {
        Problem p = make_gp_sample_objective(*spec);
        p.name = name;
        return p;
    }
    throw UnknownProblem("unknown problem '" + name + "'");
}

/// GP-sample spec behind a registry name, if any.
inline std::optional<GPSampleSpec> gp_sample_spec(const std::string& name) { return detail::parse_gp_sample_name(name); }

} // namespace gnbo
