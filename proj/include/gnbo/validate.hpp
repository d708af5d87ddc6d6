#pragma once

// Randomized property sweeps comparing closed forms against Monte Carlo
// oracles.

#include <gnbo/acquisition.hpp>
#include <gnbo/mc_oracles.hpp>

#include <json.hpp>

#include <array>
#include <cstring>

namespace gnbo {

struct SweepCase {
    std::size_t dim = 0;
    double closed_form = 0.0;
    double mc = 0.0;
    double std_error = 0.0;
    bool pass = false;
};

struct SweepResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t total = 0;
    std::size_t required = 0; ///< passes needed for the sweep to succeed
    std::vector<SweepCase> cases;
    std::string detail;

    bool ok() const { return total > 0 && passed >= required; }
};

/// Random posterior gradient with mean ~ N(0, mean_sd^2), var ~ U(var_lo, var_hi)
/// and incumbent gradient ~ N(0, inc_sd^2).
struct GradientConfig {
    PosteriorGradient pg;
    Vector grad_plus;
};

inline GradientConfig random_gradient_config(CounterRng& rng, std::size_t d, double mean_sd = 2.0, double var_lo = 0.1,
                                             double var_hi = 4.0, double inc_sd = 2.0)
{
    GradientConfig c;
    const auto n = static_cast<Eigen::Index>(d);
    c.pg.mean.resize(n);
    c.pg.var_diag.resize(n);
    c.grad_plus.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        c.pg.mean[i] = rng.normal(0.0, mean_sd);
        c.pg.var_diag[i] = rng.uniform(var_lo, var_hi);
        c.grad_plus[i] = rng.normal(0.0, inc_sd);
    }
    return c;
}

/// ei_s_bar against the orthant-restricted MC integral: a case passes when
/// the difference is within 3 standard errors; `required` of `cases` must pass.
inline SweepResult closed_form_sweep(std::size_t cases, std::size_t mc_n, std::uint64_t seed, std::size_t max_dim = 10)
{
    SweepResult r;
    r.name = "closed_form_vs_orthant_mc";
    r.total = cases;
    r.required = cases - cases / 40; // 195 of 200
    CounterRng rng(derive_seed(seed, "closed-form-sweep"));
    for (std::size_t k = 0; k < cases; ++k) {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.below(max_dim));
        const GradientConfig c = random_gradient_config(rng, d);
        SweepCase sc;
        sc.dim = d;
        sc.closed_form = ei_s_bar(c.pg, c.grad_plus);
        const McEstimate mc = mc_ei_s_orthant(c.pg, c.grad_plus, mc_n, derive_seed(seed, "orthant-mc", k));
        sc.mc = mc.estimate;
        sc.std_error = mc.std_error;
        sc.pass = std::abs(sc.closed_form - sc.mc) <= 3.0 * mc.std_error;
        r.passed += sc.pass;
        r.cases.push_back(sc);
    }
    return r;
}

/// The two hand-solvable cases: d = 1 and d = 3 with zero mean, unit
/// variance and zero incumbent gradient.
inline SweepResult analytic_cases(double tol = 1e-3)
{
    SweepResult r;
    r.name = "closed_form_analytic_cases";
    const std::array<std::pair<std::size_t, double>, 2> cases{{{1, 0.5}, {3, 0.375}}};
    for (const auto& [d, want] : cases) {
        const auto n = static_cast<Eigen::Index>(d);
        PosteriorGradient pg{Vector::Zero(n), Vector::Ones(n)};
        SweepCase sc;
        sc.dim = d;
        sc.closed_form = ei_s_bar(pg, Vector::Zero(n));
        sc.mc = want;
        sc.pass = std::abs(sc.closed_form - want) <= tol;
        r.passed += sc.pass;
        r.cases.push_back(sc);
    }
    r.total = r.required = cases.size();
    return r;
}

/// max(A - B, 0) >= max(A, 0) - max(B, 0), checked exactly; pairs are drawn
/// in equal numbers from each sign quadrant.
inline SweepResult positive_part_sweep(std::size_t n, std::uint64_t seed)
{
    SweepResult r;
    r.name = "positive_part_inequality";
    r.total = r.required = n;
    CounterRng rng(derive_seed(seed, "positive-part"));
    std::array<std::size_t, 4> quadrant{};
    for (std::size_t k = 0; k < n; ++k) {
        const double mag_a = std::exp(rng.uniform(-10.0, 10.0));
        const double mag_b = std::exp(rng.uniform(-10.0, 10.0));
        const double a = (k & 1) ? -mag_a : mag_a;
        const double b = (k & 2) ? -mag_b : mag_b;
        ++quadrant[k & 3];
        const bool ok = std::max(a - b, 0.0) >= std::max(a, 0.0) - std::max(b, 0.0);
        r.passed += ok;
    }
    r.detail = "quadrant counts " + std::to_string(quadrant[0]) + "/" + std::to_string(quadrant[1]) + "/"
        + std::to_string(quadrant[2]) + "/" + std::to_string(quadrant[3]);
    return r;
}

/// EI-GN with alpha = 0 and no rescaling against EI, compared bit for bit.
inline SweepResult alpha_zero_sweep(std::size_t n, std::uint64_t seed)
{
    SweepResult r;
    r.name = "alpha_zero_reduction";
    r.total = r.required = n;
    CounterRng rng(derive_seed(seed, "alpha-zero"));
    const AcquisitionConfig cfg{0.0, Rescale::None, IncumbentRule::GIncumbent};
    for (std::size_t k = 0; k < n; ++k) {
        const double mu = rng.normal(0.0, 3.0);
        const double sigma = std::exp(rng.uniform(-8.0, 2.0));
        const double best = rng.normal(0.0, 3.0);
        const std::size_t d = 1 + static_cast<std::size_t>(rng.below(10));
        const GradientConfig c = random_gradient_config(rng, d);
        const double ef = ei(mu, sigma, best);
        const double combined = ei_gn(ef, ei_s_bar(c.pg, c.grad_plus), cfg);
        r.passed += std::memcmp(&ef, &combined, sizeof(double)) == 0;
    }
    return r;
}

/// Random scalar posterior and incumbent for the bound sweeps.
struct BoundConfig {
    double f_mu = 0.0;
    double f_sigma = 1.0;
    PosteriorGradient pg;
    Incumbent inc;
};

inline BoundConfig random_bound_config(CounterRng& rng, std::size_t d, double alpha)
{
    BoundConfig b;
    b.f_mu = rng.normal(0.0, 1.0);
    b.f_sigma = rng.uniform(0.1, 2.0);
    GradientConfig c = random_gradient_config(rng, d, 1.0, 0.05, 1.0, 1.0);
    b.pg = std::move(c.pg);
    b.inc.f_plus = rng.normal(0.0, 1.0);
    b.inc.grad_plus = std::move(c.grad_plus);
    b.inc.x_plus = Vector::Zero(static_cast<Eigen::Index>(d));
    b.inc.g_plus = b.inc.f_plus - alpha * b.inc.grad_plus.squaredNorm();
    return b;
}

inline SweepResult lower_bound_sweep(std::size_t cases, std::size_t mc_n, std::uint64_t seed, double alpha = 0.6)
{
    SweepResult r;
    r.name = "ei_g_lower_bound";
    r.total = r.required = cases;
    CounterRng rng(derive_seed(seed, "lower-bound-sweep"));
    for (std::size_t k = 0; k < cases; ++k) {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.below(5));
        const BoundConfig b = random_bound_config(rng, d, alpha);
        const LowerBoundResult lb = lower_bound_check(b.f_mu, b.f_sigma, b.pg, b.inc, alpha, mc_n, derive_seed(seed, "lb", k));
        SweepCase sc;
        sc.dim = d;
        sc.closed_form = lb.bound;
        sc.mc = lb.ei_g.estimate;
        sc.std_error = lb.combined_se;
        sc.pass = lb.holds;
        r.passed += sc.pass;
        r.cases.push_back(sc);
    }
    return r;
}

inline SweepResult event_bound_sweep(std::size_t cases, std::size_t mc_n, std::uint64_t seed, double alpha = 0.6)
{
    SweepResult r;
    r.name = "event_bound";
    r.total = r.required = cases;
    CounterRng rng(derive_seed(seed, "event-bound-sweep"));
    const std::array<double, 2> deltas{0.1, 1.0};
    const std::array<double, 3> cs{0.25, 0.5, 0.75};
    std::size_t with_events = 0;
    for (std::size_t k = 0; k < cases; ++k) {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.below(5));
        const BoundConfig b = random_bound_config(rng, d, alpha);
        const EventSpec spec{deltas[k % 2], cs[(k / 2) % 3]};
        const EventBoundResult e
            = event_bound_check(b.f_mu, b.f_sigma, b.pg, b.inc, alpha, spec, mc_n, derive_seed(seed, "event", k));
        SweepCase sc;
        sc.dim = d;
        sc.closed_form = e.rhs_bound;
        sc.mc = e.lhs_ei_g;
        sc.std_error = e.combined_se;
        sc.pass = e.holds;
        with_events += e.p_event > 0.0;
        r.passed += sc.pass;
        r.cases.push_back(sc);
    }
    r.detail = std::to_string(with_events) + " cases with nonzero event probability";
    return r;
}

inline nlohmann::json to_json(const SweepResult& r, bool with_cases = false)
{
    nlohmann::json j{{"name", r.name},     {"passed", r.passed}, {"total", r.total},
                     {"required", r.required}, {"ok", r.ok()}};
    if (!r.detail.empty())
        j["detail"] = r.detail;
    if (with_cases) {
        j["cases"] = nlohmann::json::array();
        for (const auto& c : r.cases)
            j["cases"].push_back({{"dim", c.dim},
                                  {"closed_form", c.closed_form},
                                  {"mc", c.mc},
                                  {"std_error", c.std_error},
                                  {"pass", c.pass}});
    }
    return j;
}

} // namespace gnbo
