#pragma once

// Monte Carlo estimators used as independent oracles for the closed forms.
// All estimators are deterministic functions of their seed. Gradient
// variances may be zero here (deterministic coordinates).

#include <gnbo/acquisition.hpp>
#include <gnbo/random.hpp>

#include <cmath>

namespace gnbo {

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

namespace detail {
    class RunningMoments {
    public:
        void add(double v)
        {
            sum_ += v;
            sumsq_ += v * v;
            ++n_;
        }
        McEstimate result() const
        {
            const long double n = static_cast<long double>(n_);
            const long double mean = sum_ / n;
            const long double var = n_ > 1 ? std::max(sumsq_ / n - mean * mean, 0.0L) * n / (n - 1.0L) : 0.0L;
            return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / n))};
        }

    private:
        long double sum_ = 0.0L;
        long double sumsq_ = 0.0L;
        std::size_t n_ = 0;
    };

    inline void check_samples(std::size_t n)
    {
        if (n < 1)
            throw InvalidArgument("Monte Carlo estimator needs n >= 1");
    }

    inline void check_gradient(const PosteriorGradient& pg, const Vector& grad_plus)
    {
        require_dim(grad_plus.size(), pg.mean.size(), "Monte Carlo oracle");
        if ((pg.var_diag.array() < 0.0).any())
            throw NonpositiveVariance("Monte Carlo oracle: negative gradient variance");
    }

    inline double sample_grad_norm2(const Vector& mean, const Vector& sd, CounterRng& rng)
    {
        double u = 0.0;
        for (Eigen::Index i = 0; i < mean.size(); ++i) {
            const double gi = mean[i] + sd[i] * rng.normal();
            u += gi * gi;
        }
        return u;
    }
} // namespace detail

/// E[max(f - best, 0)] for f ~ N(mu, sigma^2).
inline McEstimate mc_ei_f(double mu, double sigma, double best, std::size_t n, std::uint64_t seed)
{
    detail::check_samples(n);
    CounterRng rng(derive_seed(seed, "mc-ei-f"));
    detail::RunningMoments m;
    for (std::size_t s = 0; s < n; ++s)
        m.add(std::max(mu + sigma * rng.normal() - best, 0.0));
    return m.result();
}

/// E[max(||grad||^2 - ||grad_plus||^2, 0)], grad ~ N(mu, diag(var)).
inline McEstimate mc_ei_s(const PosteriorGradient& pg, const Vector& grad_plus, std::size_t n, std::uint64_t seed)
{
    detail::check_samples(n);
    detail::check_gradient(pg, grad_plus);
    const Vector sd = pg.var_diag.array().sqrt().matrix();
    const double ref = grad_plus.squaredNorm();
    CounterRng rng(derive_seed(seed, "mc-ei-s"));
    detail::RunningMoments m;
    for (std::size_t s = 0; s < n; ++s)
        m.add(std::max(detail::sample_grad_norm2(pg.mean, sd, rng) - ref, 0.0));
    return m.result();
}

/// E[(||mu + L z||^2 - ||grad_plus||^2) 1{z >= z+ componentwise}], the
/// sampling counterpart of ei_s_bar.
inline McEstimate mc_ei_s_orthant(const PosteriorGradient& pg, const Vector& grad_plus, std::size_t n,
                                  std::uint64_t seed)
{
    detail::check_samples(n);
    detail::check_gradient(pg, grad_plus);
    if (!(pg.var_diag.array() > 0.0).all())
        throw NonpositiveVariance("mc_ei_s_orthant: whitening needs positive variance");
    const Eigen::Index d = pg.mean.size();
    const Vector sd = pg.var_diag.array().sqrt().matrix();
    const Vector z_plus = ((grad_plus - pg.mean).array() / sd.array()).matrix();
    const double ref = grad_plus.squaredNorm();
    // Proposal N(m, I) with m_i = (a + sqrt(a^2 + 4)) / 2 for a = z+_i > 0, else 0;
    // draws are reweighted by phi(z) / phi(z - m).
    Vector shift = Vector::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i)
        if (z_plus[i] > 0.0)
            shift[i] = 0.5 * (z_plus[i] + std::sqrt(z_plus[i] * z_plus[i] + 4.0));
    const double half_shift2 = 0.5 * shift.squaredNorm();
    CounterRng rng(derive_seed(seed, "mc-ei-s-orthant"));
    detail::RunningMoments m;
    for (std::size_t s = 0; s < n; ++s) {
        bool inside = true;
        double u = 0.0;
        double log_w = half_shift2;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double z = shift[i] + rng.normal();
            inside = inside && z >= z_plus[i];
            log_w -= shift[i] * z;
            const double gi = pg.mean[i] + sd[i] * z;
            u += gi * gi;
        }
        m.add(inside ? std::exp(log_w) * (u - ref) : 0.0);
    }
    return m.result();
}

/// E[max(g(x) - g(x+), 0)] with f and grad f sampled independently.
inline McEstimate mc_ei_g(double f_mu, double f_sigma, const PosteriorGradient& pg, const Incumbent& inc, double alpha,
                          std::size_t n, std::uint64_t seed)
{
    detail::check_samples(n);
    detail::check_gradient(pg, inc.grad_plus);
    const Vector sd = pg.var_diag.array().sqrt().matrix();
    const double g_plus = inc.f_plus - alpha * inc.grad_plus.squaredNorm();
    CounterRng rng(derive_seed(seed, "mc-ei-g"));
    detail::RunningMoments m;
    for (std::size_t s = 0; s < n; ++s) {
        const double f = f_mu + f_sigma * rng.normal();
        const double g = f - alpha * detail::sample_grad_norm2(pg.mean, sd, rng);
        m.add(std::max(g - g_plus, 0.0));
    }
    return m.result();
}

/// Stationarity-improvement event: gradient norm drops by at least delta
/// while f drops by at most alpha c delta.
struct EventSpec {
    double delta = 1.0;
    double c = 0.5;

    void validate() const
    {
        if (!(delta > 0.0) || !(c > 0.0 && c < 1.0))
            throw InvalidArgument("EventSpec: need delta > 0 and 0 < c < 1");
    }
};

struct EventBoundResult {
    double p_event = 0.0;
    double lhs_ei_g = 0.0;
    double rhs_bound = 0.0;
    double combined_se = 0.0;
    bool holds = false;
};

/// Checks EI_g >= alpha (1 - c) delta P(event) with both sides estimated
/// from the same draws.
inline EventBoundResult event_bound_check(double f_mu, double f_sigma, const PosteriorGradient& pg, const Incumbent& inc,
                                          double alpha, const EventSpec& spec, std::size_t n, std::uint64_t seed)
{
    spec.validate();
    detail::check_samples(n);
    detail::check_gradient(pg, inc.grad_plus);
    const Vector sd = pg.var_diag.array().sqrt().matrix();
    const double ref = inc.grad_plus.squaredNorm();
    const double g_plus = inc.f_plus - alpha * ref;
    CounterRng rng(derive_seed(seed, "event-bound"));
    detail::RunningMoments imp;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const double f = f_mu + f_sigma * rng.normal();
        const double u = detail::sample_grad_norm2(pg.mean, sd, rng);
        imp.add(std::max(f - alpha * u - g_plus, 0.0));
        if (u <= ref - spec.delta && f >= inc.f_plus - alpha * spec.c * spec.delta)
            ++hits;
    }
    EventBoundResult r;
    const McEstimate lhs = imp.result();
    const double nn = static_cast<double>(n);
    const double scale = alpha * (1.0 - spec.c) * spec.delta;
    r.p_event = static_cast<double>(hits) / nn;
    r.lhs_ei_g = lhs.estimate;
    r.rhs_bound = scale * r.p_event;
    const double se_rhs = scale * std::sqrt(r.p_event * (1.0 - r.p_event) / nn);
    r.combined_se = std::sqrt(lhs.std_error * lhs.std_error + se_rhs * se_rhs);
    r.holds = r.lhs_ei_g >= r.rhs_bound - 4.0 * r.combined_se;
    return r;
}

struct LowerBoundResult {
    McEstimate ei_g;
    McEstimate ei_f;
    McEstimate ei_s;
    double bound = 0.0;
    double combined_se = 0.0;
    bool holds = false;
};

/// Checks EI_g >= EI_f - alpha EI_s with three independent estimates.
inline LowerBoundResult lower_bound_check(double f_mu, double f_sigma, const PosteriorGradient& pg, const Incumbent& inc,
                                          double alpha, std::size_t n, std::uint64_t seed)
{
    LowerBoundResult r;
    r.ei_g = mc_ei_g(f_mu, f_sigma, pg, inc, alpha, n, derive_seed(seed, "lb-g"));
    r.ei_f = mc_ei_f(f_mu, f_sigma, inc.f_plus, n, derive_seed(seed, "lb-f"));
    r.ei_s = mc_ei_s(pg, inc.grad_plus, n, derive_seed(seed, "lb-s"));
    r.bound = r.ei_f.estimate - alpha * r.ei_s.estimate;
    r.combined_se = std::sqrt(r.ei_g.std_error * r.ei_g.std_error + r.ei_f.std_error * r.ei_f.std_error
                              + alpha * alpha * r.ei_s.std_error * r.ei_s.std_error);
    r.holds = r.ei_g.estimate >= r.bound - 4.0 * r.combined_se;
    return r;
}

} // namespace gnbo
