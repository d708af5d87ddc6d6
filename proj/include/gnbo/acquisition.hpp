#pragma once

// Closed-form acquisition values: EI, log EI, the orthant-truncated
// stationarity term and the combined gradient-norm acquisition.

#include <gnbo/gradient_surrogate.hpp>
#include <gnbo/normal.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

namespace gnbo {

enum class Rescale { None, PoolZscore };
enum class IncumbentRule { GIncumbent, FIncumbent };

inline const char* to_string(Rescale r) { return r == Rescale::None ? "none" : "pool_zscore"; }
inline const char* to_string(IncumbentRule r) { return r == IncumbentRule::GIncumbent ? "g_incumbent" : "f_incumbent"; }

struct AcquisitionConfig {
    double alpha = 0.6;
    Rescale rescale = Rescale::PoolZscore;
    IncumbentRule incumbent_rule = IncumbentRule::GIncumbent;
};

/// Best observation under the selected rule.
struct Incumbent {
    std::size_t index = 0;
    Vector x_plus;
    double f_plus = 0.0;
    Vector grad_plus;
    double g_plus = 0.0; ///< f_plus - alpha ||grad_plus||^2
};

struct WhitenedIncumbent {
    Vector L_diag;
    Vector z_plus;
    Vector w;            ///< phi(z+) / Phi(-z+)
    double log_phi_prod; ///< sum_i log Phi(-z_i+)
};

/// Frozen mean / standard deviation of both acquisition components over a
/// candidate pool.
struct PoolStats {
    double mean_f = 0.0;
    double std_f = 1.0;
    double mean_s = 0.0;
    double std_s = 1.0;
};

inline constexpr double kVarianceFloor = 1e-12;

/// Closed-form expected improvement of N(mu, sigma^2) over `best`.
inline double ei(double mu, double sigma, double best)
{
    if (!(sigma > 0.0))
        return std::max(mu - best, 0.0);
    const double z = (mu - best) / sigma;
    if (z > -8.0)
        return std::max(sigma * (normal_pdf(z) + z * normal_cdf(z)), 0.0);
    return sigma * std::exp(log_h(z));
}

inline double log_ei(double mu, double sigma, double best)
{
    if (!(sigma > 0.0))
        throw DegenerateVariance("log_ei: sigma must be positive");
    return std::log(sigma) + log_h((mu - best) / sigma);
}

/// Argmax of y - alpha ||grad||^2 (g rule) or of y (f rule); lowest index wins ties.
inline Incumbent select_incumbent(const Dataset& data, const AcquisitionConfig& cfg)
{
    if (data.size() == 0)
        throw InvalidArgument("select_incumbent: empty dataset");
    const double a = cfg.incumbent_rule == IncumbentRule::GIncumbent ? cfg.alpha : 0.0;
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double v = data.y[r] - a * data.grads.row(r).squaredNorm();
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    Incumbent inc;
    const auto r = static_cast<Eigen::Index>(best);
    inc.index = best;
    inc.x_plus = data.X.row(r).transpose();
    inc.f_plus = data.y[r];
    inc.grad_plus = data.grads.row(r).transpose();
    inc.g_plus = inc.f_plus - cfg.alpha * inc.grad_plus.squaredNorm();
    return inc;
}

/// z+ = L^-1 (grad_plus - mu_grad) with L = diag(sqrt(var)).
inline WhitenedIncumbent whiten(const PosteriorGradient& pg, const Vector& grad_plus)
{
    require_dim(grad_plus.size(), pg.mean.size(), "whiten");
    if (!(pg.var_diag.array() > 0.0).all())
        throw NonpositiveVariance("whiten: gradient posterior variance must be positive");
    WhitenedIncumbent wi;
    const Eigen::Index d = pg.mean.size();
    wi.L_diag = pg.var_diag.array().sqrt().matrix();
    wi.z_plus = ((grad_plus - pg.mean).array() / wi.L_diag.array()).matrix();
    wi.w.resize(d);
    wi.log_phi_prod = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        wi.w[i] = inverse_mills(wi.z_plus[i]);
        wi.log_phi_prod += log_normal_cdf(-wi.z_plus[i]);
    }
    return wi;
}

/// Orthant-truncated second moment of the gradient norm relative to the
/// incumbent:
///   prod_i Phi(-z_i+) * ( ||mu||^2 - ||g+||^2 + 2 sum_i mu_i L_i w_i
///                         + sum_i var_i (1 + z_i+ w_i) ).
/// O(d) for the diagonal covariance.
inline double ei_s_bar(const PosteriorGradient& pg, const Vector& grad_plus)
{
    require_dim(grad_plus.size(), pg.mean.size(), "ei_s_bar");
    if (!(pg.var_diag.array() > 0.0).all())
        throw NonpositiveVariance("ei_s_bar: gradient posterior variance must be positive");
    const Eigen::Index d = pg.mean.size();
    double log_prod = 0.0;
    double bracket = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double mu = pg.mean[i];
        const double var = pg.var_diag[i];
        const double sd = std::sqrt(var);
        const double z = (grad_plus[i] - mu) / sd;
        const double w = inverse_mills(z);
        log_prod += log_normal_cdf(-z);
        bracket += mu * mu - grad_plus[i] * grad_plus[i] + 2.0 * mu * sd * w + var * (1.0 + z * w);
    }
    return std::exp(log_prod) * bracket;
}

/// Same value assembled from a precomputed whitening.
inline double ei_s_bar(const PosteriorGradient& pg, const Vector& grad_plus, const WhitenedIncumbent& wi)
{
    const double bracket = pg.mean.squaredNorm() - grad_plus.squaredNorm()
        + 2.0 * (pg.mean.array() * wi.L_diag.array() * wi.w.array()).sum()
        + (pg.var_diag.array() * (1.0 + wi.z_plus.array() * wi.w.array())).sum();
    return std::exp(wi.log_phi_prod) * bracket;
}

/// Floors the gradient variance before whitening.
inline PosteriorGradient floor_variance(PosteriorGradient pg, double floor = kVarianceFloor)
{
    pg.var_diag = pg.var_diag.cwiseMax(floor);
    return pg;
}

inline PoolStats make_pool_stats(std::span<const double> ei_f, std::span<const double> ei_s)
{
    auto moments = [](std::span<const double> v, double& mean, double& sd) {
        mean = 0.0;
        for (double x : v)
            mean += x;
        mean /= static_cast<double>(std::max<std::size_t>(v.size(), 1));
        double ss = 0.0;
        for (double x : v)
            ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(v.size(), 1)));
        sd = sd == 0.0 ? 1.0 : std::max(sd, 1e-12);
    };
    PoolStats s;
    moments(ei_f, s.mean_f, s.std_f);
    moments(ei_s, s.mean_s, s.std_s);
    return s;
}

/// ei_f - alpha ei_s, optionally on pool z-scores.
inline double ei_gn(double ei_f, double ei_s, const AcquisitionConfig& cfg, const std::optional<PoolStats>& pool = {})
{
    if (cfg.rescale == Rescale::None)
        return ei_f - cfg.alpha * ei_s;
    if (!pool)
        throw InvalidArgument("ei_gn: pool statistics required for pool_zscore rescaling");
    return (ei_f - pool->mean_f) / pool->std_f - cfg.alpha * (ei_s - pool->mean_s) / pool->std_s;
}

} // namespace gnbo
