#pragma once

// Scalar standard-normal utilities that stay accurate in the tails.

#include <cmath>
#include <limits>
#include <numbers>

namespace gnbo {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double normal_logpdf(double z) { return -0.5 * z * z - kHalfLog2Pi; }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

namespace detail {
    /// sum_{n>=0} (-1)^n (2n-1)!! / t^{2n}, the asymptotic series with
    /// Phi(-t) = phi(t) / t * series. Valid for t >= 8 (terms shrink until
    /// n ~ t^2 / 2, far past double precision).
    inline double upper_tail_series(double t, int first_term = 0)
    {
        const double inv_t2 = 1.0 / (t * t);
        double term = 1.0;
        double sum = first_term == 0 ? 1.0 : 0.0;
        for (int n = 1; n < 200; ++n) {
            const double next = -term * (2.0 * n - 1.0) * inv_t2;
            if (std::abs(next) >= std::abs(term))
                break;
            term = next;
            if (n >= first_term)
                sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum))
                break;
        }
        return sum;
    }
} // namespace detail

/// log Phi(z), finite for every finite z.
inline double log_normal_cdf(double z)
{
    if (z > -30.0) {
        if (z > 5.0)
            return std::log1p(-0.5 * std::erfc(z * kInvSqrt2));
        return std::log(normal_cdf(z));
    }
    const double t = -z;
    return normal_logpdf(t) - std::log(t) + std::log(detail::upper_tail_series(t));
}

/// Inverse Mills ratio phi(z) / Phi(-z) (hazard of the standard normal).
inline double inverse_mills(double z)
{
    if (z >= 8.0)
        return z / detail::upper_tail_series(z);
    if (z > 5.0)
        return std::exp(normal_logpdf(z) - log_normal_cdf(-z));
    return normal_pdf(z) / normal_cdf(-z);
}

struct NormalValues {
    double pdf;
    double cdf;
    double log_cdf;
    double mills; ///< phi(z) / Phi(-z)
};

inline NormalValues normal_pdf_cdf(double z)
{
    return {normal_pdf(z), normal_cdf(z), log_normal_cdf(z), inverse_mills(z)};
}

/// log h(z) with h(z) = phi(z) + z Phi(z) = E[max(Z + z, 0)].
inline double log_h(double z)
{
    if (z > -8.0)
        return std::log(normal_pdf(z) + z * normal_cdf(z));
    // h(z) = phi(t) (1 - t Phi(-t)/phi(t)), t = -z; the bracket is the series
    // without its leading term, negated.
    const double t = -z;
    return normal_logpdf(t) + std::log(-detail::upper_tail_series(t, 1));
}

} // namespace gnbo
