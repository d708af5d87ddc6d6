#pragma once

#include <gnbo/common.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace gnbo {

enum class KernelFamily { Matern52, RBF };

inline const char* to_string(KernelFamily f) { return f == KernelFamily::Matern52 ? "matern52" : "rbf"; }

/// Stationary kernel with ARD (one lengthscale per input) or isotropic
/// (single lengthscale) distance weighting.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern52;
    Vector lengthscales = Vector::Constant(1, 1.0);
    double outputscale = 1.0;
    double mean_constant = 0.0;

    bool ard() const { return lengthscales.size() > 1; }

    void validate(std::size_t dim) const
    {
        if (lengthscales.size() == 0)
            throw InvalidArgument("kernel: no lengthscales");
        if (lengthscales.size() != 1 && static_cast<std::size_t>(lengthscales.size()) != dim)
            throw DimensionMismatch("kernel: ARD lengthscale count " + std::to_string(lengthscales.size())
                                    + " does not match input dimension " + std::to_string(dim));
        if (!(lengthscales.array() > 0.0).all() || !(outputscale > 0.0))
            throw InvalidArgument("kernel: lengthscales and outputscale must be positive");
    }

    static KernelSpec matern52(Vector ls, double scale = 1.0)
    {
        return KernelSpec{KernelFamily::Matern52, std::move(ls), scale, 0.0};
    }
    static KernelSpec rbf(Vector ls, double scale = 1.0) { return KernelSpec{KernelFamily::RBF, std::move(ls), scale, 0.0}; }

    bool operator==(const KernelSpec& o) const
    {
        return family == o.family && lengthscales.size() == o.lengthscales.size() && lengthscales == o.lengthscales
            && outputscale == o.outputscale && mean_constant == o.mean_constant;
    }
};

/// Log-normal prior on lengthscales and Gamma(shape, rate) prior on the outputscale.
struct HyperpriorSpec {
    double lengthscale_loc = std::log(0.4);
    double lengthscale_scale = 0.7;
    double outputscale_shape = 2.0;
    double outputscale_rate = 0.5;

    bool operator==(const HyperpriorSpec&) const = default;
};

namespace detail {
    template <typename A, typename B>
    double scaled_sqdist(const KernelSpec& k, const A& x1, const B& x2)
    {
        const bool iso = k.lengthscales.size() == 1;
        double r2 = 0.0;
        for (Eigen::Index j = 0; j < x1.size(); ++j) {
            const double t = (x1[j] - x2[j]) / k.lengthscales[iso ? 0 : j];
            r2 += t * t;
        }
        return r2;
    }

    inline double kernel_from_sqdist(KernelFamily family, double outputscale, double r2)
    {
        if (family == KernelFamily::RBF)
            return outputscale * std::exp(-0.5 * r2);
        if (r2 <= 0.0)
            return outputscale;
        const double s5r = std::sqrt(5.0 * r2);
        return outputscale * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
    }

    /// d k / d (r^2 / 2) divided by -1, i.e. the factor multiplying each
    /// (delta_j / l_j)^2 in d k / d log l_j. Finite at r = 0.
    inline double kernel_lengthscale_factor(KernelFamily family, double outputscale, double r2)
    {
        if (family == KernelFamily::RBF)
            return outputscale * std::exp(-0.5 * r2);
        const double s5r = std::sqrt(5.0 * std::max(r2, 0.0));
        return outputscale * (5.0 / 3.0) * (1.0 + s5r) * std::exp(-s5r);
    }
} // namespace detail

template <typename A, typename B>
double eval_kernel(const KernelSpec& spec, const A& x1, const B& x2)
{
    if (x1.size() != x2.size())
        throw DimensionMismatch("eval_kernel: points have different dimensions");
    if (spec.lengthscales.size() != 1 && spec.lengthscales.size() != x1.size())
        throw DimensionMismatch("eval_kernel: lengthscale count does not match point dimension");
    return detail::kernel_from_sqdist(spec.family, spec.outputscale, detail::scaled_sqdist(spec, x1, x2));
}

/// K = k(X, X) + noise * I.
inline Matrix eval_kernel_matrix(const KernelSpec& spec, const PointMatrix& X, double noise = 0.0)
{
    if (X.rows() == 0)
        throw InvalidArgument("eval_kernel_matrix: empty point set");
    spec.validate(static_cast<std::size_t>(X.cols()));
    const Eigen::Index n = X.rows();
    Matrix K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = spec.outputscale + noise;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v
                = detail::kernel_from_sqdist(spec.family, spec.outputscale, detail::scaled_sqdist(spec, X.row(i), X.row(j)));
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

/// k(x, X) as a column vector.
inline Vector eval_kernel_vector(const KernelSpec& spec, const PointMatrix& X, const Vector& x)
{
    require_dim(x.size(), X.cols(), "eval_kernel_vector");
    Vector k(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        k[i] = detail::kernel_from_sqdist(spec.family, spec.outputscale, detail::scaled_sqdist(spec, X.row(i), x.transpose()));
    return k;
}

/// Cross covariance k(A, B), rows of A by rows of B.
inline Matrix eval_kernel_cross(const KernelSpec& spec, const PointMatrix& A, const PointMatrix& B)
{
    require_dim(A.cols(), B.cols(), "eval_kernel_cross");
    Matrix K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            K(i, j) = detail::kernel_from_sqdist(spec.family, spec.outputscale, detail::scaled_sqdist(spec, A.row(i), B.row(j)));
    return K;
}

inline double lognormal_logpdf(double x, double loc, double scale)
{
    const double z = (std::log(x) - loc) / scale;
    return -std::log(x * scale * std::sqrt(2.0 * std::numbers::pi)) - 0.5 * z * z;
}

inline double gamma_logpdf(double x, double shape, double rate)
{
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Sum of hyperprior log-densities over all lengthscales and the outputscale.
inline double log_hyperprior(const KernelSpec& spec, const HyperpriorSpec& priors)
{
    if (!(spec.lengthscales.array() > 0.0).all() || !(spec.outputscale > 0.0))
        throw InvalidArgument("log_hyperprior: hyperparameters must be positive");
    double lp = 0.0;
    for (Eigen::Index i = 0; i < spec.lengthscales.size(); ++i)
        lp += lognormal_logpdf(spec.lengthscales[i], priors.lengthscale_loc, priors.lengthscale_scale);
    lp += gamma_logpdf(spec.outputscale, priors.outputscale_shape, priors.outputscale_rate);
    return lp;
}

} // namespace gnbo
