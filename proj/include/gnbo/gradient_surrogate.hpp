#pragma once

#include <gnbo/gp.hpp>

#include <string>
#include <vector>

namespace gnbo {

/// Posterior of the gradient at one point: mean and the diagonal of the
/// (diagonal) covariance.
struct PosteriorGradient {
    Vector mean;
    Vector var_diag;

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// One independent GP per partial derivative, each with its own
/// hyperparameters and output standardization.
struct GradientSurrogate {
    std::vector<GPModel> models;

    std::size_t dim() const { return models.size(); }
};

/// Fit coordinate i of `grad_y` with its own GP. Every coordinate uses the
/// same configuration (including seed), so the result for a column depends
/// only on that column.
inline GradientSurrogate fit_gradient_models(const PointMatrix& X, const PointMatrix& grad_y, const FitConfig& cfg,
                                             std::optional<Box> bounds = {},
                                             const std::vector<KernelSpec>* warm_starts = nullptr)
{
    require_dim(grad_y.cols(), X.cols(), "fit_gradient_models: gradient columns");
    require_dim(grad_y.rows(), X.rows(), "fit_gradient_models: gradient rows");
    GradientSurrogate s;
    s.models.reserve(static_cast<std::size_t>(grad_y.cols()));
    for (Eigen::Index i = 0; i < grad_y.cols(); ++i) {
        FitConfig c = cfg;
        if (warm_starts && static_cast<std::size_t>(i) < warm_starts->size())
            c.warm_start = (*warm_starts)[static_cast<std::size_t>(i)];
        try {
            s.models.push_back(fit(X, grad_y.col(i), c, bounds));
        } catch (const FactorizationFailed& e) {
            throw FactorizationFailed("gradient model for dimension " + std::to_string(i) + ": " + e.what());
        }
    }
    return s;
}

inline PosteriorGradient posterior_gradient(const GradientSurrogate& s, const Vector& x)
{
    require_dim(x.size(), static_cast<Eigen::Index>(s.dim()), "posterior_gradient");
    PosteriorGradient pg;
    pg.mean.resize(x.size());
    pg.var_diag.resize(x.size());
    for (std::size_t i = 0; i < s.models.size(); ++i) {
        const Posterior p = s.models[i].posterior(x);
        pg.mean[static_cast<Eigen::Index>(i)] = p.mean;
        pg.var_diag[static_cast<Eigen::Index>(i)] = p.var;
    }
    return pg;
}

} // namespace gnbo
