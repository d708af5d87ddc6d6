#pragma once

// Exact Gaussian-process regression.
//
// Inputs are mapped to the unit cube with the problem bounds and targets are
// standardized to zero mean / unit population variance before fitting.
// Hyperparameters (log lengthscales, log outputscale) are fit by multi-start
// box-constrained L-BFGS on the log marginal likelihood plus log hyperprior.
// The noise variance is fixed by the configuration.

#include <gnbo/common.hpp>
#include <gnbo/kernel.hpp>
#include <gnbo/optim.hpp>
#include <gnbo/random.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace gnbo {

struct FitConfig {
    HyperpriorSpec hyperpriors{};
    bool use_hyperpriors = true;
    KernelFamily family = KernelFamily::Matern52;
    bool ard = true;
    int restarts = 5;
    int max_iters = 200;
    double base_jitter = 1e-9;
    double max_jitter = 1e-2;
    /// Observation noise variance in standardized units.
    double noise = 1e-6;
    bool standardize_outputs = true;
    /// When set, hyperparameters are taken as-is and no optimization happens.
    std::optional<KernelSpec> fixed_hyperparams{};
    /// Optional first start for the multi-start search (e.g. the previous fit).
    std::optional<KernelSpec> warm_start{};
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!(base_jitter >= 0.0 && base_jitter <= max_jitter))
            throw InvalidArgument("FitConfig: base_jitter must be <= max_jitter");
        if (restarts < 1)
            throw InvalidArgument("FitConfig: restarts must be >= 1");
        if (noise < 0.0)
            throw InvalidArgument("FitConfig: noise must be nonnegative");
    }
};

struct CholeskyResult {
    Matrix L;
    double jitter = 0.0;
};

/// Jitter escalation ladder {0, base, 10 base, ..., max}.
inline std::vector<double> jitter_ladder(double base, double max)
{
    std::vector<double> ladder{0.0};
    if (!(base > 0.0))
        return ladder;
    for (double j = base; j <= max * (1.0 + 1e-12); j *= 10.0)
        ladder.push_back(j);
    return ladder;
}

/// Cholesky factor of K + jitter I with the smallest jitter on the ladder
/// that gives a numerically positive-definite factor.
inline CholeskyResult adaptive_cholesky(const Matrix& K, double base_jitter = 1e-9, double max_jitter = 1e-2)
{
    if (K.rows() != K.cols())
        throw DimensionMismatch("adaptive_cholesky: matrix is not square");
    const Eigen::Index n = K.rows();
    for (double jitter : jitter_ladder(base_jitter, max_jitter)) {
        Matrix A = K;
        if (jitter > 0.0)
            A.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(A);
        if (llt.info() != Eigen::Success)
            continue;
        Matrix L = llt.matrixL();
        const auto diag = L.diagonal();
        if (n > 0 && (!diag.allFinite() || diag.minCoeff() <= 0.0))
            continue;
        return {std::move(L), jitter};
    }
    throw FactorizationFailed("adaptive_cholesky: factorization failed with jitter up to "
                              + std::to_string(max_jitter));
}

inline CholeskyResult adaptive_cholesky(const Matrix& K, const FitConfig& cfg)
{
    return adaptive_cholesky(K, cfg.base_jitter, cfg.max_jitter);
}

/// Affine maps between problem units and model units.
struct Standardizer {
    Box input;
    double y_mean = 0.0;
    double y_scale = 1.0;

    Vector to_model(const Vector& x) const { return input.to_unit(x); }
    double y_to_model(double y) const { return (y - y_mean) / y_scale; }
    double y_from_model(double y) const { return y_mean + y_scale * y; }
};

struct Posterior {
    double mean = 0.0;
    double var = 0.0;
};

class GPModel {
public:
    GPModel() = default;

    /// Build a model with fixed hyperparameters on data already mapped to
    /// model units.
    static GPModel condition(PointMatrix X_model, Vector y_model, KernelSpec kernel, double noise,
                             Standardizer standardizer, double base_jitter = 1e-9, double max_jitter = 1e-2)
    {
        GPModel m;
        kernel.validate(static_cast<std::size_t>(X_model.cols()));
        Matrix K = eval_kernel_matrix(kernel, X_model, noise);
        auto chol = adaptive_cholesky(K, base_jitter, max_jitter);
        m.X_ = std::move(X_model);
        m.y_ = std::move(y_model);
        m.kernel_ = std::move(kernel);
        m.noise_ = noise;
        m.L_ = std::move(chol.L);
        m.jitter_ = chol.jitter;
        m.std_ = std::move(standardizer);
        const Vector resid = (m.y_.array() - m.kernel_.mean_constant).matrix();
        m.alpha_ = m.L_.transpose().triangularView<Eigen::Upper>().solve(m.L_.triangularView<Eigen::Lower>().solve(resid));
        return m;
    }

    std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
    const PointMatrix& inputs() const { return X_; }
    const Vector& targets() const { return y_; }
    const KernelSpec& kernel() const { return kernel_; }
    double noise() const { return noise_; }
    double jitter() const { return jitter_; }
    const Matrix& chol() const { return L_; }
    const Vector& alpha() const { return alpha_; }
    const Standardizer& standardizer() const { return std_; }

    /// Posterior in model units at a model-unit input.
    Posterior posterior_model(const Vector& u) const
    {
        const Vector k = eval_kernel_vector(kernel_, X_, u);
        const Vector v = L_.triangularView<Eigen::Lower>().solve(k);
        Posterior p;
        p.mean = kernel_.mean_constant + k.dot(alpha_);
        p.var = std::max(kernel_.outputscale - v.squaredNorm(), 0.0);
        return p;
    }

    /// Posterior mean and variance at x (problem units), in problem units.
    Posterior posterior(const Vector& x) const
    {
        require_dim(x.size(), X_.cols(), "posterior");
        const Posterior p = posterior_model(std_.to_model(x));
        return {std_.y_from_model(p.mean), std_.y_scale * std_.y_scale * p.var};
    }

    /// Joint posterior mean and covariance over a point set (problem units).
    std::pair<Vector, Matrix> joint_posterior(const PointMatrix& pts) const
    {
        require_dim(pts.cols(), X_.cols(), "joint_posterior");
        PointMatrix U(pts.rows(), pts.cols());
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            U.row(i) = std_.to_model(pts.row(i).transpose()).transpose();
        const Matrix Ks = eval_kernel_cross(kernel_, X_, U);
        const Matrix V = L_.triangularView<Eigen::Lower>().solve(Ks);
        Vector mean = (Ks.transpose() * alpha_).array() + kernel_.mean_constant;
        Matrix cov = eval_kernel_matrix(kernel_, U, 0.0);
        cov.noalias() -= V.transpose() * V;
        mean = (mean.array() * std_.y_scale + std_.y_mean).matrix();
        cov *= std_.y_scale * std_.y_scale;
        return {std::move(mean), std::move(cov)};
    }

private:
    PointMatrix X_;
    Vector y_;
    KernelSpec kernel_;
    double noise_ = 0.0;
    Matrix L_;
    double jitter_ = 0.0;
    Vector alpha_;
    Standardizer std_;
};

/// -1/2 y^T K^-1 y - sum log L_ii - N/2 log 2 pi on the model-unit targets.
inline double log_marginal_likelihood(const GPModel& model)
{
    const Vector resid = (model.targets().array() - model.kernel().mean_constant).matrix();
    const double n = static_cast<double>(model.size());
    return -0.5 * resid.dot(model.alpha()) - model.chol().diagonal().array().log().sum()
        - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

namespace detail {

    /// Packs (log lengthscales..., log outputscale).
    inline Vector pack(const KernelSpec& k)
    {
        Vector t(k.lengthscales.size() + 1);
        t.head(k.lengthscales.size()) = k.lengthscales.array().log().matrix();
        t[k.lengthscales.size()] = std::log(k.outputscale);
        return t;
    }

    inline KernelSpec unpack(const Vector& t, KernelFamily family, double mean_constant)
    {
        KernelSpec k;
        k.family = family;
        k.lengthscales = t.head(t.size() - 1).array().exp().matrix();
        k.outputscale = std::exp(t[t.size() - 1]);
        k.mean_constant = mean_constant;
        return k;
    }

    /// Log-space MAP objective and its analytic gradient.
    class MapObjective {
    public:
        MapObjective(const PointMatrix& X, const Vector& y, const FitConfig& cfg) : X_(X), y_(y), cfg_(cfg) {}

        double operator()(const Vector& theta, Vector& grad) const
        {
            const KernelSpec k = unpack(theta, cfg_.family, 0.0);
            const Eigen::Index n = X_.rows();
            const Eigen::Index d = X_.cols();
            const Eigen::Index nl = k.lengthscales.size();
            grad.setZero(theta.size());

            Matrix K = eval_kernel_matrix(k, X_, cfg_.noise);
            CholeskyResult chol;
            try {
                chol = adaptive_cholesky(K, cfg_.base_jitter, cfg_.max_jitter);
            } catch (const FactorizationFailed&) {
                return -std::numeric_limits<double>::infinity();
            }
            const auto L = chol.L.triangularView<Eigen::Lower>();
            const Vector alpha = chol.L.transpose().triangularView<Eigen::Upper>().solve(L.solve(y_));
            double value = -0.5 * y_.dot(alpha) - chol.L.diagonal().array().log().sum()
                - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

            // W = alpha alpha^T - K^-1; dLML/dtheta_p = 1/2 sum_ij W_ij dK_ij/dtheta_p.
            Matrix W = Matrix::Identity(n, n);
            L.solveInPlace(W);
            chol.L.transpose().triangularView<Eigen::Upper>().solveInPlace(W);
            W = alpha * alpha.transpose() - W;

            double g_scale = 0.0;
            Vector delta2(d);
            for (Eigen::Index i = 0; i < n; ++i) {
                g_scale += 0.5 * W(i, i) * k.outputscale;
                for (Eigen::Index j = 0; j < i; ++j) {
                    if (nl == 1)
                        delta2 = (X_.row(i) - X_.row(j)).array().square() / (k.lengthscales[0] * k.lengthscales[0]);
                    else
                        delta2 = ((X_.row(i) - X_.row(j)).transpose().array() / k.lengthscales.array()).square();
                    const double r2 = delta2.sum();
                    const double kij = kernel_from_sqdist(k.family, k.outputscale, r2);
                    const double fij = kernel_lengthscale_factor(k.family, k.outputscale, r2);
                    g_scale += W(i, j) * kij;
                    if (nl == 1)
                        grad[0] += W(i, j) * fij * r2;
                    else
                        grad.head(nl) += (W(i, j) * fij) * delta2;
                }
            }
            grad[nl] = g_scale;

            if (cfg_.use_hyperpriors) {
                const auto& hp = cfg_.hyperpriors;
                value += log_hyperprior(k, hp);
                for (Eigen::Index p = 0; p < nl; ++p)
                    grad[p] += -1.0 - (theta[p] - hp.lengthscale_loc) / (hp.lengthscale_scale * hp.lengthscale_scale);
                grad[nl] += (hp.outputscale_shape - 1.0) - hp.outputscale_rate * k.outputscale;
            }
            return value;
        }

    private:
        const PointMatrix& X_;
        const Vector& y_;
        const FitConfig& cfg_;
    };

    inline Vector theta_lower(Eigen::Index nl)
    {
        Vector lo(nl + 1);
        lo.head(nl).setConstant(std::log(1e-3));
        lo[nl] = std::log(1e-4);
        return lo;
    }
    inline Vector theta_upper(Eigen::Index nl)
    {
        Vector hi(nl + 1);
        hi.head(nl).setConstant(std::log(1e2));
        hi[nl] = std::log(1e3);
        return hi;
    }

} // namespace detail

/// Per-restart outcome, kept for diagnostics.
struct FitTrace {
    std::vector<double> start_values;
    std::vector<double> final_values;
    int best_restart = 0;
};

/// Map `X` (problem units) and `y` to model units.
inline Standardizer make_standardizer(const Vector& y, const Box& bounds, bool standardize_outputs)
{
    Standardizer s;
    s.input = bounds;
    if (standardize_outputs && y.size() > 0) {
        s.y_mean = y.mean();
        if (y.size() >= 2) {
            const double var = (y.array() - s.y_mean).square().mean();
            s.y_scale = var > 0.0 ? std::sqrt(var) : 1.0;
        }
    }
    return s;
}

/// Fit a GP to (X, y). `bounds` defines the map to the unit cube; when absent
/// the inputs are used as-is.
inline GPModel fit(const PointMatrix& X, const Vector& y, const FitConfig& cfg, std::optional<Box> bounds = {},
                   FitTrace* trace = nullptr)
{
    cfg.validate();
    if (X.rows() < 1)
        throw InvalidArgument("fit: need at least one observation");
    require_dim(y.size(), X.rows(), "fit: target count");
    if (!X.allFinite() || !y.allFinite())
        throw InvalidArgument("fit: non-finite training data");

    const std::size_t d = static_cast<std::size_t>(X.cols());
    const Box box = bounds ? *bounds : Box::unit(d);
    require_dim(static_cast<Eigen::Index>(box.dim()), X.cols(), "fit: bounds");

    const Standardizer st = make_standardizer(y, box, cfg.standardize_outputs);
    PointMatrix U(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        U.row(i) = box.to_unit(X.row(i).transpose()).transpose();
    Vector ys = y.unaryExpr([&](double v) { return st.y_to_model(v); });

    if (cfg.fixed_hyperparams)
        return GPModel::condition(std::move(U), std::move(ys), *cfg.fixed_hyperparams, cfg.noise, st, cfg.base_jitter,
                                  cfg.max_jitter);

    const Eigen::Index nl = cfg.ard ? static_cast<Eigen::Index>(d) : 1;
    const detail::MapObjective objective(U, ys, cfg);
    const Vector lo = detail::theta_lower(nl);
    const Vector hi = detail::theta_upper(nl);
    LbfgsOptions opt;
    opt.max_iters = cfg.max_iters;
    opt.grad_tol = 1e-5;
    opt.step_tol = 1e-9;

    Vector best_theta;
    double best_value = -std::numeric_limits<double>::infinity();
    FitTrace local;
    for (int r = 0; r < cfg.restarts; ++r) {
        Vector theta0(nl + 1);
        if (r == 0) {
            if (cfg.warm_start && cfg.warm_start->lengthscales.size() == nl)
                theta0 = detail::pack(*cfg.warm_start);
            else {
                theta0.head(nl).setConstant(cfg.hyperpriors.lengthscale_loc);
                theta0[nl] = 0.0;
            }
        } else {
            CounterRng rng(derive_seed(cfg.seed, "fit-restart", static_cast<std::uint64_t>(r)));
            for (Eigen::Index p = 0; p < nl; ++p)
                theta0[p] = rng.normal(cfg.hyperpriors.lengthscale_loc, cfg.hyperpriors.lengthscale_scale);
            theta0[nl] = rng.uniform(std::log(0.25), std::log(4.0));
        }
        theta0 = theta0.cwiseMax(lo).cwiseMin(hi);
        Vector g0;
        const double v0 = objective(theta0, g0);
        local.start_values.push_back(v0);
        if (!std::isfinite(v0)) {
            local.final_values.push_back(v0);
            continue;
        }
        const LbfgsResult res = maximize_box([&](const Vector& t, Vector& g) { return objective(t, g); }, theta0, lo, hi, opt);
        local.final_values.push_back(res.value);
        if (res.value > best_value) {
            best_value = res.value;
            best_theta = res.x;
            local.best_restart = r;
        }
    }
    if (trace)
        *trace = local;
    if (best_theta.size() == 0)
        throw FactorizationFailed("fit: no restart produced a factorizable kernel matrix");

    KernelSpec k = detail::unpack(best_theta, cfg.family, 0.0);
    return GPModel::condition(std::move(U), std::move(ys), std::move(k), cfg.noise, st, cfg.base_jitter, cfg.max_jitter);
}

/// Log-space MAP objective at the given hyperparameters (for tests and diagnostics).
inline double map_objective(const PointMatrix& U, const Vector& y_model, const KernelSpec& k, const FitConfig& cfg,
                            Vector* grad = nullptr)
{
    FitConfig c = cfg;
    c.family = k.family;
    const detail::MapObjective obj(U, y_model, c);
    Vector g;
    const double v = obj(detail::pack(k), g);
    if (grad)
        *grad = g;
    return v;
}

} // namespace gnbo
