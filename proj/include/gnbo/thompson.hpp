#pragma once

#include <gnbo/gp.hpp>
#include <gnbo/random.hpp>

namespace gnbo {

/// Draw one joint posterior sample over `candidates` and return the index of
/// its maximum.
inline Eigen::Index thompson_select_index(const GPModel& model, const PointMatrix& candidates, std::uint64_t seed,
                                          double base_jitter = 1e-9, double max_jitter = 1e-2)
{
    if (candidates.rows() == 0)
        throw InvalidArgument("thompson_select: empty candidate set");
    if (candidates.rows() == 1)
        return 0;
    auto [mean, cov] = model.joint_posterior(candidates);
    // Scale-relative jitter so the ladder is meaningful in problem units.
    const double scale = std::max(cov.diagonal().maxCoeff(), 1e-300);
    const CholeskyResult chol = adaptive_cholesky(cov / scale, base_jitter, max_jitter);
    CounterRng rng(derive_seed(seed, "thompson"));
    const Vector z = normal_vector(rng, candidates.rows());
    const Vector sample = mean + std::sqrt(scale) * Vector(chol.L.triangularView<Eigen::Lower>() * z);
    Eigen::Index best = 0;
    sample.maxCoeff(&best);
    return best;
}

inline Vector thompson_select(const GPModel& model, const PointMatrix& candidates, std::uint64_t seed)
{
    return candidates.row(thompson_select_index(model, candidates, seed)).transpose();
}

} // namespace gnbo
