#pragma once

// Seeded random streams.
//
// Every stochastic component draws from a CounterRng keyed by (seed, stream
// tag). Values depend only on the key and the draw counter, so results are
// identical across platforms and independent of how many draws other
// components consumed.

#include <gnbo/common.hpp>

#include <boost/random/sobol.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace gnbo {

namespace detail {
    constexpr std::uint64_t mix64(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t hash_tag(std::string_view tag)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }
} // namespace detail

/// Derive a child key from a parent key and a tag/index.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0)
{
    return detail::mix64(detail::mix64(parent ^ detail::hash_tag(tag)) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

/// Counter-based generator: output i is a pure function of (key, i).
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) : key_(detail::mix64(key + 0x632be59bd9b4e019ULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()()
    {
        const std::uint64_t c = counter_++;
        return detail::mix64(key_ ^ detail::mix64(c * 0x9e3779b97f4a7c15ULL + 0xd1b54a32d192ed03ULL));
    }

    /// Uniform in the open interval (0, 1).
    double uniform()
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        // n is small in every call site; modulo bias is < 2^-40.
        return (*this)() % n;
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Vector normal_vector(CounterRng& rng, Eigen::Index n)
{
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i)
        z[i] = rng.normal();
    return z;
}

/// Sobol points in [0,1)^d with a seeded random digital shift.
///
/// Point 0 is the origin, followed by the Boost generator's points (which
/// start after the origin), so every leading block of 2^m points is a net. The
/// shift is an XOR of every coordinate with a per-dimension random word, which
/// preserves the net structure. `skip` discards leading points so a stream can
/// be continued.
inline PointMatrix scrambled_sobol(std::size_t n, std::size_t dim, std::uint64_t seed, std::size_t skip = 0)
{
    if (dim == 0)
        throw InvalidArgument("sobol: dimension must be >= 1");
    boost::random::sobol engine(static_cast<unsigned>(dim));
    if (skip > 1)
        engine.discard(static_cast<boost::uintmax_t>(skip - 1) * dim);

    CounterRng rng(derive_seed(seed, "sobol-shift"));
    std::vector<std::uint64_t> shift(dim);
    for (auto& s : shift)
        s = rng();

    PointMatrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            const std::uint64_t raw = skip + i == 0 ? 0 : static_cast<std::uint64_t>(engine());
            const std::uint64_t v = raw ^ shift[j];
            pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                = static_cast<double>(v >> 11) * 0x1.0p-53;
        }
    return pts;
}

/// Sobol points mapped into a box.
inline PointMatrix scrambled_sobol(std::size_t n, const Box& box, std::uint64_t seed, std::size_t skip = 0)
{
    PointMatrix u = scrambled_sobol(n, box.dim(), seed, skip);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        u.row(i) = box.from_unit(u.row(i).transpose()).transpose();
    return u;
}

} // namespace gnbo
