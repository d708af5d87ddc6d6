#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gnbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Row-major point list; row i is one point.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr const char* kVersion = "0.3.0";

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct FactorizationFailed : Error {
    using Error::Error;
};

struct DegenerateVariance : Error {
    using Error::Error;
};

struct NonpositiveVariance : Error {
    using Error::Error;
};

struct NonFiniteAcquisition : Error {
    using Error::Error;
};

struct UnknownProblem : Error {
    using Error::Error;
};

/// Axis-aligned search box.
struct Box {
    Vector lower;
    Vector upper;

    Box() = default;
    Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi))
    {
        if (lower.size() != upper.size())
            throw DimensionMismatch("box: lower/upper size mismatch");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]))
                throw InvalidArgument("box: lower must be < upper in every coordinate");
    }

    static Box cube(std::size_t dim, double lo, double hi)
    {
        return Box(Vector::Constant(static_cast<Eigen::Index>(dim), lo),
                   Vector::Constant(static_cast<Eigen::Index>(dim), hi));
    }
    static Box unit(std::size_t dim) { return cube(dim, 0.0, 1.0); }

    std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }

    Vector to_unit(const Vector& x) const
    {
        return ((x - lower).array() / (upper - lower).array()).matrix();
    }
    Vector from_unit(const Vector& u) const
    {
        return (lower.array() + u.array() * (upper - lower).array()).matrix();
    }
    bool contains(const Vector& x, double tol = 0.0) const
    {
        return x.size() == lower.size() && (x.array() >= lower.array() - tol).all()
            && (x.array() <= upper.array() + tol).all();
    }
    Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

/// Observations of f and its gradient; row i of `X` and `grads` belong to y[i].
struct Dataset {
    PointMatrix X;
    Vector y;
    PointMatrix grads;

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
    std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }

    void append(const Vector& x, double fx, const Vector& gx)
    {
        const Eigen::Index n = X.rows();
        if (n == 0) {
            X.resize(0, x.size());
            grads.resize(0, gx.size());
        }
        X.conservativeResize(n + 1, x.size());
        X.row(n) = x.transpose();
        y.conservativeResize(n + 1);
        y[n] = fx;
        grads.conservativeResize(n + 1, gx.size());
        grads.row(n) = gx.transpose();
    }
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what)
{
    if (got != want)
        throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(want)
                                + ", got " + std::to_string(got));
}

} // namespace gnbo
