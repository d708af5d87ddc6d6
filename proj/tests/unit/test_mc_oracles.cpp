#include <gnbo/mc_oracles.hpp>

#include <gtest/gtest.h>

using namespace gnbo;

namespace {

PosteriorGradient make_pg(const Vector& mean, const Vector& var)
{
    PosteriorGradient pg;
    pg.mean = mean;
    pg.var_diag = var;
    return pg;
}

Vector vec(std::initializer_list<double> v)
{
    return Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

Incumbent make_incumbent(double f_plus, const Vector& grad_plus, double alpha)
{
    Incumbent inc;
    inc.x_plus = Vector::Zero(grad_plus.size());
    inc.f_plus = f_plus;
    inc.grad_plus = grad_plus;
    inc.g_plus = f_plus - alpha * grad_plus.squaredNorm();
    return inc;
}

} // namespace

TEST(McEiF, MatchesClosedForm)
{
    const McEstimate m = mc_ei_f(0.3, 1.2, 0.5, 1000000, 1);
    EXPECT_LE(std::abs(m.estimate - ei(0.3, 1.2, 0.5)), 3.0 * m.std_error);
}

TEST(McEiS, ZeroVarianceLimitIsDeterministic)
{
    const PosteriorGradient pg = make_pg(vec({2.0, -1.0}), Vector::Constant(2, 1e-12));
    const Vector gp = vec({1.0, 0.5});
    const McEstimate m = mc_ei_s(pg, gp, 10000, 2);
    EXPECT_NEAR(m.estimate, pg.mean.squaredNorm() - gp.squaredNorm(), 1e-6);
}

TEST(McEiS, ChiSquareMean)
{
    const McEstimate m = mc_ei_s(make_pg(vec({0.0}), vec({1.0})), vec({0.0}), 1000000, 3);
    EXPECT_LE(std::abs(m.estimate - 1.0), 3.0 * m.std_error);
}

TEST(McEiS, NonnegativeAndDeterministic)
{
    CounterRng rng(4);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(5));
        const PosteriorGradient pg
            = make_pg(normal_vector(rng, d), Vector::NullaryExpr(d, [&] { return rng.uniform(0.0, 2.0); }));
        const Vector gp = 3.0 * normal_vector(rng, d);
        const McEstimate a = mc_ei_s(pg, gp, 2000, 77), b = mc_ei_s(pg, gp, 2000, 77);
        EXPECT_GE(a.estimate, 0.0);
        EXPECT_EQ(a.estimate, b.estimate);
        EXPECT_EQ(a.std_error, b.std_error);
    }
    EXPECT_THROW(mc_ei_s(make_pg(vec({0.0}), vec({1.0})), vec({0.0}), 0, 1), InvalidArgument);
    EXPECT_THROW(mc_ei_s(make_pg(vec({0.0}), vec({-1.0})), vec({0.0}), 1, 1), NonpositiveVariance);
}

TEST(McEiSOrthant, OneDimensionalHalf)
{
    const McEstimate m = mc_ei_s_orthant(make_pg(vec({0.0}), vec({1.0})), vec({0.0}), 1000000, 5);
    EXPECT_LE(std::abs(m.estimate - 0.5), 3.0 * m.std_error);
    EXPECT_NEAR(m.estimate, 0.5, 5e-3);
}

TEST(McEiSOrthant, EmptyOrthantVanishes)
{
    double prev = 1e300;
    for (double gp : {2.0, 5.0, 10.0, 30.0}) {
        const McEstimate m = mc_ei_s_orthant(make_pg(vec({0.0}), vec({1.0})), vec({gp}), 100000, 6);
        EXPECT_LT(m.estimate, prev);
        prev = m.estimate;
    }
    EXPECT_LT(prev, 1e-100);
}

TEST(McEiSOrthant, TwoDimensionalMatchesClosedForm)
{
    CounterRng rng(7);
    for (int t = 0; t < 5; ++t) {
        const PosteriorGradient pg
            = make_pg(2.0 * normal_vector(rng, 2), Vector::NullaryExpr(2, [&] { return rng.uniform(0.1, 4.0); }));
        const Vector gp = 2.0 * normal_vector(rng, 2);
        const McEstimate m = mc_ei_s_orthant(pg, gp, 1000000, 100 + static_cast<std::uint64_t>(t));
        EXPECT_LE(std::abs(m.estimate - ei_s_bar(pg, gp)), 3.0 * m.std_error) << "config " << t;
    }
}

TEST(McEiSOrthant, RareOrthantStillResolved)
{
    // z+ = (3, 3, 3): the orthant has probability ~ 3e-9, so plain sampling
    // would see no hits at this n.
    const PosteriorGradient pg = make_pg(Vector::Zero(3), Vector::Ones(3));
    const Vector gp = Vector::Constant(3, 3.0);
    const McEstimate m = mc_ei_s_orthant(pg, gp, 200000, 8);
    const double want = ei_s_bar(pg, gp);
    EXPECT_GT(m.std_error, 0.0);
    EXPECT_LE(std::abs(m.estimate - want), 3.0 * m.std_error);
    EXPECT_NEAR(m.estimate, want, 0.05 * want);
}

TEST(McEiSOrthant, RejectsZeroVariance)
{
    EXPECT_THROW(mc_ei_s_orthant(make_pg(vec({0.0}), vec({0.0})), vec({0.0}), 10, 1), NonpositiveVariance);
}

TEST(McEiG, AlphaZeroReducesToEi)
{
    const PosteriorGradient pg = make_pg(vec({1.0, -0.5, 0.2}), vec({0.5, 1.0, 2.0}));
    const Incumbent inc = make_incumbent(0.4, vec({0.3, 0.1, -0.2}), 0.0);
    const McEstimate m = mc_ei_g(0.1, 0.9, pg, inc, 0.0, 1000000, 9);
    EXPECT_LE(std::abs(m.estimate - ei(0.1, 0.9, 0.4)), 3.0 * m.std_error);
}

TEST(McEiG, DeterministicWorseCandidateIsZero)
{
    const PosteriorGradient pg = make_pg(vec({1.0, 1.0}), Vector::Zero(2));
    const Incumbent inc = make_incumbent(0.0, vec({0.5, 0.5}), 0.6);
    const McEstimate m = mc_ei_g(-0.2, 0.0, pg, inc, 0.6, 1000, 10);
    EXPECT_EQ(m.estimate, 0.0);
    EXPECT_EQ(m.std_error, 0.0);
}

TEST(McEiG, LowerBoundHoldsOnRandomThreeDimensionalConfig)
{
    CounterRng rng(11);
    for (int t = 0; t < 3; ++t) {
        const PosteriorGradient pg
            = make_pg(normal_vector(rng, 3), Vector::NullaryExpr(3, [&] { return rng.uniform(0.05, 1.0); }));
        const Incumbent inc = make_incumbent(rng.normal(), normal_vector(rng, 3), 0.6);
        const LowerBoundResult r = lower_bound_check(rng.normal(), rng.uniform(0.1, 2.0), pg, inc, 0.6, 200000,
                                                     static_cast<std::uint64_t>(t));
        EXPECT_TRUE(r.holds) << "config " << t << ": ei_g " << r.ei_g.estimate << " bound " << r.bound;
        EXPECT_GE(r.ei_g.estimate, r.bound - 4.0 * r.combined_se);
    }
}

TEST(PositivePart, InequalityHoldsExactly)
{
    CounterRng rng(12);
    for (int i = 0; i < 1000000; ++i) {
        const double scale = std::exp(rng.uniform(-20.0, 20.0));
        const double a = scale * rng.normal(), b = scale * rng.normal();
        ASSERT_GE(std::max(a - b, 0.0), std::max(a, 0.0) - std::max(b, 0.0)) << a << ' ' << b;
    }
}

TEST(EventBound, UnreachableMarginGivesZeroProbability)
{
    const PosteriorGradient pg = make_pg(vec({0.5, 0.5}), vec({0.1, 0.1}));
    const Incumbent inc = make_incumbent(0.0, vec({1.0, 1.0}), 0.6);
    const EventBoundResult r = event_bound_check(0.0, 1.0, pg, inc, 0.6, {10.0, 0.5}, 100000, 13);
    EXPECT_EQ(r.p_event, 0.0);
    EXPECT_EQ(r.rhs_bound, 0.0);
    EXPECT_TRUE(r.holds);
}

TEST(EventBound, DegeneratePosteriorInsideEvent)
{
    // ||grad+||^2 = 5, ||mu||^2 = 4: the norm drops by exactly delta = 1;
    // f drops by alpha c delta / 2.
    const double alpha = 0.6, c = 0.5, delta = 1.0;
    const PosteriorGradient pg = make_pg(vec({2.0, 0.0}), Vector::Zero(2));
    const Incumbent inc = make_incumbent(0.0, vec({1.0, 2.0}), alpha);
    const EventBoundResult r = event_bound_check(-alpha * c * delta / 2.0, 0.0, pg, inc, alpha, {delta, c}, 1000, 14);
    EXPECT_EQ(r.p_event, 1.0);
    EXPECT_GE(r.lhs_ei_g, alpha * (1.0 - c) * delta);
    EXPECT_NEAR(r.lhs_ei_g, 0.45, 1e-12);
    EXPECT_TRUE(r.holds);
}

TEST(EventBound, RejectsBadSpec)
{
    const PosteriorGradient pg = make_pg(vec({0.0}), vec({1.0}));
    const Incumbent inc = make_incumbent(0.0, vec({0.0}), 0.6);
    EXPECT_THROW(event_bound_check(0.0, 1.0, pg, inc, 0.6, {0.0, 0.5}, 10, 1), InvalidArgument);
    EXPECT_THROW(event_bound_check(0.0, 1.0, pg, inc, 0.6, {1.0, 1.0}, 10, 1), InvalidArgument);
}
