#include <cdlab/verification.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cdlab;

namespace {

Vec vec(std::initializer_list<double> v)
{
    Vec out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double a : v) out(i++) = a;
    return out;
}

ProblemSpec shifted_identity(const Vec& c, double lambda)
{
    return ProblemSpec(QuadraticForm(Mat::Identity(c.size(), c.size()), -c), lambda, 1.0);
}

ProblemSpec negative_control()
{
    Mat a(2, 2);
    a << 2, 1, 1, 2;
    return ProblemSpec(QuadraticForm(a, vec({-1, -1})), 0.1);
}

} // namespace

TEST(FindSupersolution, ShiftedIdentity)
{
    const auto p = shifted_identity(vec({1, 2}), 0.3);
    const Vec x = find_supersolution(p, 0);
    EXPECT_EQ(classify_point(p, x).kind, PointKind::Supersolution);
    EXPECT_EQ(classify_point(p, vec({2, 3})).kind, PointKind::Supersolution);
    EXPECT_TRUE((x.array() >= vec({1, 2}).array()).all());

    const Vec s = find_subsolution(shifted_identity(vec({-1, -2}), 0.3), 0);
    EXPECT_EQ(classify_point(shifted_identity(vec({-1, -2}), 0.3), s).kind, PointKind::Subsolution);
    EXPECT_EQ(classify_point(shifted_identity(vec({-1, -2}), 0.3), vec({-2, -3})).kind, PointKind::Subsolution);
}

TEST(FindSupersolution, ScalarAndZMatrix)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(1, 1), Vec::Zero(1)), 1.0, 1.0);
    const Vec x = find_supersolution(p, 0);
    EXPECT_GE(x(0), 0.0);
    EXPECT_EQ(x(0), 1.0);
    EXPECT_EQ(find_subsolution(p, 0)(0), -1.0);

    const auto z = gen_zmatrix_quadratic(5, 3);
    EXPECT_EQ(classify_point(z, find_supersolution(z, 3), 1e-10).kind, PointKind::Supersolution);
    EXPECT_EQ(classify_point(z, find_subsolution(z, 3), 1e-10).kind, PointKind::Subsolution);
}

TEST(FindSupersolution, FallsBackToLinearSolve)
{
    // Row sums of A are negative in the second row, so t*1 never works, while
    // A^{-1} max(-b, 1) does (A is a nonsingular M-matrix).
    Mat a(2, 2);
    a << 10, -3, -3, 1;
    const ProblemSpec p(QuadraticForm(a, vec({0, 0})), 0.01);
    for (int e = 0; e <= 5; ++e) {
        EXPECT_NE(classify_point(p, Vec::Constant(2, std::ldexp(1.0, e))).kind, PointKind::Supersolution);
    }
    const Vec x = find_supersolution(p, 0);
    EXPECT_EQ(classify_point(p, x, scaled_class_tol(1e-10, x)).kind, PointKind::Supersolution);
}

TEST(FindSupersolution, ExhaustionThrows)
{
    // lambda = 0 with minimizer below every candidate direction family fails:
    // f = 1/2 x^2 has every x > 0 as supersolution, so use the degenerate
    // exact-only case instead: F minimized everywhere is impossible, but a
    // problem where every positive point is a subsolution works.
    Mat a(2, 2);
    a << 1, 1, 1, 1; // PSD, positive off-diagonal
    const ProblemSpec p(QuadraticForm(a, vec({-1e13, 1e13})), 0.0, 2.0);
    EXPECT_THROW(find_supersolution(p, 0), PreconditionError);
}

TEST(ReferenceMinimizer, Examples)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(1, 1), Vec::Zero(1)), 1.0, 1.0);
    const auto r = reference_minimizer(p);
    EXPECT_EQ(r.x_star(0), 0.0);
    EXPECT_EQ(r.f_star, 0.0);

    const Mat x = Mat::Ones(2, 1);
    const Vec y = vec({1, 1});
    const auto lasso = reference_minimizer(lasso_build(x, y, 0.5));
    const double grid = oracle::grid_then_refine_1d(
        [&](double w) { return oracle::lasso_objective(x, y, 0.5, vec({w})); }, -3.0, 3.0, 1e-5);
    EXPECT_NEAR(lasso.x_star(0), grid, 1e-8);
    EXPECT_NEAR(lasso.x_star(0), 0.5, 1e-10);

    Mat a(2, 2);
    a << 2, -1, -1, 2;
    const auto r2 = reference_minimizer(ProblemSpec(QuadraticForm(a, vec({-1, -1})), 0.0));
    const Vec lin = a.partialPivLu().solve(vec({1, 1}));
    EXPECT_LE((r2.x_star - lin).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LE((r2.x_star - vec({1, 1})).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LE(r2.residual, 1e-10);
    EXPECT_GE(r2.cross_check_gap, 0.0);
    EXPECT_LE(r2.cross_check_gap, 1e-10);
}

TEST(ReferenceMinimizer, LogisticAndBudget)
{
    const ProblemSpec p(gen_logistic_data(40, 3, 6), 0.05);
    const auto r = reference_minimizer(p);
    EXPECT_LE(r.residual, 1e-10);
    EXPECT_EQ(r.cross_check_gap, -1.0);

    const auto hard = gen_zmatrix_quadratic(10, 1);
    EXPECT_THROW(reference_minimizer(hard, 1), ConvergenceError);
}

TEST(RateCheck, Examples)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(1, 1), Vec::Zero(1)), 0.0, 1.0);
    SolverConfig cfg;
    cfg.max_outer_iters = 4;
    const Trace tr = run(Algorithm::GD, p, vec({1}), cfg);
    const auto ref = reference_minimizer(p);
    const auto rates = rate_check(tr, ref, vec({1}), 1.0);
    ASSERT_EQ(rates.size(), 4u);
    EXPECT_EQ(rates[0].k, 1);
    EXPECT_EQ(rates[0].gap, 0.0);
    EXPECT_DOUBLE_EQ(rates[0].bound, 0.5);
    for (const auto& r : rates) EXPECT_TRUE(r.ok);

    const Trace at_min = run(Algorithm::GD, p, vec({0}), cfg);
    for (const auto& r : rate_check(at_min, ref, vec({0}), 1.0)) EXPECT_TRUE(r.ok);
}

TEST(RateCheck, FlagsAViolation)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(1, 1), Vec::Zero(1)), 0.0, 1.0);
    Trace fake;
    fake.iterates = {vec({1}), vec({1})};
    fake.f_values = {0.5, 0.6};
    fake.residuals = {1, 1};
    const auto rates = rate_check(fake, reference_minimizer(p), vec({1}), 1.0);
    ASSERT_EQ(rates.size(), 1u);
    EXPECT_FALSE(rates[0].ok);
}

TEST(OrderingSpotcheck, Examples)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(1, 1), Vec::Zero(1)), 1.0, 1.0);
    EXPECT_TRUE(ordering_spotcheck(p, vec({1}), vec({2})));
    EXPECT_TRUE(ordering_spotcheck(p, vec({1}), vec({1})));
    EXPECT_TRUE(ordering_spotcheck(p, vec({-1}), vec({-2})));
    EXPECT_THROW(ordering_spotcheck(p, vec({1}), vec({0.5})), PreconditionError);
    const auto q = shifted_identity(vec({1, 1}), 0.1);
    EXPECT_THROW(ordering_spotcheck(q, vec({2, -2}), vec({3, 3})), PreconditionError);
}

TEST(OrderingSpotcheck, RandomTriples)
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 500; ++seed) {
        const auto p = gen_zmatrix_quadratic(2 + static_cast<Index>(seed % 9), seed);
        const Vec y = find_supersolution(p, seed);
        const Vec ys = find_subsolution(p, seed);
        for (int s = 0; s < 25; ++s, ++checked) {
            Vec noise(p.dim());
            for (Index j = 0; j < noise.size(); ++j) noise(j) = unit(rng) < 0.3 ? 0.0 : 3.0 * unit(rng);
            EXPECT_TRUE(ordering_spotcheck(p, y, y + noise));
            EXPECT_TRUE(ordering_spotcheck(p, ys, ys - noise));
        }
    }
}

TEST(RunComparison, OneDimensionAllFlagsTrue)
{
    const auto p = gen_zmatrix_quadratic(1, 4);
    const auto rep = run_comparison(p, find_supersolution(p, 0), 30);
    EXPECT_TRUE(rep.overall);
    EXPECT_EQ(rep.traces[0].iterates, rep.traces[1].iterates);
    EXPECT_EQ(rep.per_iteration.size(), 31u);
}

TEST(RunComparison, DiagonalInstance)
{
    Mat a = Mat::Zero(2, 2);
    a.diagonal() << 1, 2;
    const ProblemSpec p(QuadraticForm(a, vec({-1, -2})), 0.1);
    const Vec x0 = find_supersolution(p, 0);
    const auto rep = run_comparison(p, x0, 50);
    EXPECT_TRUE(rep.overall);
    EXPECT_EQ(rep.traces[0].iterates, rep.traces[1].iterates);
    for (const auto& r : rep.per_iteration) EXPECT_LE(r.f[2], r.f[1] + 1e-12);
    EXPECT_EQ(rep.start_class.kind, PointKind::Supersolution);
}

TEST(RunComparison, MainCertificationD10)
{
    const auto p = gen_zmatrix_quadratic(10, 3);
    ComparisonOptions opt;
    opt.dominance_tol = 1e-8;
    for (bool super : {true, false}) {
        const Vec x0 = super ? find_supersolution(p, 3) : find_subsolution(p, 3);
        const auto rep = run_comparison(p, x0, 100, opt);
        EXPECT_TRUE(rep.overall) << (super ? "super" : "sub");
        EXPECT_EQ(rep.supersolution_start, super);
        const auto rates = rate_check(rep.traces[0], rep.reference, x0, p.lipschitz());
        for (const auto& r : rates) EXPECT_TRUE(r.ok) << r.k;
    }
}

TEST(RunComparison, SerialAndParallelAgree)
{
    const auto p = gen_zmatrix_quadratic(7, 12);
    const Vec x0 = find_supersolution(p, 1);
    ComparisonOptions serial;
    serial.parallel = false;
    const auto a = run_comparison(p, x0, 40);
    const auto b = run_comparison(p, x0, 40, serial);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.traces[i].iterates, b.traces[i].iterates);
}

TEST(RunComparison, Preconditions)
{
    const auto q = shifted_identity(vec({1, 1}), 0.1);
    EXPECT_THROW(run_comparison(q, vec({2, -2}), 10), PreconditionError);

    const auto neg = negative_control();
    EXPECT_FALSE(check_isotonicity_quadratic(neg.quadratic()->hessian()).isotone);
    const Vec x0 = find_supersolution(neg, 0);
    try {
        run_comparison(neg, x0, 10);
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_STREQ(e.what(), "isotonicity precondition failed");
    }
}

TEST(RunComparison, ReportOnlyOnNegativeControl)
{
    const auto neg = negative_control();
    ComparisonOptions opt;
    opt.report_only = true;
    const auto rep = run_comparison(neg, find_supersolution(neg, 0), 50, opt);
    EXPECT_TRUE(rep.report_only);
    EXPECT_FALSE(rep.isotonicity.isotone);
    EXPECT_EQ(rep.per_iteration.size(), 51u);
}

TEST(RunComparison, LogisticUsesSampledIsotonicity)
{
    // With one feature the map is scalar and always isotone.
    const ProblemSpec p(gen_logistic_data(30, 1, 3), 0.05);
    const Vec x0 = find_supersolution(p, 0);
    const auto rep = run_comparison(p, x0, 40);
    EXPECT_EQ(rep.isotonicity.method, "sampled");
    EXPECT_TRUE(rep.isotonicity.isotone);
    EXPECT_TRUE(rep.overall);
}

TEST(AuditTauLog, QuadraticTauIsDiagonal)
{
    const auto p = gen_zmatrix_quadratic(8, 5);
    SolverConfig cfg;
    cfg.max_outer_iters = 100;
    const Trace tr = run(Algorithm::CCM, p, find_supersolution(p, 5), cfg);
    ASSERT_FALSE(tr.tau_log.empty());
    const auto audit = audit_tau_log(p, tr.tau_log);
    EXPECT_TRUE(audit.ok());
    EXPECT_LE(audit.max_diagonal_error, 1e-12);

    std::vector<TauRecord> bad = {TauRecord{0, 0, 2.0 * p.lipschitz(), 0.0, 1.0, 0.0}};
    EXPECT_EQ(audit_tau_log(p, bad).range_violations, 1);
}

TEST(CheckLipschitz, DetectsUnderestimate)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(3, 3) * 4.0, Vec::Zero(3)), 0.0, 1.0);
    EXPECT_GT(check_lipschitz(p, 50, 0).violations, 0);
}
