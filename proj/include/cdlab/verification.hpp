#pragma once

#include <cdlab/core_model.hpp>
#include <cdlab/operators.hpp>
#include <cdlab/solvers.hpp>

#include <array>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace cdlab {

/// Absolute classification tolerance scaled to the size of the point.
inline double scaled_class_tol(double base, const Vec& x)
{
    return base * (1.0 + x.lpNorm<Eigen::Infinity>());
}

namespace detail {

// Shared search behind find_supersolution / find_subsolution; sign = +1 or -1.
inline Vec find_classified_start(const ProblemSpec& p, std::uint64_t seed, double sign, double tol)
{
    const Index d = p.dim();
    const PointKind want = sign > 0 ? PointKind::Supersolution : PointKind::Subsolution;
    auto accepts = [&](const Vec& x) {
        return x.allFinite() && classify_point(p, x, scaled_class_tol(tol, x)).kind == want;
    };

    for (int e = 0; e <= 40; ++e) {
        const Vec x = Vec::Constant(d, sign * std::ldexp(1.0, e));
        if (accepts(x)) return x;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int r = 0; r < 20; ++r) {
        Vec u(d);
        for (Index j = 0; j < d; ++j) u(j) = 1e-3 + unit(rng);
        u /= u.maxCoeff();
        for (int e = 0; e <= 40; ++e) {
            const Vec x = sign * std::ldexp(1.0, e) * u;
            if (accepts(x)) return x;
        }
    }

    // For M-matrices A^{-1} >= 0, so x = A^{-1} max(-b, 1) is nonnegative with
    // Ax + b >= 0, which makes it a supersolution. Mirror for subsolutions.
    if (const auto* q = p.quadratic()) {
        const Vec rhs = sign > 0 ? Vec((-q->linear()).cwiseMax(1.0)) : Vec(-(q->linear().cwiseMax(1.0)));
        const Vec x = q->hessian().colPivHouseholderQr().solve(rhs);
        if (accepts(x)) return x;
    }
    throw PreconditionError(std::string("no ") + (sign > 0 ? "supersolution" : "subsolution") +
                            " found; regenerate the instance");
}

} // namespace detail

/// A point classified as a supersolution: tries t*1 for t = 1, 2, ..., 2^40,
/// then t*u for 20 seeded positive directions, then (quadratic only)
/// A^{-1} max(-b, 1). Throws PreconditionError when all fail.
inline Vec find_supersolution(const ProblemSpec& p, std::uint64_t seed, double tol = 1e-10)
{
    return detail::find_classified_start(p, seed, 1.0, tol);
}

/// Mirror of find_supersolution with negated candidates.
inline Vec find_subsolution(const ProblemSpec& p, std::uint64_t seed, double tol = 1e-10)
{
    return detail::find_classified_start(p, seed, -1.0, tol);
}

struct ReferenceSolution {
    Vec x_star;
    double f_star = 0.0;
    double residual = 0.0;
    long iterations = 0;
    std::string method;
    /// Infinity-norm gap to the active-set linear solve (quadratics), or -1 when not run.
    double cross_check_gap = -1.0;
};

namespace detail {

inline bool ccm_applicable(const ProblemSpec& p)
{
    if (const auto* q = p.quadratic()) return (q->hessian().diagonal().array() > 0.0).all();
    const Mat& x = p.logistic()->design();
    for (Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).squaredNorm() == 0.0) return false;
    }
    return true;
}

// Solves A_SS x_S = -b_S - lambda sign(x_S) on the support S of x.
inline double active_set_gap(const QuadraticForm& q, double lambda, const Vec& x)
{
    std::vector<Index> support;
    for (Index j = 0; j < x.size(); ++j) {
        if (std::abs(x(j)) > 1e-9) support.push_back(j);
    }
    if (support.empty()) return 0.0;
    const auto s = static_cast<Index>(support.size());
    Mat a(s, s);
    Vec rhs(s);
    for (Index r = 0; r < s; ++r) {
        for (Index c = 0; c < s; ++c) a(r, c) = q.hessian()(support[r], support[c]);
        const double xr = x(support[r]);
        rhs(r) = -q.linear()(support[r]) - lambda * (xr > 0 ? 1.0 : -1.0);
    }
    Eigen::ColPivHouseholderQR<Mat> qr(a);
    if (qr.rank() < s) return -1.0;
    const Vec sol = qr.solve(rhs);
    double gap = 0.0;
    for (Index r = 0; r < s; ++r) gap = std::max(gap, std::abs(sol(r) - x(support[r])));
    return gap;
}

} // namespace detail

/// High-accuracy minimizer of F for rate and ordering checks.
///
/// Runs CCM from 0 (GD when a 1-D section is not strictly convex) for up to
/// 10^6 sweeps with stop residual 1e-12. Throws ConvergenceError when the
/// final residual exceeds 1e-10.
inline ReferenceSolution reference_minimizer(const ProblemSpec& p, long max_sweeps = 1000000)
{
    const bool use_ccm = detail::ccm_applicable(p);
    const Algorithm alg = use_ccm ? Algorithm::CCM : Algorithm::GD;
    const SolveResult res = solve(alg, p, Vec::Zero(p.dim()), max_sweeps, 1e-12);

    ReferenceSolution ref;
    ref.x_star = res.x;
    ref.f_star = objective(p, res.x);
    ref.residual = res.residual;
    ref.iterations = res.iterations;
    ref.method = std::string(to_string(alg)) + (p.quadratic() && use_ccm ? " closed form" : "");
    if (const auto* q = p.quadratic()) ref.cross_check_gap = detail::active_set_gap(*q, p.lambda(), res.x);
    if (!(ref.residual <= 1e-10)) {
        throw ConvergenceError("reference_minimizer: residual " + std::to_string(ref.residual) +
                                   " after " + std::to_string(res.iterations) + " iterations",
                               ref.f_star);
    }
    return ref;
}

struct RateRecord {
    long k = 0;
    double gap = 0.0;   ///< F(x^(k)) - F*
    double bound = 0.0; ///< L ||x* - x0||^2 / (2k)
    bool ok = true;
};

/// F(x^(k)) - F* <= L ||x* - x0||^2 / (2k) + 1e-9 (1 + |F*|) for k = 1..K.
inline std::vector<RateRecord> rate_check(const Trace& trace, const ReferenceSolution& ref, const Vec& x0,
                                          double lipschitz)
{
    const double dist2 = (ref.x_star - x0).squaredNorm();
    const double slack = 1e-9 * (1.0 + std::abs(ref.f_star));
    std::vector<RateRecord> out;
    for (std::size_t k = 1; k < trace.f_values.size(); ++k) {
        RateRecord r;
        r.k = static_cast<long>(k);
        r.gap = trace.f_values[k] - ref.f_star;
        r.bound = lipschitz * dist2 / (2.0 * static_cast<double>(k));
        r.ok = r.gap <= r.bound + slack;
        out.push_back(r);
    }
    return out;
}

/// y a supersolution with y <= x implies F(y) <= F(x); the subsolution
/// mirror takes y >= x. Throws PreconditionError when y is neither or the
/// order does not hold.
inline bool ordering_spotcheck(const ProblemSpec& p, const Vec& y, const Vec& x, double tol = 1e-9)
{
    detail::require_dim(y, p.dim(), "ordering_spotcheck: y");
    detail::require_dim(x, p.dim(), "ordering_spotcheck: x");
    const PointKind kind = classify_point(p, y, scaled_class_tol(1e-10, y)).kind;
    bool ordered = false;
    switch (kind) {
    case PointKind::Supersolution: ordered = (y.array() <= x.array()).all(); break;
    case PointKind::Subsolution: ordered = (y.array() >= x.array()).all(); break;
    case PointKind::Exact: ordered = true; break;
    case PointKind::Neither:
        throw PreconditionError("ordering_spotcheck: y is neither a supersolution nor a subsolution");
    }
    if (!ordered) throw PreconditionError("ordering_spotcheck: y and x are not ordered as required");
    const double fx = objective(p, x);
    return objective(p, y) <= fx + tol * (1.0 + std::abs(fx));
}

struct LipschitzCheck {
    int pairs = 0;
    int violations = 0;
    /// max ||grad f(x) - grad f(x')|| / ||x - x'|| observed
    double max_ratio = 0.0;
};

/// Samples pairs in [-3, 3]^d and tests ||grad f(x) - grad f(x')|| <= L ||x - x'||.
inline LipschitzCheck check_lipschitz(const ProblemSpec& p, int pairs = 100, std::uint64_t seed = 0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-3.0, 3.0);
    const Index d = p.dim();
    LipschitzCheck out;
    out.pairs = pairs;
    for (int s = 0; s < pairs; ++s) {
        Vec x(d);
        Vec xp(d);
        for (Index j = 0; j < d; ++j) {
            x(j) = box(rng);
            xp(j) = box(rng);
        }
        const double dx = (x - xp).norm();
        if (dx == 0.0) continue;
        const double dg = (f_grad(p, x) - f_grad(p, xp)).norm();
        out.max_ratio = std::max(out.max_ratio, dg / dx);
        if (dg > p.lipschitz() * dx) ++out.violations;
    }
    return out;
}

struct IsotonicityVerdict {
    bool isotone = false;
    std::string method;
    std::string detail;
};

/// Quadratic: exact off-diagonal sign test. Otherwise sampled falsifier with
/// zero violations required.
inline IsotonicityVerdict verify_isotonicity(const ProblemSpec& p, int samples = 1000,
                                             std::uint64_t seed = 0)
{
    IsotonicityVerdict v;
    if (const auto* q = p.quadratic()) {
        const auto chk = check_isotonicity_quadratic(q->hessian());
        v.isotone = chk.isotone;
        v.method = "off-diagonal sign";
        v.detail = std::to_string(chk.offending.size()) + " positive off-diagonal pair(s)";
        return v;
    }
    const auto rep = check_isotonicity_sampled(p, samples, seed);
    v.isotone = rep.violations == 0;
    v.method = "sampled";
    v.detail = std::to_string(rep.violations) + " violation(s) in " + std::to_string(rep.samples) + " samples";
    return v;
}

struct TauAudit {
    long updates = 0;
    long range_violations = 0;          ///< tau outside (0, L (1 + 1e-8)]
    long representation_violations = 0; ///< |z_new - S_{lambda/tau}(z_old - g'/tau)| > 1e-8
    long diagonal_violations = 0;       ///< quadratic: |tau - A_jj| > 1e-12
    double max_tau_over_l = 0.0;
    double min_tau = std::numeric_limits<double>::infinity();
    double max_representation_error = 0.0;
    double max_diagonal_error = 0.0;

    bool ok() const noexcept
    {
        return range_violations == 0 && representation_violations == 0 && diagonal_violations == 0;
    }
};

inline TauAudit audit_tau_log(const ProblemSpec& p, const std::vector<TauRecord>& log)
{
    TauAudit a;
    const double l = p.lipschitz();
    const auto* q = p.quadratic();
    for (const auto& r : log) {
        ++a.updates;
        a.min_tau = std::min(a.min_tau, r.tau);
        a.max_tau_over_l = std::max(a.max_tau_over_l, r.tau / l);
        if (!(r.tau > 0.0 && r.tau <= l * kLipschitzInflation)) {
            ++a.range_violations;
            continue;
        }
        const double rep =
            detail::soft_threshold(r.z_old - r.grad_old / r.tau, p.lambda() / r.tau);
        const double err = std::abs(rep - r.z_new);
        a.max_representation_error = std::max(a.max_representation_error, err);
        if (err > 1e-8) ++a.representation_violations;
        if (q) {
            const double derr = std::abs(r.tau - q->hessian()(r.coord, r.coord));
            a.max_diagonal_error = std::max(a.max_diagonal_error, derr);
            if (derr > 1e-12) ++a.diagonal_violations;
        }
    }
    return a;
}

struct ComparisonOptions {
    /// z <= y <= x within dominance_tol * (1 + ||.||_inf)
    double dominance_tol = 1e-8;
    /// F ordering and rate slack, scaled by (1 + |F*|)
    double f_tol = 1e-9;
    /// classification slack tolerance, scaled by (1 + ||x||_inf)
    double class_tol = 1e-10;
    /// F(x^(k)) <= F(x^(k-1)) + descent_tol (1 + |F(x^(k-1))|)
    double descent_tol = 1e-12;
    /// Run even when the isotonicity precondition fails; the verdict is then
    /// reported but not asserted.
    bool report_only = false;
    int isotonicity_samples = 1000;
    std::uint64_t seed = 0;
    bool parallel = true;
};

struct ComparisonRecord {
    long k = 0;
    std::array<double, 3> f{}; ///< F of GD, CCD, CCM iterates
    double bound = 0.0;        ///< F* + L ||x* - x0||^2 / (2k); +inf at k = 0
    bool dominance_ok = true;
    bool f_order_ok = true;
    bool rate_ok = true;
    bool class_ok = true;
    bool descent_ok = true;
    std::array<PointKind, 3> classes{};

    bool ok() const noexcept { return dominance_ok && f_order_ok && rate_ok && class_ok && descent_ok; }
};

struct ComparisonReport {
    Classification start_class;
    bool supersolution_start = true;
    IsotonicityVerdict isotonicity;
    bool report_only = false;
    ComparisonOptions options;
    ReferenceSolution reference;
    /// GD, CCD, CCM in that order.
    std::array<Trace, 3> traces;
    std::vector<ComparisonRecord> per_iteration;
    bool overall = false;
};

/// Runs GD, CCD and CCM for K outer iterations from a common super- or
/// subsolution and checks, at every k, the dominance chain
/// z^(k) <= y^(k) <= x^(k) (reversed for subsolutions), the ordering
/// F(z) <= F(y) <= F(x), the O(1/k) bound on the GD trace, persistence of
/// the start kind, and descent.
///
/// Preconditions (PreconditionError): x0 is not Neither; isotonicity holds
/// unless options.report_only is set.
inline ComparisonReport run_comparison(const ProblemSpec& p, const Vec& x0, long k_max,
                                       const ComparisonOptions& opt = {})
{
    detail::require_dim(x0, p.dim(), "run_comparison");
    if (k_max < 1) throw DomainError("run_comparison: K must be >= 1");

    ComparisonReport rep;
    rep.options = opt;
    rep.start_class = classify_point(p, x0, scaled_class_tol(opt.class_tol, x0));
    if (rep.start_class.kind == PointKind::Neither) {
        throw PreconditionError("start point is neither a supersolution nor a subsolution");
    }
    rep.supersolution_start = rep.start_class.kind != PointKind::Subsolution;
    rep.isotonicity = verify_isotonicity(p, opt.isotonicity_samples, opt.seed);
    if (!rep.isotonicity.isotone) {
        if (!opt.report_only) throw PreconditionError("isotonicity precondition failed");
        rep.report_only = true;
    }
    rep.reference = reference_minimizer(p);

    SolverConfig cfg;
    cfg.max_outer_iters = k_max;
    constexpr std::array<Algorithm, 3> algs{Algorithm::GD, Algorithm::CCD, Algorithm::CCM};
    if (opt.parallel) {
        std::array<std::future<Trace>, 3> fut;
        for (std::size_t a = 0; a < 3; ++a) {
            fut[a] = std::async(std::launch::async, [&, a] { return run(algs[a], p, x0, cfg); });
        }
        for (std::size_t a = 0; a < 3; ++a) rep.traces[a] = fut[a].get();
    } else {
        for (std::size_t a = 0; a < 3; ++a) rep.traces[a] = run(algs[a], p, x0, cfg);
    }

    const auto& gd = rep.traces[0];
    const auto& ccd = rep.traces[1];
    const auto& ccm = rep.traces[2];
    const auto rates = rate_check(gd, rep.reference, x0, p.lipschitz());
    const double ftol = opt.f_tol * (1.0 + std::abs(rep.reference.f_star));
    const double sgn = rep.supersolution_start ? 1.0 : -1.0;
    const PointKind start_kind = rep.supersolution_start ? PointKind::Supersolution : PointKind::Subsolution;

    // a <= b within tolerance after orienting by sgn
    auto below = [&](const Vec& a, const Vec& b) {
        const double t = opt.dominance_tol *
                         (1.0 + std::max(a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>()));
        return ((sgn * (a - b)).array() <= t).all();
    };

    rep.overall = true;
    for (long k = 0; k <= k_max; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        ComparisonRecord r;
        r.k = k;
        const Vec& x = gd.iterates[ks];
        const Vec& y = ccd.iterates[ks];
        const Vec& z = ccm.iterates[ks];
        r.f = {gd.f_values[ks], ccd.f_values[ks], ccm.f_values[ks]};
        r.dominance_ok = below(z, y) && below(y, x);
        r.f_order_ok = r.f[2] <= r.f[1] + ftol && r.f[1] <= r.f[0] + ftol;
        if (k >= 1) {
            const auto& rr = rates[ks - 1];
            r.bound = rep.reference.f_star + rr.bound;
            r.rate_ok = rr.ok;
        } else {
            r.bound = std::numeric_limits<double>::infinity();
        }
        for (std::size_t a = 0; a < 3; ++a) {
            const Vec& it = rep.traces[a].iterates[ks];
            r.classes[a] = classify_point(p, it, scaled_class_tol(opt.class_tol, it)).kind;
            if (r.classes[a] != start_kind && r.classes[a] != PointKind::Exact) r.class_ok = false;
            if (k >= 1) {
                const double prev = rep.traces[a].f_values[ks - 1];
                if (r.f[a] > prev + opt.descent_tol * (1.0 + std::abs(prev))) r.descent_ok = false;
            }
        }
        rep.overall = rep.overall && r.ok();
        rep.per_iteration.push_back(r);
    }
    return rep;
}

} // namespace cdlab
