#pragma once

#include <cdlab/core_model.hpp>

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace cdlab {

namespace detail {

// Soft threshold allowing t == 0 (identity). Public entry points validate t > 0.
inline double soft_threshold(double a, double t) noexcept
{
    if (a > t) return a - t;
    if (a < -t) return a + t;
    return 0.0;
}

inline Vec soft_threshold(const Vec& x, double t)
{
    return x.unaryExpr([t](double a) { return soft_threshold(a, t); });
}

} // namespace detail

/// S_tau(a): a - tau above tau, a + tau below -tau, zero on [-tau, tau].
inline double scalar_shrink(double a, double tau)
{
    if (!(tau > 0.0)) throw DomainError("scalar_shrink: tau must be > 0");
    return detail::soft_threshold(a, tau);
}

inline Vec vector_shrink(const Vec& x, double tau)
{
    if (!(tau > 0.0)) throw DomainError("vector_shrink: tau must be > 0");
    return detail::soft_threshold(x, tau);
}

/// T_GD(x) = S_{lambda/L}(x - grad f(x) / L).
inline Vec tgd_apply(const ProblemSpec& p, const Vec& x)
{
    detail::require_dim(x, p.dim(), "tgd_apply");
    const double l = p.lipschitz();
    return detail::soft_threshold(x - f_grad(p, x) / l, p.lambda() / l);
}

/// ||x - T_GD(x)||_inf. Zero exactly at minimizers of F.
inline double optimality_residual(const ProblemSpec& p, const Vec& x)
{
    return (x - tgd_apply(p, x)).lpNorm<Eigen::Infinity>();
}

enum class PointKind { Supersolution, Subsolution, Exact, Neither };

inline std::string_view to_string(PointKind k) noexcept
{
    switch (k) {
    case PointKind::Supersolution: return "supersolution";
    case PointKind::Subsolution: return "subsolution";
    case PointKind::Exact: return "exact";
    case PointKind::Neither: return "neither";
    }
    return "neither";
}

struct Classification {
    PointKind kind = PointKind::Neither;
    /// slack_j = x_j - S_{lambda/tau}(x_j - [grad f(x)]_j / tau)
    Vec slack;
    double tol = 0.0;
    double tau = 1.0;
};

/// Kind implied by a slack vector: all |slack| <= tol is Exact; otherwise
/// Supersolution when no slack is below -tol, Subsolution when none is above tol.
inline PointKind kind_from_slack(const Vec& slack, double tol) noexcept
{
    bool any_pos = false;
    bool any_neg = false;
    for (Index j = 0; j < slack.size(); ++j) {
        if (slack(j) > tol) any_pos = true;
        if (slack(j) < -tol) any_neg = true;
    }
    if (!any_pos && !any_neg) return PointKind::Exact;
    if (any_pos && !any_neg) return PointKind::Supersolution;
    if (any_neg && !any_pos) return PointKind::Subsolution;
    return PointKind::Neither;
}

/// Classification against x >= S_{lambda/tau}(x - grad f(x)/tau) and its mirror.
inline Classification classify_at_scale(const ProblemSpec& p, const Vec& x, double tau, double tol)
{
    detail::require_dim(x, p.dim(), "classify");
    if (!(tau > 0.0)) throw DomainError("classify: tau must be > 0");
    if (!(tol >= 0.0)) throw DomainError("classify: tol must be >= 0");
    Classification c;
    c.slack = x - detail::soft_threshold(x - f_grad(p, x) / tau, p.lambda() / tau);
    c.kind = kind_from_slack(c.slack, tol);
    c.tol = tol;
    c.tau = tau;
    return c;
}

/// The canonical classification at tau = 1.
inline Classification classify_point(const ProblemSpec& p, const Vec& x, double tol = 1e-10)
{
    return classify_at_scale(p, x, 1.0, tol);
}

inline std::vector<Classification> classify_scale_sweep(const ProblemSpec& p, const Vec& x,
                                                        const std::vector<double>& taus,
                                                        double tol = 1e-10)
{
    std::vector<Classification> out;
    out.reserve(taus.size());
    for (double tau : taus) out.push_back(classify_at_scale(p, x, tau, tol));
    return out;
}

/// n points log-spaced on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int n)
{
    if (!(lo > 0.0 && hi >= lo) || n < 1) throw DomainError("log_grid: need 0 < lo <= hi, n >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / (n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + step * i);
    out.back() = hi;
    return out;
}

/// tau -> S_{lambda/tau}(x_j - [grad f(x)]_j / tau) on an ascending grid.
///
/// Throws PreconditionError unless x classifies (at tau = 1) as a
/// supersolution, subsolution or exact point.
inline std::vector<double> shrink_tau_curve(const ProblemSpec& p, const Vec& x, Index j,
                                            const std::vector<double>& taus, double tol = 1e-10)
{
    detail::require_index(j, p.dim(), "shrink_tau_curve");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0)) throw DomainError("shrink_tau_curve: taus must be > 0");
        if (i > 0 && taus[i] < taus[i - 1]) throw DomainError("shrink_tau_curve: taus must ascend");
    }
    if (classify_point(p, x, tol).kind == PointKind::Neither) {
        throw PreconditionError("shrink_tau_curve: point is neither a supersolution nor a subsolution");
    }
    const double gj = f_grad_coord(p, x, j);
    std::vector<double> out;
    out.reserve(taus.size());
    for (double tau : taus) out.push_back(detail::soft_threshold(x(j) - gj / tau, p.lambda() / tau));
    return out;
}

struct IsotonicityCheck {
    bool isotone = true;
    /// Offending (i, j) pairs with i < j, 0-based.
    std::vector<std::pair<Index, Index>> offending;
};

/// For quadratic f, x -> x - grad f(x)/L is isotone iff A has no positive
/// off-diagonal entries.
inline IsotonicityCheck check_isotonicity_quadratic(const Mat& a)
{
    if (a.rows() != a.cols()) throw DimensionError("check_isotonicity_quadratic: A must be square");
    IsotonicityCheck out;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = i + 1; j < a.cols(); ++j) {
            if (a(i, j) > 1e-14 || a(j, i) > 1e-14) out.offending.emplace_back(i, j);
        }
    }
    out.isotone = out.offending.empty();
    return out;
}

struct SampledIsotonicityReport {
    int samples = 0;
    int violations = 0;
    /// Most negative component of (I - grad f/L)(x) - (I - grad f/L)(y) seen.
    double worst_gap = 0.0;
    /// First violating pair, if any.
    Vec violating_x;
    Vec violating_y;
};

/// Monte-Carlo falsifier for isotonicity of x -> x - grad f(x)/L.
///
/// Draws y ~ U[-2, 2]^d and x = y + delta, where each delta_j is zero with
/// probability 1/2 and U[0, 1] otherwise. Zero violations is evidence only.
inline SampledIsotonicityReport check_isotonicity_sampled(const ProblemSpec& p, int samples,
                                                          std::uint64_t seed, double tol = 1e-10)
{
    if (samples < 1) throw DomainError("check_isotonicity_sampled: samples must be >= 1");
    const Index d = p.dim();
    const double l = p.lipschitz();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SampledIsotonicityReport rep;
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Vec y(d);
        Vec x(d);
        for (Index j = 0; j < d; ++j) {
            y(j) = box(rng);
            const double delta = unit(rng) < 0.5 ? 0.0 : unit(rng);
            x(j) = y(j) + delta;
        }
        const Vec gap = (x - f_grad(p, x) / l) - (y - f_grad(p, y) / l);
        const double worst = gap.minCoeff();
        rep.worst_gap = std::min(rep.worst_gap, worst);
        if (worst < -tol) {
            if (rep.violations == 0) {
                rep.violating_x = x;
                rep.violating_y = y;
            }
            ++rep.violations;
        }
    }
    return rep;
}

} // namespace cdlab
