#pragma once

#include <cdlab/core_model.hpp>
#include <cdlab/operators.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdlab {

enum class Algorithm { GD, CCD, CCM };

inline std::string_view to_string(Algorithm a) noexcept
{
    switch (a) {
    case Algorithm::GD: return "gd";
    case Algorithm::CCD: return "ccd";
    case Algorithm::CCM: return "ccm";
    }
    return "gd";
}

inline Algorithm parse_algorithm(std::string_view s)
{
    if (s == "gd" || s == "GD") return Algorithm::GD;
    if (s == "ccd" || s == "CCD") return Algorithm::CCD;
    if (s == "ccm" || s == "CCM") return Algorithm::CCM;
    throw DomainError("unknown algorithm '" + std::string(s) + "'");
}

struct SolverConfig {
    long max_outer_iters = 100;
    /// Stop once the infinity-norm optimality residual drops to this value.
    /// Zero disables early stopping.
    double stop_residual = 0.0;
    bool record_inner = false;
    double inner_1d_tol = 1e-12;
    int inner_1d_max_iters = 200;
};

/// One non-trivial CCM coordinate update and the difference quotient
/// tau = (g'(z_new) - g'(z_old)) / (z_new - z_old) of its 1-D section g.
struct TauRecord {
    long sweep = 0; ///< outer index k of the sweep that made the update (0-based)
    Index coord = 0;
    double tau = 0.0;
    double z_old = 0.0;
    double z_new = 0.0;
    double grad_old = 0.0; ///< g'(z_old) = [grad f(z^(k,j-1))]_j
};

struct Trace {
    Algorithm algorithm = Algorithm::GD;
    std::vector<Vec> iterates;
    std::vector<double> f_values;
    std::vector<double> residuals;
    /// inner[k] holds y^(k,0..d) for sweep k, when recorded.
    std::vector<std::vector<Vec>> inner;
    std::vector<TauRecord> tau_log;

    long outer_iterations() const noexcept { return static_cast<long>(iterates.size()) - 1; }
};

/// Updates with |z_new - z_old| <= kTrivialUpdateRel * (1 + |z_old|) are not
/// logged with a tau.
inline constexpr double kTrivialUpdateRel = 1e-13;

/// Derivative of a 1-D quadratic section, g'(a) = value + slope * (a - anchor).
/// Differences are evaluated as slope * (a - b), free of cancellation.
struct AffineDerivative {
    double slope;
    double anchor;
    double value;

    double operator()(double a) const noexcept { return value + slope * (a - anchor); }
    double difference(double a, double b) const noexcept { return slope * (a - b); }
};

/// Difference quotient of g' across a non-trivial 1-D update. Derivative
/// objects exposing difference(a, b) have the numerator taken from it.
template <class Deriv>
double ccm_tau(const Deriv& g_deriv, double z_old, double z_new)
{
    if (z_new == z_old) throw PreconditionError("ccm_tau: trivial update (z_new == z_old)");
    double num = 0.0;
    if constexpr (requires { g_deriv.difference(z_new, z_old); }) {
        num = g_deriv.difference(z_new, z_old);
    } else {
        num = g_deriv(z_new) - g_deriv(z_old);
    }
    return num / (z_new - z_old);
}

/// argmin_a g(a) + lambda |a| for strictly convex g with derivative g_deriv.
///
/// If |g'(0)| <= lambda the minimizer is 0. Otherwise the sign of g'(0)
/// decides the side: the root of g'(a) + lambda lies right of 0 when
/// g'(0) < -lambda, the root of g'(a) - lambda left of 0 when g'(0) > lambda.
/// The root is bracketed by doubling from |a| = 1 and then bisected until the
/// bracket width is at most tol * max(1, |a|).
template <class Value, class Deriv>
double solve_1d_prox(const Value& g_value, const Deriv& g_deriv, double lambda, double tol = 1e-12,
                     int max_iters = 200)
{
    if (!(lambda >= 0.0)) throw DomainError("solve_1d_prox: lambda must be >= 0");
    if (!(tol > 0.0)) throw DomainError("solve_1d_prox: tol must be > 0");
    const double d0 = g_deriv(0.0);
    if (!std::isfinite(d0)) throw NumericError("solve_1d_prox: g'(0) is not finite", 0);
    if (std::abs(d0) <= lambda) return 0.0;

    const double side = d0 < -lambda ? 1.0 : -1.0;
    // phi(t) = side * (g'(side t) + side lambda) is increasing with phi(0) < 0.
    auto phi = [&](double t) { return side * g_deriv(side * t) + lambda; };

    double lo = 0.0;
    double hi = 1.0;
    for (int doublings = 0; phi(hi) < 0.0; ++doublings) {
        if (doublings >= 60) {
            throw ConvergenceError("solve_1d_prox: no bracket after 60 doublings; "
                                   "g + lambda|.| looks unbounded below",
                                   side * hi);
        }
        lo = hi;
        hi *= 2.0;
    }

    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        if (hi - lo <= tol * std::max(1.0, hi)) {
            converged = true;
            break;
        }
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            converged = true;
            break;
        }
        (phi(mid) < 0.0 ? lo : hi) = mid;
    }
    const double mid = 0.5 * (lo + hi);
    if (!converged) {
        throw ConvergenceError("solve_1d_prox: bisection did not reach tol within " +
                                   std::to_string(max_iters) + " iterations (bracket [" +
                                   std::to_string(side * lo) + ", " + std::to_string(side * hi) + "])",
                               side * mid);
    }

    double best = side * mid;
    double best_val = g_value(best) + lambda * std::abs(best);
    for (double t : {lo, hi}) {
        const double a = side * t;
        const double v = g_value(a) + lambda * std::abs(a);
        if (v < best_val) {
            best = a;
            best_val = v;
        }
    }
    return best;
}

namespace detail {

// Coordinate sections of the logistic loss around a point, kept in sync
// through cached margins m = X x.
class LogisticSections {
  public:
    LogisticSections(const LogisticData& data, const Vec& x)
        : data_(data), margins_(data.design() * x) {}

    // g'(x_j + shift)
    double deriv(Index j, double shift) const
    {
        const auto col = data_.design().col(j);
        const Vec& y = data_.labels();
        double s = 0.0;
        for (Index i = 0; i < col.size(); ++i) {
            s -= y(i) * col(i) * sigmoid(-y(i) * (margins_(i) + shift * col(i)));
        }
        return s / static_cast<double>(data_.samples());
    }

    // g(x_j + shift) up to a constant
    double value(Index j, double shift) const
    {
        const auto col = data_.design().col(j);
        const Vec& y = data_.labels();
        double s = 0.0;
        for (Index i = 0; i < col.size(); ++i) {
            s += softplus(-y(i) * (margins_(i) + shift * col(i)));
        }
        return s / static_cast<double>(data_.samples());
    }

    void move(Index j, double shift) { margins_ += shift * data_.design().col(j); }

  private:
    const LogisticData& data_;
    Vec margins_;
};

inline bool is_trivial_update(double z_old, double z_new) noexcept
{
    return std::abs(z_new - z_old) <= kTrivialUpdateRel * (1.0 + std::abs(z_old));
}

} // namespace detail

/// One GD step, x -> T_GD(x).
inline Vec gd_step(const ProblemSpec& p, const Vec& x)
{
    return tgd_apply(p, x);
}

struct SweepResult {
    Vec next;
    /// y^(k,0..d) when requested
    std::vector<Vec> inner;
    /// CCM only
    std::vector<TauRecord> taus;
};

/// One cyclic pass of coordinate proximal-gradient steps with step 1/L,
/// each using the gradient at the partially updated point.
inline SweepResult ccd_sweep(const ProblemSpec& p, const Vec& y, bool record_inner = false)
{
    detail::require_dim(y, p.dim(), "ccd_sweep");
    const Index d = p.dim();
    const double l = p.lipschitz();
    const double thr = p.lambda() / l;

    SweepResult out;
    out.next = y;
    Vec& cur = out.next;
    if (record_inner) out.inner.push_back(cur);

    if (const auto* q = p.quadratic()) {
        for (Index j = 0; j < d; ++j) {
            const double gj = q->hessian().col(j).dot(cur) + q->linear()(j);
            cur(j) = detail::soft_threshold(cur(j) - gj / l, thr);
            if (record_inner) out.inner.push_back(cur);
        }
        return out;
    }
    detail::LogisticSections sec(*p.logistic(), cur);
    for (Index j = 0; j < d; ++j) {
        const double gj = sec.deriv(j, 0.0);
        const double next = detail::soft_threshold(cur(j) - gj / l, thr);
        sec.move(j, next - cur(j));
        cur(j) = next;
        if (record_inner) out.inner.push_back(cur);
    }
    return out;
}

/// One cyclic pass of exact coordinate minimization of F.
///
/// Quadratic f uses z_j <- S_{lambda/A_jj}(z_j - [Az + b]_j / A_jj); other
/// smooth parts minimize the 1-D section with solve_1d_prox. Every non-trivial
/// update is logged with its difference-quotient tau; `sweep` tags the log.
inline SweepResult ccm_sweep(const ProblemSpec& p, const Vec& z, const SolverConfig& cfg = {},
                             long sweep = 0)
{
    detail::require_dim(z, p.dim(), "ccm_sweep");
    const Index d = p.dim();
    const double lambda = p.lambda();

    SweepResult out;
    out.next = z;
    Vec& cur = out.next;
    if (cfg.record_inner) out.inner.push_back(cur);

    auto log_tau = [&](Index j, double z_old, double z_new, double grad_old, double tau) {
        out.taus.push_back(TauRecord{sweep, j, tau, z_old, z_new, grad_old});
    };

    if (const auto* q = p.quadratic()) {
        const Mat& a = q->hessian();
        for (Index j = 0; j < d; ++j) {
            if (!(a(j, j) > 0.0)) {
                throw StrictConvexityError("ccm_sweep: A(" + std::to_string(j) + "," +
                                           std::to_string(j) + ") <= 0, 1-D section not strictly convex");
            }
        }
        for (Index j = 0; j < d; ++j) {
            const double ajj = a(j, j);
            const double gj = a.col(j).dot(cur) + q->linear()(j);
            const double z_old = cur(j);
            const double z_new = detail::soft_threshold(z_old - gj / ajj, lambda / ajj);
            if (!detail::is_trivial_update(z_old, z_new)) {
                log_tau(j, z_old, z_new, gj, ccm_tau(AffineDerivative{ajj, z_old, gj}, z_old, z_new));
            }
            cur(j) = z_new;
            if (cfg.record_inner) out.inner.push_back(cur);
        }
        return out;
    }

    const auto& data = *p.logistic();
    for (Index j = 0; j < d; ++j) {
        if (data.design().col(j).squaredNorm() == 0.0) {
            throw StrictConvexityError("ccm_sweep: column " + std::to_string(j) +
                                       " of X is zero, 1-D section not strictly convex");
        }
    }
    detail::LogisticSections sec(data, cur);
    for (Index j = 0; j < d; ++j) {
        const double z_old = cur(j);
        auto g_deriv = [&](double alpha) { return sec.deriv(j, alpha - z_old); };
        auto g_value = [&](double alpha) { return sec.value(j, alpha - z_old); };
        const double z_new = solve_1d_prox(g_value, g_deriv, lambda, cfg.inner_1d_tol,
                                           cfg.inner_1d_max_iters);
        if (!detail::is_trivial_update(z_old, z_new)) {
            log_tau(j, z_old, z_new, g_deriv(z_old), ccm_tau(g_deriv, z_old, z_new));
        }
        sec.move(j, z_new - z_old);
        cur(j) = z_new;
        if (cfg.record_inner) out.inner.push_back(cur);
    }
    return out;
}

/// Iterates one algorithm from x0, recording x^(k), F(x^(k)) and the
/// optimality residual for k = 0..K.
inline Trace run(Algorithm alg, const ProblemSpec& p, const Vec& x0, const SolverConfig& cfg = {})
{
    detail::require_dim(x0, p.dim(), "run");
    detail::require_finite(x0, "run: x0");
    if (cfg.max_outer_iters < 1) throw DomainError("run: max_outer_iters must be >= 1");

    Trace tr;
    tr.algorithm = alg;
    auto record = [&](const Vec& x) {
        tr.iterates.push_back(x);
        tr.f_values.push_back(objective(p, x));
        tr.residuals.push_back(optimality_residual(p, x));
    };
    record(x0);

    Vec x = x0;
    for (long k = 0; k < cfg.max_outer_iters; ++k) {
        SweepResult step;
        switch (alg) {
        case Algorithm::GD:
            step.next = gd_step(p, x);
            if (cfg.record_inner) step.inner = {x, step.next};
            break;
        case Algorithm::CCD: step = ccd_sweep(p, x, cfg.record_inner); break;
        case Algorithm::CCM: step = ccm_sweep(p, x, cfg, k); break;
        }
        if (!step.next.allFinite()) {
            throw NumericError(std::string(to_string(alg)) + ": non-finite iterate at iteration " +
                                   std::to_string(k + 1),
                               k + 1);
        }
        x = std::move(step.next);
        record(x);
        if (cfg.record_inner) tr.inner.push_back(std::move(step.inner));
        tr.tau_log.insert(tr.tau_log.end(), step.taus.begin(), step.taus.end());
        if (cfg.stop_residual > 0.0 && tr.residuals.back() <= cfg.stop_residual) break;
    }
    return tr;
}

/// Final point of an algorithm run without keeping a trace.
struct SolveResult {
    Vec x;
    long iterations = 0;
    double residual = 0.0;
};

inline SolveResult solve(Algorithm alg, const ProblemSpec& p, const Vec& x0, long max_iters,
                         double stop_residual, const SolverConfig& cfg = {})
{
    detail::require_dim(x0, p.dim(), "solve");
    SolveResult out{x0, 0, optimality_residual(p, x0)};
    while (out.iterations < max_iters && out.residual > stop_residual) {
        switch (alg) {
        case Algorithm::GD: out.x = gd_step(p, out.x); break;
        case Algorithm::CCD: out.x = ccd_sweep(p, out.x).next; break;
        case Algorithm::CCM: out.x = ccm_sweep(p, out.x, cfg, out.iterations).next; break;
        }
        ++out.iterations;
        if (!out.x.allFinite()) {
            throw NumericError("solve: non-finite iterate at iteration " + std::to_string(out.iterations),
                               out.iterations);
        }
        out.residual = optimality_residual(p, out.x);
    }
    return out;
}

/// F(x^(k+1)) <= F(x^(k)) + rel_tol * (1 + |F(x^(k))|) for every k.
/// Returns the first offending k + 1, or nullopt.
inline std::optional<long> first_ascent(const Trace& tr, double rel_tol = 1e-12)
{
    for (std::size_t k = 1; k < tr.f_values.size(); ++k) {
        const double prev = tr.f_values[k - 1];
        if (tr.f_values[k] > prev + rel_tol * (1.0 + std::abs(prev))) return static_cast<long>(k);
    }
    return std::nullopt;
}

} // namespace cdlab
