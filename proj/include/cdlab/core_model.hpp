#pragma once

#include <cdlab/types.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <variant>

namespace cdlab {

/// Every estimated Lipschitz constant is multiplied by this factor so that
/// rounding in the power iteration can never produce an underestimate.
inline constexpr double kLipschitzInflation = 1.0 + 1e-8;

/// Smooth part f(x) = 1/2 <Ax, x> + <b, x>.
///
/// A is symmetrized on construction. Positive semidefiniteness is verified by
/// a symmetric eigensolve for d <= kPsdCheckMaxDim; above that the check is
/// skipped and psd_checked() reports false.
class QuadraticForm {
  public:
    static constexpr Index kPsdCheckMaxDim = 200;

    QuadraticForm(Mat hessian, Vec linear)
        : hessian_(std::move(hessian)), linear_(std::move(linear))
    {
        const Index d = hessian_.rows();
        if (d < 1 || hessian_.cols() != d) {
            throw DimensionError("QuadraticForm: A must be square with d >= 1");
        }
        detail::require_dim(linear_, d, "QuadraticForm: b");
        if (!hessian_.allFinite()) throw DomainError("QuadraticForm: A has non-finite entries");
        detail::require_finite(linear_, "QuadraticForm: b");

        const Mat sym = 0.5 * (hessian_ + hessian_.transpose());
        hessian_ = sym;

        if (d <= kPsdCheckMaxDim) {
            Eigen::SelfAdjointEigenSolver<Mat> es(hessian_, Eigen::EigenvaluesOnly);
            const Vec& ev = es.eigenvalues();
            const double scale = std::max(std::abs(ev(0)), std::abs(ev(d - 1)));
            if (ev(0) < -1e-9 * scale) {
                throw DomainError("QuadraticForm: A is not positive semidefinite (min eigenvalue " +
                                  std::to_string(ev(0)) + ")");
            }
            psd_checked_ = true;
        }
    }

    const Mat& hessian() const noexcept { return hessian_; }
    const Vec& linear() const noexcept { return linear_; }
    Index dim() const noexcept { return hessian_.rows(); }
    bool psd_checked() const noexcept { return psd_checked_; }

  private:
    Mat hessian_;
    Vec linear_;
    bool psd_checked_ = false;
};

/// Data behind the logistic loss f(x) = (1/n) sum_i log(1 + exp(-Y_i <X_i, x>)).
class LogisticData {
  public:
    LogisticData(Mat design, Vec labels) : design_(std::move(design)), labels_(std::move(labels))
    {
        if (design_.rows() < 1 || design_.cols() < 1) {
            throw DimensionError("LogisticData: need n >= 1 and d >= 1");
        }
        detail::require_dim(labels_, design_.rows(), "LogisticData: Y");
        if (!design_.allFinite()) throw DomainError("LogisticData: X has non-finite entries");
        for (Index i = 0; i < labels_.size(); ++i) {
            if (labels_(i) != 1.0 && labels_(i) != -1.0) {
                throw DomainError("LogisticData: labels must be +1 or -1");
            }
        }
    }

    const Mat& design() const noexcept { return design_; }
    const Vec& labels() const noexcept { return labels_; }
    Index samples() const noexcept { return design_.rows(); }
    Index dim() const noexcept { return design_.cols(); }

  private:
    Mat design_;
    Vec labels_;
};

using SmoothPart = std::variant<QuadraticForm, LogisticData>;

inline Index smooth_dim(const SmoothPart& s)
{
    return std::visit([](const auto& v) { return v.dim(); }, s);
}

inline double estimate_lipschitz(const SmoothPart& smooth);

/// F(x) = f(x) + lambda * ||x||_1 together with the Lipschitz constant L of
/// grad f. Immutable once built.
class ProblemSpec {
  public:
    ProblemSpec(SmoothPart smooth, double lambda, double lipschitz)
        : smooth_(std::move(smooth)), lambda_(lambda), lipschitz_(lipschitz)
    {
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
            throw DomainError("ProblemSpec: lambda must be finite and >= 0");
        }
        if (!(lipschitz_ > 0.0) || !std::isfinite(lipschitz_)) {
            throw DomainError("ProblemSpec: lipschitz constant must be finite and > 0");
        }
    }

    /// Estimates L from the smooth part.
    ProblemSpec(SmoothPart smooth, double lambda)
        : ProblemSpec(smooth, lambda, estimate_lipschitz(smooth)) {}

    const SmoothPart& smooth() const noexcept { return smooth_; }
    double lambda() const noexcept { return lambda_; }
    double lipschitz() const noexcept { return lipschitz_; }
    Index dim() const noexcept { return smooth_dim(smooth_); }

    const QuadraticForm* quadratic() const noexcept { return std::get_if<QuadraticForm>(&smooth_); }
    const LogisticData* logistic() const noexcept { return std::get_if<LogisticData>(&smooth_); }

  private:
    SmoothPart smooth_;
    double lambda_;
    double lipschitz_;
};

namespace detail {

// log(1 + exp(t)) without overflow.
inline double softplus(double t)
{
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// 1 / (1 + exp(-t)).
inline double sigmoid(double t)
{
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Per-sample weights w_i = -Y_i sigma(-m_i) / n so that grad f = X^T w.
inline Vec logistic_weights(const LogisticData& data, const Vec& margins)
{
    const auto n = static_cast<double>(data.samples());
    Vec w(data.samples());
    for (Index i = 0; i < w.size(); ++i) {
        w(i) = -data.labels()(i) * sigmoid(-data.labels()(i) * margins(i)) / n;
    }
    return w;
}

} // namespace detail

/// Value of the smooth part only (no l1 term).
inline double f_value(const ProblemSpec& p, const Vec& x)
{
    detail::require_dim(x, p.dim(), "f_value");
    if (const auto* q = p.quadratic()) {
        return 0.5 * x.dot(q->hessian() * x) + q->linear().dot(x);
    }
    const auto& data = *p.logistic();
    const Vec margins = data.design() * x;
    double sum = 0.0;
    for (Index i = 0; i < margins.size(); ++i) {
        sum += detail::softplus(-data.labels()(i) * margins(i));
    }
    return sum / static_cast<double>(data.samples());
}

/// F(x) = f(x) + lambda ||x||_1.
inline double objective(const ProblemSpec& p, const Vec& x)
{
    return f_value(p, x) + p.lambda() * x.lpNorm<1>();
}

/// Entry j (0-based) of grad f. O(d) for quadratics.
inline double f_grad_coord(const ProblemSpec& p, const Vec& x, Index j)
{
    detail::require_dim(x, p.dim(), "f_grad_coord");
    detail::require_index(j, p.dim(), "f_grad_coord");
    if (const auto* q = p.quadratic()) {
        // A is symmetric, so column j is row j and is contiguous in memory.
        return q->hessian().col(j).dot(x) + q->linear()(j);
    }
    const auto& data = *p.logistic();
    const Vec w = detail::logistic_weights(data, data.design() * x);
    return data.design().col(j).dot(w);
}

inline Vec f_grad(const ProblemSpec& p, const Vec& x)
{
    detail::require_dim(x, p.dim(), "f_grad");
    const Index d = p.dim();
    Vec g(d);
    if (const auto* q = p.quadratic()) {
        // Same reduction as f_grad_coord so both agree bit for bit.
        for (Index j = 0; j < d; ++j) g(j) = q->hessian().col(j).dot(x) + q->linear()(j);
        return g;
    }
    const auto& data = *p.logistic();
    const Vec w = detail::logistic_weights(data, data.design() * x);
    for (Index j = 0; j < d; ++j) g(j) = data.design().col(j).dot(w);
    return g;
}

struct PowerIterationResult {
    double eigenvalue = 0.0;
    int iterations = 0;
};

/// Largest eigenvalue of a symmetric PSD operator given by `apply` (v -> Mv).
///
/// The start vector is the normalized all-ones vector plus a small perturbation
/// from a fixed-seed generator, so the result is reproducible and the start is
/// not orthogonal to the top eigenvector in the structured cases (Z-matrices
/// have the all-ones direction close to their *smallest* eigenvector).
/// Converges when the Rayleigh quotient changes by at most rel_tol relative.
template <class Apply>
PowerIterationResult power_iteration(Apply&& apply, Index d, double rel_tol = 1e-10,
                                     int max_iters = 10000, std::uint64_t seed = 42)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    Vec v = Vec::Ones(d);
    for (Index i = 0; i < d; ++i) v(i) += jitter(rng);
    v.normalize();

    double rho = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        const Vec w = apply(v);
        const double next = v.dot(w);
        const double wn = w.norm();
        if (wn == 0.0) return {0.0, it};
        v = w / wn;
        if (it > 2 && std::abs(next - rho) <= rel_tol * std::abs(next)) return {next, it};
        rho = next;
    }
    throw ConvergenceError("power_iteration: no convergence after " + std::to_string(max_iters) +
                               " iterations",
                           rho);
}

/// Lipschitz constant of grad f, inflated by kLipschitzInflation.
/// Quadratic: lambda_max(A). Logistic: sigma_max(X)^2 / (4n).
inline double estimate_lipschitz(const SmoothPart& smooth)
{
    double raw = 0.0;
    if (const auto* q = std::get_if<QuadraticForm>(&smooth)) {
        const Mat& a = q->hessian();
        raw = power_iteration([&](const Vec& v) -> Vec { return a * v; }, q->dim()).eigenvalue;
    } else {
        const auto& data = std::get<LogisticData>(smooth);
        const Mat& x = data.design();
        const double top =
            power_iteration([&](const Vec& v) -> Vec { return x.transpose() * (x * v); }, data.dim())
                .eigenvalue;
        raw = top / (4.0 * static_cast<double>(data.samples()));
    }
    if (!(raw > 0.0)) {
        throw DomainError("estimate_lipschitz: smooth part has zero curvature");
    }
    return raw * kLipschitzInflation;
}

/// Lasso in quadratic form: A = X^T X / n, b = -X^T Y / n.
inline ProblemSpec lasso_build(const Mat& x, const Vec& y, double lambda)
{
    if (x.rows() < 1 || x.cols() < 1) throw DimensionError("lasso_build: empty design matrix");
    detail::require_dim(y, x.rows(), "lasso_build: Y");
    if (!(lambda >= 0.0)) throw DomainError("lasso_build: lambda must be >= 0");
    const auto n = static_cast<double>(x.rows());
    Mat a = x.transpose() * x / n;
    Vec b = -(x.transpose() * y) / n;
    return ProblemSpec(QuadraticForm(std::move(a), std::move(b)), lambda);
}

/// Random quadratic whose Hessian is a positive definite Z-matrix.
///
/// A = c I - N with N symmetric, nonnegative, zero diagonal (each pair present
/// with probability `density`, magnitude U[0,1]) and c = 1.1 rho(N) + 0.1.
/// b ~ U[-1,1]^d, lambda ~ U[0.01, 0.5].
inline ProblemSpec gen_zmatrix_quadratic(Index d, std::uint64_t seed, double density = 0.5)
{
    if (d < 1) throw DomainError("gen_zmatrix_quadratic: d must be >= 1");
    if (!(density >= 0.0 && density <= 1.0)) {
        throw DomainError("gen_zmatrix_quadratic: density must lie in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Mat n = Mat::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
            if (unit(rng) < density) {
                const double v = unit(rng);
                n(i, j) = v;
                n(j, i) = v;
            }
        }
    }
    double rho = 0.0;
    if (d > 1) {
        Eigen::SelfAdjointEigenSolver<Mat> es(n, Eigen::EigenvaluesOnly);
        rho = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    const double c = rho * 1.1 + 0.1;
    Mat a = c * Mat::Identity(d, d) - n;

    Vec b(d);
    for (Index i = 0; i < d; ++i) b(i) = 2.0 * unit(rng) - 1.0;
    const double lambda = 0.01 + 0.49 * unit(rng);
    return ProblemSpec(QuadraticForm(std::move(a), std::move(b)), lambda);
}

/// Random logistic data: X ~ N(0,1)^{n x d}, labels from a random planted
/// direction with 10% label noise.
inline LogisticData gen_logistic_data(Index n, Index d, std::uint64_t seed)
{
    if (n < 1 || d < 1) throw DomainError("gen_logistic_data: need n >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec w(d);
    for (Index j = 0; j < d; ++j) w(j) = normal(rng);
    Mat x(n, d);
    Vec y(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
        double label = x.row(i).dot(w) >= 0.0 ? 1.0 : -1.0;
        if (unit(rng) < 0.1) label = -label;
        y(i) = label;
    }
    return LogisticData(std::move(x), std::move(y));
}

} // namespace cdlab
