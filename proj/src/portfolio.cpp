#include "hashalloc/portfolio.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace hashalloc {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kJitterScale = 1e-10;

bool well_conditioned(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return lo > 0.0 && hi <= kConditionLimit * lo;
}

// The problem restricted to the budget hyperplane w'e = 1. Working in the
// (n-1)-dimensional complement of e sidesteps the inversion of sigma itself:
// two-chain volatility matrices are near-singular by construction (the
// profit normalization anti-correlates the components), and the raw
// Lagrangian scalars a, b, c lose all precision in b^2 - ac there, while the
// reduced matrix Q = Z' sigma Z stays well-conditioned.
struct ReducedProblem {
    Eigen::MatrixXd complement; // Z: n x (n-1), orthonormal, Z'e = 0
    Eigen::LDLT<Eigen::MatrixXd> q_ldlt;
    Eigen::VectorXd min_variance; // allocation minimizing w' sigma w on the plane
    double min_risk = 0.0;        // its variance, the feasibility floor 1/a
};

ReducedProblem reduce(const Eigen::MatrixXd& sigma) {
    const Eigen::Index n = sigma.rows();
    Eigen::MatrixXd e_col = Eigen::MatrixXd::Ones(n, 1);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(e_col);
    const Eigen::MatrixXd full = qr.householderQ();

    ReducedProblem reduced;
    reduced.complement = full.rightCols(n - 1);
    const Eigen::MatrixXd& z = reduced.complement;

    Eigen::MatrixXd q = z.transpose() * sigma * z;
    q = 0.5 * (q + q.transpose().eval());
    if (!well_conditioned(q)) {
        const double jitter =
            kJitterScale * std::max(q.diagonal().mean(), sigma.diagonal().mean());
        if (jitter > 0.0) {
            q += jitter * Eigen::MatrixXd::Identity(n - 1, n - 1);
        }
        if (!(jitter > 0.0) || !well_conditioned(q)) {
            throw SingularVolatility("volatility matrix is singular even after conditioning");
        }
    }
    reduced.q_ldlt.compute(q);

    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const Eigen::VectorXd y0 = reduced.q_ldlt.solve(-(z.transpose() * (sigma * uniform)));
    Eigen::VectorXd w_mv = uniform + z * y0;
    w_mv /= w_mv.sum();
    reduced.min_risk = std::max(w_mv.dot(sigma * w_mv), 0.0);
    reduced.min_variance = std::move(w_mv);
    return reduced;
}

struct EqualityResult {
    Eigen::VectorXd w;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double discarded_profit = std::numeric_limits<double>::quiet_NaN();
    SolveFlags flags;
};

// Solves the equality-constrained problem on a full-rank chain set.
// Assumes size >= 2; callers handle the single-chain case directly.
//
// With g = Z'mu and gamma = g'Q^-1 g, the two stationary points are
// w = w_mv +- sqrt((rho - 1/a)/gamma) Z Q^-1 g, the same pair the raw
// Lagrangian form produces: gamma = c - b^2/a, 1/a = min_risk, b/a = mu'w_mv, so
// lambda1 = +-sqrt(gamma/(rho - 1/a))/2 and lambda2 = b/a -+ sqrt(...)/a.
EqualityResult solve_equality(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                              double rho, RiskPolicy risk_policy) {
    const ReducedProblem reduced = reduce(sigma);
    const Eigen::MatrixXd& z = reduced.complement;

    EqualityResult result;
    const double profit_at_mv = mu.dot(reduced.min_variance);

    double rho_eff = rho;
    double slack = rho_eff - reduced.min_risk;
    const double tol = 1e-12 * std::max(1.0, rho_eff);
    if (slack < -tol) {
        if (risk_policy == RiskPolicy::Strict) {
            throw InfeasibleRisk("risk tolerance " + std::to_string(rho_eff) +
                                 " is below the minimum-variance risk " +
                                 std::to_string(reduced.min_risk));
        }
        slack = 0.0;
        result.flags.set(SolveFlag::RiskClamped);
    }

    // Flat objective: mu proportional to e makes every feasible point equally
    // profitable; the raw Lagrangian form would divide by zero through lambda1 = 0.
    const Eigen::VectorXd g = z.transpose() * mu;
    const bool degenerate = g.norm() <= 1e-12 * mu.norm();

    if (degenerate || slack <= tol) {
        if (degenerate) result.flags.set(SolveFlag::Degenerate);
        result.w = reduced.min_variance;
        result.lambda1 = 0.0;
        result.lambda2 = profit_at_mv; // the b/a limit
        return result;
    }

    const Eigen::VectorXd h = reduced.q_ldlt.solve(g);
    const double gamma = g.dot(h);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        result.flags.set(SolveFlag::Degenerate);
        result.w = reduced.min_variance;
        result.lambda1 = 0.0;
        result.lambda2 = profit_at_mv;
        return result;
    }

    const double tau = std::sqrt(slack / gamma);
    const Eigen::VectorXd step = tau * (z * h);
    Eigen::VectorXd w_plus = reduced.min_variance + step;
    const Eigen::VectorXd w_minus = reduced.min_variance - step;
    w_plus /= w_plus.sum();

    const double scale = std::sqrt(gamma / slack);
    result.w = std::move(w_plus);
    result.lambda1 = 0.5 * scale;
    result.lambda2 = profit_at_mv - reduced.min_risk * scale;
    result.discarded_profit = mu.dot(w_minus);
    return result;
}

} // namespace

SolveOutcome solve_max_profit(const ProfitVector& mu, const VolatilityMatrix& sigma,
                              const RiskTolerance& rho, SolvePolicy policy) {
    const Eigen::VectorXd& m = mu.values();
    const Eigen::MatrixXd& s = sigma.entries();
    if (m.size() != s.rows()) {
        throw DimensionMismatch("profit vector and volatility matrix sizes differ");
    }
    if (m.size() < 2) {
        throw DimensionMismatch("MaxProfit requires at least two chains");
    }

    const Eigen::Index n = m.size();
    std::vector<Eigen::Index> support(n);
    for (Eigen::Index i = 0; i < n; ++i) support[i] = i;

    SolveFlags flags;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double discarded = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd w_full = Eigen::VectorXd::Zero(n);
    bool top_level = true;

    for (;;) {
        if (support.size() == 1) {
            w_full.setZero();
            w_full[support[0]] = 1.0;
            break;
        }

        const auto k = static_cast<Eigen::Index>(support.size());
        Eigen::VectorXd mu_k(k);
        Eigen::MatrixXd sigma_k(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            mu_k[i] = m[support[i]];
            for (Eigen::Index j = 0; j < k; ++j) {
                sigma_k(i, j) = s(support[i], support[j]);
            }
        }

        EqualityResult r = solve_equality(mu_k, sigma_k, rho.rho(), policy.risk);
        if (top_level) {
            lambda1 = r.lambda1;
            lambda2 = r.lambda2;
            discarded = r.discarded_profit;
        }
        flags.merge(r.flags);

        std::vector<Eigen::Index> next;
        next.reserve(support.size());
        for (Eigen::Index i = 0; i < k; ++i) {
            if (r.w[i] >= 0.0) next.push_back(support[i]);
        }

        if (policy.weights == WeightPolicy::AllowShort || next.size() == support.size()) {
            w_full.setZero();
            for (Eigen::Index i = 0; i < k; ++i) w_full[support[i]] = r.w[i];
            break;
        }
        if (next.empty()) {
            // Weights sum to 1, so at least one component is positive.
            throw Error(ErrorKind::Internal, "active-set clamp removed every chain");
        }
        flags.set(SolveFlag::WeightsClamped);
        support = std::move(next);
        top_level = false;
    }

    SolveOutcome outcome{Allocation(w_full),
                         w_full.dot(m),
                         w_full.dot(s * w_full),
                         lambda1,
                         lambda2,
                         discarded,
                         flags};
    return outcome;
}

std::pair<Allocation, double> min_variance_allocation(const VolatilityMatrix& sigma) {
    if (sigma.size() < 2) {
        Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
        return {Allocation(std::move(w)), sigma.entries()(0, 0)};
    }
    const ReducedProblem reduced = reduce(sigma.entries());
    return {Allocation(reduced.min_variance), reduced.min_risk};
}

Allocation pipeline_allocation(const ProfitVector& mu, const VolatilityMatrix& sigma,
                               double rho) {
    try {
        // tolerate a rho that rounding pushed a few ulps below zero
        return solve_max_profit(mu, sigma, RiskTolerance(std::max(rho, 0.0)), pipeline_policy())
            .allocation;
    } catch (const SingularVolatility&) {
        const Eigen::Index n = mu.size();
        return Allocation(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
    }
}

double inferred_risk(const Allocation& w, const VolatilityMatrix& sigma) {
    if (w.size() != sigma.size()) {
        throw DimensionMismatch("allocation and volatility matrix sizes differ");
    }
    return w.weights().dot(sigma.entries() * w.weights());
}

double expected_profit(const Allocation& w, const ProfitVector& mu) {
    if (w.size() != mu.size()) {
        throw DimensionMismatch("allocation and profit vector sizes differ");
    }
    return w.weights().dot(mu.values());
}

} // namespace hashalloc
