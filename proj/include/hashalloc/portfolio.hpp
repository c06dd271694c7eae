#pragma once

#include "hashalloc/types.hpp"

namespace hashalloc {

enum class RiskPolicy {
    Strict,    // rho below the minimum-variance risk is an error
    ClampRisk, // rho below the minimum-variance risk is raised to it
};

enum class WeightPolicy {
    AllowShort,   // return the closed-form solution even with negative weights
    ClampWeights, // zero negative components via active-set re-solve
};

struct SolvePolicy {
    RiskPolicy risk = RiskPolicy::Strict;
    WeightPolicy weights = WeightPolicy::AllowShort;
};

/// Policy used by all data pipelines: infeasible risk is clamped to the
/// minimum-variance boundary and allocations are kept in [0, 1].
inline SolvePolicy pipeline_policy() {
    return SolvePolicy{RiskPolicy::ClampRisk, WeightPolicy::ClampWeights};
}

/// Solves MaxProfit: maximize E[w'pi] subject to w'Sigma w = rho, w'e = 1.
///
/// The stationary points of the Lagrangian are
///   w = Sigma^-1 (mu - lambda2 e) / (2 lambda1),  lambda1 = (b - a lambda2)/2,
///   lambda2 = b/a +- sqrt((b^2 - ac)(1 - a rho)) / (a (1 - a rho)),
/// with a = e'Sigma^-1 e, b = e'Sigma^-1 mu, c = mu'Sigma^-1 mu. Both roots
/// are compared and the allocation with the higher expected profit is
/// returned (ties go to the "+" root). Internally the pair is computed on
/// the budget hyperplane (see solve_equality), which is algebraically the
/// same but keeps full precision when Sigma is nearly singular.
///
/// Special cases: mu proportional to e (equivalently b^2 - ac = 0, including
/// c = 0) makes the objective flat on the feasible set; the minimum-variance
/// allocation is returned with flag Degenerate. rho = 1/a is the feasibility
/// boundary and returns the minimum-variance allocation. rho < 1/a raises
/// InfeasibleRisk under the strict policy and clamps to 1/a (flag
/// RiskClamped) otherwise.
SolveOutcome solve_max_profit(const ProfitVector& mu, const VolatilityMatrix& sigma,
                              const RiskTolerance& rho, SolvePolicy policy = SolvePolicy{});

/// Returns Sigma^-1 e / (e'Sigma^-1 e) and its risk 1/a, the smallest variance
/// attainable on the budget hyperplane.
std::pair<Allocation, double> min_variance_allocation(const VolatilityMatrix& sigma);

/// solve_max_profit under the pipeline policy, with one extra fallback: a
/// volatility matrix that is singular even after conditioning (in practice
/// the zero matrix, from a window with no profit variation) yields the
/// uniform allocation, the minimum-variance limit of a vanishing isotropic
/// covariance. Series producers use this so that quiet market stretches do
/// not abort a whole run.
Allocation pipeline_allocation(const ProfitVector& mu, const VolatilityMatrix& sigma, double rho);

/// w' Sigma w, the realized variance of an allocation.
double inferred_risk(const Allocation& w, const VolatilityMatrix& sigma);

/// w' mu.
double expected_profit(const Allocation& w, const ProfitVector& mu);

} // namespace hashalloc
