#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hashalloc/errors.hpp"

namespace hashalloc {

using Timestamp = std::int64_t; // unix seconds, UTC
constexpr Timestamp kSecondsPerHour = 3600;

/// Normalized per-chain mining profit, the pi vector. Values are
/// dimensionless: fiat reward over difficulty, rescaled so that the
/// difficulty-weighted sum equals the total difficulty.
class ProfitVector {
public:
    explicit ProfitVector(Eigen::VectorXd values);

    const Eigen::VectorXd& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }

private:
    Eigen::VectorXd values_;
};

/// Covariance of cooldown-lagged profit differences. Symmetric PSD up to
/// rounding; construction enforces symmetry within 1e-12 absolute and
/// eigenvalues >= -1e-10 * trace.
class VolatilityMatrix {
public:
    explicit VolatilityMatrix(Eigen::MatrixXd entries);

    const Eigen::MatrixXd& entries() const { return entries_; }
    Eigen::Index size() const { return entries_.rows(); }

private:
    Eigen::MatrixXd entries_;
};

/// A hash-rate weight vector over chains; components sum to 1 within 1e-12.
/// Components may be negative under the unclamped (allow_short) solve policy.
class Allocation {
public:
    explicit Allocation(Eigen::VectorXd weights);

    const Eigen::VectorXd& weights() const { return weights_; }
    Eigen::Index size() const { return weights_.size(); }
    double operator[](Eigen::Index i) const { return weights_[i]; }

private:
    Eigen::VectorXd weights_;
};

/// Maximum allowed portfolio variance w' Sigma w. Units are squared
/// normalized profit; root_risk() is in summed-fiat-price units.
class RiskTolerance {
public:
    explicit RiskTolerance(double rho);

    double rho() const { return rho_; }
    double root_risk() const;

private:
    double rho_;
};

enum class SolveFlag : unsigned {
    Degenerate = 1u << 0,     // flat objective, min-variance tie-break applied
    RiskClamped = 1u << 1,    // rho raised to the minimum-variance risk
    WeightsClamped = 1u << 2, // negative components zeroed by active-set re-solve
};

class SolveFlags {
public:
    SolveFlags() = default;

    void set(SolveFlag f) { bits_ |= static_cast<unsigned>(f); }
    bool has(SolveFlag f) const { return (bits_ & static_cast<unsigned>(f)) != 0; }
    bool empty() const { return bits_ == 0; }
    void merge(SolveFlags other) { bits_ |= other.bits_; }

private:
    unsigned bits_ = 0;
};

/// Result of one MaxProfit solve, including the Lagrangian intermediates.
struct SolveOutcome {
    Allocation allocation;
    double expected_profit = 0.0;
    double achieved_risk = 0.0; // w' Sigma w of the returned vector, recomputed
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    // Expected profit of the lambda2 root that was not returned; NaN when the
    // solve never branched (degenerate or boundary cases).
    double discarded_expected_profit = 0.0;
    SolveFlags flags;
};

enum class DaaKind { PerBlockWindow, Epoch };

/// Static description of one proof-of-work chain.
struct ChainSpec {
    std::string chain_id;
    double target_ibt_s = 600.0;
    double coinbase_subsidy = 12.5;
    int cooldown_hours = 16; // floor(101 / 6), the 101-block coinbase maturity
    DaaKind daa_kind = DaaKind::PerBlockWindow;
};

void validate_chain_spec(const ChainSpec& spec);

} // namespace hashalloc
