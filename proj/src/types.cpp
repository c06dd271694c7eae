#include "hashalloc/types.hpp"

#include <cmath>

namespace hashalloc {

ProfitVector::ProfitVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) {
        throw Error(ErrorKind::Validation, "profit vector must have at least one chain");
    }
    if (!values_.allFinite()) {
        throw NonFiniteInput("profit vector contains non-finite values");
    }
}

VolatilityMatrix::VolatilityMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
        throw DimensionMismatch("volatility matrix must be square and non-empty");
    }
    if (!entries_.allFinite()) {
        throw NonFiniteInput("volatility matrix contains non-finite values");
    }
    const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
        throw Error(ErrorKind::Validation, "volatility matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_, Eigen::EigenvaluesOnly);
    const double floor = -1e-10 * entries_.trace();
    if (es.eigenvalues().minCoeff() < std::min(floor, 0.0)) {
        throw Error(ErrorKind::Validation, "volatility matrix is not positive semi-definite");
    }
}

Allocation::Allocation(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    if (weights_.size() < 1) {
        throw Error(ErrorKind::Validation, "allocation must have at least one chain");
    }
    if (!weights_.allFinite()) {
        throw NonFiniteInput("allocation contains non-finite values");
    }
    if (std::abs(weights_.sum() - 1.0) > 1e-12) {
        throw Error(ErrorKind::Validation, "allocation components must sum to 1");
    }
}

RiskTolerance::RiskTolerance(double rho) : rho_(rho) {
    if (!std::isfinite(rho_) || rho_ < 0.0) {
        throw NonFiniteInput("risk tolerance must be finite and non-negative");
    }
}

double RiskTolerance::root_risk() const { return std::sqrt(rho_); }

void validate_chain_spec(const ChainSpec& spec) {
    if (spec.chain_id.empty()) throw ConfigError("chain id must be non-empty");
    if (!(spec.target_ibt_s > 0.0)) throw ConfigError("target IBT must be positive");
    if (spec.cooldown_hours < 0) throw ConfigError("cooldown must be non-negative");
    if (!(spec.coinbase_subsidy > 0.0)) throw ConfigError("coinbase subsidy must be positive");
}

} // namespace hashalloc
