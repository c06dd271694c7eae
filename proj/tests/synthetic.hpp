#pragma once

// Synthetic fixtures for the fitting self-consistency experiments: a noisy
// two-chain market plus an actual-allocation series generated by the model
// itself with known (lookback, risk), so the ground truth is known by
// construction.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "hashalloc/market_data.hpp"
#include "hashalloc/portfolio.hpp"
#include "hashalloc/risk_inference.hpp"
#include "hashalloc/rng.hpp"

namespace synthetic {

struct PlantedFit {
    hashalloc::ProfitSeries market;
    hashalloc::ActualAllocationSeries actual;
    int planted_lookback = 0;
    double planted_risk = 0.0;
};

/// Random-walk prices on two chains with fixed difficulties, and an actual
/// series produced by solving MaxProfit with the planted parameters at every
/// hour. The planted risk is scaled from the realized volatility so that the
/// allocation usually stays interior to [0, 1].
inline PlantedFit make_planted_fit(std::uint64_t seed, int hours, int planted_lookback = 48,
                                   int cooldown_hours = 16, double typical_deviation = 0.1) {
    using namespace hashalloc;
    SplitMix64 rng(seed);

    PlantedFit out;
    out.planted_lookback = planted_lookback;

    const Eigen::Vector2d difficulties(1.0, 4.0);
    double price_bch = 1000.0;
    double price_btc = 4000.0;
    out.market.chains = {"BCH", "BTC"};
    out.market.start_ts = 0;
    out.market.values.reserve(hours);
    for (int h = 0; h < hours; ++h) {
        price_bch *= std::exp(rng.uniform(-0.02, 0.02));
        price_btc *= std::exp(rng.uniform(-0.005, 0.005));
        out.market.values.push_back(
            profit_vector(Eigen::Vector2d(price_bch, price_btc), difficulties).values());
    }

    // Scale the planted risk off the realized budget-orthogonal variance so
    // the typical deviation from minimum variance is `typical_deviation`.
    const int first_hour = planted_lookback + cooldown_hours;
    std::vector<double> quad;
    for (int h = first_hour; h < hours; ++h) {
        const VolatilityMatrix sigma = volatility_matrix(
            out.market, out.market.timestamp(h), planted_lookback, cooldown_hours);
        const Eigen::Vector2d u(1.0, -1.0);
        quad.push_back(u.dot(sigma.entries() * u));
    }
    std::nth_element(quad.begin(), quad.begin() + quad.size() / 2, quad.end());
    out.planted_risk = typical_deviation * typical_deviation * quad[quad.size() / 2];

    out.actual.miner_id = "synthetic";
    out.actual.chains = out.market.chains;
    for (int h = first_hour; h < hours; ++h) {
        const Timestamp t = out.market.timestamp(h);
        const ProfitVector mu = expected_profit_vector(out.market, t, planted_lookback);
        const VolatilityMatrix sigma =
            volatility_matrix(out.market, t, planted_lookback, cooldown_hours);
        out.actual.timestamps.push_back(t);
        out.actual.allocations.push_back(pipeline_allocation(mu, sigma, out.planted_risk));
    }
    return out;
}

/// One-cell recovery check: true when the fitted lookback is the planted one
/// or an immediate neighbour in the candidate set, and the fitted risk is
/// within one step of the winning risk grid.
inline bool recovered(const hashalloc::MinerParams& fit, const PlantedFit& truth,
                      const hashalloc::FitReport& report) {
    const std::vector<int> lookbacks = hashalloc::lookback_candidates();
    const auto it = std::find(lookbacks.begin(), lookbacks.end(), truth.planted_lookback);
    std::vector<int> acceptable{truth.planted_lookback};
    if (it != lookbacks.begin()) acceptable.push_back(*(it - 1));
    if (it + 1 != lookbacks.end()) acceptable.push_back(*(it + 1));
    if (std::find(acceptable.begin(), acceptable.end(), fit.lookback_hours) == acceptable.end()) {
        return false;
    }

    std::vector<double> grid;
    for (const auto& cell : report.cells) {
        if (cell.lookback_hours == fit.lookback_hours && std::isfinite(cell.ks)) {
            grid.push_back(cell.risk);
        }
    }
    std::sort(grid.begin(), grid.end());
    double step = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) step = std::max(step, grid[i] - grid[i - 1]);
    const double tolerance = std::max(step, 1e-6 * truth.planted_risk);
    return std::abs(fit.risk - truth.planted_risk) <= tolerance;
}

} // namespace synthetic
