#pragma once

#include <string>
#include <vector>

#include "hashalloc/market_data.hpp"
#include "hashalloc/risk_inference.hpp"
#include "hashalloc/types.hpp"

namespace hashalloc {

/// Hash-weighted combination of per-miner allocations over time.
struct AggregateSeries {
    std::vector<std::string> chains;
    std::vector<std::string> miner_ids;
    std::vector<Timestamp> timestamps; // hourly
    std::vector<Allocation> allocations;
};

/// Aggregate economic series plus the per-miner components behind it.
struct EconomicSeries {
    AggregateSeries aggregate;
    std::vector<std::vector<Allocation>> per_miner; // [miner][hour], miner order as aggregate
};

/// Predicted inter-block-time change, one dimensionless ratio per chain per
/// period. `ratios` is the trailing rolling mean of `raw_ratios`.
struct IbtPrediction {
    int period_hours = 6;
    int rolling_window_days = 7;
    std::vector<std::string> chains;
    std::vector<Timestamp> raw_period_starts;
    std::vector<Eigen::VectorXd> raw_ratios;
    std::vector<Timestamp> period_starts;
    std::vector<Eigen::VectorXd> ratios;
};

/// w = sum_j w_j h_j / sum h: the hash-weighted mean allocation.
Allocation aggregate_allocation(const std::vector<std::pair<Allocation, double>>& per_miner);

/// Solves each miner's MaxProfit with her fitted (lookback, risk) at every
/// hour with enough history, then combines the results with that hour's hash
/// weights (last value carried forward when a miner has no sample).
AggregateSeries economic_allocation_series(const std::vector<MinerParams>& params,
                                           const ProfitSeries& market,
                                           const std::vector<HashWeightSeries>& hash_weights,
                                           int cooldown_hours);

/// Same computation, also returning the per-miner series.
EconomicSeries economic_allocation_series_detailed(const std::vector<MinerParams>& params,
                                                   const ProfitSeries& market,
                                                   const std::vector<HashWeightSeries>& hash_weights,
                                                   int cooldown_hours);

/// DARI-proportional baseline: w_i = (R_i / D_i) / sum_k (R_k / D_k).
Allocation baseline_dari_allocation(const Eigen::VectorXd& rewards_usd,
                                    const Eigen::VectorXd& difficulties);

/// Price-proportional baseline: w_i = P_i / sum P.
Allocation baseline_price_allocation(const Eigen::VectorXd& prices);

/// Expected IBT after an allocation move, in seconds per chain:
/// dT_i = (w_before_i / w_after_i) * T_i. A zero component in w_after makes
/// the new IBT unbounded and raises ZeroAllocationAfter.
Eigen::VectorXd predict_ibt_change(const Allocation& w_before, const Allocation& w_after,
                                   const Eigen::VectorXd& targets_s);

/// Mean allocation per non-overlapping period, IBT-change ratio between
/// consecutive periods, trailing rolling mean over the ratio series. A zero
/// allocation in the later period is reported as an infinite ratio rather
/// than dropped.
IbtPrediction predict_ibt_series(const AggregateSeries& agg, const Eigen::VectorXd& targets_s,
                                 int period_hours = 6, int rolling_days = 7);

/// Sample Pearson correlation coefficient.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

double mean_abs_error(const std::vector<double>& xs, const std::vector<double>& ys);

/// f(t) = q(t) / q(t - lag) with q = P_focal / sum of all chain prices.
std::vector<std::pair<Timestamp, double>> price_change_ratio_series(
    const PriceSeries& prices, int lag_hours = 24, const std::string& focal_chain = "BCH");

} // namespace hashalloc
