#pragma once

#include <string>
#include <vector>

#include "hashalloc/market_data.hpp"
#include "hashalloc/portfolio.hpp"
#include "hashalloc/types.hpp"

namespace hashalloc {

/// A miner's observed hourly allocation, estimated from block production via
/// an exponentially weighted moving average (half-life 10 hours by default)
/// normalized by relative difficulty.
struct ActualAllocationSeries {
    std::string miner_id;
    std::vector<std::string> chains;
    std::vector<Timestamp> timestamps; // hourly; hours with no hash evidence are omitted
    std::vector<Allocation> allocations;
    double half_life_hours = 10.0;
};

/// EWMA block rate times difficulty, summed over chains: proportional to the
/// miner's total hash rate up to a constant that cancels in aggregation.
struct HashWeightSeries {
    std::string miner_id;
    std::vector<Timestamp> timestamps;
    std::vector<double> weights;
};

/// Fitted per-miner parameters: the (lookback, risk) cell minimizing the
/// two-sample KS statistic between economic and actual allocation values.
struct MinerParams {
    std::string miner_id;
    int lookback_hours = 0;
    double risk = 0.0;
    double fit_statistic = 0.0;
    double mean_abs_error = 0.0;
};

struct FitCell {
    int lookback_hours = 0;
    double risk = 0.0;
    double ks = 0.0;
    double mae = 0.0;
    std::size_t samples = 0;
};

struct FitReport {
    std::vector<FitCell> cells;
};

/// Goodness-of-fit objective minimized by fit_parameters. The KS comparison
/// of hourly value distributions is the default; the paired mean absolute
/// error is the order-sensitive alternative.
enum class FitObjective { KsDistribution, PairedMae };

/// The candidate lookbacks, in hours:
/// {4..24 step 6} + {24..144 step 24} + {168..1344 step 168}.
std::vector<int> lookback_candidates();

ActualAllocationSeries actual_allocation_series(const std::vector<BlockRecord>& blocks,
                                                const DifficultySeries& difficulties,
                                                const std::string& miner_id,
                                                double half_life_hours = 10.0);

HashWeightSeries hash_weight_series(const std::vector<BlockRecord>& blocks,
                                    const DifficultySeries& difficulties,
                                    const std::string& miner_id, double half_life_hours = 10.0);

/// rho(t) = w_actual(t)' Sigma(t) w_actual(t) for every hour where the market
/// history supports the covariance window.
std::vector<std::pair<Timestamp, double>> infer_risk_series(const ActualAllocationSeries& actual,
                                                            const ProfitSeries& market,
                                                            int lookback_hours,
                                                            int cooldown_hours);

/// Two-sample Kolmogorov-Smirnov statistic: sup_v |ECDF_x(v) - ECDF_y(v)|.
double ks_statistic(std::vector<double> xs, std::vector<double> ys);

/// Grid fit over 18 lookbacks x 8 risk candidates per lookback (8 equally
/// spaced values between the 25th and 75th percentiles of the inferred risk
/// at that lookback, endpoints included). Ties break toward the smaller
/// lookback, then the smaller risk. `report`, when given, receives every
/// evaluated cell for audit.
MinerParams fit_parameters(const ActualAllocationSeries& actual, const ProfitSeries& market,
                           int cooldown_hours, const std::string& focal_chain = "BCH",
                           int min_history_days = 30, FitReport* report = nullptr,
                           FitObjective objective = FitObjective::KsDistribution);

} // namespace hashalloc
