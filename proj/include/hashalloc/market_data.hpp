#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hashalloc/types.hpp"

namespace hashalloc {

/// Hourly fiat quotes per chain on a shared, gap-free hour grid.
/// Loaders forward-fill gaps of up to six consecutive hours.
class PriceSeries {
public:
    PriceSeries(std::vector<std::string> chains, Timestamp start,
                std::vector<std::vector<double>> prices_per_chain);

    const std::vector<std::string>& chains() const { return chains_; }
    Eigen::Index chain_index(const std::string& chain_id) const;
    std::size_t hours() const { return prices_.empty() ? 0 : prices_.front().size(); }
    Timestamp start() const { return start_; }
    Timestamp timestamp(std::size_t hour) const {
        return start_ + static_cast<Timestamp>(hour) * kSecondsPerHour;
    }
    double price(Eigen::Index chain, std::size_t hour) const { return prices_[chain][hour]; }
    std::optional<std::size_t> index_of(Timestamp t) const;

private:
    std::vector<std::string> chains_;
    Timestamp start_ = 0;
    std::vector<std::vector<double>> prices_; // [chain][hour]
};

/// Per-chain difficulty samples at arbitrary (block) timestamps; queries are
/// last-observation-carried-forward.
class DifficultySeries {
public:
    using Samples = std::vector<std::pair<Timestamp, double>>;

    explicit DifficultySeries(std::map<std::string, Samples> samples);

    std::vector<std::string> chains() const;
    bool covers(const std::string& chain_id, Timestamp t) const;
    /// Most recent difficulty at or before t; MissingDifficulty if none.
    double value_at(const std::string& chain_id, Timestamp t) const;

private:
    std::map<std::string, Samples> samples_;
};

struct BlockRecord {
    std::string chain_id;
    std::int64_t height = 0;
    Timestamp timestamp = 0;
    std::string miner_id;
    double difficulty = 0.0;
};

/// Hourly profit vectors; chain order is fixed at construction.
struct ProfitSeries {
    std::vector<std::string> chains;
    Timestamp start_ts = 0;
    std::vector<Eigen::VectorXd> values;

    std::size_t hours() const { return values.size(); }
    Timestamp timestamp(std::size_t hour) const {
        return start_ts + static_cast<Timestamp>(hour) * kSecondsPerHour;
    }
    std::optional<std::size_t> index_of(Timestamp t) const;
    Eigen::Index chain_index(const std::string& chain_id) const;
};

// --- loaders (CSV schemas documented in the README) ---------------------

/// `timestamp,chain,price_usd`; hour-aligned unix seconds, positive prices.
PriceSeries load_price_csv(const std::string& path);

/// `timestamp,chain,difficulty`.
DifficultySeries load_difficulty_csv(const std::string& path);

/// `chain,height,timestamp,miner,difficulty`; rejects chains outside
/// known_chains and duplicate (chain, height) pairs.
std::vector<BlockRecord> load_blocks_csv(const std::string& path,
                                         const std::vector<std::string>& known_chains);

// --- statistics ----------------------------------------------------------

/// pi_i = (R_i / D_i) * (sum D / sum R). The result satisfies
/// sum_i pi_i D_i = sum_i D_i and is invariant to common rescaling of either
/// input vector.
ProfitVector profit_vector(const Eigen::VectorXd& rewards_usd,
                           const Eigen::VectorXd& difficulties);

/// One profit vector per hour with R_i(t) = subsidy_i * price_i(t) and
/// difficulties sampled as the most recent value at or before the hour.
ProfitSeries profit_series(const PriceSeries& prices, const DifficultySeries& difficulties,
                           const std::vector<ChainSpec>& specs);

/// Component-wise mean of the profit vectors with timestamps in the closed
/// window [t - lookback, t].
ProfitVector expected_profit_vector(const ProfitSeries& series, Timestamp t, int lookback_hours);

/// Unbiased sample covariance of {pi(x) - pi(x - cooldown) : x in [t - lookback, t]}.
VolatilityMatrix volatility_matrix(const ProfitSeries& series, Timestamp t, int lookback_hours,
                                   int cooldown_hours);

} // namespace hashalloc
