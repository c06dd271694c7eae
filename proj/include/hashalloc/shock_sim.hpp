#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hashalloc/market_data.hpp"
#include "hashalloc/types.hpp"

namespace hashalloc {

struct SimMinerSpec {
    std::string miner_id;
    int lookback_hours = 0;
    double risk = 0.0;
    double hash_weight = 1.0;
};

/// One price-shock Monte Carlo experiment: synthetic two-chain prices with a
/// single step in the BCH price, per-block allocation re-solve, and both DAA
/// styles. All times are simulation-local seconds starting at 0; the shock
/// lands at the end of the warmup.
struct ShockConfig {
    double shock_multiplier = 1.0; // x in (0, 4]
    double base_price_bch = 1000.0;
    double base_price_btc = 12000.0;
    double noise_fraction = 0.1;
    int trials = 180;
    int warmup_days = 0; // 0 = derive from lookbacks, cooldown, and DAA settling
    int horizon_days = 14;
    std::uint64_t master_seed = 0;
    double target_ibt_s = 600.0;
    int cooldown_hours = 16;
    double coinbase_subsidy = 12.5;
    double inelastic_fraction = 0.0; // hash that stays at the pre-shock reference split
    double allocation_floor = 1e-6;
    bool disable_allocation_floor = false; // test hook for the zero-hash boundary
    int bch_window_blocks = 144;
    int btc_epoch_blocks = 2016;
    bool bch_median_of_three = false; // endpoint smoothing as deployed cw-144 does
    int threads = 1;
    int summary_preshock_hours = 168;
    std::vector<SimMinerSpec> miners; // default: the four fitted reference miners
    std::optional<double> fixed_allocation_bch; // bypass the solver when set
};

/// The four reference miners (lookback hours, risk) with equal hash weights.
std::vector<SimMinerSpec> reference_miners();

ShockConfig default_shock_config();

void validate_shock_config(const ShockConfig& config);

/// Warmup length in hours: statistics saturation (max lookback + cooldown)
/// plus DAA settling time, or the configured warmup if that is longer.
int simulation_warmup_hours(const ShockConfig& config);

/// Hourly BCH/BTC prices over warmup + horizon. BCH steps from p to p*x at
/// the shock hour; both chains carry independent uniform noise in
/// [-noise_fraction * base, +noise_fraction * base]. Deterministic in
/// trial_seed.
PriceSeries generate_shock_prices(const ShockConfig& config, std::uint64_t trial_seed);

struct BlockTrace {
    double timestamp_s = 0.0;
    double difficulty = 0.0;
    double ibt_s = 0.0;
};

/// Rolling-window DAA (BCH style): mean difficulty of the last
/// `window_blocks` blocks scaled by target time over elapsed time, elapsed
/// clamped to [window * target / 4, window * target * 4]. Needs window + 1
/// blocks (window + 3 with median-of-three endpoints).
double bch_daa_next_difficulty(const std::vector<BlockTrace>& history, double target_ibt_s,
                               int window_blocks = 144, bool median_of_three = false);

/// Epoch DAA (BTC style): difficulty times (epoch_blocks * target) / elapsed,
/// the adjustment factor clamped to [1/4, 4].
double btc_daa_next_difficulty(double current_difficulty, double epoch_elapsed_s,
                               double target_ibt_s, int epoch_blocks = 2016);

struct TrialResult {
    std::vector<std::string> chains; // ["BCH", "BTC"]
    std::vector<std::vector<BlockTrace>> blocks; // per chain
    std::vector<Timestamp> alloc_timestamps;     // hourly
    std::vector<Eigen::VectorXd> allocations;    // aggregate, per hour
    Timestamp shock_ts = 0;
    Timestamp sim_start_ts = 0;
    std::size_t floor_bound_hours = 0;
};

/// One deterministic trial: event-driven block generation with exponential
/// inter-arrivals, hourly allocation updates, per-block DAA.
TrialResult run_trial(const ShockConfig& config, int trial_index);

struct SummaryBucket {
    int start_hours_from_shock = 0;
    double median_bch_allocation = 0.0;
    double mean_bch_ibt_s = 0.0;
    double mean_btc_ibt_s = 0.0;
    int trials = 0;
};

struct ExperimentSummary {
    int bucket_hours = 6;
    std::vector<SummaryBucket> buckets;
    std::size_t floor_bound_hours_total = 0;
};

/// Runs config.trials independent trials (optionally across threads; the
/// reduction is deterministic regardless of scheduling) and buckets results
/// into 6-hour bins relative to the shock: across-trial median allocation,
/// across-trial mean IBT.
ExperimentSummary run_experiment(const ShockConfig& config);

} // namespace hashalloc
