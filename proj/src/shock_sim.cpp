#include "hashalloc/shock_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "hashalloc/portfolio.hpp"
#include "hashalloc/rng.hpp"

namespace hashalloc {

namespace {

constexpr int kBch = 0;
constexpr int kBtc = 1;

int stats_saturation_hours(const ShockConfig& config) {
    if (config.fixed_allocation_bch) return 0;
    int max_lookback = 0;
    for (const auto& m : config.miners) max_lookback = std::max(max_lookback, m.lookback_hours);
    return max_lookback + config.cooldown_hours;
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

} // namespace

std::vector<SimMinerSpec> reference_miners() {
    return {
        {"ViaBTC", 144, 6.42e-4, 1.0},
        {"BTC.TOP", 16, 8.54e-5, 1.0},
        {"AntPool", 10, 3.33e-5, 1.0},
        {"BTC.com", 4, 3.81e-6, 1.0},
    };
}

ShockConfig default_shock_config() {
    ShockConfig config;
    config.miners = reference_miners();
    return config;
}

void validate_shock_config(const ShockConfig& config) {
    if (!(config.shock_multiplier > 0.0) || config.shock_multiplier > 4.0) {
        throw ConfigError("shock multiplier must lie in (0, 4]");
    }
    if (config.trials < 1) throw ConfigError("trials must be at least 1");
    if (!(config.base_price_bch > 0.0) || !(config.base_price_btc > 0.0)) {
        throw ConfigError("base prices must be positive");
    }
    if (config.noise_fraction < 0.0 || config.noise_fraction >= 1.0) {
        throw ConfigError("noise fraction must lie in [0, 1)");
    }
    if (config.warmup_days < 0 || config.horizon_days < 1) {
        throw ConfigError("warmup must be non-negative and horizon at least one day");
    }
    if (!(config.target_ibt_s > 0.0)) throw ConfigError("target IBT must be positive");
    if (config.cooldown_hours < 0) throw ConfigError("cooldown must be non-negative");
    if (!(config.coinbase_subsidy > 0.0)) throw ConfigError("subsidy must be positive");
    if (config.inelastic_fraction < 0.0 || config.inelastic_fraction > 1.0) {
        throw ConfigError("inelastic fraction must lie in [0, 1]");
    }
    if (config.allocation_floor < 0.0 || config.allocation_floor >= 0.5) {
        throw ConfigError("allocation floor must lie in [0, 0.5)");
    }
    if (config.bch_window_blocks < 1 || config.btc_epoch_blocks < 1) {
        throw ConfigError("DAA window sizes must be positive");
    }
    if (config.threads < 1) throw ConfigError("threads must be at least 1");
    if (config.summary_preshock_hours < 0) {
        throw ConfigError("summary pre-shock span must be non-negative");
    }
    if (config.fixed_allocation_bch) {
        const double f = *config.fixed_allocation_bch;
        if (!(f >= 0.0) || f > 1.0) throw ConfigError("fixed allocation must lie in [0, 1]");
    } else {
        if (config.miners.empty()) throw ConfigError("at least one miner is required");
        double total_weight = 0.0;
        for (const auto& m : config.miners) {
            if (m.lookback_hours < 1) throw ConfigError("miner lookback must be positive");
            if (!(m.risk >= 0.0)) throw ConfigError("miner risk must be non-negative");
            if (m.hash_weight < 0.0) throw ConfigError("hash weights must be non-negative");
            total_weight += m.hash_weight;
        }
        if (total_weight <= 0.0) throw ConfigError("total hash weight must be positive");
    }
}

int simulation_warmup_hours(const ShockConfig& config) {
    const double settle_blocks =
        static_cast<double>(std::max(config.btc_epoch_blocks, 2 * config.bch_window_blocks));
    const int settle_hours =
        static_cast<int>(std::ceil(settle_blocks * config.target_ibt_s / 3600.0));
    const int derived = stats_saturation_hours(config) + settle_hours;
    return std::max(derived, config.warmup_days * 24);
}

PriceSeries generate_shock_prices(const ShockConfig& config, std::uint64_t trial_seed) {
    validate_shock_config(config);
    const int warmup_h = simulation_warmup_hours(config);
    const int total_h = warmup_h + config.horizon_days * 24;

    SplitMix64 rng(trial_seed);
    std::vector<double> bch;
    std::vector<double> btc;
    bch.reserve(total_h + 1);
    btc.reserve(total_h + 1);
    const double amp_bch = config.noise_fraction * config.base_price_bch;
    const double amp_btc = config.noise_fraction * config.base_price_btc;
    for (int h = 0; h <= total_h; ++h) {
        const double level =
            h >= warmup_h ? config.base_price_bch * config.shock_multiplier : config.base_price_bch;
        bch.push_back(std::max(level + rng.uniform(-amp_bch, amp_bch),
                               1e-9 * config.base_price_bch));
        btc.push_back(std::max(config.base_price_btc + rng.uniform(-amp_btc, amp_btc),
                               1e-9 * config.base_price_btc));
    }
    return PriceSeries({"BCH", "BTC"}, 0, {std::move(bch), std::move(btc)});
}

double bch_daa_next_difficulty(const std::vector<BlockTrace>& history, double target_ibt_s,
                               int window_blocks, bool median_of_three) {
    const auto window = static_cast<std::size_t>(window_blocks);
    const std::size_t need = window + (median_of_three ? 3 : 1);
    if (history.size() < need) {
        throw InsufficientHistory("rolling-window DAA needs " + std::to_string(need) +
                                  " blocks, have " + std::to_string(history.size()));
    }
    const std::size_t n = history.size();

    double mean_difficulty = 0.0;
    for (std::size_t i = n - window; i < n; ++i) mean_difficulty += history[i].difficulty;
    mean_difficulty /= static_cast<double>(window);

    double first_ts;
    double last_ts;
    if (median_of_three) {
        first_ts = median3(history[n - window - 3].timestamp_s, history[n - window - 2].timestamp_s,
                           history[n - window - 1].timestamp_s);
        last_ts = median3(history[n - 3].timestamp_s, history[n - 2].timestamp_s,
                          history[n - 1].timestamp_s);
    } else {
        first_ts = history[n - window - 1].timestamp_s;
        last_ts = history[n - 1].timestamp_s;
    }

    const double span = static_cast<double>(window_blocks) * target_ibt_s;
    const double elapsed = std::clamp(last_ts - first_ts, span / 4.0, span * 4.0);
    return mean_difficulty * span / elapsed;
}

double btc_daa_next_difficulty(double current_difficulty, double epoch_elapsed_s,
                               double target_ibt_s, int epoch_blocks) {
    if (!(epoch_elapsed_s > 0.0)) throw ConfigError("epoch elapsed time must be positive");
    const double ideal = static_cast<double>(epoch_blocks) * target_ibt_s;
    const double factor = std::clamp(ideal / epoch_elapsed_s, 0.25, 4.0);
    return current_difficulty * factor;
}

TrialResult run_trial(const ShockConfig& config, int trial_index) {
    validate_shock_config(config);
    if (trial_index < 0) throw ConfigError("trial index must be non-negative");

    const int warmup_h = simulation_warmup_hours(config);
    const int stats_h = stats_saturation_hours(config);
    const int total_h = warmup_h + config.horizon_days * 24;

    const PriceSeries prices = generate_shock_prices(
        config, derive_seed(config.master_seed, static_cast<std::uint64_t>(trial_index), 0));
    SplitMix64 event_rng(
        derive_seed(config.master_seed, static_cast<std::uint64_t>(trial_index), 1));

    // Reference split: reward share at the pre-shock base prices. Seeds the
    // difficulty scale and anchors the inelastic remainder.
    const double reward_bch = config.coinbase_subsidy * config.base_price_bch;
    const double reward_btc = config.coinbase_subsidy * config.base_price_btc;
    Eigen::Vector2d ref_share(reward_bch / (reward_bch + reward_btc),
                              reward_btc / (reward_bch + reward_btc));

    double difficulty[2] = {0.0, 0.0};

    ProfitSeries live;
    live.chains = {"BCH", "BTC"};
    live.start_ts = 0;
    live.values.reserve(total_h + 1);
    auto push_profit_hour = [&](int h) {
        Eigen::Vector2d rewards(
            config.coinbase_subsidy * prices.price(kBch, static_cast<std::size_t>(h)),
            config.coinbase_subsidy * prices.price(kBtc, static_cast<std::size_t>(h)));
        Eigen::Vector2d diffs(difficulty[kBch], difficulty[kBtc]);
        live.values.push_back(profit_vector(rewards, diffs).values());
    };

    auto allocation_at = [&](int hour, bool* floor_bound) {
        Eigen::Vector2d w;
        if (config.fixed_allocation_bch) {
            w = Eigen::Vector2d(*config.fixed_allocation_bch,
                                1.0 - *config.fixed_allocation_bch);
        } else {
            const Timestamp t = static_cast<Timestamp>(hour) * kSecondsPerHour;
            Eigen::Vector2d sum = Eigen::Vector2d::Zero();
            double total_weight = 0.0;
            for (const auto& miner : config.miners) {
                const ProfitVector mu = expected_profit_vector(live, t, miner.lookback_hours);
                const VolatilityMatrix sigma =
                    volatility_matrix(live, t, miner.lookback_hours, config.cooldown_hours);
                const Allocation a = pipeline_allocation(mu, sigma, miner.risk);
                sum += miner.hash_weight * a.weights();
                total_weight += miner.hash_weight;
            }
            w = sum / total_weight;
            if (config.inelastic_fraction > 0.0) {
                w = (1.0 - config.inelastic_fraction) * w + config.inelastic_fraction * ref_share;
            }
        }
        if (!config.disable_allocation_floor) {
            // floored components stay at exactly the floor; only the free
            // remainder is rescaled to keep the sum at one
            double floored = 0.0;
            double free_sum = 0.0;
            bool bound = false;
            for (int i = 0; i < 2; ++i) {
                if (w[i] < config.allocation_floor) {
                    w[i] = config.allocation_floor;
                    floored += w[i];
                    bound = true;
                } else {
                    free_sum += w[i];
                }
            }
            if (bound && free_sum > 0.0) {
                const double scale = (1.0 - floored) / free_sum;
                for (int i = 0; i < 2; ++i) {
                    if (w[i] != config.allocation_floor) w[i] *= scale;
                }
            }
            if (floor_bound != nullptr) *floor_bound = bound;
        } else if (floor_bound != nullptr) {
            *floor_bound = false;
        }
        return w;
    };

    // Two-pass difficulty seeding: with unit total hash, IBT_i = D_i / w_i,
    // so D_i = target * w_i starts block production at equilibrium. The
    // model's initial allocation itself depends on the difficulties through
    // the profit vector, hence the reseed round.
    Eigen::Vector2d seed_alloc = ref_share;
    if (config.fixed_allocation_bch) {
        seed_alloc = Eigen::Vector2d(*config.fixed_allocation_bch,
                                     1.0 - *config.fixed_allocation_bch);
    }
    for (int pass = 0; pass < 2; ++pass) {
        difficulty[kBch] = config.target_ibt_s * std::max(seed_alloc[kBch], 1e-3);
        difficulty[kBtc] = config.target_ibt_s * std::max(seed_alloc[kBtc], 1e-3);
        live.values.clear();
        for (int h = 0; h <= stats_h; ++h) push_profit_hour(h);
        seed_alloc = allocation_at(stats_h, nullptr);
    }

    TrialResult result;
    result.chains = {"BCH", "BTC"};
    result.blocks.resize(2);
    result.shock_ts = static_cast<Timestamp>(warmup_h) * kSecondsPerHour;
    result.sim_start_ts = static_cast<Timestamp>(stats_h) * kSecondsPerHour;

    int current_hour = stats_h;
    bool floor_bound = false;
    Eigen::Vector2d alloc = allocation_at(current_hour, &floor_bound);
    if (floor_bound) ++result.floor_bound_hours;
    result.alloc_timestamps.push_back(static_cast<Timestamp>(current_hour) * kSecondsPerHour);
    result.allocations.push_back(alloc);

    double now = static_cast<double>(stats_h) * kSecondsPerHour;
    const double end_s = static_cast<double>(total_h) * kSecondsPerHour;
    double last_block_ts[2] = {now, now};
    std::int64_t height[2] = {0, 0};
    double btc_epoch_start = now;
    const std::size_t bch_daa_need =
        static_cast<std::size_t>(config.bch_window_blocks) + (config.bch_median_of_three ? 3 : 1);

    for (;;) {
        // Pending delays are regenerated after every event; exponential
        // memorylessness makes this statistically exact for the
        // piecewise-constant rates in play.
        double block_ts[2];
        for (int i = 0; i < 2; ++i) {
            const double w = alloc[i];
            if (w > 0.0) {
                block_ts[i] = now + event_rng.exponential(difficulty[i] / w);
            } else {
                block_ts[i] = std::numeric_limits<double>::infinity();
            }
        }
        const double next_hour_s = static_cast<double>(current_hour + 1) * kSecondsPerHour;
        const double next_event = std::min({next_hour_s, block_ts[kBch], block_ts[kBtc]});
        if (next_event >= end_s) break;

        if (next_hour_s <= block_ts[kBch] && next_hour_s <= block_ts[kBtc]) {
            now = next_hour_s;
            ++current_hour;
            push_profit_hour(current_hour);
            alloc = allocation_at(current_hour, &floor_bound);
            if (floor_bound) ++result.floor_bound_hours;
            result.alloc_timestamps.push_back(static_cast<Timestamp>(current_hour) *
                                              kSecondsPerHour);
            result.allocations.push_back(alloc);
            continue;
        }

        const int chain = block_ts[kBch] <= block_ts[kBtc] ? kBch : kBtc;
        now = block_ts[chain];
        const double ibt = now - last_block_ts[chain];
        last_block_ts[chain] = now;
        result.blocks[chain].push_back({now, difficulty[chain], ibt});
        ++height[chain];

        if (chain == kBch) {
            if (result.blocks[kBch].size() >= bch_daa_need) {
                difficulty[kBch] =
                    bch_daa_next_difficulty(result.blocks[kBch], config.target_ibt_s,
                                            config.bch_window_blocks, config.bch_median_of_three);
            }
        } else {
            if (height[kBtc] % config.btc_epoch_blocks == 0) {
                difficulty[kBtc] = btc_daa_next_difficulty(
                    difficulty[kBtc], now - btc_epoch_start, config.target_ibt_s,
                    config.btc_epoch_blocks);
                btc_epoch_start = now;
            }
        }
    }
    return result;
}

namespace {

struct TrialBuckets {
    std::vector<double> alloc_mean; // NaN where the bucket has no sample
    std::vector<double> bch_ibt_sum;
    std::vector<int> bch_ibt_count;
    std::vector<double> btc_ibt_sum;
    std::vector<int> btc_ibt_count;
    std::size_t floor_bound_hours = 0;
};

TrialBuckets bucketize(const TrialResult& trial, int pre_buckets,
                       int total_buckets, int bucket_hours) {
    const double shock_s = static_cast<double>(trial.shock_ts);
    const double bucket_s = bucket_hours * 3600.0;
    const auto nan = std::numeric_limits<double>::quiet_NaN();

    auto bucket_of = [&](double ts) -> int {
        const int idx =
            static_cast<int>(std::floor((ts - shock_s) / bucket_s)) + pre_buckets;
        return (idx >= 0 && idx < total_buckets) ? idx : -1;
    };

    std::vector<double> alloc_sum(total_buckets, 0.0);
    std::vector<int> alloc_count(total_buckets, 0);
    for (std::size_t i = 0; i < trial.alloc_timestamps.size(); ++i) {
        const int b = bucket_of(static_cast<double>(trial.alloc_timestamps[i]));
        if (b < 0) continue;
        alloc_sum[b] += trial.allocations[i][kBch];
        ++alloc_count[b];
    }

    TrialBuckets out;
    out.floor_bound_hours = trial.floor_bound_hours;
    out.alloc_mean.assign(total_buckets, nan);
    for (int b = 0; b < total_buckets; ++b) {
        if (alloc_count[b] > 0) out.alloc_mean[b] = alloc_sum[b] / alloc_count[b];
    }

    for (int chain : {kBch, kBtc}) {
        auto& sum = chain == kBch ? out.bch_ibt_sum : out.btc_ibt_sum;
        auto& count = chain == kBch ? out.bch_ibt_count : out.btc_ibt_count;
        sum.assign(total_buckets, 0.0);
        count.assign(total_buckets, 0);
        for (const auto& block : trial.blocks[chain]) {
            const int b = bucket_of(block.timestamp_s);
            if (b < 0) continue;
            sum[b] += block.ibt_s;
            ++count[b];
        }
    }
    return out;
}

} // namespace

ExperimentSummary run_experiment(const ShockConfig& config) {
    validate_shock_config(config);
    const int warmup_h = simulation_warmup_hours(config);
    const int stats_h = stats_saturation_hours(config);
    const int bucket_hours = 6;

    int pre_hours = std::min(config.summary_preshock_hours, warmup_h - stats_h);
    pre_hours -= pre_hours % bucket_hours;
    const int pre_buckets = pre_hours / bucket_hours;
    const int post_buckets = config.horizon_days * 24 / bucket_hours;
    const int total_buckets = pre_buckets + post_buckets;

    std::vector<TrialBuckets> per_trial(config.trials);
    std::atomic<int> next_trial{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            const int idx = next_trial.fetch_add(1);
            if (idx >= config.trials) return;
            try {
                per_trial[idx] = bucketize(run_trial(config, idx), pre_buckets,
                                           total_buckets, bucket_hours);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int threads = std::min(config.threads, config.trials);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ExperimentSummary summary;
    summary.bucket_hours = bucket_hours;
    summary.buckets.reserve(total_buckets);
    for (int b = 0; b < total_buckets; ++b) {
        SummaryBucket bucket;
        bucket.start_hours_from_shock = (b - pre_buckets) * bucket_hours;

        // Allocation: across-trial median of the per-trial bucket mean.
        // IBT: mean over all blocks pooled across trials (bucket production
        // time over block count), which stays unbiased when the per-trial
        // block counts differ.
        std::vector<double> allocs;
        double bch_sum = 0.0;
        int bch_count = 0;
        double btc_sum = 0.0;
        int btc_count = 0;
        int contributing = 0;
        for (const auto& trial : per_trial) {
            if (!std::isnan(trial.alloc_mean[b])) allocs.push_back(trial.alloc_mean[b]);
            bch_sum += trial.bch_ibt_sum[b];
            bch_count += trial.bch_ibt_count[b];
            btc_sum += trial.btc_ibt_sum[b];
            btc_count += trial.btc_ibt_count[b];
            if (trial.bch_ibt_count[b] > 0) ++contributing;
        }
        bucket.median_bch_allocation =
            allocs.empty() ? std::numeric_limits<double>::quiet_NaN() : median_of(allocs);
        bucket.mean_bch_ibt_s =
            bch_count == 0 ? std::numeric_limits<double>::quiet_NaN() : bch_sum / bch_count;
        bucket.mean_btc_ibt_s =
            btc_count == 0 ? std::numeric_limits<double>::quiet_NaN() : btc_sum / btc_count;
        bucket.trials = contributing;
        summary.buckets.push_back(bucket);
    }
    for (const auto& trial : per_trial) {
        summary.floor_bound_hours_total += trial.floor_bound_hours;
    }
    return summary;
}

} // namespace hashalloc
