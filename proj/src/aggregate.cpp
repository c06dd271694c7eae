#include "hashalloc/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hashalloc {

namespace {

// Hash weight at a given hour: most recent sample at or before t, 0.0 before
// the miner's first sample.
double weight_at(const HashWeightSeries& series, Timestamp t) {
    auto pos = std::upper_bound(series.timestamps.begin(), series.timestamps.end(), t);
    if (pos == series.timestamps.begin()) return 0.0;
    return series.weights[static_cast<std::size_t>(pos - series.timestamps.begin()) - 1];
}

} // namespace

Allocation aggregate_allocation(const std::vector<std::pair<Allocation, double>>& per_miner) {
    if (per_miner.empty()) throw ZeroTotalWeight("no miners to aggregate");
    const Eigen::Index n = per_miner.front().first.size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    double total = 0.0;
    for (const auto& [allocation, weight] : per_miner) {
        if (allocation.size() != n) {
            throw DimensionMismatch("aggregated allocations differ in dimension");
        }
        if (weight < 0.0 || !std::isfinite(weight)) {
            throw Error(ErrorKind::Validation, "hash weights must be finite and non-negative");
        }
        sum += weight * allocation.weights();
        total += weight;
    }
    if (total <= 0.0) throw ZeroTotalWeight("total hash weight is zero");
    Eigen::VectorXd w = sum / total;
    w /= w.sum();
    return Allocation(std::move(w));
}

EconomicSeries economic_allocation_series_detailed(const std::vector<MinerParams>& params,
                                                   const ProfitSeries& market,
                                                   const std::vector<HashWeightSeries>& hash_weights,
                                                   int cooldown_hours) {
    if (params.empty()) throw ConfigError("economic series needs at least one miner");

    std::vector<const HashWeightSeries*> weights_by_miner;
    for (const auto& p : params) {
        auto it = std::find_if(hash_weights.begin(), hash_weights.end(),
                               [&](const HashWeightSeries& w) { return w.miner_id == p.miner_id; });
        if (it == hash_weights.end()) {
            throw ConfigError("no hash weight series for miner '" + p.miner_id + "'");
        }
        weights_by_miner.push_back(&*it);
    }

    int max_lookback = 0;
    for (const auto& p : params) max_lookback = std::max(max_lookback, p.lookback_hours);
    const auto first_hour = static_cast<std::size_t>(max_lookback + cooldown_hours);
    if (first_hour >= market.hours()) {
        throw InsufficientHistory("market history shorter than max lookback plus cooldown");
    }

    EconomicSeries out;
    out.aggregate.chains = market.chains;
    for (const auto& p : params) out.aggregate.miner_ids.push_back(p.miner_id);
    out.per_miner.resize(params.size());

    for (std::size_t h = first_hour; h < market.hours(); ++h) {
        const Timestamp t = market.timestamp(h);
        std::vector<std::pair<Allocation, double>> contributions;
        contributions.reserve(params.size());
        std::vector<Allocation> solo;
        solo.reserve(params.size());
        double total_weight = 0.0;
        for (std::size_t j = 0; j < params.size(); ++j) {
            const ProfitVector mu = expected_profit_vector(market, t, params[j].lookback_hours);
            const VolatilityMatrix sigma =
                volatility_matrix(market, t, params[j].lookback_hours, cooldown_hours);
            Allocation w = pipeline_allocation(mu, sigma, params[j].risk);
            const double weight = weight_at(*weights_by_miner[j], t);
            total_weight += weight;
            solo.push_back(w);
            contributions.emplace_back(std::move(w), weight);
        }
        if (total_weight <= 0.0) continue; // no miner active yet
        out.aggregate.timestamps.push_back(t);
        out.aggregate.allocations.push_back(aggregate_allocation(contributions));
        for (std::size_t j = 0; j < params.size(); ++j) {
            out.per_miner[j].push_back(std::move(solo[j]));
        }
    }
    if (out.aggregate.timestamps.empty()) {
        throw InsufficientHistory("no hour with both market history and hash weights");
    }
    return out;
}

AggregateSeries economic_allocation_series(const std::vector<MinerParams>& params,
                                           const ProfitSeries& market,
                                           const std::vector<HashWeightSeries>& hash_weights,
                                           int cooldown_hours) {
    return economic_allocation_series_detailed(params, market, hash_weights, cooldown_hours)
        .aggregate;
}

Allocation baseline_dari_allocation(const Eigen::VectorXd& rewards_usd,
                                    const Eigen::VectorXd& difficulties) {
    if (rewards_usd.size() != difficulties.size()) {
        throw DimensionMismatch("reward and difficulty vectors differ in length");
    }
    if ((rewards_usd.array() <= 0.0).any() || (difficulties.array() <= 0.0).any()) {
        throw NonPositiveInput("DARI baseline inputs must be strictly positive");
    }
    Eigen::VectorXd dari = rewards_usd.array() / difficulties.array();
    return Allocation(dari / dari.sum());
}

Allocation baseline_price_allocation(const Eigen::VectorXd& prices) {
    if ((prices.array() <= 0.0).any()) {
        throw NonPositiveInput("price baseline inputs must be strictly positive");
    }
    return Allocation(prices / prices.sum());
}

Eigen::VectorXd predict_ibt_change(const Allocation& w_before, const Allocation& w_after,
                                   const Eigen::VectorXd& targets_s) {
    if (w_before.size() != w_after.size() || w_before.size() != targets_s.size()) {
        throw DimensionMismatch("allocation and target vectors differ in length");
    }
    for (Eigen::Index i = 0; i < w_after.size(); ++i) {
        if (w_after[i] == 0.0) {
            throw ZeroAllocationAfter("chain " + std::to_string(i) +
                                      " has zero allocation after the move; IBT is unbounded");
        }
    }
    return (w_before.weights().array() / w_after.weights().array() * targets_s.array()).matrix();
}

IbtPrediction predict_ibt_series(const AggregateSeries& agg, const Eigen::VectorXd& targets_s,
                                 int period_hours, int rolling_days) {
    if (period_hours <= 0 || rolling_days <= 0) {
        throw ConfigError("period and rolling window must be positive");
    }
    const auto n = static_cast<Eigen::Index>(agg.chains.size());
    if (targets_s.size() != n) {
        throw DimensionMismatch("target vector does not match chain count");
    }
    const std::size_t buckets = agg.timestamps.size() / static_cast<std::size_t>(period_hours);
    const auto window = static_cast<std::size_t>(rolling_days * 24 / period_hours);
    if (buckets < window + 1) {
        throw InsufficientHistory("aggregate series shorter than the rolling window");
    }

    std::vector<Eigen::VectorXd> bucket_mean(buckets);
    for (std::size_t k = 0; k < buckets; ++k) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < period_hours; ++i) {
            sum += agg.allocations[k * static_cast<std::size_t>(period_hours) +
                                   static_cast<std::size_t>(i)]
                       .weights();
        }
        bucket_mean[k] = sum / static_cast<double>(period_hours);
    }

    IbtPrediction out;
    out.period_hours = period_hours;
    out.rolling_window_days = rolling_days;
    out.chains = agg.chains;

    for (std::size_t k = 1; k < buckets; ++k) {
        Eigen::VectorXd ratio(n);
        const Eigen::VectorXd& before = bucket_mean[k - 1];
        const Eigen::VectorXd& after = bucket_mean[k];
        if ((after.array() > 0.0).all()) {
            const Eigen::VectorXd dt = predict_ibt_change(
                Allocation(before / before.sum()), Allocation(after / after.sum()), targets_s);
            ratio = dt.array() / targets_s.array();
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (after[i] > 0.0) {
                    ratio[i] = before[i] / after[i];
                } else if (before[i] > 0.0) {
                    ratio[i] = std::numeric_limits<double>::infinity();
                } else {
                    ratio[i] = 1.0; // chain idle in both periods
                }
            }
        }
        out.raw_period_starts.push_back(
            agg.timestamps[k * static_cast<std::size_t>(period_hours)]);
        out.raw_ratios.push_back(std::move(ratio));
    }

    for (std::size_t k = window - 1; k < out.raw_ratios.size(); ++k) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
        for (std::size_t i = k + 1 - window; i <= k; ++i) sum += out.raw_ratios[i];
        out.period_starts.push_back(out.raw_period_starts[k]);
        out.ratios.push_back(sum / static_cast<double>(window));
    }
    if (out.ratios.empty()) {
        throw InsufficientHistory("no full rolling window in the prediction series");
    }
    return out;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DimensionMismatch("series differ in length");
    if (xs.size() < 2) throw EmptyInput("Pearson correlation needs at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw DegenerateVariance("Pearson correlation undefined for constant series");
    }
    return sxy / std::sqrt(sxx * syy);
}

double mean_abs_error(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DimensionMismatch("series differ in length");
    if (xs.empty()) throw EmptyInput("mean absolute error of empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) sum += std::abs(xs[i] - ys[i]);
    return sum / static_cast<double>(xs.size());
}

std::vector<std::pair<Timestamp, double>> price_change_ratio_series(const PriceSeries& prices,
                                                                    int lag_hours,
                                                                    const std::string& focal_chain) {
    if (lag_hours <= 0) throw ConfigError("lag must be positive");
    const Eigen::Index focal = prices.chain_index(focal_chain);
    const auto lag = static_cast<std::size_t>(lag_hours);
    if (prices.hours() <= lag) {
        throw InsufficientHistory("price series shorter than the comparison lag");
    }

    auto fraction = [&](std::size_t hour) {
        double total = 0.0;
        for (std::size_t c = 0; c < prices.chains().size(); ++c) {
            total += prices.price(static_cast<Eigen::Index>(c), hour);
        }
        return prices.price(focal, hour) / total;
    };

    std::vector<std::pair<Timestamp, double>> out;
    out.reserve(prices.hours() - lag);
    for (std::size_t h = lag; h < prices.hours(); ++h) {
        out.emplace_back(prices.timestamp(h), fraction(h) / fraction(h - lag));
    }
    return out;
}

} // namespace hashalloc
