#include "hashalloc/risk_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace hashalloc {

namespace {

Timestamp hour_floor(Timestamp t) {
    return (t / kSecondsPerHour) * kSecondsPerHour - (t % kSecondsPerHour < 0 ? kSecondsPerHour : 0);
}

// Per-miner hourly EWMA block rates, one lane per chain, plus the difficulty
// sampled at each hour. Shared by the allocation and hash-weight estimators.
struct EwmaScores {
    std::vector<std::string> chains;
    std::vector<Timestamp> timestamps;
    std::vector<std::vector<double>> scores; // [hour][chain] = ewma rate * difficulty
};

EwmaScores ewma_scores(const std::vector<BlockRecord>& blocks, const DifficultySeries& difficulties,
                       const std::string& miner_id, double half_life_hours) {
    if (!(half_life_hours > 0.0)) throw ConfigError("half-life must be positive");

    EwmaScores out;
    out.chains = difficulties.chains();
    if (out.chains.empty()) throw MissingDifficulty("difficulty series has no chains");

    std::map<std::string, std::size_t> chain_idx;
    for (std::size_t i = 0; i < out.chains.size(); ++i) chain_idx[out.chains[i]] = i;

    Timestamp first = std::numeric_limits<Timestamp>::max();
    Timestamp last = std::numeric_limits<Timestamp>::min();
    std::map<std::pair<Timestamp, std::size_t>, double> counts; // (hour, chain) -> blocks
    for (const auto& block : blocks) {
        if (block.miner_id != miner_id) continue;
        auto it = chain_idx.find(block.chain_id);
        if (it == chain_idx.end()) {
            throw UnknownChain("block on chain '" + block.chain_id +
                               "' without difficulty data");
        }
        const Timestamp hour = hour_floor(block.timestamp);
        counts[{hour, it->second}] += 1.0;
        first = std::min(first, hour);
        last = std::max(last, hour);
    }
    if (counts.empty()) {
        throw UnknownMiner("no blocks attributed to miner '" + miner_id + "'");
    }

    const double alpha = std::pow(2.0, -1.0 / half_life_hours);
    const std::size_t n = out.chains.size();
    std::vector<double> ewma(n, 0.0);
    for (Timestamp hour = first; hour <= last; hour += kSecondsPerHour) {
        std::vector<double> score(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            const auto it = counts.find({hour, c});
            const double count = it == counts.end() ? 0.0 : it->second;
            ewma[c] = alpha * ewma[c] + (1.0 - alpha) * count;
            score[c] = ewma[c] * difficulties.value_at(out.chains[c], hour);
        }
        out.timestamps.push_back(hour);
        out.scores.push_back(std::move(score));
    }
    return out;
}

std::vector<double> sorted_copy(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

// Linear-interpolation quantile on a sorted sample, alpha in [0, 1].
double quantile(const std::vector<double>& sorted, double alpha) {
    if (sorted.empty()) throw EmptyInput("quantile of empty sample");
    if (sorted.size() == 1) return sorted.front();
    const double h = alpha * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Maps an allocation expressed in `from` chain order into `to` chain order.
Eigen::VectorXd reorder_weights(const Eigen::VectorXd& w, const std::vector<std::string>& from,
                                const std::vector<std::string>& to) {
    if (from == to) return w;
    Eigen::VectorXd out(static_cast<Eigen::Index>(to.size()));
    for (std::size_t i = 0; i < to.size(); ++i) {
        const auto it = std::find(from.begin(), from.end(), to[i]);
        if (it == from.end()) {
            throw UnknownChain("chain '" + to[i] + "' missing from allocation series");
        }
        out[static_cast<Eigen::Index>(i)] = w[static_cast<Eigen::Index>(it - from.begin())];
    }
    return out;
}

} // namespace

std::vector<int> lookback_candidates() {
    std::vector<int> out;
    for (int h = 4; h <= 24; h += 6) out.push_back(h);
    for (int h = 24; h <= 144; h += 24) out.push_back(h);
    for (int h = 168; h <= 1344; h += 168) out.push_back(h);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ActualAllocationSeries actual_allocation_series(const std::vector<BlockRecord>& blocks,
                                                const DifficultySeries& difficulties,
                                                const std::string& miner_id,
                                                double half_life_hours) {
    const EwmaScores scores = ewma_scores(blocks, difficulties, miner_id, half_life_hours);

    ActualAllocationSeries out;
    out.miner_id = miner_id;
    out.chains = scores.chains;
    out.half_life_hours = half_life_hours;
    const auto n = static_cast<Eigen::Index>(scores.chains.size());
    for (std::size_t h = 0; h < scores.timestamps.size(); ++h) {
        Eigen::VectorXd w(n);
        double total = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) {
            w[c] = scores.scores[h][static_cast<std::size_t>(c)];
            total += w[c];
        }
        if (total <= 0.0) continue; // no hash evidence yet this hour
        out.timestamps.push_back(scores.timestamps[h]);
        out.allocations.emplace_back(w / total);
    }
    return out;
}

HashWeightSeries hash_weight_series(const std::vector<BlockRecord>& blocks,
                                    const DifficultySeries& difficulties,
                                    const std::string& miner_id, double half_life_hours) {
    const EwmaScores scores = ewma_scores(blocks, difficulties, miner_id, half_life_hours);

    HashWeightSeries out;
    out.miner_id = miner_id;
    out.timestamps = scores.timestamps;
    out.weights.reserve(scores.scores.size());
    for (const auto& score : scores.scores) {
        double total = 0.0;
        for (double s : score) total += s;
        out.weights.push_back(total);
    }
    return out;
}

std::vector<std::pair<Timestamp, double>> infer_risk_series(const ActualAllocationSeries& actual,
                                                            const ProfitSeries& market,
                                                            int lookback_hours,
                                                            int cooldown_hours) {
    std::vector<std::pair<Timestamp, double>> out;
    for (std::size_t i = 0; i < actual.timestamps.size(); ++i) {
        const Timestamp t = actual.timestamps[i];
        const Timestamp tail =
            t - static_cast<Timestamp>(lookback_hours + cooldown_hours) * kSecondsPerHour;
        if (!market.index_of(t) || !market.index_of(tail)) continue;
        const VolatilityMatrix sigma = volatility_matrix(market, t, lookback_hours, cooldown_hours);
        const Eigen::VectorXd w =
            reorder_weights(actual.allocations[i].weights(), actual.chains, market.chains);
        out.emplace_back(t, inferred_risk(Allocation(w), sigma));
    }
    if (out.empty()) {
        throw InsufficientHistory("no hour with enough market history for risk inference");
    }
    return out;
}

double ks_statistic(std::vector<double> xs, std::vector<double> ys) {
    if (xs.empty() || ys.empty()) throw EmptyInput("KS statistic needs non-empty samples");
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());

    const double nx = static_cast<double>(xs.size());
    const double ny = static_cast<double>(ys.size());
    std::size_t ix = 0;
    std::size_t iy = 0;
    double best = 0.0;
    while (ix < xs.size() || iy < ys.size()) {
        double v;
        if (iy >= ys.size() || (ix < xs.size() && xs[ix] <= ys[iy])) {
            v = xs[ix];
        } else {
            v = ys[iy];
        }
        while (ix < xs.size() && xs[ix] <= v) ++ix;
        while (iy < ys.size() && ys[iy] <= v) ++iy;
        best = std::max(best, std::abs(static_cast<double>(ix) / nx -
                                       static_cast<double>(iy) / ny));
    }
    return best;
}

MinerParams fit_parameters(const ActualAllocationSeries& actual, const ProfitSeries& market,
                           int cooldown_hours, const std::string& focal_chain,
                           int min_history_days, FitReport* report, FitObjective objective) {
    if (actual.timestamps.empty()) throw InsufficientHistory("empty actual allocation series");
    const Eigen::Index focal_market = market.chain_index(focal_chain);
    if (std::find(actual.chains.begin(), actual.chains.end(), focal_chain) ==
        actual.chains.end()) {
        throw UnknownChain("chain '" + focal_chain + "' missing from actual allocations");
    }

    // Overlap precondition: the actual series and the market series must share
    // at least min_history_days of hourly samples.
    std::size_t overlap = 0;
    for (Timestamp t : actual.timestamps) {
        if (market.index_of(t)) ++overlap;
    }
    if (overlap < static_cast<std::size_t>(min_history_days) * 24) {
        throw InsufficientHistory("need at least " + std::to_string(min_history_days) +
                                  " days of overlapping history, have " +
                                  std::to_string(overlap / 24) + " days");
    }

    constexpr int kRiskGridSize = 8;
    const std::vector<int> lookbacks = lookback_candidates();

    bool have_best = false;
    double best_objective = std::numeric_limits<double>::infinity();
    MinerParams best;

    for (int lookback : lookbacks) {
        // Hours of the actual series with full market coverage at this lookback.
        std::vector<std::size_t> usable;
        for (std::size_t i = 0; i < actual.timestamps.size(); ++i) {
            const Timestamp t = actual.timestamps[i];
            const Timestamp tail =
                t - static_cast<Timestamp>(lookback + cooldown_hours) * kSecondsPerHour;
            if (market.index_of(t) && market.index_of(tail)) usable.push_back(i);
        }
        if (usable.size() < 2) {
            if (report) {
                report->cells.push_back({lookback, std::numeric_limits<double>::quiet_NaN(),
                                         std::numeric_limits<double>::infinity(),
                                         std::numeric_limits<double>::infinity(),
                                         usable.size()});
            }
            continue;
        }

        std::vector<ProfitVector> mus;
        std::vector<VolatilityMatrix> sigmas;
        std::vector<double> actual_focal;
        std::vector<double> inferred;
        mus.reserve(usable.size());
        sigmas.reserve(usable.size());
        for (std::size_t i : usable) {
            const Timestamp t = actual.timestamps[i];
            mus.push_back(expected_profit_vector(market, t, lookback));
            sigmas.push_back(volatility_matrix(market, t, lookback, cooldown_hours));
            const Eigen::VectorXd w =
                reorder_weights(actual.allocations[i].weights(), actual.chains, market.chains);
            actual_focal.push_back(w[focal_market]);
            inferred.push_back(inferred_risk(Allocation(w), sigmas.back()));
        }

        const std::vector<double> sorted_risk = sorted_copy(inferred);
        const double lo = quantile(sorted_risk, 0.25);
        const double hi = quantile(sorted_risk, 0.75);

        for (int g = 0; g < kRiskGridSize; ++g) {
            // rounding on near-singular covariances can push the inferred
            // quadratic form a few ulps below zero
            const double rho = std::max(
                lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(kRiskGridSize - 1),
                0.0);
            std::vector<double> econ_focal;
            econ_focal.reserve(usable.size());
            double abs_err = 0.0;
            for (std::size_t k = 0; k < usable.size(); ++k) {
                const Allocation w = pipeline_allocation(mus[k], sigmas[k], rho);
                econ_focal.push_back(w[focal_market]);
                abs_err += std::abs(econ_focal.back() - actual_focal[k]);
            }
            const double ks = ks_statistic(econ_focal, actual_focal);
            const double mae = abs_err / static_cast<double>(usable.size());
            if (report) report->cells.push_back({lookback, rho, ks, mae, usable.size()});
            const double score = objective == FitObjective::KsDistribution ? ks : mae;
            if (!have_best || score < best_objective) {
                have_best = true;
                best_objective = score;
                best.miner_id = actual.miner_id;
                best.lookback_hours = lookback;
                best.risk = rho;
                best.fit_statistic = ks;
                best.mean_abs_error = mae;
            }
        }
    }

    if (!have_best) {
        throw InsufficientHistory("no (lookback, risk) cell could be evaluated");
    }
    return best;
}

} // namespace hashalloc
