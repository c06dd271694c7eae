#include "hashalloc/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace hashalloc {

namespace {

constexpr int kMaxFillHours = 6;

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRow> read_csv(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");

    std::vector<CsvRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != expected_header) {
                throw ParseError(path + ":1: expected header '" + expected_header + "', got '" +
                                 line + "'");
            }
            continue;
        }
        CsvRow row;
        row.line = line_no;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) row.fields.push_back(field);
        if (!line.empty() && line.back() == ',') row.fields.emplace_back();
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_double(const std::string& path, std::size_t line, const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(path + ":" + std::to_string(line) + ": bad number '" + text + "'");
    }
    return value;
}

std::int64_t parse_int(const std::string& path, std::size_t line, const std::string& text) {
    std::int64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(path + ":" + std::to_string(line) + ": bad integer '" + text + "'");
    }
    return value;
}

void expect_fields(const std::string& path, const CsvRow& row, std::size_t n) {
    if (row.fields.size() != n) {
        throw ParseError(path + ":" + std::to_string(row.line) + ": expected " +
                         std::to_string(n) + " fields, got " + std::to_string(row.fields.size()));
    }
}

} // namespace

PriceSeries::PriceSeries(std::vector<std::string> chains, Timestamp start,
                         std::vector<std::vector<double>> prices_per_chain)
    : chains_(std::move(chains)), start_(start), prices_(std::move(prices_per_chain)) {
    if (chains_.empty() || prices_.size() != chains_.size()) {
        throw Error(ErrorKind::Validation, "price series chain arrays are inconsistent");
    }
    const std::size_t hours = prices_.front().size();
    for (const auto& p : prices_) {
        if (p.size() != hours || hours == 0) {
            throw Error(ErrorKind::Validation, "price series chains have unequal lengths");
        }
        for (double v : p) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw NonPositivePrice("price series contains a non-positive price");
            }
        }
    }
}

Eigen::Index PriceSeries::chain_index(const std::string& chain_id) const {
    for (std::size_t i = 0; i < chains_.size(); ++i) {
        if (chains_[i] == chain_id) return static_cast<Eigen::Index>(i);
    }
    throw UnknownChain("chain '" + chain_id + "' not present in price series");
}

std::optional<std::size_t> PriceSeries::index_of(Timestamp t) const {
    if (t < start_ || (t - start_) % kSecondsPerHour != 0) return std::nullopt;
    const auto idx = static_cast<std::size_t>((t - start_) / kSecondsPerHour);
    if (idx >= hours()) return std::nullopt;
    return idx;
}

DifficultySeries::DifficultySeries(std::map<std::string, Samples> samples)
    : samples_(std::move(samples)) {
    for (const auto& [chain, series] : samples_) {
        Timestamp prev = std::numeric_limits<Timestamp>::min();
        for (const auto& [ts, diff] : series) {
            if (ts <= prev) {
                throw UnsortedTimestamps("difficulty series for '" + chain +
                                         "' has non-increasing timestamps");
            }
            if (!(diff > 0.0) || !std::isfinite(diff)) {
                throw NonPositiveInput("difficulty series for '" + chain +
                                       "' has non-positive difficulty");
            }
            prev = ts;
        }
    }
}

std::vector<std::string> DifficultySeries::chains() const {
    std::vector<std::string> out;
    out.reserve(samples_.size());
    for (const auto& [chain, _] : samples_) out.push_back(chain);
    return out;
}

bool DifficultySeries::covers(const std::string& chain_id, Timestamp t) const {
    auto it = samples_.find(chain_id);
    return it != samples_.end() && !it->second.empty() && it->second.front().first <= t;
}

double DifficultySeries::value_at(const std::string& chain_id, Timestamp t) const {
    auto it = samples_.find(chain_id);
    if (it == samples_.end() || it->second.empty()) {
        throw MissingDifficulty("no difficulty samples for chain '" + chain_id + "'");
    }
    const Samples& s = it->second;
    auto pos = std::upper_bound(s.begin(), s.end(), t,
                                [](Timestamp v, const auto& sample) { return v < sample.first; });
    if (pos == s.begin()) {
        throw MissingDifficulty("no difficulty for chain '" + chain_id + "' at or before " +
                                std::to_string(t));
    }
    return std::prev(pos)->second;
}

std::optional<std::size_t> ProfitSeries::index_of(Timestamp t) const {
    if (t < start_ts || (t - start_ts) % kSecondsPerHour != 0) return std::nullopt;
    const auto idx = static_cast<std::size_t>((t - start_ts) / kSecondsPerHour);
    if (idx >= values.size()) return std::nullopt;
    return idx;
}

Eigen::Index ProfitSeries::chain_index(const std::string& chain_id) const {
    for (std::size_t i = 0; i < chains.size(); ++i) {
        if (chains[i] == chain_id) return static_cast<Eigen::Index>(i);
    }
    throw UnknownChain("chain '" + chain_id + "' not present in profit series");
}

PriceSeries load_price_csv(const std::string& path) {
    const auto rows = read_csv(path, "timestamp,chain,price_usd");
    if (rows.empty()) throw ParseError(path + ": no data rows");

    std::vector<std::string> chains;                          // first-appearance order
    std::map<std::string, std::vector<std::pair<Timestamp, double>>> per_chain;
    for (const auto& row : rows) {
        expect_fields(path, row, 3);
        const Timestamp ts = parse_int(path, row.line, row.fields[0]);
        const std::string& chain = row.fields[1];
        const double price = parse_double(path, row.line, row.fields[2]);
        if (ts % kSecondsPerHour != 0) {
            throw ParseError(path + ":" + std::to_string(row.line) +
                             ": timestamp not aligned to a whole hour");
        }
        if (!(price > 0.0) || !std::isfinite(price)) {
            throw NonPositivePrice(path + ":" + std::to_string(row.line) +
                                   ": non-positive price for chain '" + chain + "'");
        }
        auto [it, inserted] = per_chain.try_emplace(chain);
        if (inserted) chains.push_back(chain);
        if (!it->second.empty() && ts <= it->second.back().first) {
            throw UnsortedTimestamps(path + ":" + std::to_string(row.line) +
                                     ": timestamps for chain '" + chain +
                                     "' are not strictly increasing");
        }
        it->second.emplace_back(ts, price);
    }

    Timestamp start = std::numeric_limits<Timestamp>::max();
    Timestamp finish = std::numeric_limits<Timestamp>::min();
    for (const auto& [chain, samples] : per_chain) {
        start = std::min(start, samples.front().first);
        finish = std::max(finish, samples.back().first);
    }

    const auto hours = static_cast<std::size_t>((finish - start) / kSecondsPerHour) + 1;
    std::vector<std::vector<double>> grid(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& samples = per_chain[chains[c]];
        if (samples.front().first != start) {
            throw ParseError(path + ": chain '" + chains[c] +
                             "' starts after the series start; leading gaps cannot be filled");
        }
        auto& out = grid[c];
        out.reserve(hours);
        std::size_t cursor = 0;
        int consecutive_fills = 0;
        for (std::size_t h = 0; h < hours; ++h) {
            const Timestamp ts = start + static_cast<Timestamp>(h) * kSecondsPerHour;
            if (cursor < samples.size() && samples[cursor].first == ts) {
                out.push_back(samples[cursor].second);
                ++cursor;
                consecutive_fills = 0;
            } else {
                if (++consecutive_fills > kMaxFillHours) {
                    throw ParseError(path + ": chain '" + chains[c] + "' has a gap longer than " +
                                     std::to_string(kMaxFillHours) + " hours around " +
                                     std::to_string(ts));
                }
                out.push_back(out.back());
            }
        }
    }
    return PriceSeries(std::move(chains), start, std::move(grid));
}

DifficultySeries load_difficulty_csv(const std::string& path) {
    const auto rows = read_csv(path, "timestamp,chain,difficulty");
    if (rows.empty()) throw ParseError(path + ": no data rows");

    std::map<std::string, DifficultySeries::Samples> per_chain;
    for (const auto& row : rows) {
        expect_fields(path, row, 3);
        const Timestamp ts = parse_int(path, row.line, row.fields[0]);
        const std::string& chain = row.fields[1];
        const double difficulty = parse_double(path, row.line, row.fields[2]);
        auto& samples = per_chain[chain];
        if (!samples.empty() && ts <= samples.back().first) {
            throw UnsortedTimestamps(path + ":" + std::to_string(row.line) +
                                     ": timestamps for chain '" + chain +
                                     "' are not strictly increasing");
        }
        if (!(difficulty > 0.0) || !std::isfinite(difficulty)) {
            throw NonPositiveInput(path + ":" + std::to_string(row.line) +
                                   ": non-positive difficulty");
        }
        samples.emplace_back(ts, difficulty);
    }
    return DifficultySeries(std::move(per_chain));
}

std::vector<BlockRecord> load_blocks_csv(const std::string& path,
                                         const std::vector<std::string>& known_chains) {
    const auto rows = read_csv(path, "chain,height,timestamp,miner,difficulty");
    std::vector<BlockRecord> blocks;
    blocks.reserve(rows.size());
    std::set<std::pair<std::string, std::int64_t>> seen;
    for (const auto& row : rows) {
        expect_fields(path, row, 5);
        BlockRecord record;
        record.chain_id = row.fields[0];
        record.height = parse_int(path, row.line, row.fields[1]);
        record.timestamp = parse_int(path, row.line, row.fields[2]);
        record.miner_id = row.fields[3];
        record.difficulty = parse_double(path, row.line, row.fields[4]);

        if (std::find(known_chains.begin(), known_chains.end(), record.chain_id) ==
            known_chains.end()) {
            throw UnknownChain(path + ":" + std::to_string(row.line) + ": unknown chain '" +
                               record.chain_id + "'");
        }
        if (record.height < 0) {
            throw ParseError(path + ":" + std::to_string(row.line) + ": negative height");
        }
        if (!(record.difficulty > 0.0) || !std::isfinite(record.difficulty)) {
            throw NonPositiveInput(path + ":" + std::to_string(row.line) +
                                   ": non-positive difficulty");
        }
        if (!seen.emplace(record.chain_id, record.height).second) {
            throw DuplicateBlock(path + ":" + std::to_string(row.line) + ": duplicate block " +
                                 record.chain_id + "/" + std::to_string(record.height));
        }
        blocks.push_back(std::move(record));
    }
    return blocks;
}

ProfitVector profit_vector(const Eigen::VectorXd& rewards_usd,
                           const Eigen::VectorXd& difficulties) {
    if (rewards_usd.size() != difficulties.size()) {
        throw DimensionMismatch("reward and difficulty vectors differ in length");
    }
    if (rewards_usd.size() < 1) throw DimensionMismatch("empty reward vector");
    if ((rewards_usd.array() <= 0.0).any() || (difficulties.array() <= 0.0).any()) {
        throw NonPositiveInput("profit vector inputs must be strictly positive");
    }
    if (!rewards_usd.allFinite() || !difficulties.allFinite()) {
        throw NonFiniteInput("profit vector inputs must be finite");
    }
    const double scale = difficulties.sum() / rewards_usd.sum();
    return ProfitVector((rewards_usd.array() / difficulties.array()).matrix() * scale);
}

ProfitSeries profit_series(const PriceSeries& prices, const DifficultySeries& difficulties,
                           const std::vector<ChainSpec>& specs) {
    if (specs.empty()) throw ConfigError("profit series needs at least one chain spec");
    for (const auto& spec : specs) validate_chain_spec(spec);

    ProfitSeries out;
    out.start_ts = prices.start();
    std::vector<Eigen::Index> price_idx;
    for (const auto& spec : specs) {
        out.chains.push_back(spec.chain_id);
        price_idx.push_back(prices.chain_index(spec.chain_id));
    }

    const auto n = static_cast<Eigen::Index>(specs.size());
    out.values.reserve(prices.hours());
    Eigen::VectorXd rewards(n);
    Eigen::VectorXd diffs(n);
    for (std::size_t h = 0; h < prices.hours(); ++h) {
        const Timestamp ts = prices.timestamp(h);
        for (Eigen::Index i = 0; i < n; ++i) {
            rewards[i] = specs[i].coinbase_subsidy * prices.price(price_idx[i], h);
            diffs[i] = difficulties.value_at(specs[i].chain_id, ts);
        }
        out.values.push_back(profit_vector(rewards, diffs).values());
    }
    return out;
}

ProfitVector expected_profit_vector(const ProfitSeries& series, Timestamp t, int lookback_hours) {
    if (lookback_hours < 0) throw ConfigError("lookback must be non-negative");
    const auto hi = series.index_of(t);
    const auto lo = series.index_of(t - static_cast<Timestamp>(lookback_hours) * kSecondsPerHour);
    if (!hi || !lo) {
        throw InsufficientHistory("profit series does not cover the expectation window");
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(series.values.front().size());
    for (std::size_t i = *lo; i <= *hi; ++i) sum += series.values[i];
    return ProfitVector(sum / static_cast<double>(*hi - *lo + 1));
}

VolatilityMatrix volatility_matrix(const ProfitSeries& series, Timestamp t, int lookback_hours,
                                   int cooldown_hours) {
    if (lookback_hours < 0 || cooldown_hours < 0) {
        throw ConfigError("lookback and cooldown must be non-negative");
    }
    const auto hi = series.index_of(t);
    const auto lo = series.index_of(t - static_cast<Timestamp>(lookback_hours) * kSecondsPerHour);
    const auto tail = series.index_of(
        t - static_cast<Timestamp>(lookback_hours + cooldown_hours) * kSecondsPerHour);
    if (!hi || !lo || !tail) {
        throw InsufficientHistory("profit series does not cover the covariance window");
    }
    const std::size_t m = *hi - *lo + 1;
    if (m < 2) {
        throw InsufficientHistory("covariance window must contain at least two difference vectors");
    }

    const auto n = series.values.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::VectorXd> diffs;
    diffs.reserve(m);
    for (std::size_t x = *lo; x <= *hi; ++x) {
        diffs.push_back(series.values[x] - series.values[x - static_cast<std::size_t>(cooldown_hours)]);
        mean += diffs.back();
    }
    mean /= static_cast<double>(m);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& d : diffs) {
        const Eigen::VectorXd centered = d - mean;
        cov.selfadjointView<Eigen::Upper>().rankUpdate(centered, 1.0);
    }
    cov /= static_cast<double>(m - 1);
    Eigen::MatrixXd full = cov.selfadjointView<Eigen::Upper>(); // mirror for exact symmetry
    return VolatilityMatrix(std::move(full));
}

} // namespace hashalloc
