// hashalloc: risk-constrained hash-rate allocation modeling, parameter
// fitting, inter-block-time prediction, and price-shock simulation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "hashalloc/aggregate.hpp"
#include "hashalloc/market_data.hpp"
#include "hashalloc/risk_inference.hpp"
#include "hashalloc/shock_sim.hpp"
#include "sha256.hpp"

namespace {

using hashalloc::Error;
using hashalloc::ErrorKind;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

std::string fmt(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

// RFC-4180 quoting for fields that may carry arbitrary ids.
std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Internal, "cannot write '" + path + "'");
    out << content;
}

// Every command records what it read and wrote, so a run can be audited and
// reproduced byte for byte.
void write_manifest(const std::string& out_path, const std::string& command,
                    const std::vector<std::string>& inputs, const std::string& config_digest,
                    std::optional<std::uint64_t> master_seed,
                    const std::vector<std::string>& outputs,
                    const ordered_json& extra = ordered_json::object()) {
    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["tool"] = "hashalloc";
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = command;
    manifest["inputs"] = ordered_json::array();
    for (const auto& path : inputs) {
        manifest["inputs"].push_back(
            {{"path", path}, {"sha256", hashalloc::tools::sha256_file_hex(path)}});
    }
    manifest["config_sha256"] = config_digest;
    if (master_seed) manifest["master_seed"] = *master_seed;
    manifest["outputs"] = outputs;
    for (const auto& [key, value] : extra.items()) manifest[key] = value;
    write_text_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

std::vector<hashalloc::ChainSpec> specs_for(const hashalloc::PriceSeries& prices, double subsidy,
                                            int cooldown_hours) {
    std::vector<hashalloc::ChainSpec> specs;
    for (const auto& chain : prices.chains()) {
        hashalloc::ChainSpec spec;
        spec.chain_id = chain;
        spec.coinbase_subsidy = subsidy;
        spec.cooldown_hours = cooldown_hours;
        specs.push_back(spec);
    }
    return specs;
}

// --- fit -----------------------------------------------------------------

struct FitArgs {
    std::string prices;
    std::string difficulty;
    std::string blocks;
    std::vector<std::string> miners;
    int cooldown_hours = 16;
    double subsidy = 12.5;
    std::string focal_chain = "BCH";
    int min_days = 30;
    std::string objective = "ks";
    std::string out;
};

int run_fit(const FitArgs& args) {
    const hashalloc::PriceSeries prices = hashalloc::load_price_csv(args.prices);
    const hashalloc::DifficultySeries difficulty = hashalloc::load_difficulty_csv(args.difficulty);
    const auto blocks = hashalloc::load_blocks_csv(args.blocks, prices.chains());
    const auto market = hashalloc::profit_series(
        prices, difficulty, specs_for(prices, args.subsidy, args.cooldown_hours));
    const auto objective = args.objective == "mae" ? hashalloc::FitObjective::PairedMae
                                                   : hashalloc::FitObjective::KsDistribution;

    ordered_json results = ordered_json::array();
    for (const auto& miner : args.miners) {
        const auto actual = hashalloc::actual_allocation_series(blocks, difficulty, miner);
        const hashalloc::MinerParams params =
            hashalloc::fit_parameters(actual, market, args.cooldown_hours, args.focal_chain,
                                      args.min_days, nullptr, objective);
        ordered_json row;
        row["miner"] = params.miner_id;
        row["lookback_hours"] = params.lookback_hours;
        row["risk"] = params.risk;
        row["ks"] = params.fit_statistic;
        row["mae"] = params.mean_abs_error;
        results.push_back(row);
    }
    write_text_file(args.out, results.dump(2) + "\n");

    ordered_json config;
    config["command"] = "fit";
    config["miners"] = args.miners;
    config["cooldown_hours"] = args.cooldown_hours;
    config["subsidy"] = args.subsidy;
    config["focal_chain"] = args.focal_chain;
    config["min_days"] = args.min_days;
    config["objective"] = args.objective;
    write_manifest(args.out, "fit", {args.prices, args.difficulty, args.blocks},
                   hashalloc::tools::sha256_hex(config.dump()), std::nullopt, {args.out});
    return 0;
}

// --- allocate --------------------------------------------------------------

struct AllocateArgs {
    std::string prices;
    std::string difficulty;
    std::string params;
    std::string hash_weights; // JSON {miner: weight}
    std::string blocks;       // alternative weight source
    int cooldown_hours = 16;
    double subsidy = 12.5;
    std::string focal_chain = "BCH";
    std::string out;
};

std::vector<hashalloc::MinerParams> load_params_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hashalloc::ParseError(path + ": cannot open file");
    ordered_json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw hashalloc::ParseError(path + ": " + std::string(e.what()));
    }
    if (!doc.is_array() || doc.empty()) {
        throw hashalloc::ParseError(path + ": expected a non-empty JSON array of miner params");
    }
    std::vector<hashalloc::MinerParams> params;
    for (const auto& row : doc) {
        hashalloc::MinerParams p;
        p.miner_id = row.at("miner").get<std::string>();
        p.lookback_hours = row.at("lookback_hours").get<int>();
        p.risk = row.at("risk").get<double>();
        p.fit_statistic = row.value("ks", 0.0);
        p.mean_abs_error = row.value("mae", 0.0);
        params.push_back(std::move(p));
    }
    return params;
}

int run_allocate(const AllocateArgs& args) {
    const hashalloc::PriceSeries prices = hashalloc::load_price_csv(args.prices);
    const hashalloc::DifficultySeries difficulty = hashalloc::load_difficulty_csv(args.difficulty);
    const auto params = load_params_json(args.params);
    const auto market = hashalloc::profit_series(
        prices, difficulty, specs_for(prices, args.subsidy, args.cooldown_hours));

    std::vector<std::string> inputs{args.prices, args.difficulty, args.params};
    std::vector<hashalloc::HashWeightSeries> weights;
    if (!args.hash_weights.empty()) {
        inputs.push_back(args.hash_weights);
        std::ifstream in(args.hash_weights);
        if (!in) throw hashalloc::ParseError(args.hash_weights + ": cannot open file");
        ordered_json doc;
        try {
            in >> doc;
        } catch (const std::exception& e) {
            throw hashalloc::ParseError(args.hash_weights + ": " + std::string(e.what()));
        }
        for (const auto& p : params) {
            if (!doc.contains(p.miner_id)) {
                throw hashalloc::ConfigError("no hash weight for miner '" + p.miner_id + "'");
            }
            hashalloc::HashWeightSeries series;
            series.miner_id = p.miner_id;
            series.timestamps = {prices.start()};
            series.weights = {doc[p.miner_id].get<double>()};
            weights.push_back(std::move(series));
        }
    } else {
        inputs.push_back(args.blocks);
        const auto blocks = hashalloc::load_blocks_csv(args.blocks, prices.chains());
        for (const auto& p : params) {
            weights.push_back(hashalloc::hash_weight_series(blocks, difficulty, p.miner_id));
        }
    }

    const hashalloc::EconomicSeries series = hashalloc::economic_allocation_series_detailed(
        params, market, weights, args.cooldown_hours);

    const Eigen::Index focal = market.chain_index(args.focal_chain);
    const auto n = static_cast<Eigen::Index>(market.chains.size());
    std::vector<Eigen::Index> price_idx;
    for (const auto& chain : market.chains) price_idx.push_back(prices.chain_index(chain));

    std::ostringstream csv;
    csv << "timestamp";
    for (const auto& chain : market.chains) csv << ',' << csv_field(chain + "_allocation");
    for (const auto& p : params) csv << ',' << csv_field("miner_" + p.miner_id);
    csv << ",dari,price_rel\n";
    for (std::size_t i = 0; i < series.aggregate.timestamps.size(); ++i) {
        const hashalloc::Timestamp t = series.aggregate.timestamps[i];
        csv << t;
        for (Eigen::Index c = 0; c < n; ++c) {
            csv << ',' << fmt(series.aggregate.allocations[i][c]);
        }
        for (std::size_t j = 0; j < params.size(); ++j) {
            csv << ',' << fmt(series.per_miner[j][i][focal]);
        }
        const auto hour = market.index_of(t);
        Eigen::VectorXd rewards(n);
        Eigen::VectorXd diffs(n);
        Eigen::VectorXd price_vec(n);
        for (Eigen::Index c = 0; c < n; ++c) {
            price_vec[c] = prices.price(price_idx[static_cast<std::size_t>(c)], *hour);
            rewards[c] = args.subsidy * price_vec[c];
            diffs[c] = difficulty.value_at(market.chains[static_cast<std::size_t>(c)], t);
        }
        csv << ',' << fmt(hashalloc::baseline_dari_allocation(rewards, diffs)[focal]);
        csv << ',' << fmt(hashalloc::baseline_price_allocation(price_vec)[focal]);
        csv << '\n';
    }
    write_text_file(args.out, csv.str());

    ordered_json config;
    config["command"] = "allocate";
    config["cooldown_hours"] = args.cooldown_hours;
    config["subsidy"] = args.subsidy;
    config["focal_chain"] = args.focal_chain;
    config["weights_source"] = args.hash_weights.empty() ? "blocks" : "file";
    write_manifest(args.out, "allocate", inputs, hashalloc::tools::sha256_hex(config.dump()),
                   std::nullopt, {args.out});
    return 0;
}

// --- predict-ibt -----------------------------------------------------------

struct PredictArgs {
    std::string allocations;
    std::string actual;
    double target = 600.0;
    int period_hours = 6;
    int rolling_days = 7;
    std::string focal_chain = "BCH";
    std::string out;
};

hashalloc::AggregateSeries read_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hashalloc::ParseError(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw hashalloc::ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    std::stringstream hs(line);
    std::string field;
    while (std::getline(hs, field, ',')) header.push_back(field);
    if (header.empty() || header[0] != "timestamp") {
        throw hashalloc::ParseError(path + ": first column must be 'timestamp'");
    }

    hashalloc::AggregateSeries agg;
    std::vector<std::size_t> columns;
    const std::string suffix = "_allocation";
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i].size() > suffix.size() &&
            header[i].compare(header[i].size() - suffix.size(), suffix.size(), suffix) == 0) {
            agg.chains.push_back(header[i].substr(0, header[i].size() - suffix.size()));
            columns.push_back(i);
        }
    }
    if (agg.chains.empty()) {
        throw hashalloc::ParseError(path + ": no <chain>_allocation columns found");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != header.size()) {
            throw hashalloc::ParseError(path + ":" + std::to_string(line_no) +
                                        ": wrong field count");
        }
        agg.timestamps.push_back(std::stoll(fields[0]));
        Eigen::VectorXd w(static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            w[static_cast<Eigen::Index>(c)] = std::stod(fields[columns[c]]);
        }
        agg.allocations.push_back(hashalloc::Allocation(w / w.sum()));
    }
    if (agg.timestamps.empty()) throw hashalloc::ParseError(path + ": no data rows");
    return agg;
}

int run_predict(const PredictArgs& args) {
    const hashalloc::AggregateSeries agg = read_aggregate_csv(args.allocations);
    const auto n = static_cast<Eigen::Index>(agg.chains.size());
    const Eigen::VectorXd targets = Eigen::VectorXd::Constant(n, args.target);
    const hashalloc::IbtPrediction prediction =
        hashalloc::predict_ibt_series(agg, targets, args.period_hours, args.rolling_days);

    std::ostringstream csv;
    csv << "period_start";
    for (const auto& chain : agg.chains) csv << ",ibt_change_" << chain;
    csv << '\n';
    for (std::size_t i = 0; i < prediction.period_starts.size(); ++i) {
        csv << prediction.period_starts[i];
        for (Eigen::Index c = 0; c < n; ++c) csv << ',' << fmt(prediction.ratios[i][c]);
        csv << '\n';
    }
    write_text_file(args.out, csv.str());

    std::vector<std::string> inputs{args.allocations};
    if (!args.actual.empty()) {
        inputs.push_back(args.actual);
        // actual change series: `period_start,<ratio>` rows; smoothed with the
        // same trailing window before the comparison
        std::ifstream in(args.actual);
        if (!in) throw hashalloc::ParseError(args.actual + ": cannot open file");
        std::string line;
        std::getline(in, line); // header
        std::vector<std::pair<hashalloc::Timestamp, double>> raw;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                throw hashalloc::ParseError(args.actual + ": expected two columns");
            }
            raw.emplace_back(std::stoll(line.substr(0, comma)),
                             std::stod(line.substr(comma + 1)));
        }
        const auto window = static_cast<std::size_t>(args.rolling_days * 24 / args.period_hours);
        if (raw.size() < window) {
            throw hashalloc::InsufficientHistory("actual series shorter than the rolling window");
        }
        std::map<hashalloc::Timestamp, double> actual_rolled;
        for (std::size_t i = window - 1; i < raw.size(); ++i) {
            double sum = 0.0;
            for (std::size_t j = i + 1 - window; j <= i; ++j) sum += raw[j].second;
            actual_rolled[raw[i].first] = sum / static_cast<double>(window);
        }
        const auto focal_it =
            std::find(agg.chains.begin(), agg.chains.end(), args.focal_chain);
        if (focal_it == agg.chains.end()) {
            throw hashalloc::UnknownChain("no chain '" + args.focal_chain + "' in allocations");
        }
        const auto focal = static_cast<Eigen::Index>(focal_it - agg.chains.begin());
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < prediction.period_starts.size(); ++i) {
            const auto it = actual_rolled.find(prediction.period_starts[i]);
            if (it == actual_rolled.end()) continue;
            xs.push_back(prediction.ratios[i][focal]);
            ys.push_back(it->second);
        }
        if (xs.size() < 2) {
            throw hashalloc::InsufficientHistory("fewer than two overlapping periods");
        }
        ordered_json metrics;
        metrics["pearson"] = hashalloc::pearson(xs, ys);
        metrics["mae"] = hashalloc::mean_abs_error(xs, ys);
        std::cout << metrics.dump() << "\n";
    }

    ordered_json config;
    config["command"] = "predict-ibt";
    config["target"] = args.target;
    config["period_hours"] = args.period_hours;
    config["rolling_days"] = args.rolling_days;
    config["focal_chain"] = args.focal_chain;
    write_manifest(args.out, "predict-ibt", inputs, hashalloc::tools::sha256_hex(config.dump()),
                   std::nullopt, {args.out});
    return 0;
}

// --- shock -------------------------------------------------------------

struct ShockArgs {
    double multiplier = 0.0;
    bool multiplier_set = false;
    int trials = -1;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string config_path;
    std::string trace_dir;
    std::string gnuplot_script;
    std::string out;
};

hashalloc::ShockConfig parse_shock_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hashalloc::ConfigError(path + ": cannot open config file");
    ordered_json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw hashalloc::ConfigError(path + ": " + std::string(e.what()));
    }

    hashalloc::ShockConfig config = hashalloc::default_shock_config();
    static const std::set<std::string> known{
        "schema_version",       "shock_multiplier",     "base_price_bch",
        "base_price_btc",       "noise_fraction",       "trials",
        "warmup_days",          "horizon_days",         "master_seed",
        "target_ibt_seconds",   "cooldown_hours",       "coinbase_subsidy",
        "inelastic_fraction",   "allocation_floor",     "bch_window_blocks",
        "btc_epoch_blocks",     "bch_median_of_three",  "threads",
        "summary_preshock_hours", "fixed_allocation_bch", "miners"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known.count(key)) {
            throw hashalloc::ConfigError(path + ": unknown config key '" + key + "'");
        }
    }
    if (doc.value("schema_version", 1) != 1) {
        throw hashalloc::ConfigError(path + ": unsupported schema_version");
    }

    config.shock_multiplier = doc.value("shock_multiplier", config.shock_multiplier);
    config.base_price_bch = doc.value("base_price_bch", config.base_price_bch);
    config.base_price_btc = doc.value("base_price_btc", config.base_price_btc);
    config.noise_fraction = doc.value("noise_fraction", config.noise_fraction);
    config.trials = doc.value("trials", config.trials);
    config.warmup_days = doc.value("warmup_days", config.warmup_days);
    config.horizon_days = doc.value("horizon_days", config.horizon_days);
    config.master_seed = doc.value("master_seed", config.master_seed);
    config.target_ibt_s = doc.value("target_ibt_seconds", config.target_ibt_s);
    config.cooldown_hours = doc.value("cooldown_hours", config.cooldown_hours);
    config.coinbase_subsidy = doc.value("coinbase_subsidy", config.coinbase_subsidy);
    config.inelastic_fraction = doc.value("inelastic_fraction", config.inelastic_fraction);
    config.allocation_floor = doc.value("allocation_floor", config.allocation_floor);
    config.bch_window_blocks = doc.value("bch_window_blocks", config.bch_window_blocks);
    config.btc_epoch_blocks = doc.value("btc_epoch_blocks", config.btc_epoch_blocks);
    config.bch_median_of_three = doc.value("bch_median_of_three", config.bch_median_of_three);
    config.threads = doc.value("threads", config.threads);
    config.summary_preshock_hours =
        doc.value("summary_preshock_hours", config.summary_preshock_hours);
    if (doc.contains("fixed_allocation_bch") && !doc["fixed_allocation_bch"].is_null()) {
        config.fixed_allocation_bch = doc["fixed_allocation_bch"].get<double>();
    }
    if (doc.contains("miners")) {
        config.miners.clear();
        for (const auto& row : doc["miners"]) {
            hashalloc::SimMinerSpec miner;
            miner.miner_id = row.at("miner").get<std::string>();
            miner.lookback_hours = row.at("lookback_hours").get<int>();
            miner.risk = row.at("risk").get<double>();
            miner.hash_weight = row.value("hash_weight", 1.0);
            config.miners.push_back(std::move(miner));
        }
    }
    return config;
}

// Canonical experiment description: everything that affects the numbers, and
// nothing that only affects execution (thread count, trace flags).
ordered_json canonical_shock_config(const hashalloc::ShockConfig& config) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["shock_multiplier"] = config.shock_multiplier;
    doc["base_price_bch"] = config.base_price_bch;
    doc["base_price_btc"] = config.base_price_btc;
    doc["noise_fraction"] = config.noise_fraction;
    doc["trials"] = config.trials;
    doc["warmup_days"] = config.warmup_days;
    doc["horizon_days"] = config.horizon_days;
    doc["master_seed"] = config.master_seed;
    doc["target_ibt_seconds"] = config.target_ibt_s;
    doc["cooldown_hours"] = config.cooldown_hours;
    doc["coinbase_subsidy"] = config.coinbase_subsidy;
    doc["inelastic_fraction"] = config.inelastic_fraction;
    doc["allocation_floor"] = config.allocation_floor;
    doc["bch_window_blocks"] = config.bch_window_blocks;
    doc["btc_epoch_blocks"] = config.btc_epoch_blocks;
    doc["bch_median_of_three"] = config.bch_median_of_three;
    doc["summary_preshock_hours"] = config.summary_preshock_hours;
    if (config.fixed_allocation_bch) {
        doc["fixed_allocation_bch"] = *config.fixed_allocation_bch;
    } else {
        doc["fixed_allocation_bch"] = nullptr;
    }
    doc["miners"] = ordered_json::array();
    for (const auto& miner : config.miners) {
        doc["miners"].push_back({{"miner", miner.miner_id},
                                 {"lookback_hours", miner.lookback_hours},
                                 {"risk", miner.risk},
                                 {"hash_weight", miner.hash_weight}});
    }
    return doc;
}

int run_shock(const ShockArgs& args) {
    hashalloc::ShockConfig config = args.config_path.empty()
                                        ? hashalloc::default_shock_config()
                                        : parse_shock_config(args.config_path);
    if (args.multiplier_set) config.shock_multiplier = args.multiplier;
    if (args.trials > 0) config.trials = args.trials;
    if (args.threads > 0) config.threads = args.threads;
    config.master_seed = args.seed;
    hashalloc::validate_shock_config(config);

    const hashalloc::ExperimentSummary summary = hashalloc::run_experiment(config);

    std::ostringstream csv;
    csv << "bucket_start_hours_from_shock,median_bch_allocation,mean_bch_ibt_seconds,"
           "mean_btc_ibt_seconds,trials\n";
    for (const auto& bucket : summary.buckets) {
        csv << bucket.start_hours_from_shock << ',';
        if (!std::isnan(bucket.median_bch_allocation)) csv << fmt(bucket.median_bch_allocation);
        csv << ',';
        if (!std::isnan(bucket.mean_bch_ibt_s)) csv << fmt(bucket.mean_bch_ibt_s);
        csv << ',';
        if (!std::isnan(bucket.mean_btc_ibt_s)) csv << fmt(bucket.mean_btc_ibt_s);
        csv << ',' << bucket.trials << '\n';
    }
    write_text_file(args.out, csv.str());

    std::vector<std::string> outputs{args.out};
    if (!args.trace_dir.empty()) {
        std::filesystem::create_directories(args.trace_dir);
        for (int trial = 0; trial < config.trials; ++trial) {
            const hashalloc::TrialResult result = hashalloc::run_trial(config, trial);
            std::ostringstream trace;
            trace << "chain,timestamp_s,difficulty,ibt_s\n";
            for (std::size_t chain = 0; chain < result.blocks.size(); ++chain) {
                for (const auto& block : result.blocks[chain]) {
                    trace << result.chains[chain] << ',' << fmt(block.timestamp_s) << ','
                          << fmt(block.difficulty) << ',' << fmt(block.ibt_s) << '\n';
                }
            }
            const std::string path = (std::filesystem::path(args.trace_dir) /
                                      ("trial_" + std::to_string(trial) + "_blocks.csv"))
                                         .string();
            write_text_file(path, trace.str());
            outputs.push_back(path);
        }
    }
    if (!args.gnuplot_script.empty()) {
        std::ostringstream plot;
        plot << "set datafile separator ','\n"
             << "set xlabel 'hours from shock'\n"
             << "set key left top\n"
             << "set terminal pngcairo size 1000,700\n"
             << "set output 'shock_summary.png'\n"
             << "set multiplot layout 2,1\n"
             << "set ylabel 'median BCH allocation'\n"
             << "plot '" << args.out << "' every ::1 using 1:2 with lines title 'allocation'\n"
             << "set ylabel 'mean IBT (s)'\n"
             << "plot '" << args.out << "' every ::1 using 1:3 with lines title 'BCH', \\\n"
             << "     '" << args.out << "' every ::1 using 1:4 with lines title 'BTC', \\\n"
             << "     600 with lines dashtype 2 title 'target'\n"
             << "unset multiplot\n";
        write_text_file(args.gnuplot_script, plot.str());
        outputs.push_back(args.gnuplot_script);
    }

    std::vector<std::string> inputs;
    if (!args.config_path.empty()) inputs.push_back(args.config_path);
    ordered_json extra;
    extra["floor_bound_hours_total"] = summary.floor_bound_hours_total;
    write_manifest(args.out, "shock", inputs,
                   hashalloc::tools::sha256_hex(canonical_shock_config(config).dump()),
                   config.master_seed, outputs, extra);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-constrained miner hash-rate allocation toolkit"};
    app.require_subcommand(1);

    FitArgs fit;
    CLI::App* fit_cmd = app.add_subcommand(
        "fit", "Fit per-miner lookback and risk from price, difficulty, and block data");
    fit_cmd->add_option("--prices", fit.prices, "Price CSV (timestamp,chain,price_usd)")
        ->required();
    fit_cmd->add_option("--difficulty", fit.difficulty, "Difficulty CSV")->required();
    fit_cmd->add_option("--blocks", fit.blocks, "Blocks CSV")->required();
    fit_cmd->add_option("--miner", fit.miners, "Miner id (repeatable)")->required();
    fit_cmd->add_option("--cooldown-hours", fit.cooldown_hours, "Coinbase maturity in hours");
    fit_cmd->add_option("--subsidy", fit.subsidy, "Coinbase subsidy in coins per block");
    fit_cmd->add_option("--focal-chain", fit.focal_chain, "Chain whose fraction is fitted");
    fit_cmd->add_option("--min-days", fit.min_days, "Minimum days of overlapping history");
    fit_cmd->add_option("--objective", fit.objective, "Fit objective: ks or mae")
        ->check(CLI::IsMember({"ks", "mae"}));
    fit_cmd->add_option("--out", fit.out, "Output JSON path")->required();

    AllocateArgs alloc;
    CLI::App* alloc_cmd = app.add_subcommand(
        "allocate", "Produce hourly economic allocations, aggregate, and baselines");
    alloc_cmd->add_option("--prices", alloc.prices, "Price CSV")->required();
    alloc_cmd->add_option("--difficulty", alloc.difficulty, "Difficulty CSV")->required();
    alloc_cmd->add_option("--params", alloc.params, "Fitted miner params JSON")->required();
    auto* weights_opt =
        alloc_cmd->add_option("--hash-weights", alloc.hash_weights, "Static weights JSON");
    alloc_cmd->add_option("--blocks", alloc.blocks, "Blocks CSV for derived hash weights")
        ->excludes(weights_opt);
    alloc_cmd->add_option("--cooldown-hours", alloc.cooldown_hours, "Coinbase maturity in hours");
    alloc_cmd->add_option("--subsidy", alloc.subsidy, "Coinbase subsidy in coins per block");
    alloc_cmd->add_option("--focal-chain", alloc.focal_chain, "Chain for per-miner columns");
    alloc_cmd->add_option("--out", alloc.out, "Output CSV path")->required();

    PredictArgs predict;
    CLI::App* predict_cmd = app.add_subcommand(
        "predict-ibt", "Predict inter-block-time change ratios from an allocation series");
    predict_cmd->add_option("--allocations", predict.allocations, "Allocation CSV from allocate")
        ->required();
    predict_cmd->add_option("--actual", predict.actual,
                            "Actual IBT-change CSV (period_start,ratio) to score against");
    predict_cmd->add_option("--target", predict.target, "Target IBT in seconds");
    predict_cmd->add_option("--period-hours", predict.period_hours, "Comparison period length");
    predict_cmd->add_option("--rolling-days", predict.rolling_days, "Rolling average window");
    predict_cmd->add_option("--focal-chain", predict.focal_chain, "Chain scored against actual");
    predict_cmd->add_option("--out", predict.out, "Output CSV path")->required();

    ShockArgs shock;
    CLI::App* shock_cmd =
        app.add_subcommand("shock", "Monte Carlo price-shock experiment against the DAAs");
    shock_cmd->add_option("--multiplier", shock.multiplier, "Shock multiplier x in (0, 4]")
        ->each([&shock](const std::string&) { shock.multiplier_set = true; });
    shock_cmd->add_option("--trials", shock.trials, "Number of Monte Carlo trials");
    shock_cmd->add_option("--seed", shock.seed, "Master seed (required)")->required();
    shock_cmd->add_option("--threads", shock.threads, "Worker threads");
    shock_cmd->add_option("--config", shock.config_path, "Experiment config JSON");
    shock_cmd->add_option("--trace-dir", shock.trace_dir, "Directory for per-trial block dumps");
    shock_cmd->add_option("--gnuplot-script", shock.gnuplot_script,
                          "Write a companion gnuplot script here");
    shock_cmd->add_option("--out", shock.out, "Summary CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit_cmd->parsed()) return run_fit(fit);
        if (alloc_cmd->parsed()) return run_allocate(alloc);
        if (predict_cmd->parsed()) return run_predict(predict);
        if (shock_cmd->parsed()) return run_shock(shock);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Validation:
                return 2;
            case ErrorKind::Insufficiency:
                return 3;
            case ErrorKind::Internal:
                return 4;
        }
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
