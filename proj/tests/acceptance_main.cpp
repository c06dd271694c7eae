// Acceptance suite: every release gate runs here at its stated tolerance,
// one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "hashalloc/aggregate.hpp"
#include "hashalloc/market_data.hpp"
#include "hashalloc/portfolio.hpp"
#include "hashalloc/risk_inference.hpp"
#include "hashalloc/rng.hpp"
#include "hashalloc/shock_sim.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace hashalloc;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buffer[512];
    std::snprintf(buffer, sizeof(buffer), pattern, args...);
    return buffer;
}

constexpr SolvePolicy kStrict{RiskPolicy::Strict, WeightPolicy::AllowShort};

// ---------------------------------------------------------------------------

void criterion_1_solver_oracle() {
    const auto start = std::chrono::steady_clock::now();
    SplitMix64 rng(1001);
    double worst_component = 0.0;
    double worst_budget = 0.0;
    double worst_risk_rel = 0.0;
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Matrix2d sigma = oracles::random_spd(rng);
        const Eigen::Vector2d mu(rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
        const double min_risk = oracles::min_variance_risk_2x2(sigma);
        const double rho = rng.uniform(min_risk, 3.0 * min_risk);

        const SolveOutcome out =
            solve_max_profit(ProfitVector(mu), VolatilityMatrix(sigma), RiskTolerance(rho),
                             kStrict);
        const oracles::GridResult oracle = oracles::grid_search_max_profit_full(mu, sigma, rho);
        if (!oracle.found) {
            ok = false;
            continue;
        }
        worst_component = std::max(
            worst_component, std::max(std::abs(out.allocation[0] - oracle.w1),
                                      std::abs(out.allocation[1] - (1.0 - oracle.w1))));
        worst_budget = std::max(worst_budget, std::abs(out.allocation.weights().sum() - 1.0));
        worst_risk_rel =
            std::max(worst_risk_rel, std::abs(out.achieved_risk - rho) / std::max(rho, 1e-30));
    }
    const double seconds = elapsed_s(start);
    ok = ok && worst_component <= 1e-3 && worst_budget <= 1e-12 && worst_risk_rel <= 1e-9 &&
         seconds < 30.0;
    report(1, "solver matches the grid-search oracle on 1000 instances", ok,
           fmt("max component dev %.2e, budget %.2e, risk rel %.2e, %.1f s", worst_component,
               worst_budget, worst_risk_rel, seconds));
}

void criterion_2_worked_instance() {
    const SolveOutcome out = solve_max_profit(ProfitVector(Eigen::Vector2d(1, 0)),
                                              VolatilityMatrix(Eigen::Matrix2d::Identity()),
                                              RiskTolerance(0.625), kStrict);
    const bool ok = std::abs(out.allocation[0] - 0.75) <= 1e-12 &&
                    std::abs(out.allocation[1] - 0.25) <= 1e-12 &&
                    std::abs(out.expected_profit - 0.75) <= 1e-12 &&
                    std::abs(out.discarded_expected_profit - 0.25) <= 1e-12;
    report(2, "worked closed-form instance solves exactly", ok,
           fmt("w=[%.15f, %.15f], E=%.15f, discarded E=%.15f", out.allocation[0],
               out.allocation[1], out.expected_profit, out.discarded_expected_profit));
}

void criterion_3_risk_round_trip() {
    SplitMix64 rng(3003);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const Eigen::Matrix2d sigma = oracles::random_spd(rng);
        const Eigen::Vector2d mu(rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
        const double min_risk = oracles::min_variance_risk_2x2(sigma);
        const double rho = rng.uniform(1.000001 * min_risk, 3.0 * min_risk);
        const SolveOutcome out = solve_max_profit(ProfitVector(mu), VolatilityMatrix(sigma),
                                                  RiskTolerance(rho), kStrict);
        const double back = inferred_risk(out.allocation, VolatilityMatrix(sigma));
        worst = std::max(worst, std::abs(back - rho) / rho);
    }
    report(3, "risk round-trips through inferred_risk on 500 instances", worst <= 1e-9,
           fmt("max relative error %.2e", worst));
}

void criterion_4_profit_identities() {
    SplitMix64 rng(4004);
    double worst_conservation = 0.0;
    double worst_invariance = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        Eigen::VectorXd r(n);
        Eigen::VectorXd d(n);
        for (int k = 0; k < n; ++k) {
            r[k] = rng.uniform(0.01, 1000.0);
            d[k] = rng.uniform(0.01, 1000.0);
        }
        const Eigen::VectorXd pi = profit_vector(r, d).values();
        worst_conservation =
            std::max(worst_conservation, std::abs(pi.dot(d) - d.sum()) / d.sum());

        const double k_scale = rng.uniform(0.1, 50.0);
        const Eigen::VectorXd pi_r = profit_vector((k_scale * r).eval(), d).values();
        const Eigen::VectorXd pi_d = profit_vector(r, (k_scale * d).eval()).values();
        const double scale = pi.cwiseAbs().maxCoeff();
        worst_invariance =
            std::max({worst_invariance, (pi_r - pi).cwiseAbs().maxCoeff() / scale,
                      (pi_d - pi).cwiseAbs().maxCoeff() / scale});
    }
    const bool ok = worst_conservation <= 1e-9 && worst_invariance <= 1e-12;
    report(4, "profit normalization conserves difficulty mass and ignores common scales", ok,
           fmt("conservation %.2e, scale invariance %.2e", worst_conservation, worst_invariance));
}

void criterion_5_ewma() {
    const double alpha = std::pow(2.0, -0.1);
    const bool half_life_ok = std::abs(std::pow(alpha, 10.0) - 0.5) <= 1e-12;

    std::map<std::string, DifficultySeries::Samples> samples;
    samples["BCH"] = {{-3600, 123.0}};
    samples["BTC"] = {{-3600, 4567.0}};
    const DifficultySeries difficulty{std::move(samples)};
    std::vector<BlockRecord> blocks;
    for (int h = 0; h < 48; ++h) {
        blocks.push_back({"BCH", h, static_cast<Timestamp>(h) * kSecondsPerHour, "solo", 123.0});
    }
    const auto series = actual_allocation_series(blocks, difficulty, "solo");
    bool pure_ok = !series.allocations.empty();
    for (const auto& w : series.allocations) {
        pure_ok = pure_ok && w[0] == 1.0 && w[1] == 0.0;
    }
    report(5, "EWMA half-life and pure-miner allocations are exact", half_life_ok && pure_ok,
           fmt("alpha^10 - 0.5 = %.2e, %zu pure hours all [1, 0]: %s",
               std::pow(alpha, 10.0) - 0.5, series.allocations.size(), pure_ok ? "yes" : "no"));
}

void criterion_6_fit_self_consistency() {
    const auto start = std::chrono::steady_clock::now();
    int recovered = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const synthetic::PlantedFit planted = synthetic::make_planted_fit(seed, 1700, 48);
        FitReport fit_report;
        const MinerParams fit =
            fit_parameters(planted.actual, planted.market, 16, "BCH", 30, &fit_report);
        if (synthetic::recovered(fit, planted, fit_report)) ++recovered;
    }
    const double seconds = elapsed_s(start);
    const bool ok = recovered >= 18 && seconds < 300.0;
    report(6, "fit recovers planted lookback and risk from noisy prices", ok,
           fmt("%d/20 runs recovered, %.1f s", recovered, seconds));
}

void criterion_7_daa_equilibrium() {
    const auto start = std::chrono::steady_clock::now();
    ShockConfig config = default_shock_config();
    config.fixed_allocation_bch = 0.5;
    config.horizon_days = 70; // ~10,080 blocks per chain after the warmup
    config.master_seed = 77;
    config.trials = 1;
    const TrialResult trial = run_trial(config, 0);

    double mean_ibt[2] = {0.0, 0.0};
    int counts[2] = {0, 0};
    for (int chain = 0; chain < 2; ++chain) {
        for (const auto& block : trial.blocks[chain]) {
            if (block.timestamp_s >= static_cast<double>(trial.shock_ts)) {
                mean_ibt[chain] += block.ibt_s;
                ++counts[chain];
            }
        }
        mean_ibt[chain] /= counts[chain];
    }
    const double seconds = elapsed_s(start);
    const bool ok = counts[0] >= 10000 && counts[1] >= 10000 &&
                    std::abs(mean_ibt[0] - 600.0) <= 12.0 &&
                    std::abs(mean_ibt[1] - 600.0) <= 12.0 && seconds < 60.0;
    report(7, "both DAAs hold the 600 s target within 2% over 10k blocks", ok,
           fmt("window DAA %.1f s (n=%d), epoch DAA %.1f s (n=%d), %.1f s", mean_ibt[0],
               counts[0], mean_ibt[1], counts[1], seconds));
}

struct ShockStats {
    double pre_median_alloc = 0.0;
    double day1_median_alloc = 0.0;
    double day1_mean_ibt = 0.0;
    double peak_bucket_ibt = 0.0;
    double day4_mean_ibt = 0.0;
    double pre_expiry_alloc = 0.0;
    double post_expiry_alloc = 0.0;
};

ShockStats summarize(const ExperimentSummary& summary, int expiry_hours) {
    ShockStats stats;
    std::vector<double> pre_alloc;
    std::vector<double> day1_alloc;
    double day1_sum = 0.0;
    int day1_n = 0;
    double day4_sum = 0.0;
    int day4_n = 0;
    double pre_expiry_sum = 0.0;
    int pre_expiry_n = 0;
    double post_expiry_sum = 0.0;
    int post_expiry_n = 0;
    for (const auto& bucket : summary.buckets) {
        const int h = bucket.start_hours_from_shock;
        if (h < 0) pre_alloc.push_back(bucket.median_bch_allocation);
        if (h >= 0 && h < 24) {
            day1_alloc.push_back(bucket.median_bch_allocation);
            day1_sum += bucket.mean_bch_ibt_s;
            ++day1_n;
        }
        if (h >= 0) stats.peak_bucket_ibt = std::max(stats.peak_bucket_ibt, bucket.mean_bch_ibt_s);
        if (h >= 72 && h < 96) {
            day4_sum += bucket.mean_bch_ibt_s;
            ++day4_n;
        }
        if (h >= expiry_hours - 34 && h < expiry_hours - 4) {
            pre_expiry_sum += bucket.median_bch_allocation;
            ++pre_expiry_n;
        }
        if (h >= expiry_hours - 4 && h < expiry_hours + 26) {
            post_expiry_sum += bucket.median_bch_allocation;
            ++post_expiry_n;
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    stats.pre_median_alloc = median(pre_alloc);
    stats.day1_median_alloc = median(day1_alloc);
    stats.day1_mean_ibt = day1_sum / day1_n;
    stats.day4_mean_ibt = day4_sum / day4_n;
    stats.pre_expiry_alloc = pre_expiry_sum / pre_expiry_n;
    stats.post_expiry_alloc = post_expiry_sum / post_expiry_n;
    return stats;
}

void criteria_8_9_10_shock() {
    const auto start = std::chrono::steady_clock::now();
    ShockConfig config = default_shock_config();
    config.trials = 180;
    config.master_seed = 7;

    config.shock_multiplier = 0.5;
    const ExperimentSummary summary_half = run_experiment(config);
    config.shock_multiplier = 2.0;
    const ExperimentSummary summary_double = run_experiment(config);

    int max_lookback = 0;
    for (const auto& m : config.miners) max_lookback = std::max(max_lookback, m.lookback_hours);
    const int expiry_hours = max_lookback + config.cooldown_hours;

    const ShockStats half = summarize(summary_half, expiry_hours);
    const ShockStats twice = summarize(summary_double, expiry_hours);
    const double seconds = elapsed_s(start);

    // 8: x = 0.5 IBT response magnitudes, 180 trials, default config
    const bool day1_ok = half.day1_mean_ibt >= 1.4 * 600.0;
    const bool peak_ok = half.peak_bucket_ibt >= 1.5 * 600.0 && half.peak_bucket_ibt <= 2.5 * 600.0;
    const bool day4_ok = std::abs(half.day4_mean_ibt - 600.0) <= 0.10 * 600.0;
    report(8, "x=0.5 raises day-1 IBT >= 1.4x, peaks in [1.5x, 2.5x], recovers by day 4",
           day1_ok && peak_ok && day4_ok && seconds < 900.0,
           fmt("day1 %.2fx, peak %.2fx, day4 %.0f s, %.0f s runtime", half.day1_mean_ibt / 600.0,
               half.peak_bucket_ibt / 600.0, half.day4_mean_ibt, seconds));

    // 9: allocation drops in the first post-shock day for both directions
    const bool drop_half = half.day1_median_alloc < half.pre_median_alloc;
    const bool drop_double = twice.day1_median_alloc < twice.pre_median_alloc;
    report(9, "median allocation drops on day 1 for x=0.5 and x=2.0", drop_half && drop_double,
           fmt("x=0.5: %.4f -> %.4f (%s); x=2.0: %.4f -> %.4f (%s)", half.pre_median_alloc,
               half.day1_median_alloc, drop_half ? "drop" : "RISE", twice.pre_median_alloc,
               twice.day1_median_alloc, drop_double ? "drop" : "RISE"));

    // 10a: volatility computed from exclusively post-shock prices matches the
    // pre-shock-window volatility within 3 standard errors of the difference
    ShockConfig vol_config = config;
    vol_config.shock_multiplier = 0.5;
    const PriceSeries prices = generate_shock_prices(vol_config, derive_seed(7, 0, 0));
    const int lookback = max_lookback;
    const int cooldown = vol_config.cooldown_hours;
    std::vector<ChainSpec> specs{{"BCH", 600.0, 12.5, cooldown, DaaKind::PerBlockWindow},
                                 {"BTC", 600.0, 12.5, cooldown, DaaKind::Epoch}};
    std::map<std::string, DifficultySeries::Samples> diff_samples;
    diff_samples["BCH"] = {{-kSecondsPerHour, vol_config.base_price_bch}};
    diff_samples["BTC"] = {{-kSecondsPerHour, vol_config.base_price_btc}};
    const DifficultySeries parity_difficulty{std::move(diff_samples)};
    const ProfitSeries market = profit_series(prices, parity_difficulty, specs);

    const int shock_hour = simulation_warmup_hours(vol_config);
    const Timestamp pre_t = static_cast<Timestamp>(shock_hour - 1) * kSecondsPerHour;
    const Timestamp post_t =
        static_cast<Timestamp>(shock_hour + lookback + cooldown + 1 + lookback) * kSecondsPerHour;
    const VolatilityMatrix pre_sigma = volatility_matrix(market, pre_t, lookback, cooldown);
    const VolatilityMatrix post_sigma = volatility_matrix(market, post_t, lookback, cooldown);
    const int m = lookback + 1;
    bool vol_ok = true;
    double worst_z = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            auto se = [&](const Eigen::MatrixXd& c) {
                return std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / (m - 1));
            };
            const double se_diff = std::hypot(se(pre_sigma.entries()), se(post_sigma.entries()));
            const double z =
                std::abs(post_sigma.entries()(i, j) - pre_sigma.entries()(i, j)) / se_diff;
            worst_z = std::max(worst_z, z);
            vol_ok = vol_ok && z <= 3.0;
        }
    }

    // 10b: the allocation level after the lookback expiry exceeds the level
    // just before it (x = 0.5)
    const bool expiry_ok = half.post_expiry_alloc > half.pre_expiry_alloc;
    report(10, "post-shock volatility returns to baseline and allocation rises at expiry",
           vol_ok && expiry_ok,
           fmt("max |z| %.2f; allocation %.4f -> %.4f across the %d h expiry", worst_z,
               half.pre_expiry_alloc, half.post_expiry_alloc, expiry_hours));
}

void criterion_11_determinism() {
    const char* cli = HASHALLOC_CLI_PATH;
    const fs::path dir = fs::temp_directory_path() / "hashalloc_acceptance";
    fs::create_directories(dir);
    const fs::path config_path = dir / "config.json";
    std::ofstream(config_path) << R"({
  "trials": 8,
  "horizon_days": 2,
  "bch_window_blocks": 72,
  "btc_epoch_blocks": 288,
  "summary_preshock_hours": 24
})";
    auto run = [&](const std::string& out, const std::string& extra) {
        const std::string cmd = std::string(cli) + " shock --config " + config_path.string() +
                                " --multiplier 0.5 --seed 4242 --out " + out + extra +
                                " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    const std::string out1 = (dir / "a.csv").string();
    const std::string out2 = (dir / "b.csv").string();
    const std::string out3 = (dir / "c.csv").string();
    const int rc1 = run(out1, "");
    const int rc2 = run(out2, "");
    const int rc3 = run(out3, " --threads 4");

    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };
    const std::string bytes1 = slurp(out1);
    const bool ok = rc1 == 0 && rc2 == 0 && rc3 == 0 && !bytes1.empty() &&
                    bytes1 == slurp(out2) && bytes1 == slurp(out3);
    report(11, "shock command output is byte-identical across runs and thread counts", ok,
           fmt("exit codes %d/%d/%d, %zu bytes compared", rc1, rc2, rc3, bytes1.size()));
}

void criterion_12_metrics() {
    const bool p1 = std::abs(pearson({1, 2, 3}, {1, 2, 3}) - 1.0) <= 1e-9;
    const bool p2 = std::abs(pearson({1, 2, 3}, {-1, -2, -3}) + 1.0) <= 1e-9;
    const bool p3 =
        std::abs(pearson({1, 2, 3}, {1, 2, 4}) - std::sqrt(27.0 / 28.0)) <= 1e-9;

    SplitMix64 rng(1212);
    bool ks_ok = true;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> xs;
        std::vector<double> ys;
        const int nx = 1 + static_cast<int>(rng.next_u64() % 15);
        const int ny = 1 + static_cast<int>(rng.next_u64() % 15);
        for (int k = 0; k < nx; ++k) xs.push_back(std::round(rng.uniform(0.0, 8.0)) / 8.0);
        for (int k = 0; k < ny; ++k) ys.push_back(std::round(rng.uniform(0.0, 8.0)) / 8.0);
        const double diff = std::abs(ks_statistic(xs, ys) - oracles::ks_brute_force(xs, ys));
        worst = std::max(worst, diff);
        ks_ok = ks_ok && diff <= 1e-12;
    }
    report(12, "pearson worked values and KS brute-force agreement", p1 && p2 && p3 && ks_ok,
           fmt("pearson deltas ok: %s, max KS delta %.2e", (p1 && p2 && p3) ? "yes" : "no",
               worst));
}

} // namespace

int main() {
    std::printf("hashalloc acceptance suite\n");
    const auto start = std::chrono::steady_clock::now();

    criterion_1_solver_oracle();
    criterion_2_worked_instance();
    criterion_3_risk_round_trip();
    criterion_4_profit_identities();
    criterion_5_ewma();
    criterion_6_fit_self_consistency();
    criterion_7_daa_equilibrium();
    criteria_8_9_10_shock();
    criterion_11_determinism();
    criterion_12_metrics();

    std::printf("%d of 12 criteria passed in %.1f s\n", 12 - g_failures, elapsed_s(start));
    return g_failures == 0 ? 0 : 1;
}
