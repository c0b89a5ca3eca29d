// Acceptance suite: prints one pass/fail line per criterion and exits
// non-zero if any of criteria 1-8 fail. Criterion 9 (real-snapshot
// reproduction) runs only when COUNTYCAST_SNAPSHOT_DIR is set and is
// best-effort: its result never changes the exit code.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>

#include "countycast/clep.hpp"
#include "countycast/dates.hpp"
#include "countycast/engine.hpp"
#include "countycast/log.hpp"
#include "countycast/metrics.hpp"
#include "countycast/panel.hpp"
#include "countycast/report_io.hpp"
#include "testutil.hpp"

using namespace countycast;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail,
            bool best_effort = false) {
    const char* tag = pass ? "[PASS]" : (best_effort ? "[FAIL-BESTEFFORT]" : "[FAIL]");
    std::cout << tag << " criterion " << id << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << '\n';
    if (!pass && !best_effort) ++failures;
}

void skip(int id, const std::string& name, const std::string& why) {
    std::cout << "[SKIP] criterion " << id << ": " << name << " (" << why << ")\n";
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1
void criterion_glm_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20200322);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::uniform_real_distribution<double> ub(-0.8, 0.8);

    double worst_gap = 0.0;
    double worst_grad = 0.0;
    bool all_converged = true;
    for (int instance = 0; instance < 50; ++instance) {
        const int p = 1 + static_cast<int>(rng() % 3); // 1..3
        const int n = p + 3 + static_cast<int>(rng() % static_cast<unsigned long>(18 - p)); // <= 20
        Eigen::MatrixXd X(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = ux(rng);
        Eigen::VectorXd beta_true(p + 1);
        for (int j = 0; j <= p; ++j) beta_true[j] = ub(rng);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            double eta = beta_true[0];
            for (int j = 0; j < p; ++j) eta += beta_true[j + 1] * X(i, j);
            std::poisson_distribution<int> pd(std::exp(eta));
            y[i] = pd(rng);
        }
        DesignMatrix dm{X, {}};
        for (int j = 0; j < p; ++j) dm.names.push_back("x" + std::to_string(j));
        const GlmFit fit = fit_poisson_glm(dm, y);
        all_converged = all_converged && fit.converged;

        Eigen::VectorXd params(p + 1);
        params[0] = fit.intercept;
        params.tail(p) = fit.coef;
        const double at_fit = testutil::oracle_loglik(X, y, params);
        const double grid_best = testutil::grid_max_loglik(X, y, params);
        worst_gap = std::max(worst_gap, grid_best - at_fit);
        worst_grad = std::max(
            worst_grad,
            testutil::fd_gradient(X, y, params).lpNorm<Eigen::Infinity>());
    }
    const double elapsed = seconds_since(t0);
    const bool pass =
        worst_gap <= 1e-4 && worst_grad < 1e-6 && all_converged && elapsed < 10.0;
    std::ostringstream detail;
    detail << "50 instances, max loglik gap " << worst_gap << ", max |grad| "
           << worst_grad << ", " << elapsed << "s";
    report(1, "GLM oracle equivalence", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_noiseless_recovery() {
    bool pass = true;
    std::ostringstream detail;

    std::vector<double> exp_series;
    for (int t = 0; t < 5; ++t) exp_series.push_back(std::exp(0.2 * t));
    const auto exp_fc =
        fit_predict_separate_exponential(exp_series, 4, 14, PredictorOptions{});
    double worst_rel = 0.0;
    for (int k = 1; k <= 14; ++k) {
        const double expected = std::exp(0.2 * (4 + k));
        worst_rel = std::max(
            worst_rel,
            std::abs(exp_fc.values[static_cast<size_t>(k - 1)] - expected) / expected);
    }
    pass = pass && exp_fc.fallback == FallbackReason::None && worst_rel < 1e-6;

    std::vector<double> line_series = {10, 13, 16, 19};
    const auto lin_fc =
        fit_predict_separate_linear(line_series, 3, 14, 18343, PredictorOptions{});
    double worst_abs = 0.0;
    for (int k = 1; k <= 14; ++k)
        worst_abs = std::max(worst_abs,
                             std::abs(lin_fc.values[static_cast<size_t>(k - 1)] -
                                      (19.0 + 3.0 * k)));
    pass = pass && worst_abs < 1e-10;

    detail << "exponential rel err " << worst_rel << ", linear abs err " << worst_abs;
    report(2, "noiseless recovery", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 3
void criterion_clep_weights() {
    bool pass = true;
    std::ostringstream detail;

    // derived two-predictor example
    LossHistory history(1, 2, 7);
    for (int day = 0; day <= 6; ++day) {
        history.record(0, 0, day, 0.0);
        history.record(0, 1, day, 1.0);
    }
    const auto exponents = clep_weight_exponents(history, 0, 2, 6, WeightConfig{});
    double direct = 0.0; // direct summation of the decayed series
    for (int i = 0; i <= 6; ++i) direct += std::pow(0.5, 6 - i) * 1.0;
    const double expected_exponent = -0.5 * direct;
    pass = pass && std::abs(exponents[1] - expected_exponent) < 1e-9;
    pass = pass && std::abs(expected_exponent - (-0.9921875)) < 1e-15;

    const auto w = weights_from_exponents(exponents);
    const double expected_weight = 1.0 / (1.0 + std::exp(expected_exponent));
    pass = pass && std::abs(w[0] - expected_weight) < 1e-9;
    pass = pass && std::abs(w[0] - 0.7296) < 1e-3;

    // symmetry and dominance on random loss histories
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    int checked = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> base(7);
        for (auto& v : base) v = u(rng);
        LossHistory h(1, 3, 7);
        for (int day = 0; day <= 6; ++day) {
            h.record(0, 0, day, base[static_cast<size_t>(day)]);
            h.record(0, 1, day, base[static_cast<size_t>(day)]); // symmetric twin
            h.record(0, 2, day, base[static_cast<size_t>(day)] + 0.2); // dominated
        }
        const auto weights = clep_weights(h, 0, 3, 6, WeightConfig{});
        pass = pass && std::abs(weights[0] - weights[1]) < 1e-12;
        pass = pass && weights[0] > weights[2];
        pass = pass && std::abs(weights[0] + weights[1] + weights[2] - 1.0) < 1e-12;
        ++checked;
    }
    detail << "weight " << w[0] << " vs direct " << expected_weight << ", " << checked
           << " random histories";
    report(3, "CLEP weight arithmetic", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 4
void criterion_mepi_coverage() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20200411);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const int window = 5;
    const int steps = 50000;

    ErrorStore store(1, 1, window);
    const double yhat = 50.0;
    long covered = 0, total = 0;
    for (int day = 0; day < steps; ++day) {
        const double y = yhat * (1.0 + u(rng)); // continuous i.i.d. relative errors
        if (day >= window) {
            const auto deltas = store.trailing(0, 1, day - 1);
            const auto pi = mepi_interval(yhat, deltas, 0.0, /*clamped=*/false, window);
            if (y >= pi.lower && y <= pi.upper) ++covered;
            ++total;
        }
        store.record(0, 1, day, normalized_error(y, yhat));
    }
    const double rate = static_cast<double>(covered) / static_cast<double>(total);
    const double elapsed = seconds_since(t0);
    const bool pass = std::abs(rate - 5.0 / 6.0) <= 0.02 && elapsed < 5.0;
    std::ostringstream detail;
    detail << total << " steps, coverage " << rate << " vs 0.8333, " << elapsed << "s";
    report(4, "MEPI coverage theorem at desk scale", pass, detail.str());
}

// ------------------------------------------------------- criteria 5 (and data)
DemographicsTable synthetic_demographics(const CountyPanel& panel) {
    DemographicsTable demo;
    for (int c = 0; c < panel.n_counties(); ++c) {
        std::array<double, kDemographicFeatureCount> f;
        f[0] = 50.0 + 3.0 * c;
        f[1] = 10000.0 + 250.0 * c;
        f[2] = 1.0 + (c % 5);
        f[3] = 5.0 + (c % 7);
        f[4] = 30.0 + 0.2 * c;
        f[5] = 10.0 + (c % 10);
        f[6] = 5.0 + (c % 8);
        f[7] = 100.0 + 2.0 * c;
        demo.features[panel.counties[static_cast<size_t>(c)]] = f;
    }
    return demo;
}

void criterion_monotonicity_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    auto panel = testutil::synthetic_panel(100, 90);
    const DemographicsTable demo = synthetic_demographics(panel);

    BacktestConfig config;
    config.engine.max_horizon = 14;
    config.engine.eval_horizons = {3, 5, 7, 14};
    config.eval_start = 18;
    config.eval_end = 89;

    long violations = 0;
    long forecasts = 0;
    run_backtest(panel, &demo, config, [&](const ForecastSet& fs) {
        for (int c = 0; c < panel.n_counties(); ++c) {
            const double last =
                panel.deaths[static_cast<size_t>(c)][static_cast<size_t>(fs.as_of)];
            for (size_t p = 0; p <= fs.predictors.size(); ++p) {
                const bool is_clep = p == fs.predictors.size();
                double prev = last;
                for (int k = 1; k <= fs.horizon; ++k) {
                    const double v = is_clep ? fs.clep(c, k - 1) : fs.values[p](c, k - 1);
                    if (v < prev) ++violations;
                    prev = v;
                    ++forecasts;
                }
            }
        }
    });
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << forecasts << " forecast values, " << violations << " violations, "
           << elapsed << "s";
    report(5, "monotonicity suite over a full synthetic backtest", violations == 0,
           detail.str());
}

// ---------------------------------------------------------------- criterion 6
void criterion_no_look_ahead() {
    auto panel = testutil::synthetic_panel(30, 50, 4242);
    const DemographicsTable demo = synthetic_demographics(panel);
    EngineConfig cfg;
    cfg.max_horizon = 14;
    cfg.eval_horizons = {3, 7};
    const int as_of = 40;

    const ForecastSet base = forecast_at(panel, &demo, as_of, cfg);
    const std::string base_bytes = forecast_csv_string(panel, base, cfg.max_horizon) +
                                   intervals_csv_string(panel, base, cfg.max_horizon) +
                                   weights_csv_string(panel, base);

    std::mt19937_64 rng(999);
    std::uniform_real_distribution<double> noise(0.0, 1e4);
    bool identical = true;
    for (int rep = 0; rep < 10; ++rep) {
        CountyPanel mutated = panel;
        for (int c = 0; c < mutated.n_counties(); ++c)
            for (int t = as_of + 1; t < mutated.n_days; ++t) {
                mutated.deaths[static_cast<size_t>(c)][static_cast<size_t>(t)] = noise(rng);
                mutated.cases[static_cast<size_t>(c)][static_cast<size_t>(t)] = noise(rng);
                mutated.neigh_deaths[static_cast<size_t>(c)][static_cast<size_t>(t)] = noise(rng);
                mutated.neigh_cases[static_cast<size_t>(c)][static_cast<size_t>(t)] = noise(rng);
            }
        const ForecastSet perturbed = forecast_at(mutated, &demo, as_of, cfg);
        const std::string bytes =
            forecast_csv_string(mutated, perturbed, cfg.max_horizon) +
            intervals_csv_string(mutated, perturbed, cfg.max_horizon) +
            weights_csv_string(mutated, perturbed);
        identical = identical && bytes == base_bytes;
    }
    report(6, "no look-ahead under future-data perturbation", identical,
           "10 random perturbations, bitwise-compared output");
}

// ---------------------------------------------------------------- criterion 7
void criterion_metric_hand_checks() {
    bool pass = true;

    pass = pass && std::abs(*mape_t({11.0}, {10.0}) - 10.0) < 1e-12;
    pass = pass && std::abs(*mape_t({11.0, 13.0}, {10.0, 10.0}) - 20.0) < 1e-12;
    pass = pass && *mape_t({8.0, 12.0}, {8.0, 12.0}) == 0.0;

    pass = pass && std::abs(*raw_mae_t({16.0}, {25.0}) - 9.0) < 1e-12;
    pass = pass && std::abs(*sqrt_mae_t({16.0}, {25.0}) - 1.0) < 1e-12;
    pass = pass && *raw_mae_t({6.0}, {6.0}) == 0.0;
    pass = pass && std::abs(*raw_mae_t({4.0, 9.0}, {1.0, 16.0}) - 5.0) < 1e-12;
    pass = pass && std::abs(*sqrt_mae_t({4.0, 9.0}, {1.0, 16.0}) - 1.0) < 1e-12;

    std::vector<PredictionInterval> intervals(6, PredictionInterval{10.0, 20.0, false, false});
    std::vector<double> obs(6, 15.0);
    obs[5] = 25.0;
    pass = pass && std::abs(coverage(intervals, obs) - 5.0 / 6.0) < 1e-12;
    obs[5] = 20.0; // boundary counts as covered
    pass = pass && coverage(intervals, obs) == 1.0;

    pass = pass && std::abs(normalized_length({PredictionInterval{95.0, 110.0, false, false}},
                                              {100.0}) - 0.15) < 1e-12;
    pass = pass && std::abs(normalized_length({PredictionInterval{0.0, 3.0, false, false}},
                                              {0.0}) - 3.0) < 1e-12;
    pass = pass && normalized_length({PredictionInterval{7.0, 7.0, false, false}}, {7.0}) == 0.0;

    std::vector<double> series;
    for (int i = 1; i <= 91; ++i) series.push_back(i);
    const Percentiles p = summary_percentiles(series);
    pass = pass && p.p10 == 10.0 && p.median == 46.0 && p.p90 == 82.0;

    report(7, "metric hand-checks", pass, "MAPE, raw/sqrt MAE, coverage, length, percentiles");
}

// ---------------------------------------------------------------- criterion 8
void criterion_rank_diagnostic() {
    std::mt19937_64 rng(20200613);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::array<double, 6>> tuples(10000);
    for (auto& tuple : tuples)
        for (auto& v : tuple) v = u(rng);
    const RankDiagnostic diag = rank_diagnostic(tuples);
    bool pass = true;
    double worst = 0.0;
    for (double r : diag.avg_rank) {
        worst = std::max(worst, std::abs(r - 3.5));
        pass = pass && std::abs(r - 3.5) <= 0.1;
    }
    std::ostringstream detail;
    detail << "10000 tuples, max slot deviation " << worst;
    report(8, "exchangeability rank diagnostic", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 9
void criterion_snapshot_reproduction() {
    const char* dir = std::getenv("COUNTYCAST_SNAPSHOT_DIR");
    if (!dir) {
        skip(9, "best-effort reproduction on a real snapshot",
             "set COUNTYCAST_SNAPSHOT_DIR to a directory with deaths.csv, cases.csv, "
             "adjacency.csv");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::string base(dir);
        const SeriesFile deaths = load_county_series(base + "/deaths.csv");
        const SeriesFile cases = load_county_series(base + "/cases.csv");
        CountyPanel panel = build_panel(deaths, cases);
        neighbor_aggregates(panel, load_adjacency(base + "/adjacency.csv"));

        BacktestConfig config;
        config.engine.predictors = {PredictorKind::SeparateLinear,
                                    PredictorKind::ExpandedShared};
        config.engine.ensemble = {PredictorKind::ExpandedShared,
                                  PredictorKind::SeparateLinear};
        config.engine.max_horizon = 14;
        config.engine.eval_horizons = {7, 14};
        config.eval_start = static_cast<int>(parse_iso_date("2020-03-22") - panel.first_epoch_day);
        config.eval_end = static_cast<int>(parse_iso_date("2020-06-20") - panel.first_epoch_day);

        const BacktestReport report_data = run_backtest(panel, nullptr, config);
        double median7 = -1.0, median14 = -1.0;
        for (const auto& entry : report_data.summary) {
            if (entry.predictor != "clep") continue;
            if (entry.horizon == 7) median7 = entry.mape.median;
            if (entry.horizon == 14) median14 = entry.mape.median;
        }
        const bool pass = std::abs(median7 - 15.14) <= 3.0 && std::abs(median14 - 26.45) <= 5.0;
        std::ostringstream detail;
        detail << "CLEP median MAPE 7-day " << median7 << " vs 15.14 +/- 3, 14-day "
               << median14 << " vs 26.45 +/- 5, " << seconds_since(t0) << "s";
        report(9, "best-effort reproduction on a real snapshot", pass, detail.str(),
               /*best_effort=*/true);
    } catch (const std::exception& e) {
        report(9, "best-effort reproduction on a real snapshot", false,
               std::string("error: ") + e.what(), /*best_effort=*/true);
    }
}

} // namespace

int main() {
    set_warnings_enabled(false);
    criterion_glm_oracle();
    criterion_noiseless_recovery();
    criterion_clep_weights();
    criterion_mepi_coverage();
    criterion_monotonicity_suite();
    criterion_no_look_ahead();
    criterion_metric_hand_checks();
    criterion_rank_diagnostic();
    criterion_snapshot_reproduction();

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all required criteria passed\n";
    return 0;
}
