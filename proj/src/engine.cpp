#include "countycast/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "countycast/log.hpp"

namespace countycast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void set_flags(std::vector<FallbackReason>& flags, int county, int K, FallbackReason r) {
    for (int k = 1; k <= K; ++k)
        flags[static_cast<size_t>(county) * static_cast<size_t>(K) + static_cast<size_t>(k - 1)] = r;
}

// chunked parallel loop; deterministic because workers write disjoint slots
void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || n < 2 * threads) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace

int EngineConfig::internal_horizon() const {
    int K = std::max(max_horizon, weight.loss_horizon);
    for (int k : eval_horizons) K = std::max(K, k);
    return K;
}

void EngineConfig::validate() const {
    if (max_horizon < 1) throw std::runtime_error("max horizon must be >= 1");
    if (weight.loss_horizon < 1) throw std::runtime_error("loss horizon must be >= 1");
    if (weight.window < 1) throw std::runtime_error("weight window must be >= 1");
    if (!(weight.mu > 0.0 && weight.mu < 1.0)) throw std::runtime_error("mu must lie in (0,1)");
    if (weight.c <= 0.0) throw std::runtime_error("c must be positive");
    if (mepi_window < 1) throw std::runtime_error("MEPI window must be >= 1");
    if (ensemble.empty()) throw std::runtime_error("ensemble must have at least one member");
    for (PredictorKind m : ensemble)
        if (std::find(predictors.begin(), predictors.end(), m) == predictors.end())
            throw std::runtime_error("ensemble member '" + to_string(m) +
                                     "' is not in the predictor set");
    for (int k : eval_horizons)
        if (k < 1) throw std::runtime_error("evaluation horizons must be >= 1");
}

int ForecastSet::predictor_index(PredictorKind kind) const {
    for (size_t i = 0; i < predictors.size(); ++i)
        if (predictors[i] == kind) return static_cast<int>(i);
    return -1;
}

RollingEngine::RollingEngine(const CountyPanel& panel, const DemographicsTable* demographics,
                             const EngineConfig& config)
    : panel_(panel),
      demographics_(demographics),
      config_(config),
      K_(config.internal_horizon()),
      losses_(panel.n_counties(), static_cast<int>(config.ensemble.size()), config.weight.window),
      errors_(panel.n_counties(), K_, config.mepi_window) {
    config_.validate();
    const bool needs_demo =
        std::find(config_.predictors.begin(), config_.predictors.end(),
                  PredictorKind::DemographicsShared) != config_.predictors.end();
    if (needs_demo && demographics_ == nullptr)
        throw std::runtime_error("demographics predictor configured but no demographics table given");
    const bool needs_neighbors =
        std::find(config_.predictors.begin(), config_.predictors.end(),
                  PredictorKind::ExpandedShared) != config_.predictors.end();
    if (needs_neighbors && !panel_.has_neighbor_aggregates)
        throw std::runtime_error("expanded shared predictor configured but neighbor aggregates missing");
    if (config_.collect_errors)
        full_errors_.assign(static_cast<size_t>(panel.n_counties()),
                            std::vector<std::vector<std::pair<int, double>>>(
                                static_cast<size_t>(K_)));
}

const ForecastSet* RollingEngine::lookback(int as_of) const {
    for (const auto& fs : archive_)
        if (fs.as_of == as_of) return &fs;
    return nullptr;
}

void RollingEngine::warn_once(const std::string& key, const std::string& msg) {
    if (warned_.insert(key).second) warn(msg);
}

void RollingEngine::update_histories(int day) {
    const int n = panel_.n_counties();

    // losses from loss_horizon-day-ahead member predictions now observable
    if (const ForecastSet* past = lookback(day - config_.weight.loss_horizon)) {
        const int k = config_.weight.loss_horizon;
        for (size_t m = 0; m < config_.ensemble.size(); ++m) {
            const int pi = past->predictor_index(config_.ensemble[m]);
            for (int c = 0; c < n; ++c) {
                if (past->flag(pi, c, k) == FallbackReason::Unavailable) continue;
                const double yhat = past->values[static_cast<size_t>(pi)](c, k - 1);
                const double y = panel_.deaths[static_cast<size_t>(c)][static_cast<size_t>(day)];
                losses_.record(c, static_cast<int>(m), day,
                               clep_loss(yhat, y, config_.weight.transform));
            }
        }
    }

    // normalized CLEP errors per horizon
    for (int k = 1; k <= K_; ++k) {
        const ForecastSet* past = lookback(day - k);
        if (!past) continue;
        for (int c = 0; c < n; ++c) {
            if (past->clep_flags[static_cast<size_t>(c)] == FallbackReason::Unavailable) continue;
            const double y = panel_.deaths[static_cast<size_t>(c)][static_cast<size_t>(day)];
            const double delta = normalized_error(y, past->clep(c, k - 1));
            errors_.record(c, k, day, delta);
            if (config_.collect_errors)
                full_errors_[static_cast<size_t>(c)][static_cast<size_t>(k - 1)]
                    .emplace_back(day, delta);
        }
    }
}

ForecastSet RollingEngine::compute(int day) {
    const int n = panel_.n_counties();
    const int K = K_;
    const size_t n_pred = config_.predictors.size();

    ForecastSet out;
    out.as_of = day;
    out.horizon = K;
    out.predictors = config_.predictors;
    out.ensemble = config_.ensemble;
    out.values.assign(n_pred, Eigen::MatrixXd::Zero(n, K));
    out.flags.assign(n_pred, std::vector<FallbackReason>(
                                 static_cast<size_t>(n) * static_cast<size_t>(K),
                                 FallbackReason::None));

    auto last_observed = [&](int c) {
        return panel_.deaths[static_cast<size_t>(c)][static_cast<size_t>(day)];
    };

    for (size_t p = 0; p < n_pred; ++p) {
        const PredictorKind kind = config_.predictors[p];
        Eigen::MatrixXd& values = out.values[p];
        std::vector<FallbackReason>& flags = out.flags[p];

        auto store_series = [&](int c, const SeriesForecast& sf) {
            for (int k = 1; k <= K; ++k) values(c, k - 1) = sf.values[static_cast<size_t>(k - 1)];
            set_flags(flags, c, K, sf.fallback);
        };
        auto store_unavailable = [&](int c) {
            for (int k = 1; k <= K; ++k) values(c, k - 1) = last_observed(c);
            set_flags(flags, c, K, FallbackReason::Unavailable);
        };

        switch (kind) {
            case PredictorKind::SeparateExponential:
                parallel_for(n, config_.threads, [&](int c) {
                    store_series(c, fit_predict_separate_exponential(
                                        panel_.deaths[static_cast<size_t>(c)], day, K, config_.pred));
                });
                break;
            case PredictorKind::SeparateLinear:
                parallel_for(n, config_.threads, [&](int c) {
                    store_series(c, fit_predict_separate_linear(
                                        panel_.deaths[static_cast<size_t>(c)], day, K,
                                        panel_.first_epoch_day, config_.pred));
                });
                break;
            case PredictorKind::Shared: {
                bool ok = true;
                SharedFit fit;
                try {
                    fit = fit_shared(panel_, day, config_.pred);
                } catch (const std::exception& e) {
                    warn_once("shared-unavailable",
                              std::string("shared predictor unavailable (first on ") +
                                  panel_.date_string(day) + "): " + e.what());
                    ok = false;
                }
                if (ok && fit.fit.capped) {
                    warn("shared predictor fit diverged on " + panel_.date_string(day));
                    ok = false;
                }
                for (int c = 0; c < n; ++c) {
                    if (!ok) {
                        store_unavailable(c);
                        continue;
                    }
                    SeriesForecast sf{predict_shared(fit, last_observed(c), K),
                                      FallbackReason::None};
                    store_series(c, sf);
                }
                break;
            }
            case PredictorKind::ExpandedShared: {
                for (int k = 1; k <= K; ++k) {
                    bool ok = true;
                    ExpandedSharedFit fit;
                    try {
                        fit = fit_expanded_shared(panel_, day, k, config_.pred);
                    } catch (const std::exception& e) {
                        if (k == 1)
                            warn_once("expanded-unavailable",
                                      std::string("expanded shared predictor unavailable "
                                                  "(first on ") +
                                          panel_.date_string(day) + "): " + e.what());
                        ok = false;
                    }
                    if (ok && fit.fit.capped) {
                        warn("expanded shared fit diverged on " + panel_.date_string(day) +
                             " (horizon " + std::to_string(k) + ")");
                        ok = false;
                    }
                    for (int c = 0; c < n; ++c) {
                        const size_t slot = static_cast<size_t>(c) * static_cast<size_t>(K) +
                                            static_cast<size_t>(k - 1);
                        if (!ok) {
                            values(c, k - 1) = last_observed(c);
                            flags[slot] = FallbackReason::Unavailable;
                        } else {
                            values(c, k - 1) =
                                predict_expanded_shared(fit, panel_, c, day, config_.pred);
                        }
                    }
                }
                break;
            }
            case PredictorKind::DemographicsShared: {
                bool ok = true;
                DemographicsSharedFit fit;
                try {
                    fit = fit_demographics_shared(panel_, *demographics_, day, config_.pred);
                } catch (const std::exception& e) {
                    warn_once("demographics-unavailable",
                              std::string("demographics predictor unavailable (first on ") +
                                  panel_.date_string(day) + "): " + e.what());
                    ok = false;
                }
                if (ok && fit.fit.capped) {
                    warn("demographics fit diverged on " + panel_.date_string(day));
                    ok = false;
                }
                for (int c = 0; c < n; ++c) {
                    const auto feat =
                        ok ? demographics_->features.find(panel_.counties[static_cast<size_t>(c)])
                           : demographics_->features.end();
                    if (!ok || feat == demographics_->features.end()) {
                        store_unavailable(c);
                        continue;
                    }
                    SeriesForecast sf{
                        predict_demographics_shared(fit, last_observed(c), feat->second, K),
                        FallbackReason::None};
                    store_series(c, sf);
                }
                break;
            }
        }

        // post-hoc maxima adjustment, every predictor, every county
        for (int c = 0; c < n; ++c) {
            std::vector<double> path(static_cast<size_t>(K));
            for (int k = 1; k <= K; ++k) path[static_cast<size_t>(k - 1)] = values(c, k - 1);
            enforce_monotonicity(path, last_observed(c));
            for (int k = 1; k <= K; ++k) values(c, k - 1) = path[static_cast<size_t>(k - 1)];
        }
    }

    // ensemble weights (per county, shared across horizons)
    const int n_members = static_cast<int>(config_.ensemble.size());
    out.weights.resize(n, n_members);
    int missing_days_seen = 0;
    for (int c = 0; c < n; ++c) {
        int missing = 0;
        const auto w = clep_weights(losses_, c, n_members, day, config_.weight, &missing);
        missing_days_seen = std::max(missing_days_seen, missing);
        for (int m = 0; m < n_members; ++m) out.weights(c, m) = w[static_cast<size_t>(m)];
    }
    if (missing_days_seen > 0) {
        // structural during warm-up: the first losses only exist loss_horizon+1
        // days in; warn per-day only for genuine gaps after that
        const bool warming_up =
            day < config_.weight.loss_horizon + config_.weight.window;
        if (warming_up)
            warn_once("weights-cold-start",
                      "ensemble weights start with fewer than " +
                          std::to_string(config_.weight.window) +
                          " loss days; missing days contribute zero (first on " +
                          panel_.date_string(day) + ")");
        else
            warn("ensemble weights on " + panel_.date_string(day) + " miss " +
                 std::to_string(missing_days_seen) + " loss day(s); they contribute zero");
    }

    // CLEP combination
    out.clep.resize(n, K);
    out.clep_flags.assign(static_cast<size_t>(n), FallbackReason::None);
    std::vector<int> member_index(static_cast<size_t>(n_members));
    for (int m = 0; m < n_members; ++m)
        member_index[static_cast<size_t>(m)] =
            out.predictor_index(config_.ensemble[static_cast<size_t>(m)]);
    for (int c = 0; c < n; ++c) {
        std::vector<double> weights(static_cast<size_t>(n_members));
        for (int m = 0; m < n_members; ++m) weights[static_cast<size_t>(m)] = out.weights(c, m);
        bool any_missing = false;
        for (int k = 1; k <= K; ++k) {
            std::vector<double> forecasts(static_cast<size_t>(n_members));
            for (int m = 0; m < n_members; ++m) {
                const int pi = member_index[static_cast<size_t>(m)];
                const bool available = out.flag(pi, c, k) != FallbackReason::Unavailable;
                forecasts[static_cast<size_t>(m)] =
                    available ? out.values[static_cast<size_t>(pi)](c, k - 1) : kNaN;
                any_missing |= !available;
            }
            const auto combined = clep_predict(forecasts, weights);
            if (combined) {
                out.clep(c, k - 1) = *combined;
            } else {
                out.clep(c, k - 1) = last_observed(c);
                out.clep_flags[static_cast<size_t>(c)] = FallbackReason::Unavailable;
            }
        }
        if (any_missing && out.clep_flags[static_cast<size_t>(c)] == FallbackReason::None &&
            c == 0)
            warn_once("members-missing",
                      "some ensemble members missing (first on " + panel_.date_string(day) +
                          "); weights renormalized over present members");
        // convexity gives monotonicity in exact arithmetic; re-running the
        // adjustment removes any rounding dust
        std::vector<double> path(static_cast<size_t>(K));
        for (int k = 1; k <= K; ++k) path[static_cast<size_t>(k - 1)] = out.clep(c, k - 1);
        enforce_monotonicity(path, last_observed(c));
        for (int k = 1; k <= K; ++k) out.clep(c, k - 1) = path[static_cast<size_t>(k - 1)];
    }

    // MEPI intervals on the CLEP path
    out.intervals.resize(static_cast<size_t>(n) * static_cast<size_t>(K));
    for (int c = 0; c < n; ++c) {
        for (int k = 1; k <= K; ++k) {
            const auto deltas = errors_.trailing(c, k, day);
            out.intervals[static_cast<size_t>(c) * static_cast<size_t>(K) +
                          static_cast<size_t>(k - 1)] =
                mepi_interval(out.clep(c, k - 1), deltas, last_observed(c),
                              config_.mepi_clamped, config_.mepi_window);
        }
    }
    return out;
}

const ForecastSet& RollingEngine::step() {
    const int day = next_day_;
    if (day >= panel_.n_days) throw std::runtime_error("engine ran past the panel end");
    if (day > 0) update_histories(day);
    archive_.push_back(compute(day));
    while (static_cast<int>(archive_.size()) > K_ + 1) archive_.pop_front();
    ++next_day_;
    return archive_.back();
}

ForecastSet forecast_at(const CountyPanel& panel, const DemographicsTable* demographics,
                        int as_of, const EngineConfig& config) {
    if (as_of < 0 || as_of >= panel.n_days)
        throw std::runtime_error("as-of day outside the panel");
    RollingEngine engine(panel, demographics, config);
    while (engine.next_day() < as_of) engine.step();
    return engine.step();
}

BacktestReport run_backtest(const CountyPanel& panel, const DemographicsTable* demographics,
                            const BacktestConfig& config,
                            const std::function<void(const ForecastSet&)>& on_step) {
    const EngineConfig& ecfg = config.engine;
    const int K = ecfg.internal_horizon();
    const int warmup = K + ecfg.weight.loss_horizon + 1;
    if (config.eval_start > config.eval_end)
        throw std::runtime_error("backtest start is after end");
    if (config.eval_end >= panel.n_days)
        throw std::runtime_error("backtest end runs past the panel (panel ends " +
                                 panel.date_string(panel.n_days - 1) + ")");
    if (config.eval_start < warmup)
        throw std::runtime_error(
            "insufficient warm-up: evaluation must start at least " + std::to_string(warmup) +
            " days after the panel start (max horizon + loss horizon + 1), got " +
            std::to_string(config.eval_start));

    RollingEngine engine(panel, demographics, config.engine);
    BacktestReport report;

    const int n = panel.n_counties();
    struct IntervalAccum {
        std::vector<PredictionInterval> intervals;
        std::vector<double> observed;
    };
    // county-major, one accumulator per eval horizon
    std::vector<std::vector<IntervalAccum>> accum(
        static_cast<size_t>(n), std::vector<IntervalAccum>(ecfg.eval_horizons.size()));

    std::vector<std::string> row_names;
    for (PredictorKind p : ecfg.predictors) row_names.push_back(to_string(p));
    row_names.push_back("clep");

    for (int day = 0; day <= config.eval_end; ++day) {
        const ForecastSet& fs = engine.step();
        if (on_step) on_step(fs);
        if (day < config.eval_start) continue;

        const std::vector<int> eligible =
            eligible_counties(panel, day, ecfg.eligibility_threshold);
        if (eligible.empty()) {
            ++report.skipped_days;
            warn("no eligible counties on " + panel.date_string(day) + "; day skipped");
        }

        for (size_t h = 0; h < ecfg.eval_horizons.size(); ++h) {
            const int k = ecfg.eval_horizons[h];
            const ForecastSet* issued = engine.lookback(day - k);
            if (!issued) continue; // before the first forecasts existed

            if (!eligible.empty()) {
                std::vector<double> obs(eligible.size());
                for (size_t i = 0; i < eligible.size(); ++i)
                    obs[i] = panel.deaths[static_cast<size_t>(eligible[i])][static_cast<size_t>(day)];
                for (size_t p = 0; p <= ecfg.predictors.size(); ++p) {
                    const bool is_clep = p == ecfg.predictors.size();
                    std::vector<double> pred(eligible.size());
                    for (size_t i = 0; i < eligible.size(); ++i) {
                        const int c = eligible[i];
                        pred[i] = is_clep ? issued->clep(c, k - 1)
                                          : issued->values[p](c, k - 1);
                    }
                    DailyMetricRow row;
                    row.day = day;
                    row.horizon = k;
                    row.predictor = row_names[p];
                    row.mape = *mape_t(pred, obs);
                    row.raw_mae = *raw_mae_t(pred, obs);
                    row.sqrt_mae = *sqrt_mae_t(pred, obs);
                    row.n_eligible = static_cast<int>(eligible.size());
                    report.daily.push_back(std::move(row));
                }
            }

            for (int c = 0; c < n; ++c) {
                const double y = panel.deaths[static_cast<size_t>(c)][static_cast<size_t>(day)];
                const PredictionInterval& pi = issued->interval(c, k);
                accum[static_cast<size_t>(c)][h].intervals.push_back(pi);
                accum[static_cast<size_t>(c)][h].observed.push_back(y);
                report.trajectories.push_back(TrajectoryRow{
                    c, day, k, y, issued->clep(c, k - 1), pi.lower, pi.upper});
            }
        }
    }

    for (int c = 0; c < n; ++c) {
        for (size_t h = 0; h < ecfg.eval_horizons.size(); ++h) {
            const auto& a = accum[static_cast<size_t>(c)][h];
            if (a.intervals.empty()) continue;
            CountyIntervalRow row;
            row.county = c;
            row.horizon = ecfg.eval_horizons[h];
            row.coverage = coverage(a.intervals, a.observed);
            row.avg_normalized_length = normalized_length(a.intervals, a.observed);
            row.n_days = static_cast<int>(a.intervals.size());
            report.county_intervals.push_back(row);
        }
    }

    // nearest-rank summaries of the daily series
    for (int k : ecfg.eval_horizons) {
        for (const auto& name : row_names) {
            std::vector<double> mape, raw, sqrt_;
            for (const auto& row : report.daily) {
                if (row.horizon != k || row.predictor != name) continue;
                mape.push_back(row.mape);
                raw.push_back(row.raw_mae);
                sqrt_.push_back(row.sqrt_mae);
            }
            if (mape.empty()) continue;
            SummaryEntry entry;
            entry.horizon = k;
            entry.predictor = name;
            entry.mape = summary_percentiles(mape);
            entry.raw_mae = summary_percentiles(raw);
            entry.sqrt_mae = summary_percentiles(sqrt_);
            entry.n_days = static_cast<int>(mape.size());
            report.summary.push_back(std::move(entry));
        }
    }
    return report;
}

} // namespace countycast
