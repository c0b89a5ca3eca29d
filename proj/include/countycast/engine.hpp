#pragma once

#include <deque>
#include <set>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countycast/clep.hpp"
#include "countycast/mepi.hpp"
#include "countycast/metrics.hpp"
#include "countycast/panel.hpp"
#include "countycast/predictors.hpp"

namespace countycast {

struct EngineConfig {
    PredictorOptions pred;
    WeightConfig weight;
    std::vector<PredictorKind> predictors{kAllPredictorKinds,
                                          kAllPredictorKinds + 5};
    std::vector<PredictorKind> ensemble{PredictorKind::ExpandedShared,
                                        PredictorKind::SeparateLinear};
    int max_horizon = 14;
    std::vector<int> eval_horizons{3, 5, 7, 14};
    double eligibility_threshold = 10.0;
    int mepi_window = 5;
    bool mepi_clamped = true;
    bool collect_errors = false; // retain full normalized-error series (diagnostics)
    int threads = 1;

    // horizons computed internally (loss updates may need more than emitted)
    int internal_horizon() const;
    void validate() const;
};

// Everything issued for one as-of day: per-predictor and CLEP forecast paths,
// ensemble weights, and MEPI intervals, for every panel county.
struct ForecastSet {
    int as_of = -1;
    int horizon = 0; // columns cover k = 1..horizon

    std::vector<PredictorKind> predictors;
    std::vector<Eigen::MatrixXd> values;              // [predictor](county, k-1)
    std::vector<std::vector<FallbackReason>> flags;   // [predictor][county*K + k-1]

    std::vector<PredictorKind> ensemble;
    Eigen::MatrixXd weights; // (county, member)

    Eigen::MatrixXd clep;                    // (county, k-1)
    std::vector<FallbackReason> clep_flags;  // [county]
    std::vector<PredictionInterval> intervals; // [county*K + k-1], built on CLEP

    FallbackReason flag(int predictor_index, int county, int k) const {
        return flags[static_cast<size_t>(predictor_index)]
                    [static_cast<size_t>(county) * static_cast<size_t>(horizon) +
                     static_cast<size_t>(k - 1)];
    }
    const PredictionInterval& interval(int county, int k) const {
        return intervals[static_cast<size_t>(county) * static_cast<size_t>(horizon) +
                         static_cast<size_t>(k - 1)];
    }
    int predictor_index(PredictorKind kind) const; // -1 if not configured
};

// Processes as-of days in order, maintaining the causal loss and error
// histories. Forecasts for day d depend on panel data up to day d only.
class RollingEngine {
public:
    RollingEngine(const CountyPanel& panel, const DemographicsTable* demographics,
                  const EngineConfig& config);

    int next_day() const { return next_day_; }
    const ForecastSet& step();
    const ForecastSet* lookback(int as_of) const;

    const CountyPanel& panel() const { return panel_; }
    const EngineConfig& config() const { return config_; }

    // per county, per horizon-1: (target day, delta); filled when collect_errors
    using ErrorSeries = std::vector<std::vector<std::vector<std::pair<int, double>>>>;
    const ErrorSeries& full_errors() const { return full_errors_; }

private:
    void update_histories(int day);
    ForecastSet compute(int day);
    void warn_once(const std::string& key, const std::string& msg);

    const CountyPanel& panel_;
    const DemographicsTable* demographics_;
    EngineConfig config_;
    int K_;
    int next_day_ = 0;
    LossHistory losses_;
    ErrorStore errors_;
    std::deque<ForecastSet> archive_;
    ErrorSeries full_errors_;
    std::set<std::string> warned_;
};

// Runs the engine from the panel start through `as_of` and returns that day's
// forecasts (the no-look-ahead surface: only data <= as_of is ever touched).
ForecastSet forecast_at(const CountyPanel& panel, const DemographicsTable* demographics,
                        int as_of, const EngineConfig& config);

struct BacktestConfig {
    int eval_start = 0; // first target day scored
    int eval_end = 0;   // last target day scored
    EngineConfig engine;
};

struct DailyMetricRow {
    int day = 0;     // target day
    int horizon = 0; // k
    std::string predictor;
    double mape = 0.0;
    double raw_mae = 0.0;
    double sqrt_mae = 0.0;
    int n_eligible = 0;
};

struct CountyIntervalRow {
    int county = 0;
    int horizon = 0;
    double coverage = 0.0;
    double avg_normalized_length = 0.0;
    int n_days = 0;
};

struct TrajectoryRow {
    int county = 0;
    int day = 0;
    int horizon = 0;
    double observed = 0.0;
    double clep = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct SummaryEntry {
    int horizon = 0;
    std::string predictor;
    Percentiles mape, raw_mae, sqrt_mae;
    int n_days = 0;
};

struct BacktestReport {
    std::vector<DailyMetricRow> daily;
    std::vector<CountyIntervalRow> county_intervals;
    std::vector<TrajectoryRow> trajectories;
    std::vector<SummaryEntry> summary;
    int skipped_days = 0; // target days with an empty eligible set
};

// Fatal when the evaluation window leaves no room for warm-up (K + loss
// horizon + 1 days) or runs past the panel.
BacktestReport run_backtest(const CountyPanel& panel, const DemographicsTable* demographics,
                            const BacktestConfig& config,
                            const std::function<void(const ForecastSet&)>& on_step = {});

} // namespace countycast
