#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "countycast/glm.hpp"
#include "countycast/panel.hpp"

namespace countycast {

enum class PredictorKind {
    SeparateExponential,
    SeparateLinear,
    Shared,
    ExpandedShared,
    DemographicsShared,
};

inline constexpr PredictorKind kAllPredictorKinds[] = {
    PredictorKind::SeparateExponential, PredictorKind::SeparateLinear,
    PredictorKind::Shared, PredictorKind::ExpandedShared,
    PredictorKind::DemographicsShared};

std::string to_string(PredictorKind kind);
std::optional<PredictorKind> parse_predictor_kind(const std::string& name);

enum class FallbackReason : int {
    None = 0,
    InsufficientData = 1, // too little history; last observed value used
    ConstantSeries = 2,   // flat window; last observed value used
    Divergent = 3,        // capped GLM fit; last observed value used
    Unavailable = 4,      // pooled fit not usable for this county/day
};

struct PredictorOptions {
    int exp_window = 5;    // trailing days for the per-county exponential fit
    int linear_window = 4; // trailing days for the per-county line fit
    bool weekday_feature = false;      // Sunday/Monday target-day indicator
    bool social_distancing = false;    // needs intervention_day; adds ridge 0.01
    int social_distancing_lag = 14;    // days from intervention to indicator=1
    std::map<CountyId, int> intervention_day; // panel day offsets
    FitConfig fit;
};

// One county's k = 1..K path plus how it was produced.
struct SeriesForecast {
    std::vector<double> values;
    FallbackReason fallback = FallbackReason::None;
};

// --- separate (per-county) predictors ---------------------------------------

// Poisson fit of deaths on time over the trailing window (days since the first
// death, at most exp_window). Falls back to the last observed value when the
// window is shorter than 3 days, flat, or the fit diverges.
SeriesForecast fit_predict_separate_exponential(const std::vector<double>& deaths,
                                                int t, int K,
                                                const PredictorOptions& opts);

// OLS line over the trailing window; raw extrapolation (may decrease before
// the monotonicity pass). weekday_feature adds the Sunday/Monday indicator of
// the response day.
SeriesForecast fit_predict_separate_linear(const std::vector<double>& deaths,
                                           int t, int K, long first_epoch_day,
                                           const PredictorOptions& opts);

// --- pooled predictors -------------------------------------------------------

// deaths_s ~ exp(b0 + b1 * z(log(deaths_{s-1}+1))), pooled over all counties
// past their third death, responses through day t.
struct SharedFit {
    GlmFit fit;
    Standardization stz;
};

SharedFit fit_shared(const CountyPanel& panel, int t, const PredictorOptions& opts);
std::vector<double> predict_shared(const SharedFit& fit, double deaths_t, int K);

// Adds the county's own lagged case counts and neighboring-county case/death
// aggregates, lagged by the horizon so only day <= t-k+1 information enters
// the training rows. One fit per horizon.
struct ExpandedSharedFit {
    GlmFit fit;
    Standardization stz;
    int horizon = 1;
    bool weekday = false;
    bool social = false;
};

ExpandedSharedFit fit_expanded_shared(const CountyPanel& panel, int t, int k,
                                      const PredictorOptions& opts);
double predict_expanded_shared(const ExpandedSharedFit& fit, const CountyPanel& panel,
                               int county, int t, const PredictorOptions& opts);

// Shared predictor augmented with the 8 static county features.
struct DemographicsSharedFit {
    GlmFit fit;
    Standardization stz;
};

DemographicsSharedFit fit_demographics_shared(const CountyPanel& panel,
                                              const DemographicsTable& demo, int t,
                                              const PredictorOptions& opts);
std::vector<double> predict_demographics_shared(
    const DemographicsSharedFit& fit, double deaths_t,
    const std::array<double, kDemographicFeatureCount>& features, int K);

// --- indicator features --------------------------------------------------------

// 1 when the target day is a Sunday or Monday (the under-reporting days).
double weekday_indicator(long epoch_day);

// 1 once `lag` days have passed since the county's intervention date;
// counties without a date stay at 0.
double social_distancing_indicator(int day, const PredictorOptions& opts,
                                   const CountyId& county);

// --- post-processing ---------------------------------------------------------

// Running maximum over horizons anchored at the last observed count.
void enforce_monotonicity(std::vector<double>& predictions, double last_observed);

// Day of the third death (first day with deaths >= 3), or nullopt.
std::optional<int> third_death_day(const std::vector<double>& deaths, int t);

// exp with an overflow guard; divergent fits never reach infinity downstream
double safe_exp(double eta);

} // namespace countycast
