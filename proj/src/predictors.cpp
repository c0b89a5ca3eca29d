#include "countycast/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "countycast/dates.hpp"

namespace countycast {

std::string to_string(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::SeparateExponential: return "separate";
        case PredictorKind::SeparateLinear: return "linear";
        case PredictorKind::Shared: return "shared";
        case PredictorKind::ExpandedShared: return "expanded_shared";
        case PredictorKind::DemographicsShared: return "demographics_shared";
    }
    return "?";
}

std::optional<PredictorKind> parse_predictor_kind(const std::string& name) {
    for (PredictorKind k : kAllPredictorKinds)
        if (to_string(k) == name) return k;
    if (name == "demographics") return PredictorKind::DemographicsShared;
    return std::nullopt;
}

double safe_exp(double eta) { return std::exp(std::min(eta, 690.0)); }

std::optional<int> third_death_day(const std::vector<double>& deaths, int t) {
    for (int s = 0; s <= t; ++s)
        if (deaths[static_cast<size_t>(s)] >= 3.0) return s;
    return std::nullopt;
}

void enforce_monotonicity(std::vector<double>& predictions, double last_observed) {
    if (predictions.empty()) return;
    predictions[0] = std::max(predictions[0], last_observed);
    for (size_t j = 1; j < predictions.size(); ++j)
        predictions[j] = std::max(predictions[j], predictions[j - 1]);
}

double weekday_indicator(long epoch_day) {
    const int w = weekday_of(epoch_day);
    return (w == 0 || w == 1) ? 1.0 : 0.0;
}

double social_distancing_indicator(int day, const PredictorOptions& opts,
                                   const CountyId& county) {
    const auto it = opts.intervention_day.find(county);
    if (it == opts.intervention_day.end()) return 0.0;
    return day >= it->second + opts.social_distancing_lag ? 1.0 : 0.0;
}

namespace {

SeriesForecast fallback_forecast(double value, int K, FallbackReason reason) {
    return SeriesForecast{std::vector<double>(static_cast<size_t>(K), value), reason};
}

} // namespace

SeriesForecast fit_predict_separate_exponential(const std::vector<double>& deaths,
                                                int t, int K,
                                                const PredictorOptions& opts) {
    const double last = deaths[static_cast<size_t>(t)];
    int first_death = -1;
    for (int s = 0; s <= t; ++s) {
        if (deaths[static_cast<size_t>(s)] > 0.0) {
            first_death = s;
            break;
        }
    }
    if (first_death < 0) return fallback_forecast(last, K, FallbackReason::InsufficientData);

    const int start = std::max(first_death, t - (opts.exp_window - 1));
    const int len = t - start + 1;
    if (len < 3) return fallback_forecast(last, K, FallbackReason::InsufficientData);

    bool constant = true;
    for (int s = start; s <= t; ++s)
        if (deaths[static_cast<size_t>(s)] != deaths[static_cast<size_t>(start)]) {
            constant = false;
            break;
        }
    if (constant) return fallback_forecast(last, K, FallbackReason::ConstantSeries);

    // local time axis keeps the intercept on the scale of log(deaths)
    DesignMatrix X;
    X.values.resize(len, 1);
    X.names = {"t"};
    Eigen::VectorXd y(len);
    for (int i = 0; i < len; ++i) {
        X.values(i, 0) = i;
        y[i] = deaths[static_cast<size_t>(start + i)];
    }
    const GlmFit fit = fit_poisson_glm(X, y, opts.fit);
    if (fit.capped) return fallback_forecast(last, K, FallbackReason::Divergent);

    SeriesForecast out;
    out.values.resize(static_cast<size_t>(K));
    for (int k = 1; k <= K; ++k)
        out.values[static_cast<size_t>(k - 1)] =
            safe_exp(fit.intercept + fit.coef[0] * ((len - 1) + k));
    return out;
}

SeriesForecast fit_predict_separate_linear(const std::vector<double>& deaths,
                                           int t, int K, long first_epoch_day,
                                           const PredictorOptions& opts) {
    const double last = deaths[static_cast<size_t>(t)];
    const int start = std::max(0, t - (opts.linear_window - 1));
    const int len = t - start + 1;
    if (len < 2) return fallback_forecast(last, K, FallbackReason::InsufficientData);

    const int p = opts.weekday_feature ? 2 : 1;
    if (len < p + 1) return fallback_forecast(last, K, FallbackReason::InsufficientData);
    DesignMatrix X;
    X.values.resize(len, p);
    X.names = opts.weekday_feature ? std::vector<std::string>{"t", "sun_mon"}
                                   : std::vector<std::string>{"t"};
    Eigen::VectorXd y(len);
    for (int i = 0; i < len; ++i) {
        X.values(i, 0) = i;
        if (opts.weekday_feature)
            X.values(i, 1) = weekday_indicator(first_epoch_day + start + i);
        y[i] = deaths[static_cast<size_t>(start + i)];
    }
    const OlsFit fit = fit_ols(X, y);

    SeriesForecast out;
    out.values.resize(static_cast<size_t>(K));
    for (int k = 1; k <= K; ++k) {
        double v = fit.intercept + fit.coef[0] * ((len - 1) + k);
        if (opts.weekday_feature)
            v += fit.coef[1] * weekday_indicator(first_epoch_day + t + k);
        out.values[static_cast<size_t>(k - 1)] = v;
    }
    return out;
}

SharedFit fit_shared(const CountyPanel& panel, int t, const PredictorOptions& opts) {
    std::vector<double> feature;
    std::vector<double> response;
    for (int c = 0; c < panel.n_counties(); ++c) {
        const auto t0 = third_death_day(panel.deaths[static_cast<size_t>(c)], t);
        if (!t0) continue;
        for (int s = *t0 + 1; s <= t; ++s) {
            feature.push_back(std::log(panel.deaths[static_cast<size_t>(c)][static_cast<size_t>(s - 1)] + 1.0));
            response.push_back(panel.deaths[static_cast<size_t>(c)][static_cast<size_t>(s)]);
        }
    }
    if (feature.size() < 2) throw std::runtime_error("insufficient pooled data");

    DesignMatrix X;
    X.values.resize(static_cast<Eigen::Index>(feature.size()), 1);
    X.names = {"log_prev_deaths"};
    Eigen::VectorXd y(static_cast<Eigen::Index>(response.size()));
    for (size_t i = 0; i < feature.size(); ++i) {
        X.values(static_cast<Eigen::Index>(i), 0) = feature[i];
        y[static_cast<Eigen::Index>(i)] = response[i];
    }
    auto [Z, stz] = standardize(X);
    SharedFit out;
    out.fit = fit_poisson_glm(Z, y, opts.fit);
    out.stz = std::move(stz);
    return out;
}

std::vector<double> predict_shared(const SharedFit& shared, double deaths_t, int K) {
    std::vector<double> out(static_cast<size_t>(K));
    double current = deaths_t;
    for (int k = 0; k < K; ++k) {
        const double z = shared.stz.apply(0, std::log(current + 1.0));
        current = safe_exp(shared.fit.intercept + shared.fit.coef[0] * z);
        out[static_cast<size_t>(k)] = current;
    }
    return out;
}

ExpandedSharedFit fit_expanded_shared(const CountyPanel& panel, int t, int k,
                                      const PredictorOptions& opts) {
    if (!panel.has_neighbor_aggregates)
        throw std::runtime_error("expanded shared predictor requires neighbor aggregates");
    const int n_base = 4;
    const int n_cols = n_base + (opts.weekday_feature ? 1 : 0) + (opts.social_distancing ? 1 : 0);

    std::vector<std::array<double, 6>> rows;
    std::vector<double> response;
    for (int c = 0; c < panel.n_counties(); ++c) {
        const auto& deaths = panel.deaths[static_cast<size_t>(c)];
        const auto t0 = third_death_day(deaths, t);
        if (!t0) continue;
        for (int s = std::max(*t0 + 1, k); s <= t; ++s) {
            std::array<double, 6> row{};
            row[0] = std::log(deaths[static_cast<size_t>(s - 1)] + 1.0);
            row[1] = std::log(panel.cases[static_cast<size_t>(c)][static_cast<size_t>(s - k)] + 1.0);
            row[2] = std::log(panel.neigh_deaths[static_cast<size_t>(c)][static_cast<size_t>(s - k)] + 1.0);
            row[3] = std::log(panel.neigh_cases[static_cast<size_t>(c)][static_cast<size_t>(s - k)] + 1.0);
            int j = n_base;
            if (opts.weekday_feature)
                row[static_cast<size_t>(j++)] =
                    weekday_indicator(panel.first_epoch_day + s);
            if (opts.social_distancing)
                row[static_cast<size_t>(j++)] = social_distancing_indicator(
                    s, opts, panel.counties[static_cast<size_t>(c)]);
            rows.push_back(row);
            response.push_back(deaths[static_cast<size_t>(s)]);
        }
    }
    if (rows.size() < 2) throw std::runtime_error("insufficient pooled data");

    DesignMatrix X;
    X.values.resize(static_cast<Eigen::Index>(rows.size()), n_base);
    X.names = {"log_prev_deaths", "log_lag_cases", "log_lag_neigh_deaths", "log_lag_neigh_cases"};
    Eigen::VectorXd y(static_cast<Eigen::Index>(response.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < n_base; ++j)
            X.values(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
        y[static_cast<Eigen::Index>(i)] = response[i];
    }
    auto [Z, stz] = standardize(X);

    // indicator columns enter unstandardized
    DesignMatrix full;
    full.values.resize(Z.values.rows(), n_cols);
    full.values.leftCols(n_base) = Z.values;
    full.names = Z.names;
    int j = n_base;
    if (opts.weekday_feature) {
        for (size_t i = 0; i < rows.size(); ++i)
            full.values(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(n_base)];
        full.names.push_back("sun_mon");
        ++j;
    }
    if (opts.social_distancing) {
        const int src = n_base + (opts.weekday_feature ? 1 : 0);
        for (size_t i = 0; i < rows.size(); ++i)
            full.values(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(src)];
        full.names.push_back("social_distancing");
        ++j;
    }

    FitConfig fit_config = opts.fit;
    if (opts.social_distancing) fit_config.ridge += 0.01;

    ExpandedSharedFit out;
    out.fit = fit_poisson_glm(full, y, fit_config);
    out.stz = std::move(stz);
    out.horizon = k;
    out.weekday = opts.weekday_feature;
    out.social = opts.social_distancing;
    return out;
}

double predict_expanded_shared(const ExpandedSharedFit& efit, const CountyPanel& panel,
                               int county, int t, const PredictorOptions& opts) {
    const int k = efit.horizon;
    const auto& deaths = panel.deaths[static_cast<size_t>(county)];

    double current = deaths[static_cast<size_t>(t)];
    for (int j = 0; j < k; ++j) {
        const int feature_day = t - k + j + 1; // reaches exactly day t at the last step
        if (feature_day < 0)
            throw std::runtime_error("expanded shared prediction needs day >= horizon - 1");
        double eta = efit.fit.intercept;
        eta += efit.fit.coef[0] * efit.stz.apply(0, std::log(current + 1.0));
        eta += efit.fit.coef[1] *
               efit.stz.apply(1, std::log(panel.cases[static_cast<size_t>(county)][static_cast<size_t>(feature_day)] + 1.0));
        eta += efit.fit.coef[2] *
               efit.stz.apply(2, std::log(panel.neigh_deaths[static_cast<size_t>(county)][static_cast<size_t>(feature_day)] + 1.0));
        eta += efit.fit.coef[3] *
               efit.stz.apply(3, std::log(panel.neigh_cases[static_cast<size_t>(county)][static_cast<size_t>(feature_day)] + 1.0));
        int col = 4;
        const int target_day = t + j + 1;
        if (efit.weekday)
            eta += efit.fit.coef[col++] *
                   weekday_indicator(panel.first_epoch_day + target_day);
        if (efit.social)
            eta += efit.fit.coef[col++] *
                   social_distancing_indicator(
                       target_day, opts, panel.counties[static_cast<size_t>(county)]);
        current = safe_exp(eta);
    }
    return current;
}

DemographicsSharedFit fit_demographics_shared(const CountyPanel& panel,
                                              const DemographicsTable& demo, int t,
                                              const PredictorOptions& opts) {
    std::vector<std::array<double, 1 + kDemographicFeatureCount>> rows;
    std::vector<double> response;
    for (int c = 0; c < panel.n_counties(); ++c) {
        const auto feat = demo.features.find(panel.counties[static_cast<size_t>(c)]);
        if (feat == demo.features.end()) continue;
        const auto& deaths = panel.deaths[static_cast<size_t>(c)];
        const auto t0 = third_death_day(deaths, t);
        if (!t0) continue;
        for (int s = *t0 + 1; s <= t; ++s) {
            std::array<double, 1 + kDemographicFeatureCount> row;
            row[0] = std::log(deaths[static_cast<size_t>(s - 1)] + 1.0);
            for (int f = 0; f < kDemographicFeatureCount; ++f)
                row[static_cast<size_t>(1 + f)] = feat->second[static_cast<size_t>(f)];
            rows.push_back(row);
            response.push_back(deaths[static_cast<size_t>(s)]);
        }
    }
    if (rows.size() < 2) throw std::runtime_error("insufficient pooled data");

    DesignMatrix X;
    X.values.resize(static_cast<Eigen::Index>(rows.size()), 1 + kDemographicFeatureCount);
    X.names = {"log_prev_deaths"};
    for (auto* name : kDemographicFeatureNames) X.names.push_back(name);
    Eigen::VectorXd y(static_cast<Eigen::Index>(response.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < 1 + kDemographicFeatureCount; ++j)
            X.values(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
        y[static_cast<Eigen::Index>(i)] = response[i];
    }
    auto [Z, stz] = standardize(X);

    DemographicsSharedFit out;
    out.fit = fit_poisson_glm(Z, y, opts.fit);
    out.stz = std::move(stz);
    return out;
}

std::vector<double> predict_demographics_shared(
    const DemographicsSharedFit& dfit, double deaths_t,
    const std::array<double, kDemographicFeatureCount>& features, int K) {
    double static_part = dfit.fit.intercept;
    for (int f = 0; f < kDemographicFeatureCount; ++f)
        static_part += dfit.fit.coef[1 + f] * dfit.stz.apply(1 + f, features[static_cast<size_t>(f)]);

    std::vector<double> out(static_cast<size_t>(K));
    double current = deaths_t;
    for (int k = 0; k < K; ++k) {
        const double z = dfit.stz.apply(0, std::log(current + 1.0));
        current = safe_exp(static_part + dfit.fit.coef[0] * z);
        out[static_cast<size_t>(k)] = current;
    }
    return out;
}

} // namespace countycast
