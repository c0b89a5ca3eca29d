#include "countycast/clep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "countycast/log.hpp"

namespace countycast {

double clep_loss(double yhat, double y, WeightConfig::Transform transform) {
    switch (transform) {
        case WeightConfig::Transform::Sqrt:
            return std::abs(std::sqrt(std::max(yhat, 0.0)) - std::sqrt(std::max(y, 0.0)));
        case WeightConfig::Transform::Log1p:
            return std::abs(std::log1p(std::max(yhat, 0.0)) - std::log1p(std::max(y, 0.0)));
    }
    return 0.0;
}

LossHistory::LossHistory(int n_counties, int n_members, int window)
    : entries_(static_cast<size_t>(n_counties) * static_cast<size_t>(n_members)),
      n_members_(n_members),
      window_(window) {}

void LossHistory::record(int county, int member, int day, double loss) {
    auto& dq = entries_[static_cast<size_t>(county) * static_cast<size_t>(n_members_) +
                        static_cast<size_t>(member)];
    if (!dq.empty() && day <= dq.back().day)
        throw std::runtime_error("LossHistory: days must be recorded in increasing order");
    dq.push_back(Entry{day, loss});
    while (static_cast<int>(dq.size()) > window_) dq.pop_front();
}

std::optional<double> LossHistory::get(int county, int member, int day) const {
    const auto& dq = entries_[static_cast<size_t>(county) * static_cast<size_t>(n_members_) +
                              static_cast<size_t>(member)];
    for (const auto& e : dq)
        if (e.day == day) return e.loss;
    return std::nullopt;
}

std::vector<double> clep_weight_exponents(const LossHistory& history, int county,
                                          int n_members, int t, const WeightConfig& config,
                                          int* missing_days) {
    std::vector<double> exponents(static_cast<size_t>(n_members), 0.0);
    int missing = 0;
    for (int m = 0; m < n_members; ++m) {
        double sum = 0.0;
        for (int i = t - config.window + 1; i <= t; ++i) {
            const auto loss = history.get(county, m, i);
            if (!loss) {
                if (m == 0) ++missing; // same days missing for every member
                continue;
            }
            sum += std::pow(config.mu, t - i) * *loss;
        }
        exponents[static_cast<size_t>(m)] = -config.c * (1.0 - config.mu) * sum;
    }
    if (missing_days) *missing_days = missing;
    return exponents;
}

std::vector<double> weights_from_exponents(const std::vector<double>& exponents) {
    const size_t n = exponents.size();
    if (n == 0) return {};
    const double max_exp = *std::max_element(exponents.begin(), exponents.end());
    if (!std::isfinite(max_exp)) { // all -inf: no information left
        warn("all ensemble weight exponents overflowed; using uniform weights");
        return std::vector<double>(n, 1.0 / static_cast<double>(n));
    }
    std::vector<double> w(n);
    double total = 0.0;
    for (size_t m = 0; m < n; ++m) {
        w[m] = std::exp(exponents[m] - max_exp);
        total += w[m];
    }
    for (size_t m = 0; m < n; ++m) w[m] /= total;
    return w;
}

std::vector<double> clep_weights(const LossHistory& history, int county, int n_members,
                                 int t, const WeightConfig& config, int* missing_days) {
    return weights_from_exponents(
        clep_weight_exponents(history, county, n_members, t, config, missing_days));
}

std::optional<double> clep_predict(const std::vector<double>& forecasts,
                                   const std::vector<double>& weights) {
    if (forecasts.size() != weights.size())
        throw std::runtime_error("clep_predict: forecast/weight size mismatch");
    double total_weight = 0.0;
    double value = 0.0;
    for (size_t m = 0; m < forecasts.size(); ++m) {
        if (std::isnan(forecasts[m])) continue;
        total_weight += weights[m];
        value += weights[m] * forecasts[m];
    }
    if (total_weight <= 0.0) {
        // all weight sits on missing members: average the present ones
        int present = 0;
        double sum = 0.0;
        for (double f : forecasts)
            if (!std::isnan(f)) {
                sum += f;
                ++present;
            }
        if (present == 0) return std::nullopt;
        return sum / present;
    }
    return value / total_weight;
}

} // namespace countycast
