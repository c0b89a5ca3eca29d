#include "countycast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countycast {

namespace {

void check_sizes(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::runtime_error("metric inputs have mismatched lengths");
}

} // namespace

std::optional<double> mape_t(const std::vector<double>& predictions,
                             const std::vector<double>& observations) {
    check_sizes(predictions, observations);
    if (predictions.empty()) return std::nullopt;
    double sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i)
        sum += std::abs(predictions[i] - observations[i]) / observations[i];
    return 100.0 * sum / static_cast<double>(predictions.size());
}

std::optional<double> raw_mae_t(const std::vector<double>& predictions,
                                const std::vector<double>& observations) {
    check_sizes(predictions, observations);
    if (predictions.empty()) return std::nullopt;
    double sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i)
        sum += std::abs(predictions[i] - observations[i]);
    return sum / static_cast<double>(predictions.size());
}

std::optional<double> sqrt_mae_t(const std::vector<double>& predictions,
                                 const std::vector<double>& observations) {
    check_sizes(predictions, observations);
    if (predictions.empty()) return std::nullopt;
    double sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i)
        sum += std::abs(std::sqrt(std::max(predictions[i], 0.0)) -
                        std::sqrt(std::max(observations[i], 0.0)));
    return sum / static_cast<double>(predictions.size());
}

double coverage(const std::vector<PredictionInterval>& intervals,
                const std::vector<double>& observations) {
    if (intervals.size() != observations.size())
        throw std::runtime_error("coverage: mismatched lengths");
    if (intervals.empty()) throw std::runtime_error("coverage: empty period");
    long covered = 0;
    for (size_t i = 0; i < intervals.size(); ++i)
        if (observations[i] >= intervals[i].lower && observations[i] <= intervals[i].upper)
            ++covered;
    return static_cast<double>(covered) / static_cast<double>(intervals.size());
}

double normalized_length(const std::vector<PredictionInterval>& intervals,
                         const std::vector<double>& observations) {
    if (intervals.size() != observations.size())
        throw std::runtime_error("normalized_length: mismatched lengths");
    if (intervals.empty()) throw std::runtime_error("normalized_length: empty period");
    double sum = 0.0;
    for (size_t i = 0; i < intervals.size(); ++i)
        sum += (intervals[i].upper - intervals[i].lower) / std::max(1.0, observations[i]);
    return sum / static_cast<double>(intervals.size());
}

double nearest_rank_percentile(std::vector<double> values, double percent) {
    if (values.empty()) throw std::runtime_error("percentile of empty series");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    long rank = static_cast<long>(std::ceil(percent / 100.0 * n));
    rank = std::max(1L, std::min(rank, static_cast<long>(values.size())));
    return values[static_cast<size_t>(rank - 1)];
}

Percentiles summary_percentiles(const std::vector<double>& values) {
    Percentiles p;
    p.p10 = nearest_rank_percentile(values, 10.0);
    p.median = nearest_rank_percentile(values, 50.0);
    p.p90 = nearest_rank_percentile(values, 90.0);
    return p;
}

} // namespace countycast
