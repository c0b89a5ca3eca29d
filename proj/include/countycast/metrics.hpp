#pragma once

#include <optional>
#include <vector>

#include "countycast/mepi.hpp"

namespace countycast {

// Daily errors over an eligible county set; nullopt when the set is empty.
// predictions/observations are parallel vectors over the eligible counties.
std::optional<double> mape_t(const std::vector<double>& predictions,
                             const std::vector<double>& observations);
std::optional<double> raw_mae_t(const std::vector<double>& predictions,
                                const std::vector<double>& observations);
std::optional<double> sqrt_mae_t(const std::vector<double>& predictions,
                                 const std::vector<double>& observations);

// Fraction of days with y inside the closed interval.
double coverage(const std::vector<PredictionInterval>& intervals,
                const std::vector<double>& observations);

// Mean of (upper - lower) / max(1, y).
double normalized_length(const std::vector<PredictionInterval>& intervals,
                         const std::vector<double>& observations);

// Nearest-rank percentiles: value at position ceil(p/100 * n) of the sorted series.
struct Percentiles {
    double p10 = 0.0;
    double median = 0.0;
    double p90 = 0.0;
};

double nearest_rank_percentile(std::vector<double> values, double percent);
Percentiles summary_percentiles(const std::vector<double>& values);

} // namespace countycast
