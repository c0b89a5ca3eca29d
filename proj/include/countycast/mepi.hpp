#pragma once

#include <array>
#include <deque>
#include <vector>

namespace countycast {

// Normalized absolute error of a k-day-ahead prediction: |y / max(yhat,1) - 1|
double normalized_error(double y, double yhat);

struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    bool partial_history = false; // fewer than the full error window available
    bool degenerate = false;      // no error history at all; unusable
};

// Interval from the maximum of the trailing normalized errors:
//   [max(yhat*(1-dmax), y_last), yhat*(1+dmax)]        (clamped, default)
//   [yhat*(1-dmax), yhat*(1+dmax)]                     (clamped = false)
// `deltas` holds the most recent window of errors (normally 5); fewer values
// flag the interval, none makes it degenerate at max(yhat, y_last).
PredictionInterval mepi_interval(double yhat, const std::vector<double>& deltas,
                                 double y_last, bool clamped = true, int window = 5);

// Trailing normalized-error window per (county, horizon), keyed by target day.
class ErrorStore {
public:
    ErrorStore(int n_counties, int max_horizon, int window = 5);

    void record(int county, int horizon, int day, double delta);
    // most recent <= window errors with target day <= upto_day, oldest first
    std::vector<double> trailing(int county, int horizon, int upto_day) const;

private:
    struct Entry {
        int day;
        double delta;
    };
    std::vector<std::deque<Entry>> entries_;
    int max_horizon_;
    int window_;
};

// Average rank per slot over six-error tuples {future, t, t-1, ..., t-4};
// ranks ascend so the largest error ranks 6, ties take the average position.
// Exchangeable errors give every slot an expected rank of 3.5.
struct RankDiagnostic {
    std::array<double, 6> avg_rank{};
    long n_tuples = 0;
};

RankDiagnostic rank_diagnostic(const std::vector<std::array<double, 6>>& tuples);

std::array<double, 6> tie_average_ranks(const std::array<double, 6>& values);

} // namespace countycast
