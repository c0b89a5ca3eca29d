#include "countycast/mepi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countycast {

double normalized_error(double y, double yhat) {
    return std::abs(y / std::max(yhat, 1.0) - 1.0);
}

PredictionInterval mepi_interval(double yhat, const std::vector<double>& deltas,
                                 double y_last, bool clamped, int window) {
    PredictionInterval pi;
    if (deltas.empty()) {
        const double v = clamped ? std::max(yhat, y_last) : yhat;
        pi.lower = pi.upper = v;
        pi.degenerate = true;
        pi.partial_history = true;
        return pi;
    }
    if (static_cast<int>(deltas.size()) > window)
        throw std::runtime_error("mepi_interval: more deltas than the window allows");
    pi.partial_history = static_cast<int>(deltas.size()) < window;
    const double dmax = *std::max_element(deltas.begin(), deltas.end());
    pi.lower = yhat * (1.0 - dmax);
    pi.upper = yhat * (1.0 + dmax);
    if (clamped) pi.lower = std::max(pi.lower, y_last);
    return pi;
}

ErrorStore::ErrorStore(int n_counties, int max_horizon, int window)
    : entries_(static_cast<size_t>(n_counties) * static_cast<size_t>(max_horizon)),
      max_horizon_(max_horizon),
      window_(window) {}

void ErrorStore::record(int county, int horizon, int day, double delta) {
    if (horizon < 1 || horizon > max_horizon_)
        throw std::runtime_error("ErrorStore: horizon out of range");
    auto& dq = entries_[static_cast<size_t>(county) * static_cast<size_t>(max_horizon_) +
                        static_cast<size_t>(horizon - 1)];
    if (!dq.empty() && day <= dq.back().day)
        throw std::runtime_error("ErrorStore: days must be recorded in increasing order");
    dq.push_back(Entry{day, delta});
    while (static_cast<int>(dq.size()) > window_) dq.pop_front();
}

std::vector<double> ErrorStore::trailing(int county, int horizon, int upto_day) const {
    const auto& dq = entries_[static_cast<size_t>(county) * static_cast<size_t>(max_horizon_) +
                              static_cast<size_t>(horizon - 1)];
    std::vector<double> out;
    for (const auto& e : dq)
        if (e.day <= upto_day) out.push_back(e.delta);
    return out;
}

std::array<double, 6> tie_average_ranks(const std::array<double, 6>& values) {
    std::array<int, 6> order{0, 1, 2, 3, 4, 5};
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[static_cast<size_t>(a)] < values[static_cast<size_t>(b)]; });
    std::array<double, 6> ranks{};
    size_t i = 0;
    while (i < 6) {
        size_t j = i;
        while (j + 1 < 6 && values[static_cast<size_t>(order[j + 1])] ==
                                values[static_cast<size_t>(order[i])])
            ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[static_cast<size_t>(order[k])] = avg;
        i = j + 1;
    }
    return ranks;
}

RankDiagnostic rank_diagnostic(const std::vector<std::array<double, 6>>& tuples) {
    if (tuples.empty()) throw std::runtime_error("rank_diagnostic: no tuples");
    RankDiagnostic out;
    for (const auto& tuple : tuples) {
        const auto ranks = tie_average_ranks(tuple);
        for (size_t s = 0; s < 6; ++s) out.avg_rank[s] += ranks[s];
    }
    out.n_tuples = static_cast<long>(tuples.size());
    for (size_t s = 0; s < 6; ++s) out.avg_rank[s] /= static_cast<double>(out.n_tuples);
    return out;
}

} // namespace countycast
