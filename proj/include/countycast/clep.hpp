#pragma once

#include <deque>
#include <optional>
#include <vector>

namespace countycast {

// Ensemble weighting: w_m proportional to exp(-c(1-mu) * sum_{i=t0}^{t}
// mu^(t-i) * loss_i^m), normalized to sum 1, computed per county.
struct WeightConfig {
    enum class Transform { Sqrt, Log1p };

    double c = 1.0;
    double mu = 0.5;
    int window = 7;       // t0 = t - window + 1
    int loss_horizon = 3; // losses come from loss_horizon-day-ahead predictions
    Transform transform = Transform::Sqrt;
};

double clep_loss(double yhat, double y, WeightConfig::Transform transform);

// Per (county, member) trailing losses keyed by target day. Append-only; old
// days beyond the weighting window are discarded.
class LossHistory {
public:
    LossHistory(int n_counties, int n_members, int window);

    void record(int county, int member, int day, double loss);
    std::optional<double> get(int county, int member, int day) const;

private:
    struct Entry {
        int day;
        double loss;
    };
    std::vector<std::deque<Entry>> entries_; // county * n_members + member
    int n_members_;
    int window_;
};

// Weight exponents for day t+1 issued with losses through target day t.
// Missing days contribute zero loss; *missing_days counts them if given.
std::vector<double> clep_weight_exponents(const LossHistory& history, int county,
                                          int n_members, int t, const WeightConfig& config,
                                          int* missing_days = nullptr);

// Stable normalization: shifts by the max exponent before exponentiating.
// All-(-inf) exponents degrade to uniform weights.
std::vector<double> weights_from_exponents(const std::vector<double>& exponents);

std::vector<double> clep_weights(const LossHistory& history, int county, int n_members,
                                 int t, const WeightConfig& config,
                                 int* missing_days = nullptr);

// Weighted average of the members present (non-NaN forecasts); weights are
// renormalized over present members. Returns nullopt when none are present.
std::optional<double> clep_predict(const std::vector<double>& forecasts,
                                   const std::vector<double>& weights);

} // namespace countycast
