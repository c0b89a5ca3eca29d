#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "countycast/clep.hpp"

using namespace countycast;

namespace {

// direct evaluation of the weight formula, independent of LossHistory
double direct_exponent(const std::vector<double>& losses_by_day, int t, int t0,
                       double c, double mu) {
    double sum = 0.0;
    for (int i = t0; i <= t; ++i)
        sum += std::pow(mu, t - i) * losses_by_day[static_cast<size_t>(i - t0)];
    return -c * (1.0 - mu) * sum;
}

LossHistory history_from(const std::vector<std::vector<double>>& per_member_losses,
                         int first_day) {
    const int n_members = static_cast<int>(per_member_losses.size());
    const int n_days = static_cast<int>(per_member_losses[0].size());
    LossHistory h(1, n_members, n_days);
    for (int d = 0; d < n_days; ++d)
        for (int m = 0; m < n_members; ++m)
            h.record(0, m, first_day + d, per_member_losses[static_cast<size_t>(m)][static_cast<size_t>(d)]);
    return h;
}

} // namespace

TEST_CASE("sqrt loss matches its definition") {
    CHECK(clep_loss(16.0, 25.0, WeightConfig::Transform::Sqrt) == doctest::Approx(1.0));
    CHECK(clep_loss(4.0, 4.0, WeightConfig::Transform::Sqrt) == doctest::Approx(0.0));
    CHECK(clep_loss(0.0, 9.0, WeightConfig::Transform::Log1p) ==
          doctest::Approx(std::log(10.0)));
}

TEST_CASE("identical loss sequences give equal weights") {
    std::vector<double> losses = {0.3, 0.1, 0.7, 0.2, 0.4, 0.6, 0.5};
    const auto h = history_from({losses, losses}, 0);
    const auto w = clep_weights(h, 0, 2, 6, WeightConfig{});
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero-loss vs constant-loss weights match the closed form") {
    // member A: zero loss on days t-6..t; member B: loss 1 each day
    const int t = 6;
    const auto h = history_from({std::vector<double>(7, 0.0), std::vector<double>(7, 1.0)}, 0);

    WeightConfig config; // defaults: c=1, mu=0.5, window 7
    const auto exponents = clep_weight_exponents(h, 0, 2, t, config);
    CHECK(exponents[0] == doctest::Approx(0.0).epsilon(1e-15));
    // sum_{i=0}^{6} 0.5^i = 2 - 2^-6; exponent = -0.5 * (2 - 2^-6)
    CHECK(exponents[1] == doctest::Approx(-0.9921875).epsilon(1e-15));

    const auto w = weights_from_exponents(exponents);
    const double direct_a =
        direct_exponent(std::vector<double>(7, 0.0), t, 0, config.c, config.mu);
    const double direct_b =
        direct_exponent(std::vector<double>(7, 1.0), t, 0, config.c, config.mu);
    const double expected_a = 1.0 / (1.0 + std::exp(direct_b - direct_a));
    CHECK(w[0] == doctest::Approx(expected_a).epsilon(1e-9));
    CHECK(w[0] == doctest::Approx(0.7296).epsilon(2e-4));
    CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniformly better predictors get strictly larger weights") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> base(7), better(7), worse(7);
        for (int d = 0; d < 7; ++d) {
            base[static_cast<size_t>(d)] = u(rng);
            better[static_cast<size_t>(d)] = base[static_cast<size_t>(d)] * 0.5;
            worse[static_cast<size_t>(d)] = base[static_cast<size_t>(d)] + 0.3;
        }
        const auto h = history_from({better, base, worse}, 3);
        const auto w = clep_weights(h, 0, 3, 9, WeightConfig{});
        CHECK(w[0] > w[1]);
        CHECK(w[1] > w[2]);
    }
}

TEST_CASE("weights are invariant to a common exponent shift") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> exps = {u(rng), u(rng), u(rng), u(rng)};
        auto shifted = exps;
        const double shift = u(rng) * 100.0;
        for (auto& e : shifted) e += shift;
        const auto w1 = weights_from_exponents(exps);
        const auto w2 = weights_from_exponents(shifted);
        for (size_t m = 0; m < w1.size(); ++m)
            CHECK(w1[m] == doctest::Approx(w2[m]).epsilon(1e-12));
    }
}

TEST_CASE("huge negative exponents stay numerically stable") {
    const auto w = weights_from_exponents({-5000.0, -5001.0, -5000.5});
    CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[0] > w[2]);
    CHECK(w[2] > w[1]);
}

TEST_CASE("tiny mu ranks weights by the most recent day's loss") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    WeightConfig config;
    config.mu = 1e-6;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::vector<double>> losses(3, std::vector<double>(7));
        for (auto& series : losses)
            for (auto& v : series) v = u(rng);
        // force distinct last-day losses
        losses[0][6] = 0.5;
        losses[1][6] = 1.5;
        losses[2][6] = 2.5;
        const auto h = history_from(losses, 0);
        const auto w = clep_weights(h, 0, 3, 6, config);
        CHECK(w[0] > w[1]);
        CHECK(w[1] > w[2]);
    }
}

TEST_CASE("missing loss days contribute zero and are counted") {
    LossHistory h(1, 1, 7);
    h.record(0, 0, 5, 1.0);
    h.record(0, 0, 6, 1.0);
    int missing = 0;
    const auto exps = clep_weight_exponents(h, 0, 1, 6, WeightConfig{}, &missing);
    CHECK(missing == 5);
    CHECK(exps[0] == doctest::Approx(-0.5 * (1.0 + 0.5)).epsilon(1e-12));
}

TEST_CASE("degenerate weight vector falls back to uniform") {
    const double inf = std::numeric_limits<double>::infinity();
    const auto w = weights_from_exponents({-inf, -inf});
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
}

TEST_CASE("clep combination hand checks") {
    CHECK(*clep_predict({10.0, 20.0}, {1.0, 0.0}) == doctest::Approx(10.0));
    CHECK(*clep_predict({10.0, 20.0}, {0.5, 0.5}) == doctest::Approx(15.0));
    CHECK(*clep_predict({10.0, 20.0}, {0.7296, 0.2704}) ==
          doctest::Approx(12.704).epsilon(1e-12));
}

TEST_CASE("missing member forecasts renormalize the rest") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(*clep_predict({10.0, nan}, {0.3, 0.7}) == doctest::Approx(10.0));
    CHECK(*clep_predict({10.0, nan, 30.0}, {0.25, 0.5, 0.25}) ==
          doctest::Approx(20.0));
    CHECK_FALSE(clep_predict({nan, nan}, {0.5, 0.5}).has_value());
}

TEST_CASE("clep prediction stays inside the member range") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uf(0.0, 100.0);
    std::uniform_real_distribution<double> ue(-4.0, 0.0);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> forecasts = {uf(rng), uf(rng), uf(rng)};
        const auto w = weights_from_exponents({ue(rng), ue(rng), ue(rng)});
        const double combined = *clep_predict(forecasts, w);
        const double lo = *std::min_element(forecasts.begin(), forecasts.end());
        const double hi = *std::max_element(forecasts.begin(), forecasts.end());
        CHECK(combined >= lo - 1e-9);
        CHECK(combined <= hi + 1e-9);
    }
}
