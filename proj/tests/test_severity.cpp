#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "countycast/log.hpp"
#include "countycast/severity.hpp"
#include "testutil.hpp"

using namespace countycast;

TEST_CASE("allocation is proportional to employees") {
    CHECK(allocate_deaths(40.0, {100, 300}) == std::vector<double>{10.0, 30.0});
    CHECK(allocate_deaths(40.0, {250}) == std::vector<double>{40.0});
    CHECK(allocate_deaths(10.0, {0, 0}) == std::vector<double>{5.0, 5.0});
}

TEST_CASE("allocation conserves mass") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<long long> emp(0, 5000);
    std::uniform_real_distribution<double> value(0.0, 900.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<long long> employees;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) employees.push_back(emp(rng));
        const double v = value(rng);
        const auto alloc = allocate_deaths(v, employees);
        double total = 0.0;
        for (double a : alloc) total += a;
        CHECK(total == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("three distinct scores split one per category") {
    std::vector<Hospital> hospitals = {{"H1", "00001", 10}, {"H2", "00003", 10}, {"H3", "00005", 10}};
    const SeverityIndex index =
        severity_index(hospitals, {1.0, 5.0, 9.0}, {2.0, 4.0, 8.0});
    REQUIRE(index.records.size() == 3);
    CHECK(index.records[0].category == SeverityCategory::Low);
    CHECK(index.records[1].category == SeverityCategory::Medium);
    CHECK(index.records[2].category == SeverityCategory::High);
    CHECK_FALSE(index.degenerate);
}

TEST_CASE("all-equal scores collapse into one flagged category") {
    set_warnings_enabled(false);
    std::vector<Hospital> hospitals = {{"H1", "00001", 5}, {"H2", "00003", 5}, {"H3", "00005", 5}};
    const SeverityIndex index = severity_index(hospitals, {3.0, 3.0, 3.0}, {1.0, 1.0, 1.0});
    set_warnings_enabled(true);
    CHECK(index.degenerate);
    for (const auto& r : index.records) CHECK(r.category == index.records[0].category);
}

TEST_CASE("the top hospital on both measures scores 100") {
    std::vector<Hospital> hospitals = {
        {"H1", "00001", 5}, {"H2", "00003", 5}, {"H3", "00005", 5}, {"H4", "00007", 5}};
    const SeverityIndex index =
        severity_index(hospitals, {1.0, 2.0, 3.0, 10.0}, {0.5, 1.0, 2.0, 9.0});
    CHECK(index.records[3].score == doctest::Approx(100.0));
    CHECK(index.records[3].category == SeverityCategory::High);
}

TEST_CASE("fewer than three hospitals is degenerate") {
    set_warnings_enabled(false);
    std::vector<Hospital> hospitals = {{"H1", "00001", 5}, {"H2", "00003", 9}};
    const SeverityIndex index = severity_index(hospitals, {1.0, 2.0}, {1.0, 2.0});
    set_warnings_enabled(true);
    CHECK(index.degenerate);
}

TEST_CASE("index is invariant to a common positive scaling") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    std::vector<Hospital> hospitals;
    std::vector<double> totals, new7;
    for (int i = 0; i < 12; ++i) {
        hospitals.push_back({"H" + std::to_string(i), "00001", 10});
        totals.push_back(u(rng));
        new7.push_back(u(rng));
    }
    const SeverityIndex base = severity_index(hospitals, totals, new7);
    std::vector<double> totals7, new77;
    for (double v : totals) totals7.push_back(7.0 * v);
    for (double v : new7) new77.push_back(7.0 * v);
    const SeverityIndex scaled = severity_index(hospitals, totals7, new77);
    for (size_t i = 0; i < base.records.size(); ++i) {
        CHECK(base.records[i].score == doctest::Approx(scaled.records[i].score).epsilon(1e-12));
        CHECK(base.records[i].category == scaled.records[i].category);
    }
}

TEST_CASE("build_severity allocates county forecasts and skips hospital-less counties") {
    set_warnings_enabled(false);
    auto panel = testutil::make_panel({"00001", "00003", "00005"},
                                      {{10, 12}, {20, 24}, {5, 6}},
                                      {{0, 0}, {0, 0}, {0, 0}});
    HospitalTable hospitals;
    hospitals.hospitals = {{"A", "00001", 100},
                           {"B", "00001", 300},
                           {"C", "00003", 50}}; // county 00005 has none
    // CLEP 7-day cumulatives: county1 -> 20 (8 new), county2 -> 30 (6 new), county3 -> 9
    const SeverityIndex index = build_severity(panel, 1, {20.0, 30.0, 9.0}, hospitals);
    set_warnings_enabled(true);

    REQUIRE(index.records.size() == 3);
    CHECK(index.records[0].hospital_id == "A");
    CHECK(index.records[0].alloc_total == doctest::Approx(3.0));  // 12 * 100/400
    CHECK(index.records[0].alloc_new7 == doctest::Approx(2.0));   // 8 * 100/400
    CHECK(index.records[1].alloc_total == doctest::Approx(9.0));
    CHECK(index.records[1].alloc_new7 == doctest::Approx(6.0));
    CHECK(index.records[2].alloc_total == doctest::Approx(24.0));
    CHECK(index.records[2].alloc_new7 == doctest::Approx(6.0));
}
