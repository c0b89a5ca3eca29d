#pragma once

#include <string>
#include <vector>

#include "countycast/panel.hpp"

namespace countycast {

enum class SeverityCategory { Low, Medium, High };
std::string to_string(SeverityCategory c);

struct SeverityRecord {
    std::string hospital_id;
    CountyId county;
    double alloc_total = 0.0; // county total deaths split by employee share
    double alloc_new7 = 0.0;  // predicted new deaths over the next 7 days, split
    double pct_total = 0.0;   // percentile in [0,100], ties share
    double pct_new = 0.0;
    double score = 0.0; // mean of the two percentiles
    SeverityCategory category = SeverityCategory::Low;
};

// county_value split proportional to employee counts; an all-zero county
// splits equally. employees must be non-negative.
std::vector<double> allocate_deaths(double county_value,
                                    const std::vector<long long>& employees);

// Percentile of each value: share of strictly smaller values * 100.
std::vector<double> percentile_ranks(const std::vector<double>& values);

// Builds the full index: percentiles of both allocations, averaged score,
// tercile categories. degenerate=true when fewer than 3 hospitals or tied
// scores make a real three-way split impossible.
struct SeverityIndex {
    std::vector<SeverityRecord> records;
    bool degenerate = false;
};

SeverityIndex severity_index(const std::vector<Hospital>& hospitals,
                             const std::vector<double>& alloc_total,
                             const std::vector<double>& alloc_new7);

// Convenience wrapper: allocates county totals and CLEP 7-day new deaths to
// hospitals, then indexes them. Counties with forecasts but no hospitals are
// skipped with a warning.
SeverityIndex build_severity(const CountyPanel& panel, int as_of,
                             const std::vector<double>& clep_7day, // per county
                             const HospitalTable& hospitals);

} // namespace countycast
