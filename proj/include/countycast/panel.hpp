#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace countycast {

// County key: 5-digit zero-padded FIPS string.
using CountyId = std::string;

// Cumulative case/death panel on a contiguous daily grid. Day t is the offset
// from first_epoch_day; calendar dates exist only at the I/O boundary.
struct CountyPanel {
    std::vector<CountyId> counties; // sorted ascending
    long first_epoch_day = 0;
    int n_days = 0;

    // [county][day], cumulative counts (doubles so synthetic real-valued
    // series can flow through the same code paths)
    std::vector<std::vector<double>> deaths;
    std::vector<std::vector<double>> cases;
    std::vector<std::vector<double>> neigh_deaths;
    std::vector<std::vector<double>> neigh_cases;
    bool has_neighbor_aggregates = false;

    int n_counties() const { return static_cast<int>(counties.size()); }
    int index_of(const CountyId& id) const;
    std::string date_string(int day) const;
    int weekday(int day) const; // 0 = Sunday ... 6 = Saturday
};

struct AdjacencyGraph {
    // symmetric, no self-edges
    std::map<CountyId, std::set<CountyId>> neighbors;

    const std::set<CountyId>& of(const CountyId& id) const;
};

inline constexpr int kDemographicFeatureCount = 8;
inline constexpr std::array<const char*, kDemographicFeatureCount> kDemographicFeatureNames = {
    "pop_density",   "pop_estimate", "n_hospitals",  "n_icu_beds",
    "median_age",    "pct_smokers",  "pct_diabetes", "heart_disease_mortality"};

struct DemographicsTable {
    std::map<CountyId, std::array<double, kDemographicFeatureCount>> features;
    long imputed_values = 0;
};

struct Hospital {
    std::string id;
    CountyId county;
    long long employees = 0;
};

struct HospitalTable {
    std::vector<Hospital> hospitals;
};

// --- single-file loaders ---------------------------------------------------

// Wide series CSV: countyFIPS,CountyName,State,<date>,<date>,...
// Dates must be contiguous ascending ISO-8601; counts non-negative integers.
// clean=true applies the running-maximum clamp to each county's series.
struct SeriesFile {
    std::vector<CountyId> counties;
    long first_epoch_day = 0;
    int n_days = 0;
    std::vector<std::vector<double>> values;
    long cleaned_cells = 0; // cells raised by the clamp
};
SeriesFile load_county_series(const std::string& path, bool clean = true);

// Pair CSV: countyFIPS,neighborFIPS. Symmetric closure, self-edges dropped,
// duplicates collapsed.
AdjacencyGraph load_adjacency(const std::string& path);

// Keyed CSV per External Interfaces. Rows for counties outside `panel_counties`
// are dropped with a warning; missing feature values are imputed with the
// column median across all parsed rows.
DemographicsTable load_demographics(const std::string& path,
                                    const std::vector<CountyId>& panel_counties);

HospitalTable load_hospitals(const std::string& path,
                             const std::vector<CountyId>& panel_counties);

// Optional table for the social-distancing indicator: countyFIPS,date
std::map<CountyId, long> load_interventions(const std::string& path);

// --- panel assembly --------------------------------------------------------

// Aligns the deaths and cases files onto a common county set and date range.
// Counties present in only one file are dropped with a warning; the date axis
// is the overlap of the two files (fatal if empty).
CountyPanel build_panel(const SeriesFile& deaths, const SeriesFile& cases);

// Fills neigh_deaths / neigh_cases: for each county, the sum over adjacent
// panel counties. Neighbors absent from the panel contribute nothing (flagged
// once per county).
void neighbor_aggregates(CountyPanel& panel, const AdjacencyGraph& graph);

// Counties with deaths[c][t] >= threshold, as sorted panel indices.
std::vector<int> eligible_counties(const CountyPanel& panel, int t,
                                   double threshold = 10.0);
std::set<CountyId> eligible_county_ids(const CountyPanel& panel, int t,
                                       double threshold = 10.0);

// Running-maximum clamp used at ingestion; exposed for tests.
std::vector<double> running_max_clean(const std::vector<double>& series,
                                      long* raised_cells = nullptr);

// Normalizes a FIPS field to 5 zero-padded digits; empty result = malformed.
std::string normalize_fips(const std::string& raw);

} // namespace countycast
