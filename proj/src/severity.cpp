#include "countycast/severity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "countycast/log.hpp"
#include "countycast/metrics.hpp"

namespace countycast {

std::string to_string(SeverityCategory c) {
    switch (c) {
        case SeverityCategory::Low: return "low";
        case SeverityCategory::Medium: return "medium";
        case SeverityCategory::High: return "high";
    }
    return "?";
}

std::vector<double> allocate_deaths(double county_value,
                                    const std::vector<long long>& employees) {
    if (employees.empty()) throw std::runtime_error("allocate_deaths: no hospitals");
    long long total = 0;
    for (long long e : employees) {
        if (e < 0) throw std::runtime_error("allocate_deaths: negative employee count");
        total += e;
    }
    std::vector<double> out(employees.size());
    if (total == 0) {
        const double share = county_value / static_cast<double>(employees.size());
        std::fill(out.begin(), out.end(), share);
        return out;
    }
    for (size_t i = 0; i < employees.size(); ++i)
        out[i] = county_value * static_cast<double>(employees[i]) / static_cast<double>(total);
    return out;
}

std::vector<double> percentile_ranks(const std::vector<double>& values) {
    // share of the *other* values strictly below, so the maximum scores 100
    const size_t n = values.size();
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (size_t i = 0; i < n; ++i) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), values[i]) -
                           sorted.begin();
        out[i] = 100.0 * static_cast<double>(below) / static_cast<double>(n - 1);
    }
    return out;
}

SeverityIndex severity_index(const std::vector<Hospital>& hospitals,
                             const std::vector<double>& alloc_total,
                             const std::vector<double>& alloc_new7) {
    const size_t n = hospitals.size();
    if (alloc_total.size() != n || alloc_new7.size() != n)
        throw std::runtime_error("severity_index: mismatched allocation lengths");
    if (n == 0) throw std::runtime_error("severity_index: no hospitals");

    const auto pct_total = percentile_ranks(alloc_total);
    const auto pct_new = percentile_ranks(alloc_new7);

    SeverityIndex out;
    out.records.resize(n);
    std::vector<double> scores(n);
    for (size_t i = 0; i < n; ++i) {
        auto& r = out.records[i];
        r.hospital_id = hospitals[i].id;
        r.county = hospitals[i].county;
        r.alloc_total = alloc_total[i];
        r.alloc_new7 = alloc_new7[i];
        r.pct_total = pct_total[i];
        r.pct_new = pct_new[i];
        r.score = 0.5 * (pct_total[i] + pct_new[i]);
        scores[i] = r.score;
    }

    // even tercile cuts; tied scores stay in one category
    const double n_d = static_cast<double>(n);
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    auto cut = [&](double fraction) {
        long rank = static_cast<long>(std::ceil(fraction * n_d));
        rank = std::max(1L, std::min(rank, static_cast<long>(n)));
        return sorted[static_cast<size_t>(rank - 1)];
    };
    const double t1 = cut(1.0 / 3.0);
    const double t2 = cut(2.0 / 3.0);
    for (size_t i = 0; i < n; ++i) {
        auto& r = out.records[i];
        if (r.score <= t1) r.category = SeverityCategory::Low;
        else if (r.score <= t2) r.category = SeverityCategory::Medium;
        else r.category = SeverityCategory::High;
    }

    if (n < 3 || sorted.front() == sorted.back()) {
        out.degenerate = true;
        warn("severity categories degenerate: fewer than 3 hospitals or all scores tied");
    }
    return out;
}

SeverityIndex build_severity(const CountyPanel& panel, int as_of,
                             const std::vector<double>& clep_7day,
                             const HospitalTable& hospitals) {
    if (static_cast<int>(clep_7day.size()) != panel.n_counties())
        throw std::runtime_error("build_severity: forecast/county size mismatch");

    std::map<CountyId, std::vector<size_t>> by_county;
    for (size_t i = 0; i < hospitals.hospitals.size(); ++i)
        by_county[hospitals.hospitals[i].county].push_back(i);

    std::vector<Hospital> flat;
    std::vector<double> total_alloc, new7_alloc;
    for (int c = 0; c < panel.n_counties(); ++c) {
        const CountyId& id = panel.counties[static_cast<size_t>(c)];
        const auto it = by_county.find(id);
        if (it == by_county.end()) {
            if (panel.deaths[static_cast<size_t>(c)][static_cast<size_t>(as_of)] > 0.0 ||
                clep_7day[static_cast<size_t>(c)] > 0.0)
                warn("county " + id + " has forecasts but no hospitals; skipped");
            continue;
        }
        const double observed = panel.deaths[static_cast<size_t>(c)][static_cast<size_t>(as_of)];
        const double new7 = std::max(clep_7day[static_cast<size_t>(c)] - observed, 0.0);

        std::vector<long long> employees;
        for (size_t idx : it->second)
            employees.push_back(hospitals.hospitals[idx].employees);
        const auto t_alloc = allocate_deaths(observed, employees);
        const auto n_alloc = allocate_deaths(new7, employees);
        for (size_t j = 0; j < it->second.size(); ++j) {
            flat.push_back(hospitals.hospitals[it->second[j]]);
            total_alloc.push_back(t_alloc[j]);
            new7_alloc.push_back(n_alloc[j]);
        }
    }
    if (flat.empty()) throw std::runtime_error("no hospitals matched any panel county");
    return severity_index(flat, total_alloc, new7_alloc);
}

} // namespace countycast
