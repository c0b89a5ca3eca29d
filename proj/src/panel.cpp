#include "countycast/panel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "countycast/csv.hpp"
#include "countycast/dates.hpp"
#include "countycast/log.hpp"

namespace countycast {

int CountyPanel::index_of(const CountyId& id) const {
    auto it = std::lower_bound(counties.begin(), counties.end(), id);
    if (it == counties.end() || *it != id) return -1;
    return static_cast<int>(it - counties.begin());
}

std::string CountyPanel::date_string(int day) const {
    return format_iso_date(first_epoch_day + day);
}

int CountyPanel::weekday(int day) const {
    return weekday_of(first_epoch_day + day);
}

const std::set<CountyId>& AdjacencyGraph::of(const CountyId& id) const {
    static const std::set<CountyId> empty;
    auto it = neighbors.find(id);
    return it == neighbors.end() ? empty : it->second;
}

std::string normalize_fips(const std::string& raw) {
    std::string s = raw;
    // strip surrounding whitespace
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty() || s.size() > 5) return "";
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return "";
    std::string padded(5 - s.size(), '0');
    padded += s;
    if (padded == "00000") return ""; // unallocated marker, not a county
    return padded;
}

std::vector<double> running_max_clean(const std::vector<double>& series,
                                      long* raised_cells) {
    std::vector<double> out = series;
    double running = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        if (i == 0) {
            running = out[0];
            continue;
        }
        if (out[i] < running) {
            out[i] = running;
            if (raised_cells) ++*raised_cells;
        } else {
            running = out[i];
        }
    }
    return out;
}

namespace {

long long parse_count(const std::string& field, const std::string& path) {
    if (field.empty()) throw std::runtime_error("empty count cell in " + path);
    size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(field, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("unparseable count '" + field + "' in " + path);
    }
    if (pos != field.size() || v < 0)
        throw std::runtime_error("unparseable count '" + field + "' in " + path);
    return v;
}

} // namespace

SeriesFile load_county_series(const std::string& path, bool clean) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 4)
        throw std::runtime_error(path + ": expected countyFIPS,CountyName,State and at least one date column");

    SeriesFile out;
    const int n_dates = static_cast<int>(table.header.size()) - 3;
    std::vector<long> epoch_days(n_dates);
    for (int j = 0; j < n_dates; ++j)
        epoch_days[j] = parse_iso_date(table.header[3 + j]);
    for (int j = 1; j < n_dates; ++j) {
        if (epoch_days[j] != epoch_days[j - 1] + 1)
            throw std::runtime_error(path + ": non-contiguous dates (" +
                                     table.header[2 + j] + " -> " + table.header[3 + j] + ")");
    }
    out.first_epoch_day = epoch_days[0];
    out.n_days = n_dates;

    std::map<CountyId, std::vector<double>> rows;
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            warn(path + ": row with wrong field count skipped");
            continue;
        }
        const std::string fips = normalize_fips(row[0]);
        if (fips.empty()) {
            warn(path + ": malformed FIPS '" + row[0] + "', row rejected");
            continue;
        }
        if (rows.count(fips)) {
            warn(path + ": duplicate county " + fips + ", keeping first row");
            continue;
        }
        std::vector<double> series(n_dates);
        for (int j = 0; j < n_dates; ++j)
            series[j] = static_cast<double>(parse_count(row[3 + j], path));
        if (clean) {
            long raised = 0;
            auto cleaned = running_max_clean(series, &raised);
            if (raised > 0) {
                out.cleaned_cells += raised;
                warn(path + ": county " + fips + " had " + std::to_string(raised) +
                     " non-monotone cell(s) raised by the running-max clamp");
            }
            series = std::move(cleaned);
        }
        rows.emplace(fips, std::move(series));
    }

    out.counties.reserve(rows.size());
    out.values.reserve(rows.size());
    for (auto& [fips, series] : rows) {
        out.counties.push_back(fips);
        out.values.push_back(std::move(series));
    }
    return out;
}

AdjacencyGraph load_adjacency(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 2)
        throw std::runtime_error(path + ": expected countyFIPS,neighborFIPS header");
    AdjacencyGraph graph;
    for (const auto& row : table.rows) {
        if (row.size() < 2) {
            warn(path + ": short adjacency row skipped");
            continue;
        }
        const std::string a = normalize_fips(row[0]);
        const std::string b = normalize_fips(row[1]);
        if (a.empty() || b.empty()) {
            warn(path + ": malformed FIPS pair '" + row[0] + "','" + row[1] + "' skipped");
            continue;
        }
        if (a == b) continue; // self-edge dropped
        graph.neighbors[a].insert(b);
        graph.neighbors[b].insert(a); // symmetric closure; set handles duplicates
    }
    return graph;
}

DemographicsTable load_demographics(const std::string& path,
                                    const std::vector<CountyId>& panel_counties) {
    const CsvTable table = read_csv(path);
    for (int f = 0; f < kDemographicFeatureCount; ++f)
        if (table.column(kDemographicFeatureNames[f]) < 0)
            throw std::runtime_error(path + ": missing column '" +
                                     std::string(kDemographicFeatureNames[f]) + "'");
    const int fips_col = table.column("countyFIPS");
    if (fips_col < 0) throw std::runtime_error(path + ": missing column 'countyFIPS'");

    struct Row {
        CountyId fips;
        std::array<double, kDemographicFeatureCount> values;
        std::array<bool, kDemographicFeatureCount> missing;
    };
    std::vector<Row> parsed;
    std::array<std::vector<double>, kDemographicFeatureCount> observed;

    auto is_missing = [](const std::string& s) {
        return s.empty() || s == "NA" || s == "NaN" || s == "nan";
    };

    for (const auto& row : table.rows) {
        const std::string fips = normalize_fips(row[fips_col]);
        if (fips.empty()) {
            warn(path + ": malformed FIPS '" + row[fips_col] + "', row rejected");
            continue;
        }
        Row r;
        r.fips = fips;
        for (int f = 0; f < kDemographicFeatureCount; ++f) {
            const int col = table.column(kDemographicFeatureNames[f]);
            const std::string& cell = row[col];
            if (is_missing(cell)) {
                r.missing[f] = true;
                r.values[f] = 0.0;
            } else {
                r.missing[f] = false;
                try {
                    r.values[f] = std::stod(cell);
                } catch (const std::exception&) {
                    throw std::runtime_error(path + ": unparseable value '" + cell + "'");
                }
                if (!std::isfinite(r.values[f]))
                    throw std::runtime_error(path + ": non-finite value '" + cell + "'");
                observed[f].push_back(r.values[f]);
            }
        }
        parsed.push_back(std::move(r));
    }

    // national per-column medians for imputation
    std::array<double, kDemographicFeatureCount> medians{};
    for (int f = 0; f < kDemographicFeatureCount; ++f) {
        auto& v = observed[f];
        if (v.empty()) {
            medians[f] = 0.0;
            continue;
        }
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        medians[f] = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    std::set<CountyId> keep(panel_counties.begin(), panel_counties.end());
    DemographicsTable out;
    for (auto& r : parsed) {
        if (!keep.count(r.fips)) {
            warn(path + ": county " + r.fips + " not in panel, row dropped");
            continue;
        }
        for (int f = 0; f < kDemographicFeatureCount; ++f) {
            if (r.missing[f]) {
                r.values[f] = medians[f];
                ++out.imputed_values;
                warn(path + ": county " + r.fips + " missing " +
                     kDemographicFeatureNames[f] + ", imputed with national median");
            }
        }
        out.features[r.fips] = r.values;
    }
    return out;
}

HospitalTable load_hospitals(const std::string& path,
                             const std::vector<CountyId>& panel_counties) {
    const CsvTable table = read_csv(path);
    const int id_col = table.column("hospital_id");
    const int fips_col = table.column("countyFIPS");
    const int emp_col = table.column("employees");
    if (id_col < 0 || fips_col < 0 || emp_col < 0)
        throw std::runtime_error(path + ": expected hospital_id,countyFIPS,employees header");

    std::set<CountyId> keep(panel_counties.begin(), panel_counties.end());
    HospitalTable out;
    for (const auto& row : table.rows) {
        const std::string fips = normalize_fips(row[fips_col]);
        if (fips.empty()) {
            warn(path + ": malformed FIPS '" + row[fips_col] + "', row rejected");
            continue;
        }
        if (!keep.count(fips)) {
            warn(path + ": hospital " + row[id_col] + " in unknown county " + fips + ", dropped");
            continue;
        }
        const long long employees = parse_count(row[emp_col], path);
        out.hospitals.push_back(Hospital{row[id_col], fips, employees});
    }
    return out;
}

std::map<CountyId, long> load_interventions(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int fips_col = table.column("countyFIPS");
    const int date_col = table.column("date");
    if (fips_col < 0 || date_col < 0)
        throw std::runtime_error(path + ": expected countyFIPS,date header");
    std::map<CountyId, long> out;
    for (const auto& row : table.rows) {
        const std::string fips = normalize_fips(row[fips_col]);
        if (fips.empty()) {
            warn(path + ": malformed FIPS '" + row[fips_col] + "', row rejected");
            continue;
        }
        out[fips] = parse_iso_date(row[date_col]);
    }
    return out;
}

CountyPanel build_panel(const SeriesFile& deaths, const SeriesFile& cases) {
    const long start = std::max(deaths.first_epoch_day, cases.first_epoch_day);
    const long end = std::min(deaths.first_epoch_day + deaths.n_days,
                              cases.first_epoch_day + cases.n_days);
    if (end <= start)
        throw std::runtime_error("deaths and cases files have no overlapping dates");
    if (start != deaths.first_epoch_day || start != cases.first_epoch_day ||
        end != deaths.first_epoch_day + deaths.n_days ||
        end != cases.first_epoch_day + cases.n_days)
        warn("deaths/cases date ranges differ; panel restricted to the overlap " +
             format_iso_date(start) + ".." + format_iso_date(end - 1));

    std::vector<CountyId> common;
    std::set_intersection(deaths.counties.begin(), deaths.counties.end(),
                          cases.counties.begin(), cases.counties.end(),
                          std::back_inserter(common));
    for (const auto& c : deaths.counties)
        if (!std::binary_search(cases.counties.begin(), cases.counties.end(), c))
            warn("county " + c + " present in deaths file only, dropped");
    for (const auto& c : cases.counties)
        if (!std::binary_search(deaths.counties.begin(), deaths.counties.end(), c))
            warn("county " + c + " present in cases file only, dropped");
    if (common.empty()) throw std::runtime_error("no counties common to deaths and cases files");

    CountyPanel panel;
    panel.counties = common;
    panel.first_epoch_day = start;
    panel.n_days = static_cast<int>(end - start);
    panel.deaths.resize(common.size());
    panel.cases.resize(common.size());

    auto slice = [&](const SeriesFile& file, const CountyId& id) {
        const auto it = std::lower_bound(file.counties.begin(), file.counties.end(), id);
        const size_t row = static_cast<size_t>(it - file.counties.begin());
        const long offset = start - file.first_epoch_day;
        const auto& src = file.values[row];
        return std::vector<double>(src.begin() + offset, src.begin() + offset + panel.n_days);
    };
    for (size_t i = 0; i < common.size(); ++i) {
        panel.deaths[i] = slice(deaths, common[i]);
        panel.cases[i] = slice(cases, common[i]);
    }
    return panel;
}

void neighbor_aggregates(CountyPanel& panel, const AdjacencyGraph& graph) {
    const int n = panel.n_counties();
    panel.neigh_deaths.assign(n, std::vector<double>(panel.n_days, 0.0));
    panel.neigh_cases.assign(n, std::vector<double>(panel.n_days, 0.0));
    for (int i = 0; i < n; ++i) {
        bool flagged_unknown = false;
        for (const auto& nb : graph.of(panel.counties[i])) {
            const int j = panel.index_of(nb);
            if (j < 0) {
                if (!flagged_unknown) {
                    warn("county " + panel.counties[i] + " has neighbor(s) outside the panel (e.g. " + nb + ")");
                    flagged_unknown = true;
                }
                continue;
            }
            for (int t = 0; t < panel.n_days; ++t) {
                panel.neigh_deaths[i][t] += panel.deaths[j][t];
                panel.neigh_cases[i][t] += panel.cases[j][t];
            }
        }
    }
    panel.has_neighbor_aggregates = true;
}

std::vector<int> eligible_counties(const CountyPanel& panel, int t, double threshold) {
    if (t < 0 || t >= panel.n_days)
        throw std::runtime_error("eligible_counties: day out of panel range");
    std::vector<int> out;
    for (int i = 0; i < panel.n_counties(); ++i)
        if (panel.deaths[i][t] >= threshold) out.push_back(i);
    return out;
}

std::set<CountyId> eligible_county_ids(const CountyPanel& panel, int t, double threshold) {
    std::set<CountyId> out;
    for (int i : eligible_counties(panel, t, threshold)) out.insert(panel.counties[i]);
    return out;
}

} // namespace countycast
