#include "countycast/report_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "countycast/csv.hpp"
#include "countycast/dates.hpp"

namespace countycast {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

void emit_forecasts(std::ostream& out, const CountyPanel& panel, const ForecastSet& fs,
                    int emit_horizon) {
    out << "# countycast forecast schema 1\n";
    out << "countyFIPS,as_of_date,horizon,predictor,value,fallback_flag\n";
    const std::string as_of = panel.date_string(fs.as_of);
    const int K = std::min(emit_horizon, fs.horizon);
    for (size_t p = 0; p <= fs.predictors.size(); ++p) {
        const bool is_clep = p == fs.predictors.size();
        const std::string name = is_clep ? "clep" : to_string(fs.predictors[p]);
        for (int c = 0; c < panel.n_counties(); ++c) {
            for (int k = 1; k <= K; ++k) {
                const double v = is_clep ? fs.clep(c, k - 1) : fs.values[p](c, k - 1);
                const int flag = is_clep
                                     ? static_cast<int>(fs.clep_flags[static_cast<size_t>(c)])
                                     : static_cast<int>(fs.flag(static_cast<int>(p), c, k));
                out << panel.counties[static_cast<size_t>(c)] << ',' << as_of << ',' << k
                    << ',' << name << ',' << format_double(v) << ',' << flag << '\n';
            }
        }
    }
}

void emit_intervals(std::ostream& out, const CountyPanel& panel, const ForecastSet& fs,
                    int emit_horizon) {
    out << "# countycast intervals schema 1\n";
    out << "countyFIPS,as_of_date,target_date,horizon,lower,upper\n";
    const std::string as_of = panel.date_string(fs.as_of);
    const int K = std::min(emit_horizon, fs.horizon);
    for (int c = 0; c < panel.n_counties(); ++c) {
        for (int k = 1; k <= K; ++k) {
            const PredictionInterval& pi = fs.interval(c, k);
            out << panel.counties[static_cast<size_t>(c)] << ',' << as_of << ','
                << format_iso_date(panel.first_epoch_day + fs.as_of + k) << ',' << k << ','
                << format_double(pi.lower) << ',' << format_double(pi.upper) << '\n';
        }
    }
}

void emit_weights(std::ostream& out, const CountyPanel& panel, const ForecastSet& fs) {
    out << "# countycast weights schema 1\n";
    out << "countyFIPS,as_of_date,predictor,weight\n";
    const std::string as_of = panel.date_string(fs.as_of);
    for (int c = 0; c < panel.n_counties(); ++c)
        for (size_t m = 0; m < fs.ensemble.size(); ++m)
            out << panel.counties[static_cast<size_t>(c)] << ',' << as_of << ','
                << to_string(fs.ensemble[m]) << ','
                << format_double(fs.weights(c, static_cast<int>(m))) << '\n';
}

} // namespace

void write_forecast_csv(const std::string& path, const CountyPanel& panel,
                        const ForecastSet& fs, int emit_horizon) {
    auto out = open_out(path);
    emit_forecasts(out, panel, fs, emit_horizon);
}

void write_intervals_csv(const std::string& path, const CountyPanel& panel,
                         const ForecastSet& fs, int emit_horizon) {
    auto out = open_out(path);
    emit_intervals(out, panel, fs, emit_horizon);
}

void write_weights_csv(const std::string& path, const CountyPanel& panel,
                       const ForecastSet& fs) {
    auto out = open_out(path);
    emit_weights(out, panel, fs);
}

std::string forecast_csv_string(const CountyPanel& panel, const ForecastSet& fs,
                                int emit_horizon) {
    std::ostringstream out;
    emit_forecasts(out, panel, fs, emit_horizon);
    return out.str();
}

std::string intervals_csv_string(const CountyPanel& panel, const ForecastSet& fs,
                                 int emit_horizon) {
    std::ostringstream out;
    emit_intervals(out, panel, fs, emit_horizon);
    return out.str();
}

std::string weights_csv_string(const CountyPanel& panel, const ForecastSet& fs) {
    std::ostringstream out;
    emit_weights(out, panel, fs);
    return out.str();
}

void write_metrics_csv(const std::string& path, const CountyPanel& panel,
                       const BacktestReport& report) {
    auto out = open_out(path);
    out << "# countycast daily metrics schema 1\n";
    out << "date,horizon,predictor,mape,raw_mae,sqrt_mae,n_eligible\n";
    for (const auto& row : report.daily)
        out << panel.date_string(row.day) << ',' << row.horizon << ',' << row.predictor
            << ',' << format_double(row.mape) << ',' << format_double(row.raw_mae) << ','
            << format_double(row.sqrt_mae) << ',' << row.n_eligible << '\n';
}

void write_interval_stats_csv(const std::string& path, const CountyPanel& panel,
                              const BacktestReport& report) {
    auto out = open_out(path);
    out << "# countycast interval evaluation schema 1\n";
    out << "countyFIPS,horizon,coverage,avg_normalized_length,n_days\n";
    for (const auto& row : report.county_intervals)
        out << panel.counties[static_cast<size_t>(row.county)] << ',' << row.horizon << ','
            << format_double(row.coverage) << ','
            << format_double(row.avg_normalized_length) << ',' << row.n_days << '\n';
}

void write_trajectories_csv(const std::string& path, const CountyPanel& panel,
                            const BacktestReport& report) {
    auto out = open_out(path);
    out << "# countycast county trajectories schema 1\n";
    out << "countyFIPS,date,horizon,observed,clep,lower,upper\n";
    for (const auto& row : report.trajectories)
        out << panel.counties[static_cast<size_t>(row.county)] << ','
            << panel.date_string(row.day) << ',' << row.horizon << ','
            << format_double(row.observed) << ',' << format_double(row.clep) << ','
            << format_double(row.lower) << ',' << format_double(row.upper) << '\n';
}

void write_summary_json(const std::string& path, const CountyPanel& panel,
                        const BacktestConfig& config, const BacktestReport& report) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["eval_start"] = panel.date_string(config.eval_start);
    doc["eval_end"] = panel.date_string(config.eval_end);
    doc["skipped_days"] = report.skipped_days;

    nlohmann::ordered_json cfg;
    cfg["mu"] = config.engine.weight.mu;
    cfg["c"] = config.engine.weight.c;
    cfg["weight_window"] = config.engine.weight.window;
    cfg["loss_horizon"] = config.engine.weight.loss_horizon;
    cfg["transform"] =
        config.engine.weight.transform == WeightConfig::Transform::Sqrt ? "sqrt" : "log1p";
    cfg["mepi_window"] = config.engine.mepi_window;
    cfg["mepi_clamped"] = config.engine.mepi_clamped;
    cfg["eligibility_threshold"] = config.engine.eligibility_threshold;
    std::vector<std::string> members;
    for (PredictorKind m : config.engine.ensemble) members.push_back(to_string(m));
    cfg["ensemble"] = members;
    doc["config"] = cfg;

    nlohmann::ordered_json summaries = nlohmann::ordered_json::array();
    for (const auto& entry : report.summary) {
        nlohmann::ordered_json e;
        e["horizon"] = entry.horizon;
        e["predictor"] = entry.predictor;
        e["n_days"] = entry.n_days;
        e["mape"] = {{"p10", entry.mape.p10}, {"median", entry.mape.median}, {"p90", entry.mape.p90}};
        e["raw_mae"] = {{"p10", entry.raw_mae.p10}, {"median", entry.raw_mae.median}, {"p90", entry.raw_mae.p90}};
        e["sqrt_mae"] = {{"p10", entry.sqrt_mae.p10}, {"median", entry.sqrt_mae.median}, {"p90", entry.sqrt_mae.p90}};
        summaries.push_back(std::move(e));
    }
    doc["summary"] = std::move(summaries);

    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

void write_severity_csv(const std::string& path, const SeverityIndex& index) {
    auto out = open_out(path);
    out << "# countycast severity schema 1\n";
    out << "hospital_id,countyFIPS,alloc_total,alloc_new7,pct_total,pct_new,score,category\n";
    for (const auto& r : index.records)
        out << csv_escape(r.hospital_id) << ',' << r.county << ','
            << format_double(r.alloc_total) << ',' << format_double(r.alloc_new7) << ','
            << format_double(r.pct_total) << ',' << format_double(r.pct_new) << ','
            << format_double(r.score) << ',' << to_string(r.category) << '\n';
}

} // namespace countycast
