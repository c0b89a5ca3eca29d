// countycast: county-level death-count forecasting pipeline.
// Subcommands: ingest-check, forecast, backtest, diagnose, severity.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include <json.hpp>

#include "countycast/csv.hpp"
#include "countycast/dates.hpp"
#include "countycast/engine.hpp"
#include "countycast/log.hpp"
#include "countycast/panel.hpp"
#include "countycast/report_io.hpp"
#include "countycast/severity.hpp"

namespace cc = countycast;

namespace {

struct CommonInputs {
    std::string deaths_path, cases_path, adjacency_path, demographics_path,
        hospitals_path, interventions_path;
    bool no_clean = false;
};

struct PipelineFlags {
    std::string predictors = "separate,linear,shared,expanded_shared,demographics_shared";
    std::string ensemble = "expanded_shared,linear";
    std::string horizons = "3,5,7,14";
    double mu = 0.5;
    double c = 1.0;
    int loss_horizon = 3;
    int weight_window = 7;
    std::string transform = "sqrt";
    int mepi_window = 5;
    bool unclamped_mepi = false;
    double threshold = 10.0;
    bool weekday = false;
    bool social_distancing = false;
    int threads = 1;
};

void add_common_inputs(CLI::App* cmd, CommonInputs& in, bool need_hospitals = false) {
    cmd->add_option("--deaths", in.deaths_path, "cumulative deaths CSV")->required();
    cmd->add_option("--cases", in.cases_path, "cumulative cases CSV")->required();
    cmd->add_option("--adjacency", in.adjacency_path, "county adjacency CSV");
    cmd->add_option("--demographics", in.demographics_path, "county demographics CSV");
    auto* hosp = cmd->add_option("--hospitals", in.hospitals_path, "hospitals CSV");
    if (need_hospitals) hosp->required();
    cmd->add_option("--interventions", in.interventions_path,
                    "social-distancing intervention dates CSV");
    cmd->add_flag("--no-clean", in.no_clean, "keep raw values; skip the running-max clamp");
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
    cmd->add_option("--predictors", f.predictors, "comma list of predictors to run");
    cmd->add_option("--ensemble", f.ensemble, "comma list of CLEP members");
    cmd->add_option("--horizons", f.horizons, "comma list of horizons (days ahead)");
    cmd->add_option("--mu", f.mu, "weight decay in (0,1)");
    cmd->add_option("--c", f.c, "weight sharpness > 0");
    cmd->add_option("--loss-horizon", f.loss_horizon, "horizon used for weight losses");
    cmd->add_option("--weight-window", f.weight_window, "days of losses in the weights");
    cmd->add_option("--transform", f.transform, "loss transform: sqrt or log1p")
        ->check(CLI::IsMember({"sqrt", "log1p"}));
    cmd->add_option("--mepi-window", f.mepi_window, "errors in the interval maximum");
    cmd->add_flag("--unclamped-mepi", f.unclamped_mepi,
                  "drop the last-observed lower clamp");
    cmd->add_option("--threshold", f.threshold, "eligibility threshold (deaths)");
    cmd->add_flag("--weekday", f.weekday, "Sunday/Monday target-day indicator feature");
    cmd->add_flag("--social-distancing", f.social_distancing,
                  "post-intervention indicator feature (needs --interventions)");
    cmd->add_option("--threads", f.threads, "worker threads for per-county fits");
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string token;
    for (char ch : csv) {
        if (ch == ',') {
            if (!token.empty()) out.push_back(token);
            token.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            token += ch;
        }
    }
    if (!token.empty()) out.push_back(token);
    return out;
}

std::vector<cc::PredictorKind> parse_kinds(const std::string& csv, const char* what) {
    std::vector<cc::PredictorKind> out;
    for (const auto& name : split_list(csv)) {
        const auto kind = cc::parse_predictor_kind(name);
        if (!kind)
            throw std::runtime_error(std::string("unknown ") + what + " '" + name + "'");
        if (std::find(out.begin(), out.end(), *kind) == out.end()) out.push_back(*kind);
    }
    if (out.empty()) throw std::runtime_error(std::string("empty ") + what + " list");
    return out;
}

std::vector<int> parse_horizons(const std::string& csv) {
    std::vector<int> out;
    for (const auto& token : split_list(csv)) {
        const int k = std::stoi(token);
        if (k < 1) throw std::runtime_error("horizons must be >= 1");
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    if (out.empty()) throw std::runtime_error("empty horizon list");
    std::sort(out.begin(), out.end());
    return out;
}

struct LoadedData {
    cc::CountyPanel panel;
    std::optional<cc::DemographicsTable> demographics;
    std::optional<cc::HospitalTable> hospitals;
    long cleaned_cells = 0;
};

LoadedData load_inputs(const CommonInputs& in,
                       const std::vector<cc::PredictorKind>& predictors) {
    const bool needs_adjacency =
        std::find(predictors.begin(), predictors.end(), cc::PredictorKind::ExpandedShared) !=
        predictors.end();
    const bool needs_demographics =
        std::find(predictors.begin(), predictors.end(),
                  cc::PredictorKind::DemographicsShared) != predictors.end();
    if (needs_adjacency && in.adjacency_path.empty())
        throw std::runtime_error(
            "missing input: --adjacency is required when the expanded_shared predictor is enabled");
    if (needs_demographics && in.demographics_path.empty())
        throw std::runtime_error(
            "missing input: --demographics is required when the demographics_shared predictor is enabled");

    LoadedData data;
    const cc::SeriesFile deaths = cc::load_county_series(in.deaths_path, !in.no_clean);
    const cc::SeriesFile cases = cc::load_county_series(in.cases_path, !in.no_clean);
    data.cleaned_cells = deaths.cleaned_cells + cases.cleaned_cells;
    data.panel = cc::build_panel(deaths, cases);
    if (!in.adjacency_path.empty()) {
        const cc::AdjacencyGraph graph = cc::load_adjacency(in.adjacency_path);
        cc::neighbor_aggregates(data.panel, graph);
    }
    if (!in.demographics_path.empty())
        data.demographics = cc::load_demographics(in.demographics_path, data.panel.counties);
    if (!in.hospitals_path.empty())
        data.hospitals = cc::load_hospitals(in.hospitals_path, data.panel.counties);
    return data;
}

cc::EngineConfig make_engine_config(const PipelineFlags& f, const CommonInputs& in,
                                    int emit_horizon) {
    cc::EngineConfig cfg;
    cfg.predictors = parse_kinds(f.predictors, "predictor");
    cfg.ensemble = parse_kinds(f.ensemble, "ensemble member");
    cfg.weight.mu = f.mu;
    cfg.weight.c = f.c;
    cfg.weight.loss_horizon = f.loss_horizon;
    cfg.weight.window = f.weight_window;
    cfg.weight.transform = f.transform == "log1p" ? cc::WeightConfig::Transform::Log1p
                                                  : cc::WeightConfig::Transform::Sqrt;
    cfg.mepi_window = f.mepi_window;
    cfg.mepi_clamped = !f.unclamped_mepi;
    cfg.eligibility_threshold = f.threshold;
    cfg.max_horizon = emit_horizon;
    cfg.threads = f.threads;
    cfg.pred.weekday_feature = f.weekday;
    if (f.weekday) cfg.pred.linear_window = 7; // keeps the indicator identifiable
    cfg.pred.social_distancing = f.social_distancing;
    if (f.social_distancing) {
        if (in.interventions_path.empty())
            throw std::runtime_error(
                "missing input: --interventions is required with --social-distancing");
        // stored as epoch days here; rebased to panel offsets once the panel exists
        for (const auto& [fips, epoch] : cc::load_interventions(in.interventions_path))
            cfg.pred.intervention_day[fips] = static_cast<int>(epoch);
    }
    return cfg;
}

void rebase_interventions(cc::EngineConfig& cfg, const cc::CountyPanel& panel) {
    if (!cfg.pred.social_distancing) return;
    std::map<cc::CountyId, int> rebased;
    for (const auto& [fips, epoch] : cfg.pred.intervention_day)
        rebased[fips] = static_cast<int>(static_cast<long>(epoch) - panel.first_epoch_day);
    cfg.pred.intervention_day = std::move(rebased);
    for (const auto& id : panel.counties)
        if (!cfg.pred.intervention_day.count(id))
            cc::warn("county " + id + " has no intervention date; indicator stays 0");
}

int panel_day(const cc::CountyPanel& panel, const std::string& iso, const char* what) {
    const long epoch = cc::parse_iso_date(iso);
    const long day = epoch - panel.first_epoch_day;
    if (day < 0 || day >= panel.n_days)
        throw std::runtime_error(std::string(what) + " " + iso + " is outside the panel (" +
                                 panel.date_string(0) + ".." +
                                 panel.date_string(panel.n_days - 1) + ")");
    return static_cast<int>(day);
}

std::filesystem::path prepare_out(const std::string& out_dir) {
    std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int cmd_ingest_check(const CommonInputs& in, const PipelineFlags& f) {
    const auto predictors = parse_kinds(f.predictors, "predictor");
    const LoadedData data = load_inputs(in, predictors);
    nlohmann::ordered_json doc;
    doc["counties"] = data.panel.n_counties();
    doc["days"] = data.panel.n_days;
    doc["first_date"] = data.panel.date_string(0);
    doc["last_date"] = data.panel.date_string(data.panel.n_days - 1);
    doc["cleaned_cells"] = data.cleaned_cells;
    doc["neighbor_aggregates"] = data.panel.has_neighbor_aggregates;
    doc["demographics_rows"] =
        data.demographics ? static_cast<long>(data.demographics->features.size()) : 0L;
    doc["imputed_demographic_values"] =
        data.demographics ? data.demographics->imputed_values : 0L;
    doc["hospitals"] =
        data.hospitals ? static_cast<long>(data.hospitals->hospitals.size()) : 0L;
    doc["warnings"] = cc::warning_count();
    std::cout << doc.dump(2) << '\n';
    return 0;
}

int cmd_forecast(const CommonInputs& in, const PipelineFlags& f, const std::string& as_of,
                 const std::string& out_dir) {
    const auto horizons = parse_horizons(f.horizons);
    const int K = horizons.back();
    cc::EngineConfig cfg = make_engine_config(f, in, K);
    cfg.eval_horizons = horizons;
    const LoadedData data = load_inputs(in, cfg.predictors);
    rebase_interventions(cfg, data.panel);

    const int day = panel_day(data.panel, as_of, "as-of date");
    const cc::ForecastSet fs = cc::forecast_at(
        data.panel, data.demographics ? &*data.demographics : nullptr, day, cfg);

    const auto dir = prepare_out(out_dir);
    cc::write_forecast_csv((dir / "forecasts.csv").string(), data.panel, fs, K);
    cc::write_intervals_csv((dir / "intervals.csv").string(), data.panel, fs, K);
    cc::write_weights_csv((dir / "weights.csv").string(), data.panel, fs);
    std::cout << "wrote forecasts.csv, intervals.csv, weights.csv to " << dir.string()
              << '\n';
    return 0;
}

int cmd_backtest(const CommonInputs& in, const PipelineFlags& f, const std::string& start,
                 const std::string& end, const std::string& out_dir) {
    const auto horizons = parse_horizons(f.horizons);
    cc::BacktestConfig config;
    config.engine = make_engine_config(f, in, horizons.back());
    config.engine.eval_horizons = horizons;
    const LoadedData data = load_inputs(in, config.engine.predictors);
    rebase_interventions(config.engine, data.panel);
    config.eval_start = panel_day(data.panel, start, "start date");
    config.eval_end = panel_day(data.panel, end, "end date");

    const cc::BacktestReport report = cc::run_backtest(
        data.panel, data.demographics ? &*data.demographics : nullptr, config);

    const auto dir = prepare_out(out_dir);
    cc::write_metrics_csv((dir / "metrics_daily.csv").string(), data.panel, report);
    cc::write_interval_stats_csv((dir / "intervals_eval.csv").string(), data.panel, report);
    cc::write_trajectories_csv((dir / "trajectories.csv").string(), data.panel, report);
    cc::write_summary_json((dir / "summary.json").string(), data.panel, config, report);
    std::cout << "wrote metrics_daily.csv, intervals_eval.csv, trajectories.csv, summary.json to "
              << dir.string() << '\n';
    return 0;
}

int cmd_diagnose_synthetic(long tuples, unsigned long seed, const std::string& out_dir) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::array<double, 6>> draws(static_cast<size_t>(tuples));
    for (auto& tuple : draws)
        for (auto& v : tuple) v = u(rng);
    const cc::RankDiagnostic diag = cc::rank_diagnostic(draws);

    const auto dir = prepare_out(out_dir);
    std::ofstream out(dir / "rank_diagnostic.csv");
    if (!out) throw std::runtime_error("cannot write rank_diagnostic.csv");
    out << "# countycast rank diagnostic schema 1\n";
    out << "countyFIPS,horizon,slot,avg_rank,n_tuples\n";
    static const char* slots[6] = {"future", "t", "t-1", "t-2", "t-3", "t-4"};
    for (int s = 0; s < 6; ++s)
        out << "synthetic,0," << slots[s] << ',' << cc::format_double(diag.avg_rank[static_cast<size_t>(s)])
            << ',' << diag.n_tuples << '\n';
    std::cout << "wrote rank_diagnostic.csv to " << dir.string() << '\n';
    return 0;
}

int cmd_diagnose(const CommonInputs& in, const PipelineFlags& f, const std::string& start,
                 const std::string& end, const std::string& out_dir) {
    const auto horizons = parse_horizons(f.horizons);
    cc::BacktestConfig config;
    config.engine = make_engine_config(f, in, horizons.back());
    config.engine.eval_horizons = horizons;
    config.engine.collect_errors = true;
    const LoadedData data = load_inputs(in, config.engine.predictors);
    rebase_interventions(config.engine, data.panel);
    config.eval_start = panel_day(data.panel, start, "start date");
    config.eval_end = panel_day(data.panel, end, "end date");

    cc::RollingEngine engine(data.panel, data.demographics ? &*data.demographics : nullptr,
                             config.engine);
    const int warmup = config.engine.internal_horizon() + config.engine.weight.loss_horizon + 1;
    if (config.eval_start < warmup)
        throw std::runtime_error("insufficient warm-up: evaluation must start at least " +
                                 std::to_string(warmup) + " days after the panel start");
    for (int day = 0; day <= config.eval_end; ++day) engine.step();

    const auto dir = prepare_out(out_dir);
    std::ofstream out(dir / "rank_diagnostic.csv");
    if (!out) throw std::runtime_error("cannot write rank_diagnostic.csv");
    out << "# countycast rank diagnostic schema 1\n";
    out << "countyFIPS,horizon,slot,avg_rank,n_tuples\n";
    static const char* slots[6] = {"future", "t", "t-1", "t-2", "t-3", "t-4"};

    const auto& errors = engine.full_errors();
    for (int c = 0; c < data.panel.n_counties(); ++c) {
        for (int k : horizons) {
            std::map<int, double> by_day;
            for (const auto& [day, delta] : errors[static_cast<size_t>(c)][static_cast<size_t>(k - 1)])
                by_day[day] = delta;
            std::vector<std::array<double, 6>> tuples;
            for (int t = config.eval_start; t + k <= config.eval_end; ++t) {
                std::array<double, 6> tuple;
                bool complete = by_day.count(t + k) > 0;
                if (complete) tuple[0] = by_day[t + k];
                for (int j = 0; j <= 4 && complete; ++j) {
                    complete = by_day.count(t - j) > 0;
                    if (complete) tuple[static_cast<size_t>(1 + j)] = by_day[t - j];
                }
                if (complete) tuples.push_back(tuple);
            }
            if (tuples.empty()) continue;
            const cc::RankDiagnostic diag = cc::rank_diagnostic(tuples);
            for (int s = 0; s < 6; ++s)
                out << data.panel.counties[static_cast<size_t>(c)] << ',' << k << ','
                    << slots[s] << ',' << cc::format_double(diag.avg_rank[static_cast<size_t>(s)])
                    << ',' << diag.n_tuples << '\n';
        }
    }
    std::cout << "wrote rank_diagnostic.csv to " << dir.string() << '\n';
    return 0;
}

int cmd_severity(const CommonInputs& in, const PipelineFlags& f, const std::string& as_of,
                 const std::string& out_dir) {
    const auto horizons = parse_horizons(f.horizons);
    const int K = std::max(horizons.back(), 7); // the index needs 7-day forecasts
    cc::EngineConfig cfg = make_engine_config(f, in, K);
    const LoadedData data = load_inputs(in, cfg.predictors);
    rebase_interventions(cfg, data.panel);
    if (!data.hospitals) throw std::runtime_error("missing input: --hospitals is required");

    const int day = panel_day(data.panel, as_of, "as-of date");
    const cc::ForecastSet fs = cc::forecast_at(
        data.panel, data.demographics ? &*data.demographics : nullptr, day, cfg);
    std::vector<double> clep7(static_cast<size_t>(data.panel.n_counties()));
    for (int c = 0; c < data.panel.n_counties(); ++c) clep7[static_cast<size_t>(c)] = fs.clep(c, 6);

    const cc::SeverityIndex index = cc::build_severity(data.panel, day, clep7, *data.hospitals);
    const auto dir = prepare_out(out_dir);
    cc::write_severity_csv((dir / "severity.csv").string(), index);
    std::cout << "wrote severity.csv to " << dir.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"county-level COVID-19 death forecasting: CLEP ensembles and MEPI intervals"};
    app.require_subcommand(1);

    CommonInputs in;
    PipelineFlags flags;
    std::string as_of, start, end, out_dir = "out";
    long tuples = 10000;
    unsigned long seed = 20200620;
    bool synthetic = false;

    auto* ingest = app.add_subcommand("ingest-check", "load and validate the input tables");
    add_common_inputs(ingest, in);
    ingest->add_option("--predictors", flags.predictors, "predictors the inputs must support");

    auto* forecast = app.add_subcommand("forecast", "forecasts for one as-of date");
    add_common_inputs(forecast, in);
    add_pipeline_flags(forecast, flags);
    forecast->add_option("--as-of", as_of, "forecast date (data through this day)")->required();
    forecast->add_option("--out", out_dir, "output directory");

    auto* backtest = app.add_subcommand("backtest", "rolling evaluation over a date range");
    add_common_inputs(backtest, in);
    add_pipeline_flags(backtest, flags);
    backtest->add_option("--start", start, "first evaluated target date")->required();
    backtest->add_option("--end", end, "last evaluated target date")->required();
    backtest->add_option("--out", out_dir, "output directory");

    auto* diagnose = app.add_subcommand("diagnose", "exchangeability rank diagnostic");
    add_common_inputs(diagnose, in);
    add_pipeline_flags(diagnose, flags);
    diagnose->add_flag("--synthetic", synthetic, "run on seeded i.i.d. errors instead of data");
    diagnose->add_option("--tuples", tuples, "tuples for --synthetic");
    diagnose->add_option("--seed", seed, "random seed for --synthetic");
    diagnose->add_option("--start", start, "first evaluated target date");
    diagnose->add_option("--end", end, "last evaluated target date");
    diagnose->add_option("--out", out_dir, "output directory");
    for (const std::string opt : {"--deaths", "--cases"})
        diagnose->get_option(opt)->required(false);

    auto* severity = app.add_subcommand("severity", "hospital severity index");
    add_common_inputs(severity, in, /*need_hospitals=*/true);
    add_pipeline_flags(severity, flags);
    severity->add_option("--as-of", as_of, "index date")->required();
    severity->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest_check(in, flags);
        if (forecast->parsed()) return cmd_forecast(in, flags, as_of, out_dir);
        if (backtest->parsed()) return cmd_backtest(in, flags, start, end, out_dir);
        if (diagnose->parsed()) {
            if (synthetic) return cmd_diagnose_synthetic(tuples, seed, out_dir);
            if (in.deaths_path.empty() || in.cases_path.empty() || start.empty() || end.empty())
                throw std::runtime_error(
                    "diagnose needs either --synthetic or data inputs with --start/--end");
            return cmd_diagnose(in, flags, start, end, out_dir);
        }
        if (severity->parsed()) return cmd_severity(in, flags, as_of, out_dir);
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        err["command"] = app.get_subcommands().empty()
                             ? std::string("?")
                             : app.get_subcommands()[0]->get_name();
        std::cerr << err.dump() << '\n';
        return 1;
    }
    return 0;
}
