#pragma once

#include <string>

#include "countycast/engine.hpp"
#include "countycast/severity.hpp"

namespace countycast {

// Output files carry a "# countycast <kind> schema 1" comment line, then a
// header row. Formatting is fixed so identical runs are byte-identical.

void write_forecast_csv(const std::string& path, const CountyPanel& panel,
                        const ForecastSet& fs, int emit_horizon);
void write_intervals_csv(const std::string& path, const CountyPanel& panel,
                         const ForecastSet& fs, int emit_horizon);
void write_weights_csv(const std::string& path, const CountyPanel& panel,
                       const ForecastSet& fs);

void write_metrics_csv(const std::string& path, const CountyPanel& panel,
                       const BacktestReport& report);
void write_interval_stats_csv(const std::string& path, const CountyPanel& panel,
                              const BacktestReport& report);
void write_trajectories_csv(const std::string& path, const CountyPanel& panel,
                            const BacktestReport& report);
void write_summary_json(const std::string& path, const CountyPanel& panel,
                        const BacktestConfig& config, const BacktestReport& report);

void write_severity_csv(const std::string& path, const SeverityIndex& index);

// Serializations used by the determinism and no-look-ahead checks.
std::string forecast_csv_string(const CountyPanel& panel, const ForecastSet& fs,
                                int emit_horizon);
std::string intervals_csv_string(const CountyPanel& panel, const ForecastSet& fs,
                                 int emit_horizon);
std::string weights_csv_string(const CountyPanel& panel, const ForecastSet& fs);

} // namespace countycast
