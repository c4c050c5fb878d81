#pragma once

#include "fluhgam/design.hpp"
#include "fluhgam/forecast.hpp"
#include "fluhgam/scoring.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fluhgam {

struct RunConfig {
    ModelSpec model;
    std::vector<Date> forecast_dates; // each needs t_length days of history
    std::uint64_t seed = 1;
    int n_samples = 2000;
    int threads = 2;
    bool run_gam = true;
    bool run_arima = true;
    std::vector<double> taus = default_taus();
};

struct DataBundle {
    AdmissionsPanel panel;
    Geography geography;
    AdjacencyGraph adjacency;
    std::vector<std::string> warnings;
};

// Load and cross-validate the three input CSVs (admissions, geography,
// adjacency pairs). Units missing too many days are dropped; the geography is
// restricted to surviving units and the adjacency graph rebuilt over exactly
// those. Throws SchemaError / ReferentialError / panel validation errors.
DataBundle ingest(const std::string& panel_csv, const std::string& geography_csv,
                  const std::string& adjacency_csv);

struct PerDateScore {
    Date forecast_date;
    std::string model;
    std::string level;
    double interval_score = 0.0;
    double mae = 0.0;
    double bias = 0.0;
};

struct DateForecasts {
    Date forecast_date;
    std::vector<ForecastSeries> gam;
    std::vector<ForecastSeries> arima;
    std::vector<std::string> flags; // e.g. ARIMA random-walk fallbacks
};

struct EvaluationResult {
    std::vector<ScoreRow> table;       // model x level x horizon bucket
    std::vector<PerDateScore> by_date; // score time series (weekly analog)
    std::vector<DateForecasts> forecasts;
    std::vector<std::string> warnings;
};

// Weekly rolling out-of-sample evaluation: per forecast date, fit the GAM on
// the trailing window and reconcile bottom-up; fit ARIMA models per series
// independently at every level; score both at horizon buckets {7, 14,
// overall}. Forecast dates run as independent parallel tasks; results are
// merged in date order.
EvaluationResult run_rolling_evaluation(const RunConfig& cfg, const DataBundle& data);

// scores.csv, scores_by_date.csv, forecasts_<model>_<date>.csv, flags.txt.
void write_evaluation_outputs(const EvaluationResult& result, const std::string& out_dir);

struct SweepCell {
    double td_national = 0.0;
    double td_group = 0.0;
    bool ok = false;
    std::string error;
    double interval_score = 0.0;
    double mae = 0.0;
    double bias = 0.0;
    double coverage_90 = 0.0;
};

// Full GAM rolling evaluation per (t_d national, t_d group) pair; cell
// metrics are the national-level overall-bucket scores. Failed cells are
// recorded and the sweep continues. Grid values must lie in [1, 14] and
// produce a basis dimension of at least 2.
std::vector<SweepCell> run_tuning_sweep(const RunConfig& cfg, const DataBundle& data,
                                        const std::vector<double>& td_national_grid,
                                        const std::vector<double>& td_group_grid);

std::string sweep_csv(const std::vector<SweepCell>& cells);

// Standalone scoring of a forecast CSV against a truth panel.
std::vector<ScoreRow> score_forecast_file(const std::string& forecast_csv_path,
                                          const DataBundle& truth, Date forecast_date,
                                          const std::string& model_name);

} // namespace fluhgam
