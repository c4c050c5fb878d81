#include "fluhgam/evaluate.hpp"

#include "fluhgam/arima.hpp"
#include "fluhgam/csv.hpp"
#include "fluhgam/errors.hpp"
#include "fluhgam/gam.hpp"
#include "fluhgam/rng.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace fluhgam {

namespace {

void parallel_tasks(int n_tasks, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n_tasks));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_tasks));
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks) break;
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::int64_t truth_value(const AdmissionsPanel& panel, const Geography& geo,
                         const std::string& level, const std::string& series_id, Date date) {
    if (level == "unit") return panel.count(date, series_id);
    std::int64_t acc = 0;
    if (level == "region") {
        for (std::size_t r = 0; r < geo.n_regions(); ++r) {
            if (geo.regions()[r] != series_id) continue;
            for (std::size_t u : geo.region_members()[r]) {
                acc += panel.count(date, geo.units()[u].unit_id);
            }
            return acc;
        }
        throw UnknownUnit("unknown region '" + series_id + "'");
    }
    for (const auto& u : geo.units()) acc += panel.count(date, u.unit_id);
    return acc;
}

QuantileForecast row_to_quantiles(const ForecastSeries& fs, std::size_t h) {
    if (fs.taus.size() != 5) throw ValidationError("expected the standard 5-quantile set");
    const auto hi = static_cast<Eigen::Index>(h);
    return QuantileForecast{fs.quantiles(hi, 0), fs.quantiles(hi, 1), fs.quantiles(hi, 2),
                            fs.quantiles(hi, 3), fs.quantiles(hi, 4)};
}

struct TargetPool {
    std::vector<QuantileForecast> forecasts;
    std::vector<double> observations;
};

int level_rank(const std::string& level) {
    if (level == "nation") return 0;
    if (level == "region") return 1;
    return 2;
}

int horizon_rank(const std::string& h) {
    if (h == "overall") return 0;
    if (h == "7") return 1;
    return 2;
}

} // namespace

DataBundle ingest(const std::string& panel_csv, const std::string& geography_csv,
                  const std::string& adjacency_csv) {
    std::vector<std::string> warnings;

    // Geography.
    CsvTable geo_table = read_csv(geography_csv);
    require_header(geo_table, {"unit_id", "region_id", "population", "centroid_x", "centroid_y"},
                   geography_csv);
    std::vector<GeoUnit> all_units;
    for (std::size_t i = 0; i < geo_table.rows.size(); ++i) {
        const auto& row = geo_table.rows[i];
        const auto line = geo_table.line_numbers[i];
        if (row.size() != 5) {
            throw SchemaError("'" + geography_csv + "' line " + std::to_string(line) +
                              ": expected 5 fields");
        }
        GeoUnit u;
        u.unit_id = row[0];
        u.region_id = row[1];
        u.population = parse_real_field(row[2], geography_csv, line);
        u.centroid_x = parse_real_field(row[3], geography_csv, line);
        u.centroid_y = parse_real_field(row[4], geography_csv, line);
        all_units.push_back(std::move(u));
    }
    Geography full_geo(all_units);

    // Panel.
    CsvTable panel_table = read_csv(panel_csv);
    require_header(panel_table, {"date", "unit_id", "count"}, panel_csv);
    std::vector<PanelRow> rows;
    rows.reserve(panel_table.rows.size());
    for (std::size_t i = 0; i < panel_table.rows.size(); ++i) {
        const auto& row = panel_table.rows[i];
        const auto line = panel_table.line_numbers[i];
        if (row.size() != 3) {
            throw SchemaError("'" + panel_csv + "' line " + std::to_string(line) +
                              ": expected 3 fields");
        }
        PanelRow pr;
        pr.date = Date::parse(row[0]);
        pr.unit_id = row[1];
        try {
            pr.count = parse_int_field(row[2], panel_csv, line);
        } catch (const SchemaError&) {
            try {
                (void)parse_real_field(row[2], panel_csv, line);
            } catch (const SchemaError&) {
                throw SchemaError("'" + panel_csv + "' line " + std::to_string(line) +
                                  ": unparseable count '" + row[2] + "'");
            }
            throw NonIntegerCount("'" + panel_csv + "' line " + std::to_string(line) +
                                  ": non-integer count '" + row[2] + "'");
        }
        rows.push_back(std::move(pr));
    }
    AdmissionsPanel panel = validate_panel(rows, &warnings);

    // Referential integrity, then restrict the geography to surviving units.
    std::vector<std::string> orphans;
    for (const auto& id : panel.units()) {
        if (!full_geo.has_unit(id)) orphans.push_back(id);
    }
    if (!orphans.empty()) {
        std::ostringstream oss;
        oss << "panel units missing from geography:";
        for (const auto& id : orphans) oss << ' ' << id;
        throw ReferentialError(oss.str());
    }
    std::set<std::string> surviving(panel.units().begin(), panel.units().end());
    std::vector<std::string> kept_order;
    for (const auto& u : full_geo.units()) {
        if (surviving.count(u.unit_id)) kept_order.push_back(u.unit_id);
    }
    Geography geo = full_geo.subset(kept_order);

    // Adjacency pairs; weights are computed from centroids, not supplied.
    CsvTable adj_table = read_csv(adjacency_csv);
    require_header(adj_table, {"unit_a", "unit_b"}, adjacency_csv);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < adj_table.rows.size(); ++i) {
        const auto& row = adj_table.rows[i];
        if (row.size() != 2) {
            throw SchemaError("'" + adjacency_csv + "' line " +
                              std::to_string(adj_table.line_numbers[i]) + ": expected 2 fields");
        }
        if (!full_geo.has_unit(row[0]) || !full_geo.has_unit(row[1])) {
            throw ReferentialError("adjacency references unknown unit '" +
                                   (full_geo.has_unit(row[0]) ? row[1] : row[0]) + "'");
        }
        if (!surviving.count(row[0]) || !surviving.count(row[1])) {
            ++skipped;
            continue;
        }
        pairs.emplace_back(row[0], row[1]);
    }
    if (skipped > 0) {
        warnings.push_back("dropped " + std::to_string(skipped) +
                           " adjacency pair(s) touching excluded units");
    }
    AdjacencyGraph adjacency = build_adjacency(geo.units(), pairs);

    return DataBundle{std::move(panel), std::move(geo), std::move(adjacency),
                      std::move(warnings)};
}

namespace {

struct DateTask {
    DateForecasts forecasts;
    std::vector<std::string> warnings;
};

DateTask evaluate_one_date(const RunConfig& cfg, const DataBundle& data, Date forecast_date) {
    DateTask task;
    task.forecasts.forecast_date = forecast_date;
    const int t_len = cfg.model.t_length;
    const int horizon = cfg.model.horizon;
    const AdmissionsPanel window = data.panel.window(forecast_date - (t_len - 1), forecast_date);
    const CalendarFeatures cal;

    if (cfg.run_gam) {
        FittedGAM gam = fit(window, data.geography, data.adjacency, cal, cfg.model);
        for (const auto& w : gam.warnings) {
            task.warnings.push_back(forecast_date.to_string() + ": " + w);
        }
        SamplerConfig sampler;
        sampler.n_samples = cfg.n_samples;
        sampler.seed = substream_seed(cfg.seed, "sampler/" + forecast_date.to_string());
        PathSet unit_paths = sample_paths(gam, sampler, horizon);
        AggregatedPaths agg = aggregate_bottom_up(unit_paths, data.geography);
        auto& out = task.forecasts.gam;
        for (auto& fs : to_quantiles(agg.nation, cfg.taus)) out.push_back(std::move(fs));
        for (auto& fs : to_quantiles(agg.region, cfg.taus)) out.push_back(std::move(fs));
        for (auto& fs : to_quantiles(unit_paths, cfg.taus)) out.push_back(std::move(fs));
    }

    if (cfg.run_arima) {
        // Unit, region, and national series each fitted directly and
        // independently; no bottom-up aggregation for the baseline.
        std::vector<std::pair<std::string, std::string>> series; // (level, id)
        series.emplace_back("nation", "nation");
        for (const auto& r : data.geography.regions()) series.emplace_back("region", r);
        for (const auto& u : data.geography.units()) series.emplace_back("unit", u.unit_id);

        for (const auto& [level, id] : series) {
            std::vector<std::int64_t> counts;
            counts.reserve(static_cast<std::size_t>(t_len));
            for (int t = 0; t < t_len; ++t) {
                counts.push_back(truth_value(window, data.geography, level, id,
                                             window.start_date() + t));
            }
            const std::vector<double> z = log1p_transform(counts);
            ArimaFit fit_result = auto_select(z);
            if (fit_result.fallback) {
                task.forecasts.flags.push_back(forecast_date.to_string() + "," + level + "," + id +
                                               ",arima_random_walk_fallback");
            }
            ForecastSeries fs;
            fs.level = level;
            fs.series_id = id;
            fs.taus = cfg.taus;
            std::sort(fs.taus.begin(), fs.taus.end());
            for (int h = 1; h <= horizon; ++h) fs.dates.push_back(forecast_date + h);
            fs.quantiles = forecast_arima(fit_result, horizon, fs.taus);
            task.forecasts.arima.push_back(std::move(fs));
        }
    }
    return task;
}

} // namespace

EvaluationResult run_rolling_evaluation(const RunConfig& cfg, const DataBundle& data) {
    cfg.model.validate();
    if (cfg.forecast_dates.empty()) throw ValidationError("no forecast dates supplied");
    std::vector<Date> dates = cfg.forecast_dates;
    std::sort(dates.begin(), dates.end());
    for (Date d : dates) {
        if (d - (cfg.model.t_length - 1) < data.panel.start_date()) {
            throw ValidationError("forecast date " + d.to_string() + " lacks " +
                                  std::to_string(cfg.model.t_length) + " days of history");
        }
        if (d + cfg.model.horizon > data.panel.end_date()) {
            throw ValidationError("forecast date " + d.to_string() +
                                  " lacks truth for the full horizon");
        }
    }

    std::vector<DateTask> tasks(dates.size());
    parallel_tasks(static_cast<int>(dates.size()), cfg.threads, [&](int i) {
        tasks[static_cast<std::size_t>(i)] =
            evaluate_one_date(cfg, data, dates[static_cast<std::size_t>(i)]);
    });

    EvaluationResult result;
    for (auto& t : tasks) {
        for (auto& w : t.warnings) result.warnings.push_back(std::move(w));
        result.forecasts.push_back(std::move(t.forecasts));
    }

    // Pool targets by model/level/bucket and by date for the score series.
    std::map<std::tuple<std::string, std::string, std::string>, TargetPool> pools;
    std::map<std::tuple<std::int64_t, std::string, std::string>, TargetPool> date_pools;
    for (const auto& df : result.forecasts) {
        auto add_series = [&](const std::string& model, const ForecastSeries& fs) {
            for (std::size_t h = 0; h < fs.dates.size(); ++h) {
                const QuantileForecast qf = row_to_quantiles(fs, h);
                const auto y = static_cast<double>(
                    truth_value(data.panel, data.geography, fs.level, fs.series_id, fs.dates[h]));
                auto& pool = pools[{model, fs.level, "overall"}];
                pool.forecasts.push_back(qf);
                pool.observations.push_back(y);
                const auto ahead = fs.dates[h] - df.forecast_date;
                if (ahead == 7 || ahead == 14) {
                    auto& hp = pools[{model, fs.level, std::to_string(ahead)}];
                    hp.forecasts.push_back(qf);
                    hp.observations.push_back(y);
                }
                auto& dp = date_pools[{df.forecast_date.days_since_epoch(), model, fs.level}];
                dp.forecasts.push_back(qf);
                dp.observations.push_back(y);
            }
        };
        for (const auto& fs : df.gam) add_series("gam", fs);
        for (const auto& fs : df.arima) add_series("arima", fs);
    }

    for (const auto& [key, pool] : pools) {
        result.table.push_back(score_targets(pool.forecasts, pool.observations, std::get<0>(key),
                                             std::get<1>(key), std::get<2>(key)));
    }
    std::sort(result.table.begin(), result.table.end(), [](const ScoreRow& a, const ScoreRow& b) {
        return std::tuple(a.model, level_rank(a.level), horizon_rank(a.horizon)) <
               std::tuple(b.model, level_rank(b.level), horizon_rank(b.horizon));
    });

    for (const auto& [key, pool] : date_pools) {
        const ScoreRow row = score_targets(pool.forecasts, pool.observations, std::get<1>(key),
                                           std::get<2>(key), "overall");
        PerDateScore pd;
        pd.forecast_date = Date(std::get<0>(key));
        pd.model = row.model;
        pd.level = row.level;
        pd.interval_score = row.interval_score;
        pd.mae = row.mae;
        pd.bias = row.bias_mean;
        result.by_date.push_back(pd);
    }
    std::sort(result.by_date.begin(), result.by_date.end(),
              [](const PerDateScore& a, const PerDateScore& b) {
                  return std::tuple(a.forecast_date, a.model, level_rank(a.level)) <
                         std::tuple(b.forecast_date, b.model, level_rank(b.level));
              });
    return result;
}

void write_evaluation_outputs(const EvaluationResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/scores.csv", score_csv(result.table));

    std::ostringstream by_date;
    by_date << "forecast_date,model,level,interval_score,mae,bias\n";
    for (const auto& r : result.by_date) {
        by_date << r.forecast_date.to_string() << ',' << r.model << ',' << r.level << ','
                << format_real(r.interval_score) << ',' << format_real(r.mae) << ','
                << format_real(r.bias) << '\n';
    }
    write_text_file(out_dir + "/scores_by_date.csv", by_date.str());

    std::vector<std::string> flags;
    for (const auto& df : result.forecasts) {
        const std::string stamp = df.forecast_date.to_string();
        if (!df.gam.empty()) {
            write_text_file(out_dir + "/forecast_gam_" + stamp + ".csv", forecast_csv(df.gam));
        }
        if (!df.arima.empty()) {
            write_text_file(out_dir + "/forecast_arima_" + stamp + ".csv", forecast_csv(df.arima));
        }
        for (const auto& f : df.flags) flags.push_back(f);
    }
    if (!flags.empty()) {
        std::ostringstream oss;
        for (const auto& f : flags) oss << f << '\n';
        write_text_file(out_dir + "/flags.csv", "forecast_date,level,series_id,flag\n" + oss.str());
    }
}

std::vector<SweepCell> run_tuning_sweep(const RunConfig& cfg, const DataBundle& data,
                                        const std::vector<double>& td_national_grid,
                                        const std::vector<double>& td_group_grid) {
    // Reject infeasible grid values before any fitting.
    for (double td : td_national_grid) {
        (void)basis_dimension({cfg.model.t_length, td});
        if (td < 1.0 || td > 14.0) throw ValidationError("t_d grid values must lie in [1, 14]");
    }
    for (double td : td_group_grid) {
        (void)basis_dimension({cfg.model.t_length, td});
        if (td < 1.0 || td > 14.0) throw ValidationError("t_d grid values must lie in [1, 14]");
    }

    std::vector<SweepCell> cells;
    for (double td_nat : td_national_grid) {
        for (double td_grp : td_group_grid) {
            SweepCell cell;
            cell.td_national = td_nat;
            cell.td_group = td_grp;
            try {
                RunConfig cell_cfg = cfg;
                cell_cfg.model.t_d_national = td_nat;
                cell_cfg.model.t_d_group = td_grp;
                cell_cfg.run_arima = false;
                const EvaluationResult res = run_rolling_evaluation(cell_cfg, data);
                for (const auto& row : res.table) {
                    if (row.model == "gam" && row.level == "nation" && row.horizon == "overall") {
                        cell.ok = true;
                        cell.interval_score = row.interval_score;
                        cell.mae = row.mae;
                        cell.bias = row.bias_mean;
                        cell.coverage_90 = row.coverage_90;
                    }
                }
                if (!cell.ok) cell.error = "no national scores produced";
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::ostringstream oss;
    oss << "td_nat,td_grp,interval_score,mae,bias,coverage_90\n";
    for (const auto& c : cells) {
        oss << format_real(c.td_national) << ',' << format_real(c.td_group) << ',';
        if (c.ok) {
            oss << format_real(c.interval_score) << ',' << format_real(c.mae) << ','
                << format_real(c.bias) << ',' << format_real(c.coverage_90);
        } else {
            oss << ",,,"; // failed cell recorded as missing
        }
        oss << '\n';
    }
    return oss.str();
}

std::vector<ScoreRow> score_forecast_file(const std::string& forecast_csv_path,
                                          const DataBundle& truth, Date forecast_date,
                                          const std::string& model_name) {
    CsvTable table = read_csv(forecast_csv_path);
    require_header(table, {"level", "series_id", "date", "q05", "q25", "q50", "q75", "q95"},
                   forecast_csv_path);
    std::map<std::tuple<std::string, std::string>, TargetPool> pools; // (level, bucket)
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto line = table.line_numbers[i];
        if (row.size() != 8) {
            throw SchemaError("'" + forecast_csv_path + "' line " + std::to_string(line) +
                              ": expected 8 fields");
        }
        QuantileForecast qf;
        qf.q05 = parse_real_field(row[3], forecast_csv_path, line);
        qf.q25 = parse_real_field(row[4], forecast_csv_path, line);
        qf.q50 = parse_real_field(row[5], forecast_csv_path, line);
        qf.q75 = parse_real_field(row[6], forecast_csv_path, line);
        qf.q95 = parse_real_field(row[7], forecast_csv_path, line);
        const Date date = Date::parse(row[2]);
        const auto y = static_cast<double>(
            truth_value(truth.panel, truth.geography, row[0], row[1], date));
        const auto ahead = date - forecast_date;
        auto add = [&](const std::string& bucket) {
            auto& pool = pools[{row[0], bucket}];
            pool.forecasts.push_back(qf);
            pool.observations.push_back(y);
        };
        add("overall");
        if (ahead == 7 || ahead == 14) add(std::to_string(ahead));
    }
    std::vector<ScoreRow> rows;
    for (const auto& [key, pool] : pools) {
        rows.push_back(score_targets(pool.forecasts, pool.observations, model_name,
                                     std::get<0>(key), std::get<1>(key)));
    }
    std::sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
        return std::tuple(a.model, level_rank(a.level), horizon_rank(a.horizon)) <
               std::tuple(b.model, level_rank(b.level), horizon_rank(b.horizon));
    });
    return rows;
}

} // namespace fluhgam
