#include "fluhgam/arima.hpp"
#include "fluhgam/csv.hpp"
#include "fluhgam/errors.hpp"
#include "fluhgam/evaluate.hpp"
#include "fluhgam/forecast.hpp"
#include "fluhgam/gam.hpp"
#include "fluhgam/rng.hpp"
#include "fluhgam/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace fluhgam;

struct InputPaths {
    std::string panel, geo, adj;
};

void add_input_options(CLI::App* cmd, InputPaths& paths) {
    cmd->add_option("--panel", paths.panel, "admissions CSV (date,unit_id,count)")->required();
    cmd->add_option("--geo", paths.geo,
                    "geography CSV (unit_id,region_id,population,centroid_x,centroid_y)")
        ->required();
    cmd->add_option("--adj", paths.adj, "adjacency CSV (unit_a,unit_b)")->required();
}

void add_model_options(CLI::App* cmd, ModelSpec& model, int& n_samples) {
    cmd->add_option("--t-length", model.t_length, "fitting window in days");
    cmd->add_option("--horizon", model.horizon, "forecast horizon in days");
    cmd->add_option("--td-nat", model.t_d_national, "days per basis function, national smoother");
    cmd->add_option("--td-grp", model.t_d_group, "days per basis function, group smoothers");
    cmd->add_option("--n-samples", n_samples, "forecast sample paths");
}

std::vector<Date> parse_date_list(const std::string& csv) {
    std::vector<Date> dates;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) dates.push_back(Date::parse(item));
    }
    return dates;
}

std::vector<double> parse_real_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

void emit_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : static_cast<int>(hw);
}

int run(int argc, char** argv) {
    CLI::App app{"Hierarchical GAM hospital-admissions forecaster with an auto-ARIMA baseline"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "write a synthetic admissions panel");
    SyntheticSpec synth;
    std::string gen_out = "data";
    std::string gen_shape = "wave";
    generate->add_option("--out", gen_out, "output directory");
    generate->add_option("--seed", synth.seed, "generator seed");
    generate->add_option("--units", synth.n_units, "number of sub-regional units");
    generate->add_option("--regions", synth.n_regions, "number of regions");
    generate->add_option("--days", synth.n_days, "panel length in days");
    generate->add_option("--theta", synth.theta, "negative binomial dispersion");
    generate->add_option("--peak-day", synth.peak_day, "wave peak day index");
    generate->add_option("--growth-rate", synth.growth_rate, "log-rate growth at window start");
    generate->add_option("--decay-rate", synth.decay_rate, "log-rate decay after the peak");
    generate->add_option("--start-date", [&synth](const std::vector<std::string>& v) {
        synth.start_date = Date::parse(v.front());
        return true;
    }, "first panel date (ISO)");
    generate->add_option("--shape", gen_shape, "wave | loglinear")
        ->check(CLI::IsMember({"wave", "loglinear"}));
    generate->add_flag("--deterministic", synth.deterministic_counts,
                       "counts = round(mean), no observation noise");

    // shared model/config state for the model-driven subcommands
    InputPaths fc_in, ev_in, sw_in, sc_in;
    ModelSpec fc_model, ev_model, sw_model;
    int fc_samples = 2000, ev_samples = 2000, sw_samples = 2000;
    std::uint64_t fc_seed = 1, ev_seed = 1, sw_seed = 1;
    std::string fc_out = "out", ev_out = "out", sw_out = "out";
    int threads = default_threads();

    auto* forecast_cmd = app.add_subcommand("forecast", "fit and forecast from one date");
    add_input_options(forecast_cmd, fc_in);
    add_model_options(forecast_cmd, fc_model, fc_samples);
    forecast_cmd->add_option("--out", fc_out, "output directory");
    forecast_cmd->add_option("--seed", fc_seed, "sampler seed");
    std::string fc_date_str;
    std::string fc_which = "both";
    bool fc_mean_path = false;
    forecast_cmd->add_option("--forecast-date", fc_date_str,
                             "ISO date (default: last panel date)");
    forecast_cmd->add_option("--model", fc_which, "gam | arima | both")
        ->check(CLI::IsMember({"gam", "arima", "both"}));
    forecast_cmd->add_flag("--mean-path", fc_mean_path, "GAM mean path, no sampling noise");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "rolling weekly GAM vs ARIMA evaluation");
    add_input_options(evaluate_cmd, ev_in);
    add_model_options(evaluate_cmd, ev_model, ev_samples);
    evaluate_cmd->add_option("--out", ev_out, "output directory");
    evaluate_cmd->add_option("--seed", ev_seed, "sampler seed");
    evaluate_cmd->add_option("--threads", threads, "parallel forecast-date tasks");
    std::string ev_dates_str;
    int ev_weeks = 0;
    evaluate_cmd->add_option("--forecast-dates", ev_dates_str, "comma-separated ISO dates");
    evaluate_cmd->add_option("--weeks", ev_weeks,
                             "use N weekly forecast dates ending at the latest feasible one");

    auto* sweep_cmd = app.add_subcommand("sweep", "t_d sensitivity sweep (GAM only)");
    add_input_options(sweep_cmd, sw_in);
    add_model_options(sweep_cmd, sw_model, sw_samples);
    sweep_cmd->add_option("--out", sw_out, "output directory");
    sweep_cmd->add_option("--seed", sw_seed, "sampler seed");
    sweep_cmd->add_option("--threads", threads, "parallel forecast-date tasks");
    std::string sw_grid_str = "3,5,7", sw_grid_grp_str, sw_dates_str;
    int sw_weeks = 0;
    sweep_cmd->add_option("--td-grid", sw_grid_str, "comma-separated t_d values (both axes)");
    sweep_cmd->add_option("--td-grid-group", sw_grid_grp_str,
                          "group-axis t_d values (defaults to --td-grid)");
    sweep_cmd->add_option("--forecast-dates", sw_dates_str, "comma-separated ISO dates");
    sweep_cmd->add_option("--weeks", sw_weeks, "use N weekly forecast dates");

    auto* score_cmd = app.add_subcommand("score", "score a forecast CSV against truth");
    add_input_options(score_cmd, sc_in);
    std::string sc_forecasts, sc_out = "scores.csv", sc_date_str, sc_model = "model";
    score_cmd->add_option("--forecasts", sc_forecasts, "forecast CSV to score")->required();
    score_cmd->add_option("--forecast-date", sc_date_str, "date the forecast was made")->required();
    score_cmd->add_option("--model-name", sc_model, "model label for the output rows");
    score_cmd->add_option("--out", sc_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    if (generate->parsed()) {
        synth.log_linear = gen_shape == "loglinear";
        const SyntheticData data = generate_synthetic(synth);
        std::filesystem::create_directories(gen_out);

        std::ostringstream panel;
        panel << "date,unit_id,count\n";
        for (const auto& unit : data.panel.units()) {
            for (std::int64_t t = 0; t < data.panel.n_days(); ++t) {
                const Date d = data.panel.start_date() + t;
                panel << d.to_string() << ',' << unit << ',' << data.panel.count(d, unit) << '\n';
            }
        }
        write_text_file(gen_out + "/panel.csv", panel.str());

        std::ostringstream geo;
        geo << "unit_id,region_id,population,centroid_x,centroid_y\n";
        for (const auto& u : data.geography.units()) {
            geo << u.unit_id << ',' << u.region_id << ',' << format_real(u.population) << ','
                << format_real(u.centroid_x) << ',' << format_real(u.centroid_y) << '\n';
        }
        write_text_file(gen_out + "/geography.csv", geo.str());

        std::ostringstream adj;
        adj << "unit_a,unit_b\n";
        for (const auto& e : data.adjacency.edges) adj << e.a << ',' << e.b << '\n';
        write_text_file(gen_out + "/adjacency.csv", adj.str());
        std::cout << "wrote " << gen_out << "/{panel,geography,adjacency}.csv\n";
        return 0;
    }

    if (forecast_cmd->parsed()) {
        const DataBundle data = ingest(fc_in.panel, fc_in.geo, fc_in.adj);
        emit_warnings(data.warnings);
        const Date date = fc_date_str.empty() ? data.panel.end_date() : Date::parse(fc_date_str);
        const AdmissionsPanel window =
            data.panel.window(date - (fc_model.t_length - 1), date);
        std::filesystem::create_directories(fc_out);
        const CalendarFeatures cal;

        if (fc_which != "arima") {
            FittedGAM gam_fit = fit(window, data.geography, data.adjacency, cal, fc_model);
            emit_warnings(gam_fit.warnings);
            SamplerConfig sampler;
            sampler.n_samples = fc_samples;
            sampler.seed = substream_seed(fc_seed, "sampler/" + date.to_string());
            sampler.mean_path_mode = fc_mean_path;
            PathSet units = sample_paths(gam_fit, sampler, fc_model.horizon);
            std::vector<ForecastSeries> all;
            if (fc_mean_path) {
                for (std::size_t u = 0; u < units.series_ids.size(); ++u) {
                    ForecastSeries fs;
                    fs.level = "unit";
                    fs.series_id = units.series_ids[u];
                    fs.dates = units.dates;
                    fs.taus = default_taus();
                    fs.quantiles.resize(units.horizon, 5);
                    for (int h = 0; h < units.horizon; ++h) {
                        fs.quantiles.row(h).setConstant(units.paths[u](0, h));
                    }
                    all.push_back(std::move(fs));
                }
            } else {
                AggregatedPaths agg = aggregate_bottom_up(units, data.geography);
                for (auto& fs : to_quantiles(agg.nation, default_taus())) all.push_back(std::move(fs));
                for (auto& fs : to_quantiles(agg.region, default_taus())) all.push_back(std::move(fs));
                for (auto& fs : to_quantiles(units, default_taus())) all.push_back(std::move(fs));
            }
            write_text_file(fc_out + "/forecast_gam_" + date.to_string() + ".csv",
                            forecast_csv(all));
        }
        if (fc_which != "gam") {
            std::vector<std::pair<std::string, std::string>> series;
            series.emplace_back("nation", "nation");
            for (const auto& r : data.geography.regions()) series.emplace_back("region", r);
            for (const auto& u : data.geography.units()) series.emplace_back("unit", u.unit_id);
            std::vector<ForecastSeries> all;
            for (const auto& [level, id] : series) {
                std::vector<std::int64_t> counts;
                for (int t = 0; t < fc_model.t_length; ++t) {
                    const Date day = window.start_date() + t;
                    std::int64_t acc = 0;
                    if (level == "unit") {
                        acc = window.count(day, id);
                    } else {
                        for (const auto& u : data.geography.units()) {
                            if (level == "nation" ||
                                u.region_id == id) acc += window.count(day, u.unit_id);
                        }
                    }
                    counts.push_back(acc);
                }
                ArimaFit af = auto_select(log1p_transform(counts));
                if (af.fallback) {
                    std::cerr << "warning: ARIMA fallback to random walk for " << level << " "
                              << id << "\n";
                }
                ForecastSeries fs;
                fs.level = level;
                fs.series_id = id;
                fs.taus = default_taus();
                for (int h = 1; h <= fc_model.horizon; ++h) fs.dates.push_back(date + h);
                fs.quantiles = forecast_arima(af, fc_model.horizon, fs.taus);
                all.push_back(std::move(fs));
            }
            write_text_file(fc_out + "/forecast_arima_" + date.to_string() + ".csv",
                            forecast_csv(all));
        }
        std::cout << "wrote forecasts for " << date.to_string() << " to " << fc_out << "\n";
        return 0;
    }

    if (evaluate_cmd->parsed() || sweep_cmd->parsed()) {
        const bool is_sweep = sweep_cmd->parsed();
        const InputPaths& in = is_sweep ? sw_in : ev_in;
        const DataBundle data = ingest(in.panel, in.geo, in.adj);
        emit_warnings(data.warnings);

        RunConfig cfg;
        cfg.model = is_sweep ? sw_model : ev_model;
        cfg.seed = is_sweep ? sw_seed : ev_seed;
        cfg.n_samples = is_sweep ? sw_samples : ev_samples;
        cfg.threads = threads;

        const std::string dates_str = is_sweep ? sw_dates_str : ev_dates_str;
        const int weeks = is_sweep ? sw_weeks : ev_weeks;
        if (!dates_str.empty()) {
            cfg.forecast_dates = parse_date_list(dates_str);
        } else {
            const Date last_feasible = data.panel.end_date() - cfg.model.horizon;
            const int n_weeks = weeks > 0 ? weeks : 6;
            for (int k = n_weeks - 1; k >= 0; --k) {
                cfg.forecast_dates.push_back(last_feasible - 7 * k);
            }
        }

        const std::string out_dir = is_sweep ? sw_out : ev_out;
        std::filesystem::create_directories(out_dir);
        if (is_sweep) {
            const std::vector<double> nat_grid = parse_real_list(sw_grid_str);
            const std::vector<double> grp_grid =
                sw_grid_grp_str.empty() ? nat_grid : parse_real_list(sw_grid_grp_str);
            const auto cells = run_tuning_sweep(cfg, data, nat_grid, grp_grid);
            write_text_file(out_dir + "/sweep.csv", sweep_csv(cells));
            std::cout << "wrote " << out_dir << "/sweep.csv\n";
        } else {
            const EvaluationResult result = run_rolling_evaluation(cfg, data);
            emit_warnings(result.warnings);
            write_evaluation_outputs(result, out_dir);
            std::cout << "wrote evaluation outputs to " << out_dir << "\n";
        }
        return 0;
    }

    if (score_cmd->parsed()) {
        const DataBundle data = ingest(sc_in.panel, sc_in.geo, sc_in.adj);
        emit_warnings(data.warnings);
        const auto rows = score_forecast_file(sc_forecasts, data, Date::parse(sc_date_str),
                                              sc_model);
        write_text_file(sc_out, score_csv(rows));
        std::cout << "wrote " << sc_out << "\n";
        return 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const fluhgam::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const fluhgam::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
