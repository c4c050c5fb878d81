#pragma once

#include "fluhgam/geography.hpp"
#include "fluhgam/panel.hpp"

#include <array>
#include <cstdint>

namespace fluhgam {

// Synthetic epidemic-wave panel generator. The per-capita log rate is a
// national Gaussian-bump wave (or pure exponential), plus a spatially smooth
// per-unit offset sampled from the MRF prior on the generated adjacency
// graph, plus a log day-of-week multiplier; counts are negative binomial
// around p_i * rate. Fully determined by the seed.
struct SyntheticSpec {
    int n_units = 42;
    int n_regions = 7;
    int n_days = 119; // 17 weeks
    Date start_date = Date(19268); // 2022-10-03, a Monday

    double peak_day = 58.0;
    double peak_log_rate = -10.0;          // log per-capita rate at the peak
    double growth_rate = 0.07;             // log-rate slope at t = 0
    double decay_rate = 0.05;              // log-rate slope magnitude at t = 2*peak_day
    double unit_offset_scale = 0.35;       // sd of the spatial unit offsets
    std::array<double, 7> dow_multipliers{1.15, 1.1, 1.05, 1.0, 0.95, 0.8, 0.75};
    double theta = 8.0;
    double pop_min = 3e5;
    double pop_max = 2e6;
    std::uint64_t seed = 1;

    bool log_linear = false;      // log rate = base_log_rate + growth_rate * t
    double base_log_rate = -12.0; // only used in log_linear mode
    bool deterministic_counts = false; // counts = round(mu), no NB noise

    void validate() const;
};

struct SyntheticData {
    AdmissionsPanel panel;
    Geography geography;
    AdjacencyGraph adjacency;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

} // namespace fluhgam
