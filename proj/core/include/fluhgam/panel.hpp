#pragma once

#include "fluhgam/dates.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace fluhgam {

struct PanelRow {
    Date date;
    std::string unit_id;
    std::int64_t count = 0;
};

// Daily admissions counts per unit over a contiguous date range. Every
// (date, unit) cell is present and non-negative. Immutable after validation.
class AdmissionsPanel {
public:
    AdmissionsPanel(Date start, std::int64_t n_days, std::vector<std::string> units,
                    std::vector<std::int64_t> counts_unit_major);

    Date start_date() const { return start_; }
    Date end_date() const { return start_ + (n_days_ - 1); }
    std::int64_t n_days() const { return n_days_; }
    const std::vector<std::string>& units() const { return units_; }

    std::int64_t count(Date date, std::size_t unit_idx) const;
    std::int64_t count(Date date, const std::string& unit_id) const;
    std::size_t unit_index(const std::string& unit_id) const;

    // Panel restricted to [first, last], same units.
    AdmissionsPanel window(Date first, Date last) const;

    // Unit-major storage: counts[u * n_days + day_offset].
    const std::vector<std::int64_t>& raw_counts() const { return counts_; }

private:
    Date start_;
    std::int64_t n_days_ = 0;
    std::vector<std::string> units_;
    std::vector<std::int64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct PanelValidationOptions {
    // Units missing more than this fraction of days in the range are dropped
    // with a warning; remaining isolated gaps are rejected.
    double max_missing_fraction = 0.05;
    bool strict = false; // strict: any gap is an error (GappyUnit)
};

// Builds a contiguous panel from raw rows. Appends one warning string per
// dropped unit. Throws EmptyPanel, NegativeCount, GappyUnit.
AdmissionsPanel validate_panel(const std::vector<PanelRow>& rows,
                               const PanelValidationOptions& options,
                               std::vector<std::string>* warnings);

inline AdmissionsPanel validate_panel(const std::vector<PanelRow>& rows,
                                      std::vector<std::string>* warnings = nullptr) {
    return validate_panel(rows, PanelValidationOptions{}, warnings);
}

// Day-of-week features; a pure function of the date (Monday = 0).
struct CalendarFeatures {
    int day_of_week(Date d) const { return d.day_of_week(); }
};

} // namespace fluhgam
