#include "fluhgam/panel.hpp"

#include "fluhgam/errors.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace fluhgam {

AdmissionsPanel::AdmissionsPanel(Date start, std::int64_t n_days, std::vector<std::string> units,
                                 std::vector<std::int64_t> counts_unit_major)
    : start_(start), n_days_(n_days), units_(std::move(units)), counts_(std::move(counts_unit_major)) {
    if (n_days_ <= 0 || units_.empty()) throw EmptyPanel("panel has no cells");
    if (counts_.size() != units_.size() * static_cast<std::size_t>(n_days_)) {
        throw ValidationError("panel storage size mismatch");
    }
    for (std::int64_t c : counts_) {
        if (c < 0) throw NegativeCount("negative count in panel");
    }
    for (std::size_t i = 0; i < units_.size(); ++i) {
        if (!index_.emplace(units_[i], i).second) {
            throw ValidationError("duplicate unit '" + units_[i] + "' in panel");
        }
    }
}

std::int64_t AdmissionsPanel::count(Date date, std::size_t unit_idx) const {
    const std::int64_t off = date - start_;
    if (off < 0 || off >= n_days_) throw OutOfRange("date outside panel range");
    return counts_[unit_idx * static_cast<std::size_t>(n_days_) + static_cast<std::size_t>(off)];
}

std::int64_t AdmissionsPanel::count(Date date, const std::string& unit_id) const {
    return count(date, unit_index(unit_id));
}

std::size_t AdmissionsPanel::unit_index(const std::string& unit_id) const {
    auto it = index_.find(unit_id);
    if (it == index_.end()) throw UnknownUnit("unknown unit '" + unit_id + "' in panel");
    return it->second;
}

AdmissionsPanel AdmissionsPanel::window(Date first, Date last) const {
    if (first < start_ || last > end_date() || last < first) {
        throw OutOfRange("window [" + first.to_string() + ", " + last.to_string() +
                         "] outside panel range");
    }
    const std::int64_t m = last - first + 1;
    std::vector<std::int64_t> counts(units_.size() * static_cast<std::size_t>(m));
    const std::int64_t shift = first - start_;
    for (std::size_t u = 0; u < units_.size(); ++u) {
        for (std::int64_t d = 0; d < m; ++d) {
            counts[u * static_cast<std::size_t>(m) + static_cast<std::size_t>(d)] =
                counts_[u * static_cast<std::size_t>(n_days_) + static_cast<std::size_t>(shift + d)];
        }
    }
    return AdmissionsPanel(first, m, units_, std::move(counts));
}

AdmissionsPanel validate_panel(const std::vector<PanelRow>& rows,
                               const PanelValidationOptions& options,
                               std::vector<std::string>* warnings) {
    if (rows.empty()) throw EmptyPanel("no rows");

    Date first = rows.front().date;
    Date last = rows.front().date;
    for (const auto& r : rows) {
        if (r.count < 0) {
            throw NegativeCount("negative count for unit '" + r.unit_id + "' on " +
                                r.date.to_string());
        }
        first = std::min(first, r.date);
        last = std::max(last, r.date);
    }
    const std::int64_t n_days = last - first + 1;

    // First-appearance unit order keeps validation deterministic.
    std::vector<std::string> units;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : rows) {
        if (index.emplace(r.unit_id, units.size()).second) units.push_back(r.unit_id);
    }

    const auto n_cells = units.size() * static_cast<std::size_t>(n_days);
    std::vector<std::int64_t> counts(n_cells, -1);
    for (const auto& r : rows) {
        const auto u = index.at(r.unit_id);
        const auto off = static_cast<std::size_t>(r.date - first);
        auto& cell = counts[u * static_cast<std::size_t>(n_days) + off];
        if (cell >= 0 && cell != r.count) {
            throw ValidationError("conflicting duplicate row for unit '" + r.unit_id + "' on " +
                                  r.date.to_string());
        }
        cell = r.count;
    }

    std::vector<std::string> kept_units;
    std::vector<std::string> dropped;
    for (std::size_t u = 0; u < units.size(); ++u) {
        std::int64_t missing = 0;
        for (std::int64_t d = 0; d < n_days; ++d) {
            if (counts[u * static_cast<std::size_t>(n_days) + static_cast<std::size_t>(d)] < 0)
                ++missing;
        }
        if (missing == 0) {
            kept_units.push_back(units[u]);
            continue;
        }
        if (options.strict) {
            throw GappyUnit("unit '" + units[u] + "' missing " + std::to_string(missing) +
                            " of " + std::to_string(n_days) + " days");
        }
        const double frac = static_cast<double>(missing) / static_cast<double>(n_days);
        if (frac > options.max_missing_fraction) {
            dropped.push_back(units[u]);
        } else {
            throw GappyUnit("unit '" + units[u] + "' has " + std::to_string(missing) +
                            " isolated missing day(s); gaps within the threshold are rejected, "
                            "not imputed");
        }
    }
    if (!dropped.empty() && warnings != nullptr) {
        std::ostringstream oss;
        oss << "dropped " << dropped.size() << " unit(s) missing more than "
            << options.max_missing_fraction * 100.0 << "% of days:";
        for (const auto& id : dropped) oss << ' ' << id;
        warnings->push_back(oss.str());
    }
    if (kept_units.empty()) throw EmptyPanel("all units dropped during validation");

    std::vector<std::int64_t> kept_counts(kept_units.size() * static_cast<std::size_t>(n_days));
    for (std::size_t k = 0; k < kept_units.size(); ++k) {
        const auto u = index.at(kept_units[k]);
        for (std::int64_t d = 0; d < n_days; ++d) {
            kept_counts[k * static_cast<std::size_t>(n_days) + static_cast<std::size_t>(d)] =
                counts[u * static_cast<std::size_t>(n_days) + static_cast<std::size_t>(d)];
        }
    }
    return AdmissionsPanel(first, n_days, std::move(kept_units), std::move(kept_counts));
}

} // namespace fluhgam
