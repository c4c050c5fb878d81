#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fluhgam {

// Calendar date backed by a days-since-1970-01-01 count. Arithmetic and
// comparisons act on whole days; parsing/formatting is ISO-8601.
class Date {
public:
    Date() = default;
    explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}

    static Date from_ymd(int year, int month, int day);
    static Date parse(std::string_view iso); // throws SchemaError on malformed input

    std::int64_t days_since_epoch() const { return days_; }

    // Monday = 0 .. Sunday = 6, a pure function of the date.
    int day_of_week() const;

    std::string to_string() const; // YYYY-MM-DD

    Date operator+(std::int64_t d) const { return Date(days_ + d); }
    Date operator-(std::int64_t d) const { return Date(days_ - d); }
    std::int64_t operator-(Date other) const { return days_ - other.days_; }
    Date& operator++() { ++days_; return *this; }

    auto operator<=>(const Date&) const = default;

private:
    std::int64_t days_ = 0;
};

} // namespace fluhgam
