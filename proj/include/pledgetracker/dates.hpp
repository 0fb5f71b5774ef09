#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pledgetracker {

using Date = std::chrono::year_month_day;

/// Builds a date, returning nullopt for impossible calendar values.
std::optional<Date> make_date(int year, unsigned month, unsigned day);

/// Strict YYYY-MM-DD.
std::optional<Date> parse_iso_date(std::string_view text);

std::string to_iso(const Date& date);

/// "04-Jul-2024", the form used in composed search queries.
std::string to_dd_mon_yyyy(const Date& date);

std::int64_t epoch_days(const Date& date);
Date from_epoch_days(std::int64_t days);
Date add_days(const Date& date, std::int64_t days);

/// First day of the month `months` away from `date` (negative = past).
Date first_of_month_offset(const Date& date, int months);

enum class Precision { day, month, season, year };

const char* to_string(Precision precision);
std::optional<Precision> precision_from_string(std::string_view text);

/// A calendar date resolved from a temporal expression.
///
/// Invariants: month precision has day 01; year precision has 01-01; season
/// precision has day 01 and the season's first month.
struct NormalizedDate {
    Date date;
    Precision precision = Precision::day;
    std::string source_expression;

    bool operator==(const NormalizedDate&) const = default;
};

/// Precision-blind ordering on the calendar date.
std::weak_ordering compare_for_ordering(const NormalizedDate& a, const NormalizedDate& b);

}  // namespace pledgetracker
