#include "pledgetracker/dates.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace pledgetracker {

namespace {

constexpr std::array<const char*, 12> kMonthAbbrev = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::optional<Date> make_date(int year, unsigned month, unsigned day) {
    Date d{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!d.ok()) return std::nullopt;
    return d;
}

std::optional<Date> parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d))
        return std::nullopt;
    if (m < 1 || d < 1) return std::nullopt;
    return make_date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string to_iso(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::string to_dd_mon_yyyy(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02u-%s-%04d", static_cast<unsigned>(date.day()),
                  kMonthAbbrev[static_cast<unsigned>(date.month()) - 1], static_cast<int>(date.year()));
    return buf;
}

std::int64_t epoch_days(const Date& date) {
    return std::chrono::sys_days{date}.time_since_epoch().count();
}

Date from_epoch_days(std::int64_t days) {
    return Date{std::chrono::sys_days{std::chrono::days{days}}};
}

Date add_days(const Date& date, std::int64_t days) {
    return from_epoch_days(epoch_days(date) + days);
}

Date first_of_month_offset(const Date& date, int months) {
    auto ym = std::chrono::year_month{date.year(), date.month()} + std::chrono::months{months};
    return Date{ym.year(), ym.month(), std::chrono::day{1}};
}

const char* to_string(Precision precision) {
    switch (precision) {
        case Precision::day: return "day";
        case Precision::month: return "month";
        case Precision::season: return "season";
        case Precision::year: return "year";
    }
    return "day";
}

std::optional<Precision> precision_from_string(std::string_view text) {
    if (text == "day") return Precision::day;
    if (text == "month") return Precision::month;
    if (text == "season") return Precision::season;
    if (text == "year") return Precision::year;
    return std::nullopt;
}

}  // namespace pledgetracker
