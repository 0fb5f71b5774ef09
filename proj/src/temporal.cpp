#include "pledgetracker/temporal.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <string>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/text.hpp"

namespace pledgetracker {

std::weak_ordering compare_for_ordering(const NormalizedDate& a, const NormalizedDate& b) {
    auto da = epoch_days(a.date);
    auto db = epoch_days(b.date);
    if (da < db) return std::weak_ordering::less;
    if (da > db) return std::weak_ordering::greater;
    return std::weak_ordering::equivalent;
}

namespace temporal {

namespace {

using std::regex;
using std::smatch;

constexpr auto kMonthPattern =
    "(january|february|march|april|may|june|july|august|september|october|november|december|"
    "jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)";
constexpr auto kSeasonPattern = "(spring|summer|autumn|fall|winter)";
constexpr auto kWeekdayPattern =
    "(monday|tuesday|wednesday|thursday|friday|saturday|sunday|mon|tues|tue|wed|thurs|thur|thu|fri|sat|sun)";
constexpr auto kNumberPattern =
    "(\\d+|a|an|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|"
    "fifteen|sixteen|seventeen|eighteen|nineteen|twenty|thirty|a couple of|a couple|couple of)";

unsigned month_number(const std::string& name) {
    static const std::array<const char*, 12> prefixes = {"jan", "feb", "mar", "apr", "may", "jun",
                                                         "jul", "aug", "sep", "oct", "nov", "dec"};
    for (unsigned i = 0; i < prefixes.size(); ++i)
        if (name.compare(0, 3, prefixes[i]) == 0) return i + 1;
    return 0;
}

unsigned season_month(const std::string& name) {
    if (name == "spring") return 3;
    if (name == "summer") return 6;
    if (name == "autumn" || name == "fall") return 9;
    return 12;  // winter
}

int weekday_index(const std::string& name) {  // 0 = Sunday, matching std::chrono::weekday
    static const std::array<const char*, 7> prefixes = {"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
    for (int i = 0; i < 7; ++i)
        if (name.compare(0, 3, prefixes[static_cast<std::size_t>(i)]) == 0) return i;
    return -1;
}

int number_value(const std::string& word) {
    static const std::array<std::pair<const char*, int>, 26> words = {{
        {"a", 1}, {"an", 1}, {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},
        {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}, {"eleven", 11},
        {"twelve", 12}, {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15}, {"sixteen", 16},
        {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19}, {"twenty", 20}, {"thirty", 30},
        {"a couple of", 2}, {"a couple", 2}, {"couple of", 2},
    }};
    for (const auto& [w, v] : words)
        if (word == w) return v;
    if (!word.empty() && word.size() <= 5 && std::all_of(word.begin(), word.end(), ::isdigit)) return std::stoi(word);
    return -1;
}

Date checked_date(const std::string& original, int y, int m, int d) {
    if (m < 1 || d < 1) throw NormalizationError(original, "invalid calendar date: '" + original + "'");
    auto date = make_date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    if (!date) throw NormalizationError(original, "invalid calendar date: '" + original + "'");
    return *date;
}

[[noreturn]] void reject_two_digit_year(const std::string& original) {
    throw NormalizationError(original, "two-digit year is ambiguous: '" + original + "'");
}

/// Lowercase, unify punctuation, drop ordinal suffixes and connective "of".
std::string clean(std::string_view raw) {
    std::string s;
    s.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto c = static_cast<unsigned char>(raw[i]);
        // En/em dash (E2 80 93 / E2 80 94) -> spaced hyphen; curly apostrophe -> '.
        if (c == 0xE2 && i + 2 < raw.size() && static_cast<unsigned char>(raw[i + 1]) == 0x80) {
            auto c2 = static_cast<unsigned char>(raw[i + 2]);
            if (c2 == 0x93 || c2 == 0x94) {
                s += " - ";
                i += 2;
                continue;
            }
            if (c2 == 0x98 || c2 == 0x99) {
                s += '\'';
                i += 2;
                continue;
            }
        }
        if (c == ',' || c == ';' || c == '"' || c == '(' || c == ')') {
            s += ' ';
            continue;
        }
        if (c == '.') {
            bool between_digits = i > 0 && i + 1 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i - 1])) &&
                                  std::isdigit(static_cast<unsigned char>(raw[i + 1]));
            s += between_digits ? '.' : ' ';
            continue;
        }
        s += static_cast<char>(std::tolower(c));
    }
    s = text::collapse_whitespace(s);

    static const regex ordinal(R"(\b(\d{1,2})(st|nd|rd|th)\b)");
    s = std::regex_replace(s, ordinal, "$1");
    static const regex day_of(R"(\b(\d{1,2}) of\b)");
    s = std::regex_replace(s, day_of, "$1");
    static const regex period_of(std::string{"\\b("} + kMonthPattern + "|" + kSeasonPattern + ") of (\\d)");
    s = std::regex_replace(s, period_of, "$1 $3");
    static const regex mid_hyphen(R"(\bmid-)");
    s = std::regex_replace(s, mid_hyphen, "mid ");
    return s;
}

/// Removes leading filler ("on", "in", "around", weekday names before a
/// full date, "early"/"late"/"end of" qualifiers).
std::string strip_fillers(std::string s) {
    static const regex filler(
        R"(^(on|in|at|around|circa|c|approximately|approx|about|by|as of|dated|date:|the|during|since|early|mid|late|end of|the end of|beginning of|the beginning of|start of|the start of|middle of|the middle of)\s+)");
    static const regex weekday_prefix(std::string{"^"} + kWeekdayPattern + R"(\s+(?=\d|)" + kMonthPattern + ")");
    for (;;) {
        smatch m;
        if (std::regex_search(s, m, filler)) {
            s = m.suffix();
            continue;
        }
        if (std::regex_search(s, m, weekday_prefix)) {
            s = m.suffix();
            continue;
        }
        return s;
    }
}

std::optional<NormalizedDate> absolute(const std::string& s, const std::string& original) {
    smatch m;
    auto make = [&](Date d, Precision p) { return NormalizedDate{d, p, original}; };

    // ISO (optionally with a time part, which is ignored).
    static const regex iso(R"(^(\d{4})[-/.](\d{1,2})[-/.](\d{1,2})(?:t.*|\s+\d{1,2}:\d{2}.*)?$)");
    if (std::regex_match(s, m, iso))
        return make(checked_date(original, std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])), Precision::day);

    static const regex dmy_numeric(R"(^(\d{1,2})[-/.](\d{1,2})[-/.](\d{4})$)");
    if (std::regex_match(s, m, dmy_numeric))
        return make(checked_date(original, std::stoi(m[3]), std::stoi(m[2]), std::stoi(m[1])), Precision::day);
    static const regex dmy_numeric_short(R"(^\d{1,2}[-/.]\d{1,2}[-/.]\d{2}$)");
    if (std::regex_match(s, dmy_numeric_short)) reject_two_digit_year(original);

    static const regex dmy_written(std::string{R"(^(\d{1,2})[ -])"} + kMonthPattern + R"([ -](\d{4})$)");
    if (std::regex_match(s, m, dmy_written))
        return make(checked_date(original, std::stoi(m[3]), static_cast<int>(month_number(m[2])), std::stoi(m[1])),
                    Precision::day);
    static const regex mdy_written(std::string{"^"} + kMonthPattern + R"( (\d{1,2}) (\d{4})$)");
    if (std::regex_match(s, m, mdy_written))
        return make(checked_date(original, std::stoi(m[3]), static_cast<int>(month_number(m[1])), std::stoi(m[2])),
                    Precision::day);
    static const regex written_short_year(std::string{R"(^(\d{1,2})[ -])"} + kMonthPattern + R"([ -]'?\d{2}$)");
    if (std::regex_match(s, written_short_year)) reject_two_digit_year(original);

    static const regex month_year(std::string{"^"} + kMonthPattern + R"( (\d{4})$)");
    if (std::regex_match(s, m, month_year))
        return make(checked_date(original, std::stoi(m[2]), static_cast<int>(month_number(m[1])), 1), Precision::month);
    static const regex year_month(R"(^(\d{4})[-/](\d{1,2})$)");
    if (std::regex_match(s, m, year_month))
        return make(checked_date(original, std::stoi(m[1]), std::stoi(m[2]), 1), Precision::month);
    static const regex month_short_year(std::string{"^"} + kMonthPattern + R"( '\d{2}$)");
    if (std::regex_match(s, month_short_year)) reject_two_digit_year(original);

    // "winter 2023/24" starts in December 2023.
    static const regex season_year(std::string{"^"} + kSeasonPattern + R"( (\d{4})(?:[-/]\d{2,4})?$)");
    if (std::regex_match(s, m, season_year))
        return make(checked_date(original, std::stoi(m[2]), static_cast<int>(season_month(m[1])), 1), Precision::season);
    static const regex season_short_year(std::string{"^"} + kSeasonPattern + R"( '\d{2}$)");
    if (std::regex_match(s, season_short_year)) reject_two_digit_year(original);

    static const regex year_only(R"(^([12]\d{3})$)");
    if (std::regex_match(s, m, year_only)) return make(checked_date(original, std::stoi(m[1]), 1, 1), Precision::year);
    static const regex short_year(R"(^'\d{2}$)");
    if (std::regex_match(s, short_year)) reject_two_digit_year(original);

    return std::nullopt;
}

enum class Unit { day, week, month, year };

Unit unit_from(const std::string& word) {
    if (word.starts_with("day")) return Unit::day;
    if (word.starts_with("week")) return Unit::week;
    if (word.starts_with("month")) return Unit::month;
    return Unit::year;
}

NormalizedDate shift(const Date& anchor, Unit unit, int amount, const std::string& original) {
    switch (unit) {
        case Unit::day: return {add_days(anchor, amount), Precision::day, original};
        case Unit::week: return {add_days(anchor, 7LL * amount), Precision::day, original};
        case Unit::month: return {first_of_month_offset(anchor, amount), Precision::month, original};
        case Unit::year:
            return {Date{anchor.year() + std::chrono::years{amount}, std::chrono::January, std::chrono::day{1}},
                    Precision::year, original};
    }
    return {anchor, Precision::day, original};
}

Date season_start(int year, unsigned month) {
    return Date{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{1}};
}

/// Relative productions. Returns nullopt when `s` is not a relative phrase;
/// throws MissingAnchorError when it is one but no anchor is available.
std::optional<NormalizedDate> relative(const std::string& s, const std::optional<Date>& anchor,
                                       const std::string& original) {
    smatch m;
    auto need = [&]() -> const Date& {
        if (!anchor) throw MissingAnchorError(original);
        return *anchor;
    };

    static const regex same_day(R"(^(today|now|this day|same day|the same day)$)");
    if (std::regex_match(s, same_day)) return NormalizedDate{need(), Precision::day, original};
    if (s == "yesterday") return shift(need(), Unit::day, -1, original);
    if (s == "tomorrow") return shift(need(), Unit::day, 1, original);
    if (s == "the day before yesterday" || s == "day before yesterday") return shift(need(), Unit::day, -2, original);
    if (s == "the day after tomorrow" || s == "day after tomorrow") return shift(need(), Unit::day, 2, original);

    static const regex ago(std::string{"^"} + kNumberPattern + R"( (day|week|month|year)s? (ago|earlier|before|prior)$)");
    if (std::regex_match(s, m, ago)) return shift(need(), unit_from(m[2]), -number_value(m[1]), original);
    static const regex ahead(std::string{"^(?:in )?"} + kNumberPattern +
                             R"( (day|week|month|year)s?(?: (later|from now|hence|after))?$)");
    if (std::regex_match(s, m, ahead) && (m[3].matched || s.starts_with("in ")))
        return shift(need(), unit_from(m[2]), number_value(m[1]), original);

    static const regex period(R"(^(?:(?:over|in|during|within) )?(?:the )?(last|past|previous|prior|this|current|next|coming|following|earlier this|later this) (week|month|year)$)");
    if (std::regex_match(s, m, period)) {
        std::string which = m[1];
        int dir = (which == "last" || which == "past" || which == "previous" || which == "prior") ? -1
                  : (which == "next" || which == "coming" || which == "following")                ? 1
                                                                                                  : 0;
        return shift(need(), unit_from(m[2]), dir, original);
    }

    static const regex weekday(std::string{"^(?:(last|this|next|on|past) )?"} + kWeekdayPattern + "$");
    if (std::regex_match(s, m, weekday)) {
        const Date& a = need();
        int target = weekday_index(m[2]);
        int today = static_cast<int>(std::chrono::weekday{std::chrono::sys_days{a}}.c_encoding());
        std::string which = m[1].matched ? std::string{m[1]} : "";
        int back = (today - target + 7) % 7;  // 0..6, on or before
        if (which == "last" || which == "past") return shift(a, Unit::day, -(back == 0 ? 7 : back), original);
        if (which == "next") {
            int fwd = (target - today + 7) % 7;
            return shift(a, Unit::day, fwd == 0 ? 7 : fwd, original);
        }
        return shift(a, Unit::day, -back, original);
    }

    static const regex bare_month(std::string{"^(?:(last|this|next) )?"} + kMonthPattern + "$");
    if (std::regex_match(s, m, bare_month)) {
        const Date& a = need();
        auto mon = static_cast<int>(month_number(m[2]));
        int cur = static_cast<int>(static_cast<unsigned>(a.month()));
        int y = static_cast<int>(a.year());
        std::string which = m[1].matched ? std::string{m[1]} : "";
        if (which == "next")
            y = mon > cur ? y : y + 1;
        else if (which == "last")
            y = mon < cur ? y : y - 1;
        else
            y = mon <= cur ? y : y - 1;
        return NormalizedDate{checked_date(original, y, mon, 1), Precision::month, original};
    }

    static const regex day_month(std::string{R"(^(\d{1,2}) )"} + kMonthPattern + "$");
    static const regex month_day(std::string{"^"} + kMonthPattern + R"( (\d{1,2})$)");
    bool dm = std::regex_match(s, m, day_month);
    if (dm || std::regex_match(s, m, month_day)) {
        const Date& a = need();
        int d = std::stoi(dm ? std::string{m[1]} : std::string{m[2]});
        auto mon = static_cast<int>(month_number(dm ? std::string{m[2]} : std::string{m[1]}));
        int y = static_cast<int>(a.year());
        // Feb 29 in a non-leap anchor year walks back to the previous leap year.
        for (int tries = 0; tries < 8; ++tries, --y) {
            auto candidate = make_date(y, static_cast<unsigned>(mon), static_cast<unsigned>(d));
            if (candidate && *candidate <= a) return NormalizedDate{*candidate, Precision::day, original};
        }
        throw NormalizationError(original, "invalid calendar date: '" + original + "'");
    }

    static const regex bare_season(std::string{"^(?:(last|this|next) )?"} + kSeasonPattern + "$");
    if (std::regex_match(s, m, bare_season)) {
        const Date& a = need();
        unsigned sm = season_month(m[2]);
        int y = static_cast<int>(a.year());
        // Winter straddles the year boundary: January/February belong to the
        // winter that began the previous December.
        if (sm == 12 && static_cast<unsigned>(a.month()) <= 2) --y;
        std::string which = m[1].matched ? std::string{m[1]} : "";
        if (which == "last") --y;
        if (which == "next") ++y;
        return NormalizedDate{season_start(y, sm), Precision::season, original};
    }
    return std::nullopt;
}

std::optional<NormalizedDate> resolve(const std::string& cleaned, const std::optional<Date>& anchor,
                                      const std::string& original) {
    // "in 3 days" must be seen before "in" is stripped as filler.
    if (auto r = relative(cleaned, anchor, original)) return r;
    auto s = strip_fillers(cleaned);
    if (auto a = absolute(s, original)) return a;
    if (auto r = relative(s, anchor, original)) return r;
    return std::nullopt;
}

std::optional<std::string> trailing_year(const std::string& s) {
    static const regex year_at_end(R"(\b([12]\d{3})$)");
    smatch m;
    if (std::regex_search(s, m, year_at_end)) return m[1].str();
    return std::nullopt;
}

}  // namespace

std::optional<NormalizedDate> parse_absolute(std::string_view expression) {
    std::string original = text::trim(expression);
    if (original.empty()) return std::nullopt;
    return absolute(strip_fillers(clean(original)), original);
}

NormalizedDate normalize_timestamp(std::string_view expression, std::optional<TemporalAnchor> anchor_in) {
    std::string original = text::trim(expression);
    if (original.empty()) throw NormalizationError(original, "empty temporal expression");

    std::optional<Date> anchor;
    if (anchor_in) anchor = anchor_in->anchor_date;

    std::string working = original;
    static const regex relative_to(R"(\(\s*relative\s+to\s*:?\s*([^)]*)\))", std::regex::icase);
    smatch m;
    if (std::regex_search(working, m, relative_to)) {
        auto anchor_text = m[1].str();
        auto parsed = parse_absolute(anchor_text);
        if (!parsed || parsed->precision != Precision::day)
            throw NormalizationError(original, "unresolvable anchor in '" + original + "'");
        anchor = parsed->date;
        working = m.prefix().str() + " " + m.suffix().str();
    }

    std::string s = clean(working);
    if (s.empty()) throw NormalizationError(original, "empty temporal expression");

    if (auto r = resolve(s, anchor, original)) return *r;

    // Ranges resolve to their start; a yearless start borrows the end's year.
    static const regex range(R"(^(?:(?:between|from) )?(.+?) (?:-|and|to|until|till|through) (.+)$)");
    if (std::regex_match(s, m, range)) {
        std::string left = m[1];
        std::string right = m[2];
        bool explicit_range = s.starts_with("between ") || s.starts_with("from ") || s.find(" - ") != std::string::npos ||
                              s.find(" to ") != std::string::npos || s.find(" until ") != std::string::npos ||
                              s.find(" till ") != std::string::npos || s.find(" through ") != std::string::npos;
        if (explicit_range) {
            if (auto year = trailing_year(right); year && !trailing_year(left)) {
                if (auto r = resolve(left + " " + *year, anchor, original)) return *r;
            }
            if (auto r = resolve(left, anchor, original)) return *r;
        }
    }

    throw NormalizationError(original, "unrecognised temporal expression: '" + original + "'");
}

}  // namespace temporal
}  // namespace pledgetracker
