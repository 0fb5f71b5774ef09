#pragma once

#include <optional>
#include <string_view>

#include "pledgetracker/dates.hpp"

namespace pledgetracker::temporal {

/// Reference date for relative expressions, normally the publication date of
/// the document an expression came from.
struct TemporalAnchor {
    Date anchor_date;
};

/// Resolves a temporal expression to a calendar date with precision.
///
/// Productions are tried in order: ISO and numeric day-month-year dates
/// (day/month/year order, UK convention), written day-month-year forms,
/// month-year, season-year, bare year, then relative phrases that need an
/// anchor ("two days ago", "last month", "next week", "yesterday", weekday
/// and month names without a year). A trailing "(relative to D)" overrides
/// `anchor`. Ranges ("between July and September 2024") resolve to their
/// start. Two-digit years are rejected.
///
/// Throws NormalizationError for anything outside the grammar and
/// MissingAnchorError for a relative phrase with no anchor available.
NormalizedDate normalize_timestamp(std::string_view expression,
                                   std::optional<TemporalAnchor> anchor = std::nullopt);

/// Like normalize_timestamp but restricted to anchor-free productions.
std::optional<NormalizedDate> parse_absolute(std::string_view expression);

}  // namespace pledgetracker::temporal
