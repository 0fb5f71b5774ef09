#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pledgetracker {

struct ParsedUrl {
    std::string scheme;  // lowercased
    std::string host;    // as written
    std::optional<int> port;
    std::string path;    // "/" when absent
    std::string query;   // without '?'
    std::string fragment;

    /// scheme://host[:port]
    [[nodiscard]] std::string origin() const;
    /// path[?query]
    [[nodiscard]] std::string path_and_query() const;
};

std::optional<ParsedUrl> parse_url(std::string_view url);

/// Deduplication key: lowercase scheme and host, default port dropped,
/// fragment removed, tracking parameters (utm_*, fbclid, gclid) removed.
/// Unparseable input is returned trimmed and otherwise unchanged.
std::string normalize_url(std::string_view url);

bool is_tracking_parameter(std::string_view name);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view s);

}  // namespace pledgetracker
