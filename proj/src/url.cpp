#include "pledgetracker/url.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include "pledgetracker/text.hpp"

namespace pledgetracker {

std::string ParsedUrl::origin() const {
    std::string out = scheme + "://" + host;
    if (port) out += ":" + std::to_string(*port);
    return out;
}

std::string ParsedUrl::path_and_query() const {
    return query.empty() ? path : path + "?" + query;
}

std::optional<ParsedUrl> parse_url(std::string_view url) {
    auto s = text::trim(url);
    auto scheme_end = s.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0) return std::nullopt;
    ParsedUrl out;
    out.scheme = text::to_lower(s.substr(0, scheme_end));
    for (char c : out.scheme)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return std::nullopt;

    std::string_view rest{s};
    rest.remove_prefix(scheme_end + 3);
    auto authority_end = rest.find_first_of("/?#");
    auto authority = rest.substr(0, authority_end);
    rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    if (auto colon = authority.rfind(':'); colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        auto port_text = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535)
            return std::nullopt;
        out.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return std::nullopt;
    for (char c : authority)
        if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
    out.host = std::string{authority};

    if (auto hash = rest.find('#'); hash != std::string_view::npos) {
        out.fragment = std::string{rest.substr(hash + 1)};
        rest = rest.substr(0, hash);
    }
    if (auto q = rest.find('?'); q != std::string_view::npos) {
        out.query = std::string{rest.substr(q + 1)};
        rest = rest.substr(0, q);
    }
    out.path = rest.empty() ? "/" : std::string{rest};
    return out;
}

bool is_tracking_parameter(std::string_view name) {
    auto lowered = text::to_lower(name);
    return lowered.starts_with("utm_") || lowered == "fbclid" || lowered == "gclid";
}

std::string normalize_url(std::string_view url) {
    auto parsed = parse_url(url);
    if (!parsed) return text::trim(url);

    std::string out = parsed->scheme + "://" + text::to_lower(parsed->host);
    bool default_port = (parsed->scheme == "http" && parsed->port == 80) ||
                        (parsed->scheme == "https" && parsed->port == 443);
    if (parsed->port && !default_port) out += ":" + std::to_string(*parsed->port);
    out += parsed->path;

    std::string kept;
    std::string_view query = parsed->query;
    while (!query.empty()) {
        auto amp = query.find('&');
        auto param = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        if (param.empty()) continue;
        if (is_tracking_parameter(param.substr(0, param.find('=')))) continue;
        if (!kept.empty()) kept.push_back('&');
        kept.append(param);
    }
    if (!kept.empty()) out += "?" + kept;
    return out;
}

std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

}  // namespace pledgetracker
