#include "pledgetracker/html_extract.hpp"

#include <cctype>
#include <map>
#include <regex>
#include <string>
#include <unordered_set>
#include <vector>

#include "pledgetracker/temporal.hpp"
#include "pledgetracker/text.hpp"

namespace pledgetracker::html {

namespace {

void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct Tag {
    std::string name;  // lowercased, without '/'
    bool closing = false;
    bool self_closing = false;
    std::map<std::string, std::string> attrs;  // keys lowercased, values decoded
};

// Parses the tag starting at s[i] == '<'. Returns the index just past '>'.
std::size_t parse_tag(std::string_view s, std::size_t i, Tag& tag) {
    std::size_t j = i + 1;
    if (j < s.size() && s[j] == '/') {
        tag.closing = true;
        ++j;
    }
    std::size_t name_start = j;
    while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-' || s[j] == ':')) ++j;
    tag.name = text::to_lower(s.substr(name_start, j - name_start));
    while (j < s.size() && s[j] != '>') {
        if (std::isspace(static_cast<unsigned char>(s[j]))) {
            ++j;
            continue;
        }
        if (s[j] == '/') {
            tag.self_closing = true;
            ++j;
            continue;
        }
        std::size_t key_start = j;
        while (j < s.size() && s[j] != '=' && s[j] != '>' && s[j] != '/' &&
               !std::isspace(static_cast<unsigned char>(s[j])))
            ++j;
        std::string key = text::to_lower(s.substr(key_start, j - key_start));
        std::string value;
        while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j < s.size() && s[j] == '=') {
            ++j;
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
                char q = s[j++];
                std::size_t v = j;
                while (j < s.size() && s[j] != q) ++j;
                value = std::string{s.substr(v, j - v)};
                if (j < s.size()) ++j;
            } else {
                std::size_t v = j;
                while (j < s.size() && s[j] != '>' && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
                value = std::string{s.substr(v, j - v)};
            }
        }
        if (!key.empty()) tag.attrs.emplace(key, decode_entities(value));
    }
    return j < s.size() ? j + 1 : s.size();
}

const std::unordered_set<std::string>& skipped_elements() {
    static const std::unordered_set<std::string> tags = {"script", "style", "noscript", "nav", "header", "footer",
                                                         "aside", "form", "iframe", "svg", "template", "button",
                                                         "select", "figcaption", "head"};
    return tags;
}

const std::unordered_set<std::string>& block_elements() {
    static const std::unordered_set<std::string> tags = {"p", "li", "blockquote", "h1", "h2", "h3", "h4",
                                                         "h5", "h6", "div", "section", "article", "main",
                                                         "br", "tr", "td", "pre", "ul", "ol", "table"};
    return tags;
}

std::optional<Date> parse_meta_date(const std::string& raw) {
    auto value = text::trim(raw);
    if (value.size() >= 10)
        if (auto d = parse_iso_date(std::string_view{value}.substr(0, 10))) return d;
    if (auto n = temporal::parse_absolute(value); n && n->precision == Precision::day) return n->date;
    return std::nullopt;
}

struct Paragraph {
    std::string text;
    bool in_main = false;
    bool heading = false;
};

std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

}  // namespace

std::string decode_entities(std::string_view s) {
    static const std::map<std::string, unsigned long, std::less<>> named = {
        {"amp", '&'},       {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
        {"nbsp", 0xA0},     {"pound", 0xA3},    {"euro", 0x20AC},   {"copy", 0xA9},     {"reg", 0xAE},
        {"ndash", 0x2013},  {"mdash", 0x2014},  {"lsquo", 0x2018},  {"rsquo", 0x2019},  {"ldquo", 0x201C},
        {"rdquo", 0x201D},  {"hellip", 0x2026}, {"eacute", 0xE9},   {"middot", 0xB7},   {"trade", 0x2122},
    };
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        auto semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back('&');
            continue;
        }
        auto entity = s.substr(i + 1, semi - i - 1);
        unsigned long cp = 0;
        bool ok = false;
        if (!entity.empty() && entity[0] == '#') {
            try {
                if (entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X'))
                    cp = std::stoul(std::string{entity.substr(2)}, nullptr, 16);
                else
                    cp = std::stoul(std::string{entity.substr(1)}, nullptr, 10);
                ok = cp > 0 && cp < 0x110000;
            } catch (const std::exception&) {
                ok = false;
            }
        } else if (auto it = named.find(entity); it != named.end()) {
            cp = it->second;
            ok = true;
        }
        if (!ok) {
            out.push_back('&');
            continue;
        }
        if (cp == 0xA0) cp = ' ';
        append_utf8(out, cp);
        i = semi;
    }
    return out;
}

ExtractedPage extract_main_text(std::string_view html) {
    ExtractedPage page;
    std::string title_tag, og_title, h1_text;
    std::optional<Date> meta_date, time_date, jsonld_date;

    std::vector<Paragraph> paragraphs;
    std::string current;
    bool current_heading = false;
    int skip_depth = 0;
    int main_depth = 0;
    bool in_title = false, in_h1 = false, in_jsonld = false;
    std::string jsonld;

    auto flush = [&] {
        auto t = text::collapse_whitespace(decode_entities(current));
        if (!t.empty()) paragraphs.push_back({t, main_depth > 0, current_heading});
        current.clear();
        current_heading = false;
    };

    static const std::unordered_set<std::string> date_meta_names = {
        "article:published_time", "og:published_time", "date", "pubdate", "publishdate", "publish-date",
        "dc.date", "dc.date.issued", "dcterms.date", "dcterms.created", "article.published",
        "publication_date", "sailthru.date", "parsely-pub-date", "datepublished"};

    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            auto next = html.find('<', i);
            if (next == std::string_view::npos) next = html.size();
            auto chunk = html.substr(i, next - i);
            if (in_jsonld) jsonld.append(chunk);
            if (in_title) title_tag.append(chunk);
            if (in_h1) h1_text.append(chunk);
            if (skip_depth == 0 && !in_title) current.append(chunk);
            i = next;
            continue;
        }
        if (html.compare(i, 4, "<!--") == 0) {
            auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
            auto end = html.find('>', i);
            i = end == std::string_view::npos ? html.size() : end + 1;
            continue;
        }
        Tag tag;
        std::size_t after = parse_tag(html, i, tag);
        if (tag.name.empty()) {  // stray '<'
            if (skip_depth == 0) current.push_back('<');
            ++i;
            continue;
        }
        i = after;

        if (tag.name == "script" && !tag.closing) {
            auto type = tag.attrs.count("type") ? text::to_lower(tag.attrs["type"]) : "";
            auto end = html.find("</script", i);
            if (end == std::string_view::npos) end = html.size();
            if (type == "application/ld+json") jsonld.append(html.substr(i, end - i)).push_back('\n');
            auto close = html.find('>', end);
            i = close == std::string_view::npos ? html.size() : close + 1;
            continue;
        }
        if (tag.name == "style" && !tag.closing) {
            auto end = html.find("</style", i);
            auto close = end == std::string_view::npos ? std::string_view::npos : html.find('>', end);
            i = close == std::string_view::npos ? html.size() : close + 1;
            continue;
        }
        if (tag.name == "meta") {
            std::string key = tag.attrs.count("property")   ? tag.attrs["property"]
                              : tag.attrs.count("name")     ? tag.attrs["name"]
                              : tag.attrs.count("itemprop") ? tag.attrs["itemprop"]
                                                            : "";
            key = text::to_lower(key);
            auto content = tag.attrs.count("content") ? tag.attrs["content"] : "";
            if (key == "og:title" && og_title.empty()) og_title = content;
            if (!meta_date && date_meta_names.contains(key)) meta_date = parse_meta_date(content);
            continue;
        }
        if (tag.name == "time" && !tag.closing && !time_date && tag.attrs.count("datetime"))
            time_date = parse_meta_date(tag.attrs["datetime"]);
        if (tag.name == "title") {
            in_title = !tag.closing;
            continue;
        }
        if (tag.name == "h1" && main_depth >= 0) in_h1 = !tag.closing && h1_text.empty();

        if (skipped_elements().contains(tag.name) && !tag.self_closing) {
            if (!tag.closing) {
                if (skip_depth == 0) flush();
                ++skip_depth;
            } else if (skip_depth > 0) {
                --skip_depth;
            }
            continue;
        }
        if (skip_depth > 0) continue;

        if (block_elements().contains(tag.name)) {
            flush();
            if (!tag.closing && tag.name.size() == 2 && tag.name[0] == 'h' && std::isdigit(static_cast<unsigned char>(tag.name[1])))
                current_heading = true;
        } else if (tag.name == "img" || tag.name == "input") {
            continue;
        } else {
            current.push_back(' ');
        }
        if (tag.name == "article" || tag.name == "main") main_depth += tag.closing ? -1 : 1;
        if (main_depth < 0) main_depth = 0;
    }
    flush();

    if (!jsonld.empty()) {
        static const std::regex published(R"re("datePublished"\s*:\s*"([^"]+)")re");
        std::smatch m;
        if (std::regex_search(jsonld, m, published)) jsonld_date = parse_meta_date(m[1]);
    }

    page.title = text::collapse_whitespace(decode_entities(
        !og_title.empty() ? og_title : !h1_text.empty() ? h1_text : title_tag));
    page.publication_date = meta_date ? meta_date : jsonld_date ? jsonld_date : time_date;

    bool have_main = false;
    for (const auto& p : paragraphs)
        if (p.in_main && !p.heading) have_main = true;

    std::string body;
    for (const auto& p : paragraphs) {
        if (p.heading) continue;
        if (have_main && !p.in_main) continue;
        // Short lines outside the main content are usually chrome (bylines, share links).
        if (!(have_main && p.in_main) && word_count(p.text) < 6) continue;
        if (!body.empty()) body += "\n\n";
        body += p.text;
    }
    page.body = std::move(body);
    return page;
}

}  // namespace pledgetracker::html
