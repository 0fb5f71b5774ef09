#include "pledgetracker/domain.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/text.hpp"
#include "pledgetracker/url.hpp"

namespace pledgetracker {

using nlohmann::json;

ValidationError::ValidationError(std::vector<FieldIssue> issues)
    : Error([&] {
          std::string msg;
          for (const auto& issue : issues) {
              if (!msg.empty()) msg += "; ";
              msg += issue.message;
          }
          return msg;
      }()),
      issues_(std::move(issues)) {
    if (issues_.empty()) issues_.push_back({"", "validation failed"});
}

InputError::InputError(const std::string& message, std::optional<std::size_t> line)
    : Error(line ? "line " + std::to_string(*line) + ": " + message : message), line_(line) {}

const char* to_string(ProviderErrorKind kind) {
    switch (kind) {
        case ProviderErrorKind::transport: return "transport";
        case ProviderErrorKind::rate_limited: return "rate_limited";
        case ProviderErrorKind::empty_response: return "empty_response";
        case ProviderErrorKind::not_found: return "not_found";
        case ProviderErrorKind::scrape_failed: return "scrape_failed";
        case ProviderErrorKind::invalid_request: return "invalid_request";
    }
    return "unknown";
}

std::string derive_pledge_id(std::string_view speaker, const Date& date_made, std::string_view geo_scope,
                             std::string_view claim) {
    std::string key;
    key.append(speaker).push_back('\x1f');
    key.append(to_iso(date_made)).push_back('\x1f');
    key.append(geo_scope).push_back('\x1f');
    key.append(claim);
    return "p-" + text::hex64(text::fnv1a64(key));
}

Pledge validate_pledge(const RawPledge& raw) {
    std::vector<FieldIssue> issues;
    Pledge p;
    p.speaker = text::trim(raw.speaker);
    p.geo_scope = text::trim(raw.geo_scope);
    p.claim = text::trim(raw.claim);
    if (p.claim.empty()) issues.push_back({"claim", "claim must not be empty"});

    auto date_text = text::trim(raw.date_made);
    if (auto d = parse_iso_date(date_text))
        p.date_made = *d;
    else
        issues.push_back({"date_made", "invalid date '" + date_text + "' (expected YYYY-MM-DD)"});

    if (!issues.empty()) throw ValidationError(std::move(issues));

    auto id = text::trim(raw.id);
    p.id = id.empty() ? derive_pledge_id(p.speaker, p.date_made, p.geo_scope, p.claim) : id;
    return p;
}

MonitoringRange make_range(const Date& start, const Date& end) {
    if (end < start)
        throw ValidationError("range", "range start " + to_iso(start) + " is after end " + to_iso(end));
    return {start, end};
}

MonitoringRange parse_range(std::string_view start, std::string_view end) {
    std::vector<FieldIssue> issues;
    auto s = parse_iso_date(text::trim(start));
    auto e = parse_iso_date(text::trim(end));
    if (!s) issues.push_back({"range.start", "invalid range start '" + std::string{start} + "'"});
    if (!e) issues.push_back({"range.end", "invalid range end '" + std::string{end} + "'"});
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return make_range(*s, *e);
}

bool overlaps(const MonitoringRange& a, const MonitoringRange& b) {
    return !(a.end < b.start || b.end < a.start);
}

const char* to_string(Label label) {
    return label == Label::useful ? "useful" : "not_useful";
}

std::optional<Label> label_from_string(std::string_view text) {
    if (text == "useful") return Label::useful;
    if (text == "not_useful") return Label::not_useful;
    return std::nullopt;
}

const char* to_string(TimelineOrder order) {
    return order == TimelineOrder::chronological ? "chronological" : "reverse_chronological";
}

std::optional<TimelineOrder> order_from_string(std::string_view text) {
    if (text == "chronological") return TimelineOrder::chronological;
    if (text == "reverse_chronological" || text == "reverse") return TimelineOrder::reverse_chronological;
    return std::nullopt;
}

std::vector<TimelineEvent> sort_timeline(std::vector<TimelineEvent> events, TimelineOrder order) {
    const bool reverse = order == TimelineOrder::reverse_chronological;
    std::stable_sort(events.begin(), events.end(), [reverse](const TimelineEvent& a, const TimelineEvent& b) {
        auto da = epoch_days(a.timestamp.date);
        auto db = epoch_days(b.timestamp.date);
        if (da != db) return reverse ? da > db : da < db;
        return std::tie(a.source_url, a.description) < std::tie(b.source_url, b.description);
    });
    return events;
}

bool is_well_formed(const Timeline& timeline) {
    const auto& ev = timeline.events;
    for (std::size_t i = 1; i < ev.size(); ++i) {
        auto prev = epoch_days(ev[i - 1].timestamp.date);
        auto cur = epoch_days(ev[i].timestamp.date);
        if (timeline.order == TimelineOrder::chronological ? prev > cur : prev < cur) return false;
    }
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& e : ev) {
        if (!seen.emplace(e.description, to_iso(e.timestamp.date), e.source_url).second) return false;
    }
    return true;
}

bool is_well_formed_url(std::string_view url) {
    auto parsed = parse_url(url);
    return parsed && (parsed->scheme == "http" || parsed->scheme == "https") && !parsed->host.empty();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Date date_field(const json& j, const char* key) {
    auto s = j.at(key).get<std::string>();
    auto d = parse_iso_date(s);
    if (!d) throw InputError(std::string{"invalid date in field '"} + key + "': " + s);
    return *d;
}

}  // namespace

void to_json(json& j, const Pledge& p) {
    j = json{{"id", p.id},
             {"speaker", p.speaker},
             {"date_made", to_iso(p.date_made)},
             {"geo_scope", p.geo_scope},
             {"claim", p.claim}};
}

void from_json(const json& j, Pledge& p) {
    RawPledge raw;
    raw.id = j.value("id", "");
    raw.speaker = j.value("speaker", "");
    raw.date_made = j.value("date_made", "");
    raw.geo_scope = j.value("geo_scope", "");
    raw.claim = j.value("claim", "");
    p = validate_pledge(raw);
}

void to_json(json& j, const MonitoringRange& r) {
    j = json{{"start", to_iso(r.start)}, {"end", to_iso(r.end)}};
}

void from_json(const json& j, MonitoringRange& r) {
    r = parse_range(j.at("start").get<std::string>(), j.at("end").get<std::string>());
}

void to_json(json& j, const NormalizedDate& d) {
    j = json{{"date", to_iso(d.date)}, {"precision", to_string(d.precision)}, {"source_expression", d.source_expression}};
}

void from_json(const json& j, NormalizedDate& d) {
    d.date = date_field(j, "date");
    auto p = precision_from_string(j.value("precision", "day"));
    if (!p) throw InputError("invalid precision");
    d.precision = *p;
    d.source_expression = j.value("source_expression", "");
}

void to_json(json& j, const TimelineEvent& e) {
    j = json{{"description", e.description},
             {"timestamp", to_iso(e.timestamp.date)},
             {"source_url", e.source_url},
             {"decision", e.decision ? json(to_string(*e.decision)) : json(nullptr)},
             {"confidence", e.confidence}};
}

void from_json(const json& j, TimelineEvent& e) {
    e.description = j.at("description").get<std::string>();
    e.timestamp = NormalizedDate{date_field(j, "timestamp"), Precision::day, j.at("timestamp").get<std::string>()};
    e.source_url = j.at("source_url").get<std::string>();
    e.decision.reset();
    if (j.contains("decision") && j["decision"].is_string()) e.decision = label_from_string(j["decision"].get<std::string>());
    e.confidence = j.value("confidence", 0.0);
}

void to_json(json& j, const Timeline& t) {
    j = json{{"pledge_id", t.pledge_id}, {"range", t.range}, {"order", to_string(t.order)}, {"events", t.events}};
}

void from_json(const json& j, Timeline& t) {
    t.pledge_id = j.at("pledge_id").get<std::string>();
    t.range = j.at("range").get<MonitoringRange>();
    auto order = order_from_string(j.at("order").get<std::string>());
    if (!order) throw InputError("invalid timeline order");
    t.order = *order;
    t.events = j.at("events").get<std::vector<TimelineEvent>>();
}

void to_json(json& j, const ScrapedDocument& d) {
    j = json{{"url", d.url},
             {"title", d.title},
             {"publication_date", d.publication_date ? json(to_iso(*d.publication_date)) : json(nullptr)},
             {"body", d.body},
             {"retrieval_round", d.retrieval_round}};
}

void from_json(const json& j, ScrapedDocument& d) {
    d.url = j.at("url").get<std::string>();
    d.title = j.value("title", "");
    d.publication_date.reset();
    if (j.contains("publication_date") && j["publication_date"].is_string())
        d.publication_date = parse_iso_date(j["publication_date"].get<std::string>());
    d.body = j.value("body", "");
    d.retrieval_round = j.value("retrieval_round", 1);
}

void to_json(json& j, const AnnotatedInstance& a) {
    j = json{{"id", a.id},
             {"pledge",
              {{"speaker", a.pledge.speaker},
               {"date_made", to_iso(a.pledge.date_made)},
               {"geo_scope", a.pledge.geo_scope},
               {"claim", a.pledge.claim}}},
             {"event", a.event},
             {"timestamp", to_iso(a.timestamp)},
             {"url", a.source_url},
             {"label", to_string(a.label)}};
}

void from_json(const json& j, AnnotatedInstance& a) {
    a.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump()) : "";
    a.pledge = j.at("pledge").get<Pledge>();
    a.event = j.at("event").get<std::string>();
    if (text::trim(a.event).empty()) throw InputError("empty event description");
    a.timestamp = date_field(j, "timestamp");
    a.source_url = j.at("url").get<std::string>();
    auto label = label_from_string(j.at("label").get<std::string>());
    if (!label) throw InputError("label must be \"useful\" or \"not_useful\"");
    a.label = *label;
}

std::vector<AnnotatedInstance> parse_annotated_corpus(std::string_view contents) {
    std::vector<AnnotatedInstance> out;
    std::istringstream in{std::string{contents}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto inst = json::parse(line).get<AnnotatedInstance>();
            if (inst.id.empty()) inst.id = std::to_string(lineno);
            out.push_back(std::move(inst));
        } catch (const InputError& e) {
            throw InputError(e.what(), lineno);
        } catch (const ValidationError& e) {
            throw InputError(e.what(), lineno);
        } catch (const json::exception& e) {
            throw InputError(e.what(), lineno);
        }
    }
    return out;
}

std::vector<AnnotatedInstance> load_annotated_corpus(const std::string& path) {
    return parse_annotated_corpus(text::read_file(path));
}

}  // namespace pledgetracker
