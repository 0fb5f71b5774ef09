#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/dates.hpp"

namespace pledgetracker {

/// A political commitment: who made it, when, where it applies, and what it says.
struct Pledge {
    std::string id;
    std::string speaker;
    Date date_made;
    std::string geo_scope;
    std::string claim;

    bool operator==(const Pledge&) const = default;
};

/// Unvalidated pledge fields as they arrive from a form, CLI or file.
struct RawPledge {
    std::string id;  // empty: derive one from the content
    std::string speaker;
    std::string date_made;
    std::string geo_scope;
    std::string claim;
};

/// Trims text fields, checks the claim and date. Collects every failing field
/// into one ValidationError.
Pledge validate_pledge(const RawPledge& raw);

/// Stable content-derived identifier ("p-" + 16 hex digits).
std::string derive_pledge_id(std::string_view speaker, const Date& date_made, std::string_view geo_scope,
                             std::string_view claim);

struct MonitoringRange {
    Date start;
    Date end;

    bool operator==(const MonitoringRange&) const = default;
};

MonitoringRange make_range(const Date& start, const Date& end);
MonitoringRange parse_range(std::string_view start, std::string_view end);
bool overlaps(const MonitoringRange& a, const MonitoringRange& b);

enum class Label { useful, not_useful };

const char* to_string(Label label);
std::optional<Label> label_from_string(std::string_view text);

enum class TimelineOrder { chronological, reverse_chronological };

const char* to_string(TimelineOrder order);
std::optional<TimelineOrder> order_from_string(std::string_view text);

struct TimelineEvent {
    std::string description;
    NormalizedDate timestamp;
    std::string source_url;
    std::optional<Label> decision;  // empty when classification failed
    double confidence = 0.0;

    bool operator==(const TimelineEvent&) const = default;
};

struct Timeline {
    std::string pledge_id;
    MonitoringRange range;
    TimelineOrder order = TimelineOrder::chronological;
    std::vector<TimelineEvent> events;
};

/// Stable sort by timestamp in the requested order. Equal dates fall back to
/// (source_url, description) ascending so output is deterministic.
std::vector<TimelineEvent> sort_timeline(std::vector<TimelineEvent> events, TimelineOrder order);

/// True when adjacent events respect `order` and no (description, date, url)
/// triple repeats.
bool is_well_formed(const Timeline& timeline);

/// A web page after scraping and boilerplate removal.
struct ScrapedDocument {
    std::string url;
    std::string title;
    std::optional<Date> publication_date;
    std::string body;
    int retrieval_round = 1;

    bool operator==(const ScrapedDocument&) const = default;
};

/// One labelled (pledge, event) row of the annotated corpus or of reviewer feedback.
struct AnnotatedInstance {
    std::string id;
    Pledge pledge;
    std::string event;
    Date timestamp;
    std::string source_url;
    Label label = Label::not_useful;

    bool operator==(const AnnotatedInstance&) const = default;
};

/// Reads the annotated corpus (JSON lines). Rows without an "id" get their
/// 1-based line number. Throws InputError naming the line on bad rows.
std::vector<AnnotatedInstance> load_annotated_corpus(const std::string& path);
std::vector<AnnotatedInstance> parse_annotated_corpus(std::string_view text);

bool is_well_formed_url(std::string_view url);

// JSON mapping. Dates are ISO-8601.
void to_json(nlohmann::json& j, const Pledge& p);
void from_json(const nlohmann::json& j, Pledge& p);
void to_json(nlohmann::json& j, const MonitoringRange& r);
void from_json(const nlohmann::json& j, MonitoringRange& r);
void to_json(nlohmann::json& j, const NormalizedDate& d);
void from_json(const nlohmann::json& j, NormalizedDate& d);
void to_json(nlohmann::json& j, const TimelineEvent& e);
void from_json(const nlohmann::json& j, TimelineEvent& e);
void to_json(nlohmann::json& j, const Timeline& t);
void from_json(const nlohmann::json& j, Timeline& t);
void to_json(nlohmann::json& j, const ScrapedDocument& d);
void from_json(const nlohmann::json& j, ScrapedDocument& d);
void to_json(nlohmann::json& j, const AnnotatedInstance& a);
void from_json(const nlohmann::json& j, AnnotatedInstance& a);

}  // namespace pledgetracker
