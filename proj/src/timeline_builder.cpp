#include "pledgetracker/timeline_builder.hpp"
#include "pledgetracker/errors.hpp"

#include <algorithm>
#include <regex>
#include <tuple>

#include <spdlog/spdlog.h>

#include "pledgetracker/parallel.hpp"
#include "pledgetracker/temporal.hpp"
#include "pledgetracker/text.hpp"

namespace pledgetracker::timeline {

using nlohmann::json;

void to_json(json& j, const ExtractedEvent& e) {
    j = json{{"description", e.description},
             {"raw_date_expression", e.raw_date_expression},
             {"source_url", e.source_url},
             {"normalized", e.normalized ? json(*e.normalized) : json(nullptr)},
             {"date_fallback", e.date_fallback}};
}

void from_json(const json& j, ExtractedEvent& e) {
    e.description = j.at("description").get<std::string>();
    e.raw_date_expression = j.value("raw_date_expression", "");
    e.source_url = j.at("source_url").get<std::string>();
    e.normalized.reset();
    if (j.contains("normalized") && j["normalized"].is_object()) e.normalized = j["normalized"].get<NormalizedDate>();
    e.date_fallback = j.value("date_fallback", false);
}

std::vector<ExtractionExample> parse_extraction_examples(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("extraction examples: ") + e.what());
    }
    std::vector<ExtractionExample> out;
    for (const auto& ex : doc.at("examples")) {
        ExtractionExample e{ex.at("title").get<std::string>(), ex.value("date", "unknown"),
                            ex.at("article").get<std::string>(), ex.at("output")};
        if (!e.output.contains("events")) throw InputError("extraction example output lacks \"events\"");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ExtractionExample> load_extraction_examples(const std::string& path) {
    return parse_extraction_examples(text::read_file(path));
}

std::size_t estimate_tokens(std::string_view s) { return (s.size() + 3) / 4; }

namespace {

std::string instruction(const Pledge* pledge) {
    if (!pledge) return "Please only summarize events that are useful for verifying the pledge, and their dates in the JSON format.";
    return "Please only summarize events that are useful for verifying the pledge: " + pledge->claim +
           ", and their dates in the JSON format.";
}

std::string input_block(const std::string& title, const std::string& date, const std::string& article) {
    return "Input:\n\nTitle: " + title + "\nDate: " + date + "\nArticle: " + article + "\n\nOutput:\n";
}

// Cuts at or before `max_bytes`, on a UTF-8 boundary and preferably at whitespace.
std::string cut(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return std::string(s);
    std::size_t end = max_bytes;
    while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
    auto space = s.find_last_of(" \n\t", end);
    if (space != std::string_view::npos && space > end / 2) end = space;
    return std::string(s.substr(0, end));
}

}  // namespace

ExtractionPrompt build_extraction_prompt(const Pledge& pledge, const ScrapedDocument& document,
                                         const std::vector<ExtractionExample>& examples, std::size_t token_budget) {
    if (text::trim(document.body).empty()) throw InputError("document body is empty: " + document.url);
    if (examples.size() != 2) throw InputError("extraction prompt needs exactly 2 examples");

    std::string head = instruction(nullptr) + "\n\n";
    for (const auto& ex : examples) head += input_block(ex.title, ex.date, ex.article) + ex.output.dump(2) + "\n\n";
    head += "\n" + instruction(&pledge) + "\n\n";
    std::string date = document.publication_date ? to_iso(*document.publication_date) : "unknown";
    std::string prefix = head + "Input:\n\nTitle: " + document.title + "\nDate: " + date + "\nArticle: ";
    std::string suffix = "\n\nOutput:\n";

    ExtractionPrompt out;
    std::string body = document.body;
    std::size_t fixed = estimate_tokens(prefix + suffix);
    if (estimate_tokens(prefix + body + suffix) > token_budget) {
        std::size_t marker = estimate_tokens(kTruncationMarker);
        if (fixed + marker + 1 >= token_budget) throw InputError("token budget too small for the extraction prompt");
        std::size_t room_tokens = token_budget - fixed - marker - 1;
        body = cut(body, room_tokens * 4) + std::string(kTruncationMarker);
        out.truncated = true;
    }
    out.request.prompt = prefix + body + suffix;
    out.request.temperature = 0.0;
    out.request.nucleus_mass = 1.0;
    out.request.max_output = 1024;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// First balanced {...} in `s`, respecting JSON strings. Braces after the
// first one are nested inside it, so an unbalanced first object means none.
std::optional<std::string> first_object(std::string_view s) {
    auto start = s.find('{');
    if (start == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escape = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escape) escape = false;
            else if (c == '\\') escape = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return std::string(s.substr(start, i - start + 1));
    }
    return std::nullopt;
}

std::string repair(std::string_view s) {
    static const std::regex fence(R"(```[A-Za-z]*)");
    static const std::regex trailing_comma(R"(,\s*([\]}]))");
    std::string out = std::regex_replace(std::string(s), fence, "");
    out = std::regex_replace(out, trailing_comma, "$1");
    return out;
}

std::optional<json> try_parse(std::string_view s) {
    auto obj = first_object(s);
    if (!obj) return std::nullopt;
    try {
        return json::parse(*obj);
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::vector<RawEvent> parse_event_json(std::string_view response_text) {
    auto doc = try_parse(response_text);
    if (!doc) doc = try_parse(repair(response_text));
    if (!doc) throw ParseError("no parseable JSON object in model output");
    if (!doc->is_object() || !doc->contains("events") || !(*doc)["events"].is_array())
        throw ParseError("model output lacks an \"events\" array");
    std::vector<RawEvent> out;
    for (const auto& item : (*doc)["events"]) {
        if (!item.is_object() || !item.contains("event") || !item["event"].is_string()) continue;
        auto description = text::trim(item["event"].get<std::string>());
        if (description.empty()) continue;
        std::string date;
        if (item.contains("date")) {
            if (item["date"].is_string()) date = text::trim(item["date"].get<std::string>());
            else if (item["date"].is_number_integer()) date = std::to_string(item["date"].get<long long>());
        }
        out.push_back({description, date});
    }
    return out;
}

ExtractedEvent resolve_event(const RawEvent& raw, const ScrapedDocument& document) {
    ExtractedEvent ev{raw.description, raw.raw_date_expression, document.url, std::nullopt, false};
    std::optional<temporal::TemporalAnchor> anchor;
    if (document.publication_date) anchor = temporal::TemporalAnchor{*document.publication_date};
    if (!text::trim(raw.raw_date_expression).empty()) {
        try {
            ev.normalized = temporal::normalize_timestamp(raw.raw_date_expression, anchor);
            return ev;
        } catch (const NormalizationError&) {
        }
    }
    if (document.publication_date) {
        ev.normalized = NormalizedDate{*document.publication_date, Precision::day, raw.raw_date_expression};
        ev.date_fallback = true;
    }
    return ev;
}

DocumentExtraction extract_events(const Pledge& pledge, const ScrapedDocument& document,
                                  const std::vector<ExtractionExample>& examples, providers::LlmProvider& llm,
                                  std::size_t token_budget) {
    DocumentExtraction out;
    out.url = document.url;
    ExtractionPrompt prompt;
    try {
        prompt = build_extraction_prompt(pledge, document, examples, token_budget);
    } catch (const InputError& e) {
        out.failure = e.what();
        return out;
    }
    out.truncated = prompt.truncated;
    std::string last_error;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        out.attempts = attempt;
        try {
            auto response = llm.complete(prompt.request);
            for (const auto& raw : parse_event_json(response.text)) out.events.push_back(resolve_event(raw, document));
            return out;
        } catch (const ParseError& e) {
            last_error = std::string("parse: ") + e.what();
        } catch (const ProviderError& e) {
            last_error = std::string(to_string(e.kind())) + ": " + e.what();
        }
    }
    spdlog::warn("event extraction failed for {}: {}", document.url, last_error);
    out.failure = last_error;
    return out;
}

namespace {

// Full ordering so that, among exact duplicates, the survivor does not depend
// on input order.
auto sort_key(const ExtractedEvent& e) {
    return std::make_tuple(epoch_days(e.normalized->date), std::cref(e.source_url), std::cref(e.description),
                           std::cref(e.raw_date_expression), static_cast<int>(e.normalized->precision),
                           e.date_fallback);
}

}  // namespace

CandidateSet assemble_candidates(const std::vector<DocumentExtraction>& extractions) {
    CandidateSet out;
    for (const auto& doc : extractions)
        for (const auto& ev : doc.events) (ev.normalized ? out.sorted : out.unresolved).push_back(ev);

    std::sort(out.sorted.begin(), out.sorted.end(),
              [](const ExtractedEvent& a, const ExtractedEvent& b) { return sort_key(a) < sort_key(b); });
    out.sorted.erase(std::unique(out.sorted.begin(), out.sorted.end(),
                                 [](const ExtractedEvent& a, const ExtractedEvent& b) {
                                     return a.normalized->date == b.normalized->date &&
                                            a.source_url == b.source_url && a.description == b.description;
                                 }),
                     out.sorted.end());

    std::sort(out.unresolved.begin(), out.unresolved.end(), [](const ExtractedEvent& a, const ExtractedEvent& b) {
        return std::tie(a.source_url, a.description, a.raw_date_expression) <
               std::tie(b.source_url, b.description, b.raw_date_expression);
    });
    out.unresolved.erase(std::unique(out.unresolved.begin(), out.unresolved.end()), out.unresolved.end());
    return out;
}

AssemblyResult assemble_candidates(const Pledge& pledge, const std::vector<ScrapedDocument>& documents,
                                   const std::vector<ExtractionExample>& examples, providers::LlmProvider& llm,
                                   std::size_t concurrency, std::size_t token_budget) {
    AssemblyResult out;
    out.extractions = parallel_map(documents, concurrency, [&](const ScrapedDocument& doc) {
        return extract_events(pledge, doc, examples, llm, token_budget);
    });
    out.candidates = assemble_candidates(out.extractions);
    return out;
}

}  // namespace pledgetracker::timeline
