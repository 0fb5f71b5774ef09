#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/domain.hpp"
#include "pledgetracker/providers.hpp"

namespace pledgetracker::timeline {

struct ExtractedEvent {
    std::string description;
    std::string raw_date_expression;
    std::string source_url;
    std::optional<NormalizedDate> normalized;
    bool date_fallback = false;  // normalized is the publication date, not the stated date

    bool operator==(const ExtractedEvent&) const = default;
};

void to_json(nlohmann::json& j, const ExtractedEvent& e);
void from_json(const nlohmann::json& j, ExtractedEvent& e);

/// One worked document/output pair shown to the model.
struct ExtractionExample {
    std::string title;
    std::string date;
    std::string article;
    nlohmann::json output;  // {"events": [{"event", "date"}, ...]}
};

std::vector<ExtractionExample> parse_extraction_examples(std::string_view json_text);
std::vector<ExtractionExample> load_extraction_examples(const std::string& path);

/// Local token estimate: one token per four bytes, rounded up.
std::size_t estimate_tokens(std::string_view s);

inline constexpr std::string_view kTruncationMarker = "\n[... article truncated ...]";

struct ExtractionPrompt {
    providers::LlmRequest request;
    bool truncated = false;
};

/// Throws InputError if the body is empty, `examples` does not hold exactly
/// two pairs, or the fixed part of the prompt alone exceeds `token_budget`.
ExtractionPrompt build_extraction_prompt(const Pledge& pledge, const ScrapedDocument& document,
                                         const std::vector<ExtractionExample>& examples,
                                         std::size_t token_budget = 8000);

struct RawEvent {
    std::string description;
    std::string raw_date_expression;

    bool operator==(const RawEvent&) const = default;
};

/// Parses {"events": [{"event", "date"}]} from a completion, tolerating
/// surrounding prose. One repair pass strips code fences and trailing commas.
/// Throws ParseError when nothing usable remains.
std::vector<RawEvent> parse_event_json(std::string_view response_text);

/// Resolves `raw` against the publication date. Unresolvable expressions fall
/// back to the publication date (flagged); without one they stay unresolved.
ExtractedEvent resolve_event(const RawEvent& raw, const ScrapedDocument& document);

struct DocumentExtraction {
    std::string url;
    std::vector<ExtractedEvent> events;
    bool truncated = false;
    int attempts = 0;
    std::optional<std::string> failure;
};

DocumentExtraction extract_events(const Pledge& pledge, const ScrapedDocument& document,
                                  const std::vector<ExtractionExample>& examples, providers::LlmProvider& llm,
                                  std::size_t token_budget = 8000);

struct CandidateSet {
    std::vector<ExtractedEvent> sorted;      // chronological, triple-unique
    std::vector<ExtractedEvent> unresolved;  // no usable date
};

/// Unions per-document events, removes exact (description, date, url)
/// duplicates and sorts chronologically with ties on (url, description).
CandidateSet assemble_candidates(const std::vector<DocumentExtraction>& extractions);

/// Convenience: extract_events over every document (bounded fan-out), then
/// assemble_candidates.
struct AssemblyResult {
    CandidateSet candidates;
    std::vector<DocumentExtraction> extractions;
};
AssemblyResult assemble_candidates(const Pledge& pledge, const std::vector<ScrapedDocument>& documents,
                                   const std::vector<ExtractionExample>& examples, providers::LlmProvider& llm,
                                   std::size_t concurrency = 4, std::size_t token_budget = 8000);

}  // namespace pledgetracker::timeline
