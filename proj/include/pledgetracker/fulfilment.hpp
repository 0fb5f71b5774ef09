#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/domain.hpp"
#include "pledgetracker/providers.hpp"
#include "pledgetracker/timeline_builder.hpp"

namespace pledgetracker::fulfilment {

enum class PoolOrigin { matched_pledge, global_random, feedback };
const char* to_string(PoolOrigin origin);

struct IclPool {
    std::vector<AnnotatedInstance> instances;
    PoolOrigin origin = PoolOrigin::global_random;
    std::optional<std::string> matched_pledge_id;
    std::vector<std::string> warnings;
};

struct SelectionOptions {
    std::size_t max_n = 50;
    std::uint64_t seed = 0;
    double match_threshold = 0.8;
};

/// Matched pledge (TF-IDF score >= threshold): its corpus instances, then its
/// feedback instances. Otherwise a seeded uniform sample without replacement
/// from corpus + feedback. At most max_n instances either way.
IclPool select_icl_examples(const Pledge& pledge, const std::vector<AnnotatedInstance>& corpus,
                            const std::vector<AnnotatedInstance>& feedback, const SelectionOptions& options = {});

/// Seeded partial Fisher-Yates: the first `n` of a uniform permutation of
/// [0, size). Uses only mt19937_64 output so results do not depend on the
/// standard library's distribution implementations.
std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed);

struct FilterDecision {
    Label label = Label::not_useful;
    double confidence = 0.0;
    std::string raw_first_token;
    bool logprob_available = false;
    bool parse_ok = true;
};

providers::LlmRequest build_classification_request(const Pledge& pledge, const timeline::ExtractedEvent& event,
                                                   const IclPool& pool);

/// Interprets a completion: first word "yes"/"no" (case-insensitive).
FilterDecision interpret_completion(const providers::LlmResponse& response);

/// Throws ProviderError when the provider fails after its retries.
FilterDecision classify_event(const Pledge& pledge, const timeline::ExtractedEvent& event, const IclPool& pool,
                              providers::LlmProvider& llm);

struct EventDecision {
    timeline::ExtractedEvent event;
    std::optional<FilterDecision> decision;  // empty: classification failed
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const EventDecision& d);
void from_json(const nlohmann::json& j, EventDecision& d);

struct FilterResult {
    Timeline timeline;
    std::vector<EventDecision> decisions;  // one per candidate, candidate order
};

/// Classifies every candidate, keeping candidate order. With keep_all the
/// timeline holds every candidate and its decision; otherwise only useful
/// ones. Events whose classification failed are kept in both modes with a
/// null decision so a reviewer sees them.
FilterResult filter_timeline(const Pledge& pledge, const MonitoringRange& range,
                             const std::vector<timeline::ExtractedEvent>& candidates, const IclPool& pool,
                             bool keep_all, TimelineOrder order, providers::LlmProvider& llm,
                             std::size_t concurrency = 4);

}  // namespace pledgetracker::fulfilment
