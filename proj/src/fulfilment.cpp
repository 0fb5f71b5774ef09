#include "pledgetracker/fulfilment.hpp"
#include "pledgetracker/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <spdlog/spdlog.h>

#include "pledgetracker/matcher.hpp"
#include "pledgetracker/parallel.hpp"
#include "pledgetracker/text.hpp"

namespace pledgetracker::fulfilment {

using nlohmann::json;

const char* to_string(PoolOrigin origin) {
    switch (origin) {
        case PoolOrigin::matched_pledge: return "matched_pledge";
        case PoolOrigin::global_random: return "global_random";
        case PoolOrigin::feedback: return "feedback";
    }
    return "?";
}

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto bounded = [&](std::uint64_t bound) {  // uniform in [0, bound)
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = rng();
        } while (x >= limit);
        return x % bound;
    };
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    n = std::min(n, size);
    for (std::size_t i = 0; i < n; ++i) {
        auto j = i + static_cast<std::size_t>(bounded(size - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
}

IclPool select_icl_examples(const Pledge& pledge, const std::vector<AnnotatedInstance>& corpus,
                            const std::vector<AnnotatedInstance>& feedback, const SelectionOptions& options) {
    IclPool pool;
    // Distinct previously tracked pledges, first appearance order.
    std::vector<Pledge> known;
    std::map<std::string, bool> seen;
    for (const auto* source : {&corpus, &feedback})
        for (const auto& inst : *source)
            if (!seen[inst.pledge.id]) {
                seen[inst.pledge.id] = true;
                known.push_back(inst.pledge);
            }

    if (!known.empty()) {
        auto index = matcher::build_index(known);
        if (auto match = matcher::best_match(index, pledge.claim, options.match_threshold)) {
            pool.matched_pledge_id = match->pledge_id;
            std::size_t from_corpus = 0;
            for (const auto& inst : corpus)
                if (inst.pledge.id == match->pledge_id) {
                    pool.instances.push_back(inst);
                    ++from_corpus;
                }
            for (const auto& inst : feedback)
                if (inst.pledge.id == match->pledge_id) pool.instances.push_back(inst);
            pool.origin = from_corpus > 0 ? PoolOrigin::matched_pledge : PoolOrigin::feedback;
            if (pool.instances.size() > options.max_n) pool.instances.resize(options.max_n);
            return pool;
        }
    }

    pool.origin = PoolOrigin::global_random;
    std::vector<const AnnotatedInstance*> all;
    for (const auto& inst : corpus) all.push_back(&inst);
    for (const auto& inst : feedback) all.push_back(&inst);
    for (auto i : sample_indices(all.size(), options.max_n, options.seed)) pool.instances.push_back(*all[i]);
    if (pool.instances.empty()) pool.warnings.push_back("ICL pool is empty; classifying zero-shot");
    return pool;
}

// ---------------------------------------------------------------------------

namespace {

std::string strip_period(std::string s) {
    s = text::trim(s);
    while (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string instance_block(const std::string& claim, const std::string& speaker, const std::string& pledge_date,
                           const std::string& event, const std::string& event_date) {
    return "Pledge: " + claim + "\nSpeaker: " + speaker + "\nPledge date: " + pledge_date +
           "\nEvent summary: " + strip_period(event) + ". \n(Event Date: " + event_date + ")\n\nOutput:";
}

}  // namespace

providers::LlmRequest build_classification_request(const Pledge& pledge, const timeline::ExtractedEvent& event,
                                                   const IclPool& pool) {
    if (!event.normalized) throw InputError("cannot classify an event without a resolved date");
    std::string prompt =
        "You are given a pledge, the pledge speaker, and the date of when the pledge is made, and a key event "
        "summarized from an online article along with the date of when the event happens. Your task is to "
        "determine whether this event summary is useful to track the fulfilment of this pledge. \n\n"
        "Yes: The summary presents developments or actions that demonstrate progress (or lack thereof) towards "
        "fulfilling the pledge. It helps evaluate whether the pledge is on track or not.\n\n"
        "No: The summary only provides background or contextual information, but no progress information for "
        "evaluating the fulfilment of the pledge; Or the summary is less than or not related to the pledge.\n\n";
    if (!pool.instances.empty()) {
        prompt += "Below are examples:\n\n";
        for (const auto& inst : pool.instances) {
            prompt += "Input:\n\n" +
                      instance_block(inst.pledge.claim, inst.pledge.speaker, to_iso(inst.pledge.date_made), inst.event,
                                     to_iso(inst.timestamp)) +
                      " " + (inst.label == Label::useful ? "Yes" : "No") + "\n\n";
        }
    }
    prompt += "Now, please assign a label to the below instance.\n\nInput:\n\n";
    prompt += instance_block(pledge.claim, pledge.speaker, to_iso(pledge.date_made), event.description,
                             to_iso(event.normalized->date));
    providers::LlmRequest req;
    req.prompt = std::move(prompt);
    req.temperature = 0.0;
    req.nucleus_mass = 1.0;
    req.max_output = 2;
    req.want_first_token_logprob = true;
    return req;
}

FilterDecision interpret_completion(const providers::LlmResponse& response) {
    FilterDecision d;
    auto t = text::trim(response.text);
    std::size_t end = 0;
    while (end < t.size() && std::isalpha(static_cast<unsigned char>(t[end]))) ++end;
    d.raw_first_token = end > 0 ? t.substr(0, end) : t.substr(0, std::min<std::size_t>(t.size(), 16));
    auto word = text::to_lower(t.substr(0, end));
    if (word == "yes" || word == "no") {
        d.label = word == "yes" ? Label::useful : Label::not_useful;
        if (response.first_token_logprob) {
            d.logprob_available = true;
            d.confidence = std::clamp(std::exp(*response.first_token_logprob), 0.0, 1.0);
        } else {
            d.confidence = 1.0;
        }
    } else {
        d.label = Label::not_useful;
        d.confidence = 0.0;
        d.parse_ok = false;
        d.logprob_available = response.first_token_logprob.has_value();
    }
    return d;
}

FilterDecision classify_event(const Pledge& pledge, const timeline::ExtractedEvent& event, const IclPool& pool,
                              providers::LlmProvider& llm) {
    return interpret_completion(llm.complete(build_classification_request(pledge, event, pool)));
}

void to_json(json& j, const EventDecision& d) {
    j = json{{"event", d.event}};
    if (d.decision) {
        j["decision"] = to_string(d.decision->label);
        j["confidence"] = d.decision->confidence;
        j["raw_first_token"] = d.decision->raw_first_token;
        j["logprob_available"] = d.decision->logprob_available;
        j["parse_ok"] = d.decision->parse_ok;
    } else {
        j["decision"] = nullptr;
        j["confidence"] = 0.0;
    }
    if (d.error) j["error"] = *d.error;
}

void from_json(const json& j, EventDecision& d) {
    d.event = j.at("event").get<timeline::ExtractedEvent>();
    d.decision.reset();
    d.error.reset();
    if (j.contains("decision") && j["decision"].is_string()) {
        FilterDecision f;
        auto label = label_from_string(j["decision"].get<std::string>());
        if (!label) throw InputError("bad decision label");
        f.label = *label;
        f.confidence = j.value("confidence", 0.0);
        f.raw_first_token = j.value("raw_first_token", "");
        f.logprob_available = j.value("logprob_available", false);
        f.parse_ok = j.value("parse_ok", true);
        d.decision = f;
    }
    if (j.contains("error") && j["error"].is_string()) d.error = j["error"].get<std::string>();
}

FilterResult filter_timeline(const Pledge& pledge, const MonitoringRange& range,
                             const std::vector<timeline::ExtractedEvent>& candidates, const IclPool& pool,
                             bool keep_all, TimelineOrder order, providers::LlmProvider& llm,
                             std::size_t concurrency) {
    FilterResult result;
    result.timeline.pledge_id = pledge.id;
    result.timeline.range = range;
    result.timeline.order = order;
    result.decisions = parallel_map(candidates, concurrency, [&](const timeline::ExtractedEvent& ev) {
        EventDecision d{ev, std::nullopt, std::nullopt};
        try {
            d.decision = classify_event(pledge, ev, pool, llm);
        } catch (const ProviderError& e) {
            d.error = std::string(to_string(e.kind())) + ": " + e.what();
            spdlog::warn("classification failed for event '{}': {}", ev.description, e.what());
        } catch (const InputError& e) {
            d.error = e.what();
        }
        return d;
    });
    for (const auto& d : result.decisions) {
        if (!d.event.normalized) continue;
        bool include = keep_all || !d.decision || d.decision->label == Label::useful;
        if (!include) continue;
        TimelineEvent te;
        te.description = d.event.description;
        te.timestamp = *d.event.normalized;
        te.source_url = d.event.source_url;
        if (d.decision) {
            te.decision = d.decision->label;
            te.confidence = d.decision->confidence;
        }
        result.timeline.events.push_back(std::move(te));
    }
    return result;
}

}  // namespace pledgetracker::fulfilment
