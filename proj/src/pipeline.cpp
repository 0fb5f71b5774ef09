#include "pledgetracker/pipeline.hpp"

#include <algorithm>
#include <cstdlib>

#include <spdlog/spdlog.h>

#include "pledgetracker/text.hpp"

namespace pledgetracker::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path default_data_dir() {
    if (auto env = std::getenv("PLEDGETRACKER_DATA_DIR"); env && *env) return env;
#ifdef PLEDGETRACKER_DEFAULT_DATA_DIR
    return PLEDGETRACKER_DEFAULT_DATA_DIR;
#else
    return "data";
#endif
}

Resources load_resources(const fs::path& data_dir, const std::optional<std::string>& corpus_path) {
    Resources r;
    auto seed = data_dir / "question_evidence_seed.jsonl";
    auto examples = data_dir / "extraction_examples.json";
    r.seed_pairs = retrieval::load_question_evidence(seed.string());
    r.extraction_examples = timeline::load_extraction_examples(examples.string());
    if (corpus_path && !corpus_path->empty()) r.corpus = load_annotated_corpus(*corpus_path);
    return r;
}

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::retrieving: return "retrieving";
        case Stage::extracting: return "extracting";
        case Stage::filtering: return "filtering";
    }
    return "?";
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
std::string jsonl(const std::vector<T>& rows) {
    std::string out;
    for (const auto& row : rows) out += json(row).dump() + "\n";
    return out;
}

}  // namespace

ArtifactWriter::ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

const std::vector<std::pair<std::string, std::string>>& ArtifactWriter::files_for(Stage stage) {
    static const std::vector<std::pair<std::string, std::string>> retrieving = {
        {"query_log", "query_log.jsonl"}, {"documents", "documents.jsonl"}, {"retrieval_trace", "retrieval_trace.json"}};
    static const std::vector<std::pair<std::string, std::string>> extracting = {
        {"candidates", "candidates.jsonl"}, {"unresolved", "unresolved.jsonl"}, {"extraction_report", "extraction_report.json"}};
    static const std::vector<std::pair<std::string, std::string>> filtering = {
        {"decisions", "decisions.jsonl"}, {"summary", "summary.json"}, {"timeline", "timeline.json"}};
    switch (stage) {
        case Stage::retrieving: return retrieving;
        case Stage::extracting: return extracting;
        case Stage::filtering: return filtering;
    }
    return filtering;
}

void ArtifactWriter::write_retrieval(const retrieval::RetrievalResult& r) {
    json trace;
    trace["hypothetical"] = r.hypothetical;
    trace["warnings"] = r.warnings;
    json failures = json::array();
    for (const auto& f : r.scrape_failures) failures.push_back({{"url", f.url}, {"reason", f.reason}});
    trace["scrape_failures"] = failures;
    json rounds = json::array();
    for (const auto& rt : r.rounds) {
        auto sentences = [](const std::vector<retrieval::EvidenceSentence>& v) {
            json a = json::array();
            for (const auto& s : v) {
                json e = {{"text", s.text}, {"source_url", s.source_url}, {"bm25_score", s.bm25_score}};
                e["semantic_score"] = s.semantic_score ? json(*s.semantic_score) : json(nullptr);
                a.push_back(e);
            }
            return a;
        };
        json questions = json::array();
        for (const auto& q : rt.questions) questions.push_back({{"question", q.text}, {"evidence", q.provoking_evidence.text}});
        rounds.push_back({{"round", rt.round},
                          {"bm25", sentences(rt.bm25)},
                          {"reranked", sentences(rt.reranked)},
                          {"rerank_degraded", rt.rerank_degraded},
                          {"questions", questions}});
    }
    trace["rounds"] = rounds;
    text::write_file((dir_ / "query_log.jsonl").string(), jsonl(r.query_log));
    text::write_file((dir_ / "documents.jsonl").string(), jsonl(r.documents));
    text::write_file((dir_ / "retrieval_trace.json").string(), trace.dump(2) + "\n");
}

void ArtifactWriter::write_candidates(const timeline::AssemblyResult& a) {
    json report = json::array();
    for (const auto& e : a.extractions) {
        json row = {{"url", e.url}, {"events", e.events.size()}, {"attempts", e.attempts}, {"truncated", e.truncated}};
        row["failure"] = e.failure ? json(*e.failure) : json(nullptr);
        report.push_back(row);
    }
    text::write_file((dir_ / "candidates.jsonl").string(), jsonl(a.candidates.sorted));
    text::write_file((dir_ / "unresolved.jsonl").string(), jsonl(a.candidates.unresolved));
    text::write_file((dir_ / "extraction_report.json").string(), report.dump(2) + "\n");
}

void ArtifactWriter::write_filter(const Request& request, const fulfilment::IclPool& pool,
                                  const fulfilment::FilterResult& f, const std::vector<std::string>& warnings) {
    json summary = {{"pledge", request.pledge},
                    {"range", request.range},
                    {"keep_all", request.keep_all},
                    {"order", to_string(request.order)},
                    {"seed", request.seed},
                    {"icl_origin", fulfilment::to_string(pool.origin)},
                    {"icl_size", pool.instances.size()},
                    {"warnings", warnings},
                    {"events_in_timeline", f.timeline.events.size()},
                    {"candidates", f.decisions.size()}};
    summary["matched_pledge_id"] = pool.matched_pledge_id ? json(*pool.matched_pledge_id) : json(nullptr);
    text::write_file((dir_ / "decisions.jsonl").string(), jsonl(f.decisions));
    text::write_file((dir_ / "summary.json").string(), summary.dump(2) + "\n");
    text::write_file((dir_ / "timeline.json").string(), timeline_file_contents(f.timeline));
}

std::string timeline_file_contents(const Timeline& timeline) { return json(timeline).dump(2) + "\n"; }

// ---------------------------------------------------------------------------

Result run(const Request& request, const providers::ProviderSet& providers, const Resources& resources,
           const StageCallback& on_stage, ArtifactWriter* writer) {
    Result result;
    auto enter = [&](Stage s) {
        spdlog::info("{}: {}", request.pledge.id, to_string(s));
        if (on_stage) on_stage(s);
    };

    enter(Stage::retrieving);
    result.retrieval = retrieval::retrieve(request.pledge, request.range, providers, resources.seed_pairs,
                                           resources.retrieval, request.cached);
    for (const auto& w : result.retrieval.warnings) result.warnings.push_back(w);
    if (writer) writer->write_retrieval(result.retrieval);

    enter(Stage::extracting);
    result.assembly = timeline::assemble_candidates(request.pledge, result.retrieval.documents,
                                                    resources.extraction_examples, *providers.llm,
                                                    resources.concurrency, resources.token_budget);
    for (const auto& e : result.assembly.extractions) {
        if (e.failure) result.warnings.push_back("extraction failed for " + e.url + ": " + *e.failure);
        if (e.truncated) result.warnings.push_back("article truncated to the token budget: " + e.url);
    }
    if (writer) writer->write_candidates(result.assembly);

    enter(Stage::filtering);
    fulfilment::SelectionOptions selection;
    selection.seed = request.seed;
    selection.match_threshold = resources.match_threshold;
    result.pool = fulfilment::select_icl_examples(request.pledge, resources.corpus, request.feedback, selection);
    for (const auto& w : result.pool.warnings) result.warnings.push_back(w);

    auto candidates = result.assembly.candidates.sorted;  // chronological
    if (request.order == TimelineOrder::reverse_chronological) {
        std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            return epoch_days(a.normalized->date) > epoch_days(b.normalized->date);
        });
    }
    result.filter = fulfilment::filter_timeline(request.pledge, request.range, candidates, result.pool,
                                                request.keep_all, request.order, *providers.llm, resources.concurrency);
    for (const auto& d : result.filter.decisions)
        if (d.error) result.warnings.push_back("classification failed for '" + d.event.description + "': " + *d.error);
    if (writer) writer->write_filter(request, result.pool, result.filter, result.warnings);
    return result;
}

}  // namespace pledgetracker::pipeline
