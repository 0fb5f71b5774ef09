#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pledgetracker/domain.hpp"
#include "pledgetracker/providers.hpp"

namespace pledgetracker::retrieval {

struct EvidenceSentence {
    std::string text;
    std::string source_url;
    double bm25_score = 0.0;
    std::optional<double> semantic_score;

    bool operator==(const EvidenceSentence&) const = default;
};

struct ClarificationQuestion {
    std::string text;
    EvidenceSentence provoking_evidence;
};

struct QuestionEvidence {
    std::string claim;
    std::string question;
    std::string evidence;
};

std::vector<QuestionEvidence> parse_question_evidence(std::string_view jsonl);
std::vector<QuestionEvidence> load_question_evidence(const std::string& path);

/// BM25 top-k pairs for the claim; ties keep file order.
std::vector<QuestionEvidence> select_question_evidence(const std::vector<QuestionEvidence>& pool,
                                                       const std::string& claim, std::size_t k = 10);

struct QueryLogEntry {
    int round = 1;
    std::string query;
    std::vector<providers::SearchHit> hits;
    bool reused = false;
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const QueryLogEntry& e);
void from_json(const nlohmann::json& j, QueryLogEntry& e);

struct ScrapeFailure {
    std::string url;
    std::string reason;
};

struct RetrievalConfig {
    int rounds = 2;
    std::size_t hits_per_query = 10;
    std::size_t bm25_top_k = 10;
    std::size_t rerank_top_k = 5;
    std::size_t max_questions = 5;
    std::size_t icl_pairs = 10;
    std::size_t hypothetical_passages = 2;
    /// Hypothetical passages feed BM25 as queries, not only the re-rank anchor.
    bool hypothetical_as_queries = true;
    std::size_t scrape_concurrency = 4;
};

struct RoundTrace {
    int round = 1;
    std::vector<EvidenceSentence> bm25;
    std::vector<EvidenceSentence> reranked;
    std::vector<ClarificationQuestion> questions;
    bool rerank_degraded = false;
};

struct RetrievalResult {
    std::vector<ScrapedDocument> documents;
    std::vector<QueryLogEntry> query_log;
    std::vector<std::string> hypothetical;
    std::vector<RoundTrace> rounds;
    std::vector<ScrapeFailure> scrape_failures;
    std::vector<std::string> warnings;
};

/// "{speaker}: {claim} ({DD-Mon-YYYY})" followed by the claim's noun phrases,
/// case-insensitive duplicates removed.
std::vector<std::string> build_initial_queries(const Pledge& pledge);

providers::LlmRequest build_hypothetical_request(const Pledge& pledge, const std::vector<QuestionEvidence>& icl,
                                                 std::size_t passages);
/// Splits a completion into passages: blank-line separated, list markers removed.
std::vector<std::string> split_passages(const std::string& completion);
std::vector<std::string> generate_hypothetical_documents(const Pledge& pledge,
                                                         const std::vector<QuestionEvidence>& icl,
                                                         providers::LlmProvider& llm, std::size_t passages = 2);

std::vector<EvidenceSentence> rank_sentences_bm25(const std::vector<std::string>& queries,
                                                  const std::vector<ScrapedDocument>& documents, std::size_t top_k);

struct RerankResult {
    std::vector<EvidenceSentence> sentences;
    bool degraded = false;
};
RerankResult rerank_semantic(const std::string& anchor, const std::vector<EvidenceSentence>& candidates,
                             std::size_t top_k, providers::Embedder& embedder);

providers::LlmRequest build_question_request(const Pledge& pledge, const EvidenceSentence& evidence,
                                             const std::vector<QuestionEvidence>& icl);
/// First non-empty line, "Question:" prefix removed, ending in '?'. Empty if blank.
std::string normalize_question(const std::string& completion);
std::vector<ClarificationQuestion> generate_questions(const Pledge& pledge, const std::vector<EvidenceSentence>& evidence,
                                                      const std::vector<QuestionEvidence>& icl,
                                                      providers::LlmProvider& llm);

/// Keeps the earliest-round copy per normalized URL, then collapses documents
/// whose normalized body text is identical (first one wins).
std::vector<ScrapedDocument> dedup_documents(const std::vector<ScrapedDocument>& documents);

/// Round-1 search results from an earlier run, used instead of searching.
struct CachedHits {
    std::vector<QueryLogEntry> round1;
};

RetrievalResult retrieve(const Pledge& pledge, const MonitoringRange& range, const providers::ProviderSet& providers,
                         const std::vector<QuestionEvidence>& seed_pairs, const RetrievalConfig& config = {},
                         const std::optional<CachedHits>& cached = std::nullopt);

}  // namespace pledgetracker::retrieval
