#include "pledgetracker/retrieval.hpp"
#include "pledgetracker/errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "pledgetracker/bm25.hpp"
#include "pledgetracker/noun_phrases.hpp"
#include "pledgetracker/parallel.hpp"
#include "pledgetracker/text.hpp"
#include "pledgetracker/url.hpp"

namespace pledgetracker::retrieval {

using nlohmann::json;
using providers::LlmRequest;

// ---------------------------------------------------------------------------
// Question-evidence seed pairs

std::vector<QuestionEvidence> parse_question_evidence(std::string_view jsonl) {
    std::vector<QuestionEvidence> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            QuestionEvidence qe{j.value("claim", ""), j.at("question").get<std::string>(),
                                j.at("evidence").get<std::string>()};
            if (text::trim(qe.question).empty() || text::trim(qe.evidence).empty())
                throw InputError("question and evidence must be non-empty");
            out.push_back(std::move(qe));
        } catch (const json::exception& e) {
            throw InputError(e.what(), lineno);
        } catch (const InputError& e) {
            throw InputError(e.what(), lineno);
        }
    }
    return out;
}

std::vector<QuestionEvidence> load_question_evidence(const std::string& path) {
    return parse_question_evidence(text::read_file(path));
}

std::vector<QuestionEvidence> select_question_evidence(const std::vector<QuestionEvidence>& pool,
                                                       const std::string& claim, std::size_t k) {
    if (pool.empty() || k == 0) return {};
    std::vector<std::vector<std::string>> docs;
    docs.reserve(pool.size());
    for (const auto& qe : pool) docs.push_back(text::index_terms(qe.claim + " " + qe.question + " " + qe.evidence));
    bm25::Index index(std::move(docs));
    std::vector<QuestionEvidence> out;
    for (const auto& r : bm25::top_k(index.score_all(text::index_terms(claim)), k)) out.push_back(pool[r.index]);
    return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const QueryLogEntry& e) {
    json hits = json::array();
    for (const auto& h : e.hits) hits.push_back({{"url", h.url}, {"rank", h.rank}});
    j = json{{"round", e.round}, {"query", e.query}, {"hits", hits}, {"reused", e.reused}};
    if (e.error) j["error"] = *e.error;
}

void from_json(const json& j, QueryLogEntry& e) {
    e.round = j.at("round").get<int>();
    e.query = j.at("query").get<std::string>();
    e.hits.clear();
    for (const auto& h : j.at("hits")) e.hits.push_back({h.at("url").get<std::string>(), "", "", h.at("rank").get<int>()});
    e.reused = j.value("reused", false);
    e.error.reset();
    if (j.contains("error") && j["error"].is_string()) e.error = j["error"].get<std::string>();
}

// ---------------------------------------------------------------------------

std::vector<std::string> build_initial_queries(const Pledge& pledge) {
    std::vector<std::string> queries;
    std::set<std::string> seen;
    auto add = [&](const std::string& q) {
        auto key = text::to_lower(text::collapse_whitespace(q));
        if (key.empty() || !seen.insert(key).second) return;
        queries.push_back(q);
    };
    add(pledge.speaker + ": " + pledge.claim + " (" + to_dd_mon_yyyy(pledge.date_made) + ")");
    // A phrase spanning the whole claim repeats the composed query.
    seen.insert(text::to_lower(text::collapse_whitespace(pledge.claim)));
    for (const auto& phrase : np::extract_noun_phrases(pledge.claim)) add(phrase);
    return queries;
}

LlmRequest build_hypothetical_request(const Pledge& pledge, const std::vector<QuestionEvidence>& icl,
                                      std::size_t passages) {
    std::string prompt =
        "Your task is to write short passages of evidence that a news article could contain about the given "
        "claim. Each passage should state concrete facts, such as actions, announcements or figures. Separate "
        "passages with a blank line.\n\n";
    for (const auto& ex : icl) {
        prompt += "Claim: " + ex.claim + "\nQuestion: " + ex.question + "\nEvidence: " + ex.evidence + "\n\n";
    }
    prompt += "Now, write " + std::to_string(passages) + " evidence passages for the following claim:\n\n";
    prompt += "Claim: " + pledge.speaker + ": " + pledge.claim + " (" + to_dd_mon_yyyy(pledge.date_made) + ")\n";
    prompt += "Evidence:";
    LlmRequest req;
    req.prompt = std::move(prompt);
    req.temperature = 0.6;
    req.nucleus_mass = 0.9;
    req.max_output = 512;
    return req;
}

namespace {

std::string strip_list_marker(std::string s) {
    s = text::trim(s);
    std::size_t i = 0;
    if (!s.empty() && (s[0] == '-' || s[0] == '*')) {
        i = 1;
    } else {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':')) ++i;
        else i = 0;
    }
    s = text::trim(s.substr(i));
    for (std::string_view prefix : {"Evidence:", "Passage:"})
        if (text::starts_with_ci(s, prefix)) s = text::trim(s.substr(prefix.size()));
    return s;
}

}  // namespace

std::vector<std::string> split_passages(const std::string& completion) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        auto p = text::collapse_whitespace(strip_list_marker(current));
        if (!p.empty()) out.push_back(p);
        current.clear();
    };
    std::istringstream in(completion);
    std::string line;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty()) {
            flush();
            continue;
        }
        bool starts_item = !current.empty() && strip_list_marker(t) != t;
        if (starts_item) flush();
        current += (current.empty() ? "" : " ") + t;
    }
    flush();
    return out;
}

std::vector<std::string> generate_hypothetical_documents(const Pledge& pledge,
                                                         const std::vector<QuestionEvidence>& icl,
                                                         providers::LlmProvider& llm, std::size_t passages) {
    if (icl.empty()) throw InputError("hypothetical document generation needs at least one example pair");
    try {
        auto response = llm.complete(build_hypothetical_request(pledge, icl, passages));
        return split_passages(response.text);
    } catch (const ProviderError& e) {
        if (e.kind() != ProviderErrorKind::empty_response) throw;
        return {};
    }
}

// ---------------------------------------------------------------------------

std::vector<EvidenceSentence> rank_sentences_bm25(const std::vector<std::string>& queries,
                                                  const std::vector<ScrapedDocument>& documents, std::size_t top_k) {
    if (top_k == 0) throw InputError("top_k must be >= 1");
    std::vector<EvidenceSentence> sentences;
    std::vector<std::vector<std::string>> tokenized;
    for (const auto& doc : documents) {
        for (auto& s : text::split_sentences(doc.body)) {
            tokenized.push_back(text::index_terms(s));
            sentences.push_back({std::move(s), doc.url, 0.0, std::nullopt});
        }
    }
    if (sentences.empty()) return {};
    std::vector<std::string> query_terms;
    for (const auto& q : queries)
        for (auto& t : text::index_terms(q)) query_terms.push_back(std::move(t));

    bm25::Index index(std::move(tokenized));
    auto scores = index.score_all(query_terms);
    std::vector<EvidenceSentence> out;
    for (const auto& r : bm25::top_k(scores, top_k)) {
        auto s = sentences[r.index];
        s.bm25_score = r.score;
        out.push_back(std::move(s));
    }
    return out;
}

RerankResult rerank_semantic(const std::string& anchor, const std::vector<EvidenceSentence>& candidates,
                             std::size_t top_k, providers::Embedder& embedder) {
    if (candidates.empty()) return {};
    std::vector<std::string> texts{anchor};
    for (const auto& c : candidates) texts.push_back(c.text);
    std::vector<providers::EmbeddingVector> vectors;
    try {
        vectors = embedder.embed(texts);
    } catch (const ProviderError& e) {
        spdlog::warn("semantic re-rank unavailable: {}", e.what());
        return {candidates, true};
    }
    if (vectors.size() != texts.size()) return {candidates, true};
    RerankResult result;
    result.sentences = candidates;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        result.sentences[i].semantic_score = providers::cosine_similarity(vectors[0], vectors[i + 1]);
    std::stable_sort(result.sentences.begin(), result.sentences.end(),
                     [](const EvidenceSentence& a, const EvidenceSentence& b) { return *a.semantic_score > *b.semantic_score; });
    if (result.sentences.size() > top_k) result.sentences.resize(top_k);
    return result;
}

// ---------------------------------------------------------------------------

LlmRequest build_question_request(const Pledge& pledge, const EvidenceSentence& evidence,
                                  const std::vector<QuestionEvidence>& icl) {
    std::string prompt =
        "Your task is to generate a question based on the given claim and evidence. The question should clarify "
        "the relationship between the evidence and the claim.\n\n";
    for (const auto& ex : icl)
        prompt += "Claim: " + ex.claim + "\nEvidence: " + ex.evidence + "\nQuestion: " + ex.question + "\n\n";
    prompt += "Now, generate a question that links the following claim and evidence:\n\n";
    prompt += "Claim: " + pledge.claim + "\nEvidence: " + evidence.text + "\n";
    LlmRequest req;
    req.prompt = std::move(prompt);
    req.temperature = 0.6;
    req.nucleus_mass = 0.9;
    req.max_output = 128;
    return req;
}

std::string normalize_question(const std::string& completion) {
    std::istringstream in(completion);
    std::string line;
    std::string q;
    while (std::getline(in, line)) {
        q = text::trim(line);
        if (!q.empty()) break;
    }
    if (text::starts_with_ci(q, "question:")) q = text::trim(q.substr(9));
    while (!q.empty() && (q.front() == '"' || q.front() == '\'')) q.erase(0, 1);
    while (!q.empty() && (q.back() == '"' || q.back() == '\'')) q.pop_back();
    q = text::trim(q);
    if (q.empty()) return q;
    while (!q.empty() && (q.back() == '.' || q.back() == '!' || q.back() == ' ')) q.pop_back();
    if (q.empty()) return q;
    if (q.back() != '?') q += '?';
    return q;
}

std::vector<ClarificationQuestion> generate_questions(const Pledge& pledge, const std::vector<EvidenceSentence>& evidence,
                                                      const std::vector<QuestionEvidence>& icl,
                                                      providers::LlmProvider& llm) {
    std::vector<ClarificationQuestion> out;
    for (const auto& ev : evidence) {
        try {
            auto q = normalize_question(llm.complete(build_question_request(pledge, ev, icl)).text);
            if (!q.empty()) out.push_back({q, ev});
        } catch (const ProviderError& e) {
            spdlog::warn("question generation skipped: {}", e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<ScrapedDocument> dedup_documents(const std::vector<ScrapedDocument>& documents) {
    // Earliest round wins for a URL; within a round, first occurrence wins.
    std::vector<std::size_t> order(documents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return documents[a].retrieval_round < documents[b].retrieval_round;
    });
    std::set<std::string> urls;
    std::set<std::string> bodies;
    std::vector<ScrapedDocument> out;
    for (auto i : order) {
        const auto& doc = documents[i];
        auto url_key = normalize_url(doc.url);
        auto body_key = text::collapse_whitespace(doc.body);
        if (urls.count(url_key) || bodies.count(body_key)) continue;
        urls.insert(url_key);
        bodies.insert(body_key);
        out.push_back(doc);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct ScrapeOutcome {
    std::optional<ScrapedDocument> doc;
    std::string error;
};

}  // namespace

RetrievalResult retrieve(const Pledge& pledge, const MonitoringRange& range, const providers::ProviderSet& providers,
                         const std::vector<QuestionEvidence>& seed_pairs, const RetrievalConfig& config,
                         const std::optional<CachedHits>& cached) {
    RetrievalResult result;
    std::set<std::string> attempted;  // normalized URLs already scraped or failed
    std::set<std::string> issued;     // lowercased queries already searched
    std::vector<std::string> queries = build_initial_queries(pledge);
    auto icl = select_question_evidence(seed_pairs, pledge.claim, config.icl_pairs);

    for (int round = 1; round <= config.rounds; ++round) {
        std::vector<std::string> round_urls;
        auto take_hits = [&](const std::vector<providers::SearchHit>& hits) {
            for (const auto& h : hits) {
                auto key = normalize_url(h.url);
                if (attempted.insert(key).second) round_urls.push_back(h.url);
            }
        };

        if (round == 1 && cached && !cached->round1.empty()) {
            for (auto entry : cached->round1) {
                entry.round = 1;
                entry.reused = true;
                issued.insert(text::to_lower(text::collapse_whitespace(entry.query)));
                take_hits(entry.hits);
                result.query_log.push_back(std::move(entry));
            }
        } else {
            for (const auto& q : queries) {
                issued.insert(text::to_lower(text::collapse_whitespace(q)));
                QueryLogEntry entry{round, q, {}, false, std::nullopt};
                try {
                    entry.hits = providers.search->search(q, pledge.geo_scope, range, config.hits_per_query);
                } catch (const ProviderError& e) {
                    entry.error = std::string(to_string(e.kind())) + ": " + e.what();
                    result.warnings.push_back("search failed for '" + q + "': " + e.what());
                }
                take_hits(entry.hits);
                result.query_log.push_back(std::move(entry));
            }
        }

        auto outcomes = parallel_map(round_urls, config.scrape_concurrency, [&](const std::string& url) {
            ScrapeOutcome o;
            try {
                o.doc = providers.scraper->scrape(url);
                o.doc->url = normalize_url(url);
                o.doc->retrieval_round = round;
            } catch (const ProviderError& e) {
                o.error = std::string(to_string(e.kind())) + ": " + e.what();
            }
            return o;
        });
        std::vector<ScrapedDocument> round_docs;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].doc) round_docs.push_back(std::move(*outcomes[i].doc));
            else result.scrape_failures.push_back({round_urls[i], outcomes[i].error});
        }
        std::size_t before = result.documents.size();
        for (auto& d : round_docs) result.documents.push_back(d);
        result.documents = dedup_documents(result.documents);
        std::vector<ScrapedDocument> fresh(result.documents.begin() + static_cast<std::ptrdiff_t>(std::min(before, result.documents.size())),
                                           result.documents.end());

        if (round == 1 && result.documents.empty()) {
            if (!round_urls.empty()) result.warnings.push_back("every round-1 scrape failed; no documents retrieved");
            break;
        }
        if (round == config.rounds) break;
        if (fresh.empty()) {
            result.warnings.push_back("round " + std::to_string(round) + " produced no new documents");
            break;
        }

        if (round == 1) {
            if (icl.empty()) {
                result.warnings.push_back("no question-evidence examples; hypothetical documents skipped");
            } else {
                try {
                    result.hypothetical = generate_hypothetical_documents(pledge, icl, *providers.llm,
                                                                          config.hypothetical_passages);
                } catch (const ProviderError& e) {
                    result.warnings.push_back(std::string("hypothetical documents unavailable: ") + e.what());
                }
            }
        }

        RoundTrace trace;
        trace.round = round;
        std::vector<std::string> bm25_queries = queries;
        if (config.hypothetical_as_queries)
            bm25_queries.insert(bm25_queries.end(), result.hypothetical.begin(), result.hypothetical.end());
        trace.bm25 = rank_sentences_bm25(bm25_queries, fresh, config.bm25_top_k);
        if (trace.bm25.empty()) break;

        std::string anchor = pledge.claim;
        for (const auto& h : result.hypothetical) anchor += "\n" + h;
        auto reranked = rerank_semantic(anchor, trace.bm25, config.rerank_top_k, *providers.embedder);
        trace.reranked = std::move(reranked.sentences);
        trace.rerank_degraded = reranked.degraded;
        if (trace.rerank_degraded) result.warnings.push_back("semantic re-rank degraded to BM25 order");
        if (trace.reranked.size() > config.rerank_top_k) trace.reranked.resize(config.rerank_top_k);

        trace.questions = generate_questions(pledge, trace.reranked, icl, *providers.llm);
        std::vector<std::string> next;
        for (const auto& q : trace.questions) {
            if (next.size() >= config.max_questions) break;
            if (!issued.insert(text::to_lower(text::collapse_whitespace(q.text))).second) continue;
            next.push_back(q.text);
        }
        result.rounds.push_back(std::move(trace));
        if (next.empty()) break;
        queries = std::move(next);
    }
    return result;
}

}  // namespace pledgetracker::retrieval
