#include <set>

#include <gtest/gtest.h>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/fixture_providers.hpp"
#include "pledgetracker/retrieval.hpp"
#include "pledgetracker/text.hpp"
#include "pledgetracker/url.hpp"
#include "support.hpp"

using namespace pledgetracker;
using namespace pledgetracker::retrieval;
using providers::LlmRequest;
using providers::LlmResponse;
using testsupport::ScriptedLlm;
using nlohmann::json;
using Strings = std::vector<std::string>;

namespace {

std::vector<QuestionEvidence> seed() { return load_question_evidence((testsupport::data_dir() / "question_evidence_seed.jsonl").string()); }

ScrapedDocument doc(std::string url, std::string body, int round = 1) {
    return ScrapedDocument{std::move(url), "", std::nullopt, std::move(body), round};
}

}  // namespace

TEST(InitialQueries, ComposedQueryThenNounPhrases) {
    auto q = build_initial_queries(testsupport::trail_pledge());
    EXPECT_EQ(q, (Strings{"Labour: We will ban trail hunting (04-Jul-2024)", "trail hunting"}));
    auto vat = validate_pledge({"", "Labour", "2024-07-04", "UK", "Labour will introduce VAT and business rates on private schools"});
    EXPECT_EQ(build_initial_queries(vat),
              (Strings{"Labour: Labour will introduce VAT and business rates on private schools (04-Jul-2024)", "labour",
                       "vat", "business rates", "private schools"}));
}

TEST(SeedPairs, ParseAndSelect) {
    auto pool = seed();
    EXPECT_GE(pool.size(), 10u);
    auto picked = select_question_evidence(pool, "We will ban trail hunting", 2);
    ASSERT_EQ(picked.size(), 2u);
    for (const auto& p : picked) EXPECT_NE(p.claim.find("trail hunting"), std::string::npos);
    EXPECT_TRUE(select_question_evidence({}, "x", 3).empty());
    try {
        parse_question_evidence("{\"question\": \"q\", \"evidence\": \"e\"}\n{\"question\": \"q\"}\n");
        FAIL();
    } catch (const InputError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Hypothetical, PromptCarriesClaimAndSampling) {
    auto req = build_hypothetical_request(testsupport::trail_pledge(), seed(), 2);
    EXPECT_NE(req.prompt.find("We will ban trail hunting"), std::string::npos);
    EXPECT_DOUBLE_EQ(req.temperature, 0.6);
    EXPECT_DOUBLE_EQ(req.nucleus_mass, 0.9);
}

TEST(Hypothetical, SplitsPassages) {
    EXPECT_EQ(split_passages("1. First passage\ncontinues here.\n2. Second passage.\n\n- Third"),
              (Strings{"First passage continues here.", "Second passage.", "Third"}));
    EXPECT_EQ(split_passages("Evidence: A.\n\nPassage: B."), (Strings{"A.", "B."}));
    EXPECT_TRUE(split_passages("  \n\n").empty());
}

TEST(Hypothetical, FixtureWorldGivesTwoPassages) {
    auto world = providers::load_fixture_world(testsupport::trail_world());
    auto icl = select_question_evidence(seed(), "We will ban trail hunting", 10);
    auto passages = generate_hypothetical_documents(testsupport::trail_pledge(), icl, *world.llm, 2);
    EXPECT_EQ(passages.size(), 2u);
}

TEST(Hypothetical, EmptyResponseGivesNothing) {
    ScriptedLlm llm([](const LlmRequest&) -> LlmResponse {
        throw ProviderError(ProviderErrorKind::empty_response, "nothing");
    });
    EXPECT_TRUE(generate_hypothetical_documents(testsupport::trail_pledge(), seed(), llm).empty());
    EXPECT_THROW(generate_hypothetical_documents(testsupport::trail_pledge(), {}, llm), InputError);
}

TEST(Bm25Sentences, SingleMatchRanksFirst) {
    auto ranked = rank_sentences_bm25({"hounds"}, {doc("u", "The bill passed. The hounds were retired. It rained.")}, 3);
    ASSERT_EQ(ranked.size(), 3u);
    EXPECT_EQ(ranked[0].text, "The hounds were retired.");
    EXPECT_GT(ranked[0].bm25_score, 0.0);
}

TEST(Bm25Sentences, AbsentTermKeepsSourceOrder) {
    auto ranked = rank_sentences_bm25({"zebra"}, {doc("u1", "One thing. Two things."), doc("u2", "Three things.")}, 10);
    ASSERT_EQ(ranked.size(), 3u);
    EXPECT_EQ(ranked[0].text, "One thing.");
    EXPECT_EQ(ranked[1].text, "Two things.");
    EXPECT_EQ(ranked[2].source_url, "u2");
    for (const auto& r : ranked) EXPECT_EQ(r.bm25_score, 0.0);
    EXPECT_THROW(rank_sentences_bm25({"x"}, {doc("u", "a.")}, 0), InputError);
}

TEST(Rerank, IdenticalCandidateFirst) {
    providers::HashingEmbedder embedder(256);
    std::vector<EvidenceSentence> c = {{"Weather is warm.", "u1", 3.0, {}}, {"The trail hunting ban bill.", "u2", 1.0, {}}};
    auto r = rerank_semantic("The trail hunting ban bill.", c, 5, embedder);
    ASSERT_EQ(r.sentences.size(), 2u);
    EXPECT_FALSE(r.degraded);
    EXPECT_EQ(r.sentences[0].source_url, "u2");
    EXPECT_NEAR(*r.sentences[0].semantic_score, 1.0, 1e-12);
}

TEST(Rerank, OrderMatchesHandComputedCosines) {
    // anchor (1,0,0); a = (0.6,0.8,0) -> 0.6; b = (0.8,0,0.6) -> 0.8.
    providers::HashingEmbedder embedder(json::parse(
        R"({"dimension": 3, "vectors": {"anchor": [1,0,0], "a": [0.6,0.8,0], "b": [0.8,0,0.6]}})"));
    std::vector<EvidenceSentence> c = {{"a", "ua", 2.0, {}}, {"b", "ub", 1.0, {}}};
    auto r = rerank_semantic("anchor", c, 1, embedder);
    ASSERT_EQ(r.sentences.size(), 1u);
    EXPECT_EQ(r.sentences[0].text, "b");
    EXPECT_NEAR(*r.sentences[0].semantic_score, 0.8, 1e-12);
    auto all = rerank_semantic("anchor", c, 10, embedder);
    EXPECT_EQ(all.sentences.size(), 2u);
}

TEST(Rerank, EmbeddingFailureDegrades) {
    testsupport::FailingEmbedder embedder;
    std::vector<EvidenceSentence> c = {{"a", "ua", 2.0, {}}, {"b", "ub", 1.0, {}}};
    auto r = rerank_semantic("anchor", c, 1, embedder);
    EXPECT_TRUE(r.degraded);
    EXPECT_EQ(r.sentences, c);
}

TEST(Questions, PromptAndNormalization) {
    EvidenceSentence ev{"Ministers said a central reporting mechanism is planned.", "u", 1.0, {}};
    auto req = build_question_request(testsupport::trail_pledge(), ev, seed());
    EXPECT_NE(req.prompt.find("Claim: We will ban trail hunting"), std::string::npos);
    EXPECT_NE(req.prompt.find("Evidence: " + ev.text), std::string::npos);
    EXPECT_EQ(normalize_question("\nQuestion: \"Has the bill passed.\"\nextra"), "Has the bill passed?");
    EXPECT_EQ(normalize_question("   "), "");
}

TEST(Questions, ReportingMechanismExample) {
    auto world = providers::load_fixture_world(testsupport::trail_world());
    EvidenceSentence ev{"Ministers said a central reporting mechanism for potential animal welfare offences is being "
                        "designed alongside the ban.",
                        "u", 1.0, {}};
    auto qs = generate_questions(testsupport::trail_pledge(), {ev}, seed(), *world.llm);
    ASSERT_EQ(qs.size(), 1u);
    EXPECT_EQ(qs[0].text,
              "Is Labour planning to implement a central reporting mechanism for reporting potential animal welfare "
              "offences?");
}

TEST(Questions, OnePerSentenceAndBlanksDropped) {
    int n = 0;
    ScriptedLlm llm([&](const LlmRequest&) { return LlmResponse{++n == 2 ? "  " : "What happened?", {}}; });
    std::vector<EvidenceSentence> ev = {{"a", "u", 1, {}}, {"b", "u", 1, {}}, {"c", "u", 1, {}}};
    auto qs = generate_questions(testsupport::trail_pledge(), ev, {}, llm);
    EXPECT_EQ(llm.requests.size(), 3u);
    ASSERT_EQ(qs.size(), 2u);
    EXPECT_EQ(qs[0].provoking_evidence.text, "a");
    EXPECT_EQ(qs[1].provoking_evidence.text, "c");
}

TEST(Dedup, FragmentTrackingAndBody) {
    auto out = dedup_documents({doc("https://a.example/x#s", "one"), doc("https://a.example/x", "two"),
                                doc("https://b.example/y", "one"), doc("HTTPS://A.example/z?utm_source=q", "three"),
                                doc("https://a.example/z", "four")});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].body, "one");
    EXPECT_EQ(out[1].body, "three");
}

TEST(Dedup, EarliestRoundWins) {
    auto out = dedup_documents({doc("https://a.example/x", "late", 2), doc("https://a.example/x", "early", 1)});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].retrieval_round, 1);
    EXPECT_EQ(out[0].body, "early");
}

TEST(Retrieve, FixtureWorldDocumentSet) {
    auto world = providers::load_fixture_world(testsupport::trail_world());
    auto r = retrieve(testsupport::trail_pledge(), testsupport::trail_range(), world, seed());
    Strings urls;
    for (const auto& d : r.documents) urls.push_back(std::to_string(d.retrieval_round) + " " + d.url);
    EXPECT_EQ(urls, (Strings{"1 https://news.example.co.uk/politics/trail-hunting-ban-bill",
                             "1 https://www.countryside-report.example.org/hunts-respond",
                             "1 https://opinion.example.co.uk/smokescreen",
                             "1 https://blog.example.org/undated-hunt-news",
                             "1 https://weather.example.com/summer-outlook",
                             "1 https://wildlife.example.org/police-powers",
                             "2 https://www.gov.example.uk/consultations/animal-welfare-reporting"}));
    EXPECT_EQ(r.hypothetical.size(), 2u);
    ASSERT_EQ(r.rounds.size(), 1u);
    EXPECT_FALSE(r.rounds[0].rerank_degraded);
    // The 404 and the blank page are recorded as failures.
    std::set<std::string> failed;
    for (const auto& f : r.scrape_failures) failed.insert(f.url);
    EXPECT_EQ(failed, (std::set<std::string>{"https://gone.example.com/old-story", "https://blank.example.com/empty"}));
}

TEST(Retrieve, EveryDocumentTracesBackToAQueryHit) {
    auto world = providers::load_fixture_world(testsupport::trail_world());
    auto r = retrieve(testsupport::trail_pledge(), testsupport::trail_range(), world, seed());
    std::set<std::string> hit_urls;
    for (const auto& e : r.query_log)
        for (const auto& h : e.hits) hit_urls.insert(normalize_url(h.url));
    for (const auto& d : r.documents) EXPECT_TRUE(hit_urls.count(normalize_url(d.url))) << d.url;
    std::set<std::string> queries;
    for (const auto& e : r.query_log) EXPECT_TRUE(queries.insert(text::to_lower(e.query)).second) << e.query;
}

TEST(Retrieve, EmptyWorldGivesNothing) {
    auto world = providers::load_fixture_world(testsupport::fixtures_dir() / "empty");
    auto r = retrieve(testsupport::trail_pledge(), testsupport::trail_range(), world, seed());
    EXPECT_TRUE(r.documents.empty());
    EXPECT_EQ(r.query_log.size(), 2u);
}

TEST(Retrieve, TotalScrapeFailureWarns) {
    auto world = providers::load_fixture_world(testsupport::fixtures_dir() / "empty");
    world.search = std::make_shared<providers::FixtureSearch>(
        json::parse(R"({"queries": {"trail hunting": [{"url": "https://gone.example/1"}]}})"));
    auto r = retrieve(testsupport::trail_pledge(), testsupport::trail_range(), world, seed());
    EXPECT_TRUE(r.documents.empty());
    ASSERT_FALSE(r.warnings.empty());
    EXPECT_NE(r.warnings.back().find("round-1"), std::string::npos);
}

TEST(Retrieve, CachedHitsReplaceRoundOneSearch) {
    auto world = providers::load_fixture_world(testsupport::trail_world());
    CachedHits cached;
    cached.round1.push_back(QueryLogEntry{1, "earlier query", {{"https://wildlife.example.org/police-powers", "", "", 1}}, false, {}});
    auto r = retrieve(testsupport::trail_pledge(), testsupport::trail_range(), world, seed(), {}, cached);
    ASSERT_FALSE(r.query_log.empty());
    EXPECT_TRUE(r.query_log[0].reused);
    EXPECT_EQ(r.query_log[0].query, "earlier query");
    ASSERT_FALSE(r.documents.empty());
    EXPECT_EQ(r.documents[0].url, "https://wildlife.example.org/police-powers");
}

TEST(QueryLog, JsonRoundTrip) {
    QueryLogEntry e{2, "q", {{"https://a", "t", "s", 1}}, false, std::string("transport: down")};
    json j = e;
    EXPECT_EQ(j["hits"][0]["url"], "https://a");
    EXPECT_EQ(j["hits"][0]["rank"], 1);
    auto back = j.get<QueryLogEntry>();
    EXPECT_EQ(back.round, 2);
    EXPECT_EQ(back.error, e.error);
    EXPECT_EQ(back.hits[0].url, "https://a");
}
