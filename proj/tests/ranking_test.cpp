#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pledgetracker/bm25.hpp"
#include "pledgetracker/errors.hpp"
#include "pledgetracker/matcher.hpp"
#include "pledgetracker/text.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace pledgetracker;
using namespace oracles;

TEST(Bm25, TwentyDocumentCorpusMatchesDirectFormula) {
    for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
        auto docs = synthetic_corpus(seed, 20);
        Doc query = {"trail", "hunting", "ban", "trail"};
        bm25::Index index(docs);
        auto scores = index.score_all(query);
        std::vector<double> expected;
        for (std::size_t i = 0; i < docs.size(); ++i) expected.push_back(brute_bm25(docs, query, i));
        for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_NEAR(scores[i], expected[i], 1e-9) << "doc " << i;
        auto ranked = bm25::top_k(scores, 20);
        auto order = brute_order(expected);
        ASSERT_EQ(ranked.size(), order.size());
        for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(ranked[i].index, order[i]);
    }
}

TEST(Bm25, IdfIsNonNegativeEvenForUbiquitousTerms) {
    bm25::Index index({{"a", "b"}, {"a"}, {"a", "c"}});
    EXPECT_GT(index.idf("a"), 0.0);
    EXPECT_NEAR(index.idf("a"), std::log(1.0 + 0.5 / 3.5), 1e-12);
    EXPECT_NEAR(index.idf("zzz"), std::log(1.0 + 3.5 / 0.5), 1e-12);
}

TEST(Bm25, ZeroScoresKeepSourceOrder) {
    bm25::Index index({{"a"}, {"b"}, {"c"}});
    auto ranked = bm25::top_k(index.score_all({"zzz"}), 2);
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_EQ(ranked[0].index, 0u);
    EXPECT_EQ(ranked[1].index, 1u);
    EXPECT_EQ(ranked[0].score, 0.0);
}

TEST(Bm25, EmptyDocumentsScoreZero) {
    bm25::Index index(std::vector<Doc>(2));
    EXPECT_EQ(index.average_length(), 0.0);
    EXPECT_EQ(index.score({"a"}, 0), 0.0);
    EXPECT_TRUE(bm25::top_k({}, 3).empty());
}

namespace {

void expect_matches_oracle(const std::vector<Pledge>& pledges, const std::string& query) {
    auto index = matcher::build_index(pledges);
    auto got = matcher::suggest_similar(index, query, pledges.size());
    auto expected = brute_tfidf(pledges, query);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].pledge_id, expected[i].first) << query << " rank " << i;
        EXPECT_NEAR(got[i].score, expected[i].second, 1e-9) << query << " rank " << i;
    }
}

}  // namespace

TEST(TfIdf, FiveDocumentCorpusMatchesDirectFormula) {
    auto all = manifesto();
    std::vector<Pledge> five(all.begin(), all.begin() + 5);
    expect_matches_oracle(five, "ban trail hunting");
    expect_matches_oracle(five, "VAT on private school fees");
}

TEST(TfIdf, TwentyDocumentCorpusMatchesDirectFormula) {
    auto all = manifesto();
    for (const char* q : {"We will ban trail hunting", "new homes and new towns", "energy", "recruit new staff",
                          "nothing in common"})
        expect_matches_oracle(all, q);
}

TEST(TfIdf, IdenticalClaimScoresOneAndIsMatched) {
    auto all = manifesto();
    auto index = matcher::build_index(all);
    auto m = matcher::best_match(index, "We will ban trail hunting", 0.8);
    ASSERT_TRUE(m);
    EXPECT_EQ(m->pledge_id, "m00");
    EXPECT_NEAR(m->score, 1.0, 1e-12);
    EXPECT_FALSE(matcher::best_match(index, "foxes", 0.8));
    EXPECT_THROW(matcher::suggest_similar(index, "x", 0), InputError);
}

TEST(TfIdf, EmptyIndexAndPersistence) {
    auto empty = matcher::build_index({});
    EXPECT_TRUE(matcher::suggest_similar(empty, "anything", 3).empty());
    auto index = matcher::build_index(manifesto());
    testsupport::TempDir dir;
    auto path = (dir.path() / "index.json").string();
    matcher::save_index(index, path);
    auto loaded = matcher::load_index(path);
    EXPECT_EQ(matcher::suggest_similar(loaded, "ban hunting", 5), matcher::suggest_similar(index, "ban hunting", 5));
}
