#include <gtest/gtest.h>

#include <random>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/evalharness.hpp"
#include "support.hpp"

using namespace pledgetracker;
using namespace pledgetracker::eval;
using testsupport::d;

namespace {

AnnotatedInstance row(std::string id, std::string pledge_id, Label label) {
    Pledge p{pledge_id, "Labour", d(2024, 7, 4), "UK", "Claim " + pledge_id};
    return AnnotatedInstance{std::move(id), p, "event", d(2024, 8, 1), "https://x.example/", label};
}

RetrievalJudgment jd(std::string req, std::string sys, std::string url, bool useful) {
    return {std::move(req), std::move(sys), std::move(url), useful};
}

}  // namespace

TEST(Prf, ReconstructedFilteringCounts) {
    // Hand arithmetic: 112/220, 112/134, harmonic mean.
    double p = 112.0 / 220.0, r = 112.0 / 134.0, f = 2 * p * r / (p + r);
    auto m = prf({112, 108, 22, 0});
    EXPECT_DOUBLE_EQ(m.precision, p);
    EXPECT_DOUBLE_EQ(m.recall, r);
    EXPECT_NEAR(m.f1, f, 1e-12);
    EXPECT_NEAR(m.precision, 0.509, 0.001);
    EXPECT_NEAR(m.recall, 0.836, 0.001);
    EXPECT_NEAR(m.f1, 0.633, 0.001);
}

TEST(Prf, ZeroDenominatorsAndHarmonicMean) {
    auto z = prf({0, 0, 0, 5});
    EXPECT_EQ(z.precision, 0.0);
    EXPECT_EQ(z.recall, 0.0);
    EXPECT_EQ(z.f1, 0.0);
    auto h = prf({1, 1, 0, 0});
    EXPECT_DOUBLE_EQ(h.precision, 0.5);
    EXPECT_DOUBLE_EQ(h.recall, 1.0);
    EXPECT_NEAR(h.f1, 2.0 / 3.0, 1e-12);
    auto only_fp = prf({0, 3, 0, 0});
    EXPECT_EQ(only_fp.recall, 0.0);
    EXPECT_EQ(only_fp.f1, 0.0);
}

TEST(RoundHalfUp, ReportRounding) {
    EXPECT_DOUBLE_EQ(round_half_up(0.5085), 0.509);
    EXPECT_DOUBLE_EQ(round_half_up(0.0625, 3), 0.063);
    EXPECT_DOUBLE_EQ(round_half_up(2.0 / 3.0), 0.667);
    EXPECT_DOUBLE_EQ(round_half_up(0.75), 0.75);
    EXPECT_DOUBLE_EQ(round_half_up(20.855, 2), 20.86);
    EXPECT_DOUBLE_EQ(round_half_up(0.0), 0.0);
}

TEST(Filtering, PerfectAndTrivialPredictors) {
    std::vector<AnnotatedInstance> gold{row("1", "a", Label::useful), row("2", "a", Label::not_useful),
                                        row("3", "b", Label::useful)};
    std::vector<Prediction> perfect{{"1", Label::useful}, {"2", Label::not_useful}, {"3", Label::useful}};
    auto m = filtering_metrics(perfect, gold);
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
    std::vector<Prediction> none{{"1", Label::not_useful}, {"2", Label::not_useful}, {"3", Label::not_useful}};
    auto z = filtering_metrics(none, gold);
    EXPECT_EQ(z.precision + z.recall + z.f1, 0.0);
    // Missing predictions count as not_useful.
    auto c = tally({{"1", Label::useful}}, gold);
    EXPECT_EQ(c.tp, 1);
    EXPECT_EQ(c.fn, 1);
    EXPECT_EQ(c.tn, 1);
}

TEST(Filtering, RandomCaseMatchesHandTally) {
    std::mt19937 rng(2024);
    std::vector<AnnotatedInstance> gold;
    std::vector<Prediction> preds;
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < 50; ++i) {
        Label g = rng() % 3 == 0 ? Label::useful : Label::not_useful;
        Label p = rng() % 2 == 0 ? Label::useful : Label::not_useful;
        gold.push_back(row("i" + std::to_string(i), "p" + std::to_string(i % 7), g));
        preds.push_back({"i" + std::to_string(i), p});
        bool gu = g == Label::useful, pu = p == Label::useful;
        tp += gu && pu;
        fp += !gu && pu;
        fn += gu && !pu;
        tn += !gu && !pu;
    }
    std::shuffle(preds.begin(), preds.end(), rng);
    auto c = tally(preds, gold);
    EXPECT_EQ(c.tp, tp);
    EXPECT_EQ(c.fp, fp);
    EXPECT_EQ(c.fn, fn);
    EXPECT_EQ(c.tn, tn);
}

TEST(Filtering, InputErrors) {
    std::vector<AnnotatedInstance> gold{row("1", "a", Label::useful)};
    EXPECT_THROW(tally({{"1", Label::useful}, {"1", Label::not_useful}}, gold), InputError);
    EXPECT_THROW(tally({{"9", Label::useful}}, gold), InputError);
}

TEST(Retrieval, PerfectSingleRequest) {
    auto r = retrieval_metrics({jd("r", "S", "https://a.example/1", true), jd("r", "S", "https://a.example/2", true)}, "S");
    EXPECT_DOUBLE_EQ(r.pledge_level.f1, 1.0);
    EXPECT_DOUBLE_EQ(r.url_level.f1, 1.0);
}

TEST(Retrieval, TwoRequestMacroMicroSeparation) {
    // A: S returns u1 (useful), u2 (not). B: S returns v1 (useful); v2 is useful but only T found it.
    std::vector<RetrievalJudgment> js{jd("A", "S", "https://e.example/u1", true), jd("A", "S", "https://e.example/u2", false),
                                      jd("B", "S", "https://e.example/v1", true), jd("B", "T", "https://e.example/v2", true)};
    // Hand computation: macro P = (1/2 + 1)/2, micro P = 2/(2+1); macro R = (1 + 1/2)/2, micro R = 2/3.
    auto r = retrieval_metrics(js, "S");
    EXPECT_EQ(r.requests, 2u);
    EXPECT_NEAR(r.pledge_level.precision, 0.75, 1e-12);
    EXPECT_NEAR(r.pledge_level.recall, 0.75, 1e-12);
    EXPECT_NEAR(r.pledge_level.f1, (2.0 / 3.0 + 2.0 / 3.0) / 2.0, 1e-12);
    EXPECT_NEAR(r.url_level.precision, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.url_level.recall, 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(round_half_up(r.pledge_level.precision), 0.750);
    EXPECT_DOUBLE_EQ(round_half_up(r.url_level.precision), 0.667);
}

namespace {

// Independent novelty count: useful URLs in this system's output found by no other system.
long novelty_oracle(const std::vector<RetrievalJudgment>& js, const std::string& sys) {
    long n = 0;
    std::set<std::pair<std::string, std::string>> counted;
    for (const auto& j : js) {
        if (j.system != sys || !j.judged_useful) continue;
        bool other = false;
        for (const auto& k : js)
            if (k.request_id == j.request_id && k.url == j.url && k.system != sys) other = true;
        if (!other && counted.insert({j.request_id, j.url}).second) ++n;
    }
    return n;
}

std::vector<RetrievalJudgment> three_system_pool() {
    return {jd("r1", "ours", "https://a.example/1", true),  jd("r1", "google", "https://a.example/1", true),
            jd("r1", "ours", "https://a.example/3", true),  jd("r1", "bing", "https://a.example/4", true),
            jd("r1", "google", "https://a.example/5", false), jd("r2", "ours", "https://b.example/1", true),
            jd("r2", "ours", "https://b.example/2", false), jd("r2", "bing", "https://b.example/3", true),
            jd("r2", "google", "https://b.example/3", true), jd("r2", "google", "https://b.example/6", true)};
}

}  // namespace

TEST(Retrieval, NoveltyOnThreeSystemPool) {
    auto js = three_system_pool();
    EXPECT_EQ(retrieval_metrics(js, "ours").novelty, 2);  // a.example/3 and b.example/1
    for (const auto& s : systems_in(js)) EXPECT_EQ(retrieval_metrics(js, s).novelty, novelty_oracle(js, s)) << s;
    EXPECT_EQ(systems_in(js), (std::vector<std::string>{"bing", "google", "ours"}));
}

TEST(Retrieval, UrlsComparedAfterNormalization) {
    std::vector<RetrievalJudgment> js{jd("r", "S", "HTTPS://A.example/x?utm_source=feed#top", true),
                                      jd("r", "T", "https://a.example/x", true)};
    auto s = retrieval_metrics(js, "S");
    EXPECT_EQ(s.novelty, 0);
    EXPECT_DOUBLE_EQ(s.url_level.recall, 1.0);
}

TEST(Retrieval, AbsentSystemAndSkipEmpty) {
    auto js = three_system_pool();
    auto absent = retrieval_metrics(js, "duck");
    EXPECT_EQ(absent.pledge_level.f1, 0.0);
    EXPECT_EQ(absent.url_level.f1, 0.0);
    EXPECT_EQ(absent.warnings.size(), 1u);
    js.push_back(jd("r3", "google", "https://c.example/1", true));
    auto scored = retrieval_metrics(js, "ours");
    auto skipped = retrieval_metrics(js, "ours", true);
    EXPECT_EQ(scored.requests, 3u);
    EXPECT_EQ(skipped.requests, 2u);
    EXPECT_EQ(skipped.requests_skipped, 1u);
    EXPECT_GT(skipped.pledge_level.precision, scored.pledge_level.precision);
    // URL-level pooling still counts the missed URL.
    EXPECT_DOUBLE_EQ(skipped.url_level.recall, scored.url_level.recall);
}

TEST(Splits, SinglePledgeHalfUseful) {
    std::vector<AnnotatedInstance> c{row("1", "a", Label::useful), row("2", "a", Label::useful),
                                     row("3", "a", Label::not_useful), row("4", "a", Label::not_useful)};
    std::map<std::string, Split> m{{"1", Split::test}, {"2", Split::test}, {"3", Split::test}, {"4", Split::test}};
    auto s = split_stats(c, m);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].split, Split::test);
    EXPECT_DOUBLE_EQ(s[0].useful_pct, 50.0);
    EXPECT_DOUBLE_EQ(s[0].events_per_pledge, 4.0);
}

TEST(Splits, ThreePledgeHandTally) {
    // a (train): 3 rows, 1 useful. b (train): 1 row, 1 useful. c (dev): 2 rows, 0 useful.
    std::vector<AnnotatedInstance> c{row("1", "a", Label::useful), row("2", "a", Label::not_useful),
                                     row("3", "a", Label::not_useful), row("4", "b", Label::useful),
                                     row("5", "c", Label::not_useful), row("6", "c", Label::not_useful)};
    std::map<std::string, Split> m{{"1", Split::train}, {"2", Split::train}, {"3", Split::train},
                                   {"4", Split::train}, {"5", Split::dev},   {"6", Split::dev}};
    auto s = split_stats(c, m);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].instances, 4u);
    EXPECT_EQ(s[0].pledges, 2u);
    EXPECT_DOUBLE_EQ(s[0].useful_pct, 50.0);
    EXPECT_DOUBLE_EQ(s[0].events_per_pledge, 2.0);
    EXPECT_EQ(s[1].split, Split::dev);
    EXPECT_DOUBLE_EQ(s[1].useful_pct, 0.0);
    EXPECT_DOUBLE_EQ(s[1].events_per_pledge, 2.0);
}

TEST(Splits, ReconstructedCorpusGivesPublishedRatios) {
    // 949/249/361 instances over 22/10/18 pledges with 198/83/134 useful.
    struct Shape {
        Split split;
        int instances, pledges, useful;
    };
    std::vector<AnnotatedInstance> corpus;
    std::map<std::string, Split> m;
    int next = 0;
    for (auto [split, n, p, u] : {Shape{Split::train, 949, 22, 198}, Shape{Split::dev, 249, 10, 83},
                                  Shape{Split::test, 361, 18, 134}}) {
        for (int i = 0; i < n; ++i) {
            auto id = "x" + std::to_string(next++);
            corpus.push_back(row(id, std::string(to_string(split)) + std::to_string(i % p),
                                 i < u ? Label::useful : Label::not_useful));
            m[id] = split;
        }
    }
    auto s = split_stats(corpus, m);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(round_half_up(s[0].useful_pct, 2), 20.86);
    EXPECT_DOUBLE_EQ(round_half_up(s[1].useful_pct, 2), 33.33);
    EXPECT_DOUBLE_EQ(round_half_up(s[2].useful_pct, 2), 37.12);
    EXPECT_DOUBLE_EQ(round_half_up(s[0].events_per_pledge, 2), 43.14);
    EXPECT_DOUBLE_EQ(round_half_up(s[1].events_per_pledge, 2), 24.90);
    EXPECT_DOUBLE_EQ(round_half_up(s[2].events_per_pledge, 2), 20.06);
}

TEST(Splits, PartitionErrors) {
    std::vector<AnnotatedInstance> c{row("1", "a", Label::useful), row("2", "a", Label::useful)};
    EXPECT_THROW(split_stats(c, {{"1", Split::train}, {"2", Split::test}}), InputError);
    EXPECT_THROW(split_stats(c, {{"1", Split::train}}), InputError);
    EXPECT_EQ(split_from_string("Development"), Split::dev);
    EXPECT_FALSE(split_from_string("holdout"));
}

TEST(Parsers, PredictionsWithLineNumbers) {
    auto p = parse_predictions("{\"instance_id\": \"a\", \"label\": \"useful\"}\n\n{\"instance_id\": 7, \"label\": \"not_useful\"}\n");
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[1].instance_id, "7");
    EXPECT_EQ(p[1].label, Label::not_useful);
    try {
        parse_predictions("{\"instance_id\": \"a\", \"label\": \"useful\"}\n{\"instance_id\": \"b\", \"label\": \"maybe\"}\n");
        FAIL();
    } catch (const InputError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_predictions("{broken"), InputError);
}

TEST(Parsers, JudgmentsCsv) {
    auto j = parse_judgments_csv(
        "request_id,system,url,judged_useful\r\nr1,ours,\"https://a.example/x?q=1,2\",true\nr1,bing,https://b.example,0\n");
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0].url, "https://a.example/x?q=1,2");
    EXPECT_TRUE(j[0].judged_useful);
    EXPECT_FALSE(j[1].judged_useful);
    try {
        parse_judgments_csv("request_id,system,url,judged_useful\nr1,ours,https://a.example,perhaps\n");
        FAIL();
    } catch (const InputError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_judgments_csv("request_id,system,url\n"), InputError);
    EXPECT_THROW(parse_judgments_csv(""), InputError);
    EXPECT_THROW(parse_judgments_csv("request_id,system,url,judged_useful\nr1,ours\n"), InputError);
}

TEST(Reports, Formatting) {
    auto f = format_filtering_report(prf({112, 108, 22, 119}), {112, 108, 22, 119});
    EXPECT_NE(f.find("0.509"), std::string::npos);
    EXPECT_NE(f.find("0.836"), std::string::npos);
    EXPECT_NE(f.find("0.633"), std::string::npos);
    EXPECT_NE(f.find("tp=112 fp=108 fn=22 tn=119"), std::string::npos);
    auto j = to_json(prf({112, 108, 22, 0}));
    EXPECT_DOUBLE_EQ(j["precision"].get<double>(), 0.509);
    auto r = format_retrieval_report({retrieval_metrics(three_system_pool(), "ours")});
    EXPECT_NE(r.find("novelty"), std::string::npos);
    EXPECT_NE(r.find("ours"), std::string::npos);
    SplitStats s{Split::test, 361, 18, 134, 100.0 * 134 / 361, 361.0 / 18};
    auto t = format_split_report({s});
    EXPECT_NE(t.find("37.12"), std::string::npos);
    EXPECT_NE(t.find("20.06"), std::string::npos);
}
