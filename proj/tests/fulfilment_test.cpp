#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/fulfilment.hpp"
#include "support.hpp"

using namespace pledgetracker;
using namespace pledgetracker::fulfilment;
using providers::LlmRequest;
using providers::LlmResponse;
using testsupport::d;
using testsupport::ScriptedLlm;

namespace {

Pledge pledge_of(std::string id, std::string claim) {
    return Pledge{std::move(id), "Labour", d(2024, 7, 4), "UK", std::move(claim)};
}

AnnotatedInstance inst(std::string id, const Pledge& p, std::string event, Label label) {
    return AnnotatedInstance{std::move(id), p, std::move(event), d(2024, 9, 1), "https://x.example/" + p.id, label};
}

std::vector<AnnotatedInstance> corpus() {
    auto vat = pledge_of("vat", "We will introduce VAT and business rates on private schools");
    auto teachers = pledge_of("teachers", "We will recruit 6,500 new teachers");
    auto homes = pledge_of("homes", "We will build 1.5 million new homes");
    return {inst("c1", vat, "VAT confirmed.", Label::useful), inst("c2", teachers, "Recruitment drive.", Label::useful),
            inst("c3", vat, "Heads met.", Label::not_useful), inst("c4", homes, "Targets set.", Label::useful),
            inst("c5", teachers, "Union conference.", Label::not_useful)};
}

timeline::ExtractedEvent event(std::string desc, Date date) {
    return {std::move(desc), "", "https://news.example/a", NormalizedDate{date, Precision::day, ""}, false};
}

}  // namespace

TEST(SampleIndices, DeterministicDistinctAndCapped) {
    auto a = sample_indices(30, 10, 42);
    EXPECT_EQ(a, sample_indices(30, 10, 42));
    EXPECT_NE(a, sample_indices(30, 10, 43));
    std::set<std::size_t> s(a.begin(), a.end());
    EXPECT_EQ(s.size(), 10u);
    EXPECT_LT(*s.rbegin(), 30u);
    auto all = sample_indices(5, 50, 1);
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()), (std::set<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_TRUE(sample_indices(0, 5, 1).empty());
    EXPECT_TRUE(sample_indices(5, 0, 1).empty());
}

TEST(SampleIndices, PrefixIsStableAcrossN) {
    // Partial shuffle: asking for more items extends the same sequence.
    auto small = sample_indices(40, 5, 9);
    auto big = sample_indices(40, 20, 9);
    EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
}

TEST(SampleIndices, RoughlyUniformFirstPick) {
    std::vector<int> counts(8, 0);
    for (std::uint64_t seed = 0; seed < 8000; ++seed) ++counts[sample_indices(8, 1, seed)[0]];
    double chi = 0;
    for (int c : counts) chi += (c - 1000.0) * (c - 1000.0) / 1000.0;
    EXPECT_LT(chi, 24.3);  // chi-square 7 dof, p = 0.001
}

TEST(SelectIcl, MatchedPledgeTakesItsOwnInstances) {
    auto pool = select_icl_examples(pledge_of("new", "We will introduce VAT and business rates on private schools"),
                                    corpus(), {});
    EXPECT_EQ(pool.origin, PoolOrigin::matched_pledge);
    EXPECT_EQ(pool.matched_pledge_id, "vat");
    ASSERT_EQ(pool.instances.size(), 2u);
    EXPECT_EQ(pool.instances[0].id, "c1");
    EXPECT_EQ(pool.instances[1].id, "c3");
}

TEST(SelectIcl, MatchedAppendsFeedbackAndCaps) {
    auto vat = pledge_of("vat", "We will introduce VAT and business rates on private schools");
    std::vector<AnnotatedInstance> fb{inst("f1", vat, "Rates bill passed.", Label::useful)};
    auto pool = select_icl_examples(vat, corpus(), fb);
    ASSERT_EQ(pool.instances.size(), 3u);
    EXPECT_EQ(pool.instances.back().id, "f1");
    SelectionOptions capped;
    capped.max_n = 1;
    EXPECT_EQ(select_icl_examples(vat, corpus(), fb, capped).instances.size(), 1u);
}

TEST(SelectIcl, FeedbackOnlyMatch) {
    auto bus = pledge_of("bus", "We will franchise local bus services");
    std::vector<AnnotatedInstance> fb{inst("f1", bus, "Franchising bill.", Label::useful)};
    auto pool = select_icl_examples(bus, corpus(), fb);
    EXPECT_EQ(pool.origin, PoolOrigin::feedback);
    ASSERT_EQ(pool.instances.size(), 1u);
    EXPECT_EQ(pool.instances[0].id, "f1");
}

TEST(SelectIcl, UnmatchedSamplesSeededSubset) {
    SelectionOptions opt;
    opt.max_n = 3;
    opt.seed = 11;
    auto p = pledge_of("hunt", "We will ban trail hunting");
    auto pool = select_icl_examples(p, corpus(), {}, opt);
    EXPECT_EQ(pool.origin, PoolOrigin::global_random);
    EXPECT_FALSE(pool.matched_pledge_id);
    ASSERT_EQ(pool.instances.size(), 3u);
    auto c = corpus();
    auto idx = sample_indices(c.size(), 3, 11);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(pool.instances[i], c[idx[i]]);
    EXPECT_EQ(select_icl_examples(p, corpus(), {}, opt).instances, pool.instances);
}

TEST(SelectIcl, EmptyCorpusIsZeroShot) {
    auto pool = select_icl_examples(testsupport::trail_pledge(), {}, {});
    EXPECT_TRUE(pool.instances.empty());
    EXPECT_EQ(pool.origin, PoolOrigin::global_random);
    ASSERT_EQ(pool.warnings.size(), 1u);
}

TEST(ClassificationPrompt, ExamplesThenTarget) {
    IclPool pool;
    pool.instances = {corpus()[0], corpus()[2]};
    auto req = build_classification_request(testsupport::trail_pledge(), event("Bill published.", d(2024, 7, 8)), pool);
    const auto& p = req.prompt;
    EXPECT_NE(p.find("Below are examples:"), std::string::npos);
    EXPECT_NE(p.find("Event summary: VAT confirmed. \n(Event Date: 2024-09-01)\n\nOutput: Yes"), std::string::npos);
    EXPECT_NE(p.find("Event summary: Heads met. \n(Event Date: 2024-09-01)\n\nOutput: No"), std::string::npos);
    auto target = p.find("Now, please assign a label to the below instance.");
    ASSERT_NE(target, std::string::npos);
    EXPECT_LT(p.find("VAT confirmed"), target);
    EXPECT_TRUE(p.ends_with("Pledge: We will ban trail hunting\nSpeaker: Labour\nPledge date: 2024-07-04\n"
                            "Event summary: Bill published. \n(Event Date: 2024-07-08)\n\nOutput:"));
    EXPECT_TRUE(req.want_first_token_logprob);
    EXPECT_DOUBLE_EQ(req.temperature, 0.0);
    EXPECT_LE(req.max_output, 2);
}

TEST(ClassificationPrompt, ZeroShotHasNoExamples) {
    auto req = build_classification_request(testsupport::trail_pledge(), event("X", d(2024, 7, 8)), IclPool{});
    EXPECT_EQ(req.prompt.find("Below are examples"), std::string::npos);
    EXPECT_NE(req.prompt.find("Now, please assign a label"), std::string::npos);
}

TEST(ClassificationPrompt, UnresolvedEventRejected) {
    timeline::ExtractedEvent e{"X", "last week", "https://a", std::nullopt, false};
    EXPECT_THROW(build_classification_request(testsupport::trail_pledge(), e, IclPool{}), InputError);
}

TEST(Interpret, YesNoAndConfidence) {
    auto y = interpret_completion({" Yes.", -0.1});
    EXPECT_EQ(y.label, Label::useful);
    EXPECT_NEAR(y.confidence, std::exp(-0.1), 1e-12);
    EXPECT_TRUE(y.logprob_available);
    EXPECT_EQ(y.raw_first_token, "Yes");
    auto n = interpret_completion({"no", std::nullopt});
    EXPECT_EQ(n.label, Label::not_useful);
    EXPECT_DOUBLE_EQ(n.confidence, 1.0);
    EXPECT_FALSE(n.logprob_available);
    EXPECT_TRUE(n.parse_ok);
}

TEST(Interpret, UnparseableIsNotUsefulZeroConfidence) {
    auto m = interpret_completion({"Maybe", -0.2});
    EXPECT_EQ(m.label, Label::not_useful);
    EXPECT_DOUBLE_EQ(m.confidence, 0.0);
    EXPECT_FALSE(m.parse_ok);
    EXPECT_EQ(m.raw_first_token, "Maybe");
    EXPECT_FALSE(interpret_completion({"Yesterday", std::nullopt}).parse_ok);
    EXPECT_FALSE(interpret_completion({"", std::nullopt}).parse_ok);
}

namespace {

ScriptedLlm by_summary() {
    return ScriptedLlm([](const LlmRequest& r) -> LlmResponse {
        auto at = r.prompt.rfind("Event summary: ");
        auto desc = r.prompt.substr(at + 15, 4);
        if (desc == "Fail") throw ProviderError(ProviderErrorKind::transport, "connection reset");
        return {desc == "Good" ? "Yes" : "No", -0.5};
    });
}

std::vector<timeline::ExtractedEvent> mixed() {
    return {event("Good one", d(2024, 8, 1)), event("Bad one", d(2024, 9, 1)), event("Fail one", d(2024, 10, 1)),
            event("Good two", d(2024, 11, 1))};
}

}  // namespace

TEST(FilterTimeline, DefaultKeepsUsefulAndFailures) {
    auto llm = by_summary();
    auto r = filter_timeline(testsupport::trail_pledge(), testsupport::trail_range(), mixed(), IclPool{}, false,
                             TimelineOrder::chronological, llm, 2);
    ASSERT_EQ(r.decisions.size(), 4u);
    EXPECT_FALSE(r.decisions[2].decision);
    ASSERT_TRUE(r.decisions[2].error);
    EXPECT_NE(r.decisions[2].error->find("transport"), std::string::npos);
    ASSERT_EQ(r.timeline.events.size(), 3u);
    EXPECT_EQ(r.timeline.events[0].description, "Good one");
    EXPECT_EQ(r.timeline.events[1].description, "Fail one");
    EXPECT_FALSE(r.timeline.events[1].decision);
    EXPECT_EQ(r.timeline.events[2].decision, Label::useful);
    EXPECT_NEAR(r.timeline.events[2].confidence, std::exp(-0.5), 1e-12);
    EXPECT_EQ(r.timeline.pledge_id, testsupport::trail_pledge().id);
}

TEST(FilterTimeline, KeepAllHasEveryCandidate) {
    auto llm = by_summary();
    auto r = filter_timeline(testsupport::trail_pledge(), testsupport::trail_range(), mixed(), IclPool{}, true,
                             TimelineOrder::chronological, llm, 3);
    ASSERT_EQ(r.timeline.events.size(), 4u);
    EXPECT_EQ(r.timeline.events[1].decision, Label::not_useful);
    EXPECT_EQ(llm.requests.size(), 4u);
}

TEST(FilterTimeline, EmptyCandidates) {
    auto llm = by_summary();
    auto r = filter_timeline(testsupport::trail_pledge(), testsupport::trail_range(), {}, IclPool{}, false,
                             TimelineOrder::chronological, llm);
    EXPECT_TRUE(r.timeline.events.empty());
    EXPECT_TRUE(r.decisions.empty());
    EXPECT_TRUE(llm.requests.empty());
}

TEST(EventDecisionJson, RoundTripWithAndWithoutDecision) {
    EventDecision a{event("E", d(2024, 8, 1)), FilterDecision{Label::useful, 0.75, "Yes", true, true}, std::nullopt};
    auto back = nlohmann::json(a).get<EventDecision>();
    ASSERT_TRUE(back.decision);
    EXPECT_EQ(back.decision->label, Label::useful);
    EXPECT_DOUBLE_EQ(back.decision->confidence, 0.75);
    EventDecision f{event("F", d(2024, 8, 1)), std::nullopt, "transport: reset"};
    auto j = nlohmann::json(f);
    EXPECT_TRUE(j["decision"].is_null());
    auto fb = j.get<EventDecision>();
    EXPECT_FALSE(fb.decision);
    EXPECT_EQ(fb.error, "transport: reset");
}
