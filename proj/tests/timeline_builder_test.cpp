#include <gtest/gtest.h>

#include "pledgetracker/errors.hpp"
#include "pledgetracker/fixture_providers.hpp"
#include "pledgetracker/text.hpp"
#include "pledgetracker/timeline_builder.hpp"
#include "support.hpp"

using namespace pledgetracker;
using namespace pledgetracker::timeline;
using providers::LlmRequest;
using providers::LlmResponse;
using testsupport::d;
using testsupport::ScriptedLlm;
using nlohmann::json;

namespace {

std::vector<ExtractionExample> examples() {
    return load_extraction_examples((testsupport::data_dir() / "extraction_examples.json").string());
}

ScrapedDocument article(std::optional<Date> date = d(2024, 7, 8), std::string body = "The bill was published.") {
    return ScrapedDocument{"https://news.example/a", "Ban confirmed", date, std::move(body), 1};
}

ExtractedEvent resolved(std::string desc, Date date, std::string url, std::string raw = "") {
    return ExtractedEvent{std::move(desc), raw, std::move(url), NormalizedDate{date, Precision::day, raw}, false};
}

}  // namespace

TEST(ExtractionPrompt, ShapeAndSampling) {
    auto p = build_extraction_prompt(testsupport::trail_pledge(), article(), examples());
    const auto& prompt = p.request.prompt;
    EXPECT_FALSE(p.truncated);
    EXPECT_EQ(prompt.rfind("Please only summarize events that are useful for verifying the pledge, and their dates in the JSON format.", 0), 0u);
    EXPECT_NE(prompt.find("useful for verifying the pledge: We will ban trail hunting"), std::string::npos);
    EXPECT_NE(prompt.find("Title: Ban confirmed\nDate: 2024-07-08\nArticle: The bill was published.\n\nOutput:"),
              std::string::npos);
    // Both worked examples precede the target document.
    for (const auto& ex : examples()) EXPECT_LT(prompt.find("Title: " + ex.title), prompt.find("Title: Ban confirmed"));
    EXPECT_DOUBLE_EQ(p.request.temperature, 0.0);
    auto undated = build_extraction_prompt(testsupport::trail_pledge(), article(std::nullopt), examples());
    EXPECT_NE(undated.request.prompt.find("Date: unknown"), std::string::npos);
}

TEST(ExtractionPrompt, RejectsBadInputs) {
    auto ex = examples();
    EXPECT_THROW(build_extraction_prompt(testsupport::trail_pledge(), article(d(2024, 7, 8), "  "), ex), InputError);
    EXPECT_THROW(build_extraction_prompt(testsupport::trail_pledge(), article(), {ex[0]}), InputError);
    EXPECT_THROW(build_extraction_prompt(testsupport::trail_pledge(), article(), ex, 50), InputError);
}

TEST(ExtractionPrompt, LongBodyIsTruncatedWithinBudget) {
    std::string body;
    while (body.size() < 60000) body += "Ministers met campaigners again to discuss the bill. ";
    auto p = build_extraction_prompt(testsupport::trail_pledge(), article(d(2024, 7, 8), body), examples(), 8000);
    EXPECT_TRUE(p.truncated);
    // Local estimator: one token per four bytes, rounded up.
    std::size_t tokens = (p.request.prompt.size() + 3) / 4;
    EXPECT_LE(tokens, 8000u);
    EXPECT_EQ(estimate_tokens(p.request.prompt), tokens);
    EXPECT_NE(p.request.prompt.find(std::string(kTruncationMarker)), std::string::npos);
    EXPECT_TRUE(p.request.prompt.ends_with("\n\nOutput:\n"));
}

TEST(ExtractionPrompt, TruncationKeepsUtf8Intact) {
    std::string body;
    while (body.size() < 40000) body += "\xC2\xA3" "8.3bn\xE2\x80\x94";
    auto p = build_extraction_prompt(testsupport::trail_pledge(), article(d(2024, 7, 8), body), examples(), 6000);
    ASSERT_TRUE(p.truncated);
    auto cut = p.request.prompt.find(std::string(kTruncationMarker));
    ASSERT_NE(cut, std::string::npos);
    auto last = static_cast<unsigned char>(p.request.prompt[cut - 1]);
    EXPECT_TRUE(last < 0x80 || (last & 0xC0) == 0x80);
    // Whatever precedes the marker must decode: no dangling lead byte.
    std::size_t i = cut;
    while (i > 0 && (static_cast<unsigned char>(p.request.prompt[i - 1]) & 0xC0) == 0x80) --i;
    auto lead = static_cast<unsigned char>(p.request.prompt[i - 1]);
    std::size_t need = lead >= 0xF0 ? 4 : lead >= 0xE0 ? 3 : lead >= 0xC0 ? 2 : 1;
    EXPECT_EQ(cut - (i - 1), need);
}

TEST(EventJson, PlainProseAndRepaired) {
    auto plain = parse_event_json(R"({"events": [{"event": "Bill published", "date": "2024-07-06"}]})");
    ASSERT_EQ(plain.size(), 1u);
    EXPECT_EQ(plain[0], (RawEvent{"Bill published", "2024-07-06"}));
    auto prose = parse_event_json("Sure! Here you go:\n{\"events\": [{\"event\": \"A {braced} thing\", \"date\": \"July 2024\"}]}\nThanks.");
    ASSERT_EQ(prose.size(), 1u);
    EXPECT_EQ(prose[0].description, "A {braced} thing");
    auto fenced = parse_event_json("```json\n{\"events\": [{\"event\": \"X\", \"date\": \"2024\"},]}\n```");
    ASSERT_EQ(fenced.size(), 1u);
    EXPECT_EQ(fenced[0].raw_date_expression, "2024");
    EXPECT_TRUE(parse_event_json(R"({"events": []})").empty());
}

TEST(EventJson, SkipsBlankAndToleratesMissingDate) {
    auto ev = parse_event_json(R"({"events": [{"event": "  "}, {"event": "No date"}, {"date": "2024"}, {"event": "Y", "date": 2025}]})");
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0], (RawEvent{"No date", ""}));
    EXPECT_EQ(ev[1], (RawEvent{"Y", "2025"}));
}

TEST(EventJson, Unparseable) {
    EXPECT_THROW(parse_event_json("no json here"), ParseError);
    EXPECT_THROW(parse_event_json(R"({"items": []})"), ParseError);
    EXPECT_THROW(parse_event_json(R"({"events": [)"), ParseError);
}

TEST(ResolveEvent, RelativeFallbackAndUnresolved) {
    auto a = resolve_event({"Bill confirmed", "two days ago"}, article());
    ASSERT_TRUE(a.normalized);
    EXPECT_EQ(a.normalized->date, d(2024, 7, 6));
    EXPECT_FALSE(a.date_fallback);
    auto b = resolve_event({"Lobbying begins", "soon"}, article(d(2024, 8, 21)));
    ASSERT_TRUE(b.normalized);
    EXPECT_EQ(b.normalized->date, d(2024, 8, 21));
    EXPECT_TRUE(b.date_fallback);
    auto c = resolve_event({"Final meet", "last week"}, article(std::nullopt));
    EXPECT_FALSE(c.normalized);
    auto e = resolve_event({"Licence suspended", "12 March 2025"}, article(std::nullopt));
    ASSERT_TRUE(e.normalized);
    EXPECT_EQ(e.normalized->date, d(2025, 3, 12));
    EXPECT_EQ(e.source_url, "https://news.example/a");
}

TEST(ExtractEvents, RetriesOnceAfterBadOutput) {
    int calls = 0;
    ScriptedLlm llm([&](const LlmRequest&) {
        return LlmResponse{++calls == 1 ? "garbage" : R"({"events": [{"event": "E", "date": "yesterday"}]})", {}};
    });
    auto out = extract_events(testsupport::trail_pledge(), article(), examples(), llm);
    EXPECT_EQ(out.attempts, 2);
    EXPECT_FALSE(out.failure);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].normalized->date, d(2024, 7, 7));
}

TEST(ExtractEvents, TwoFailuresGiveEmptyWithReason) {
    ScriptedLlm llm([](const LlmRequest&) { return LlmResponse{"still garbage", {}}; });
    auto out = extract_events(testsupport::trail_pledge(), article(), examples(), llm);
    EXPECT_EQ(out.attempts, 2);
    EXPECT_TRUE(out.events.empty());
    ASSERT_TRUE(out.failure);
    EXPECT_NE(out.failure->find("parse"), std::string::npos);
    EXPECT_EQ(llm.requests.size(), 2u);
}

TEST(Assemble, DedupSortAndSeparateUnresolved) {
    DocumentExtraction a{"u1", {resolved("B", d(2024, 9, 1), "u1"), resolved("A", d(2024, 8, 1), "u1")}, false, 1, {}};
    DocumentExtraction b{"u2",
                         {resolved("B", d(2024, 9, 1), "u1"), resolved("C", d(2024, 8, 1), "u0"),
                          ExtractedEvent{"D", "last week", "u2", std::nullopt, false}},
                         false, 1, {}};
    auto c = assemble_candidates({a, b});
    ASSERT_EQ(c.sorted.size(), 3u);
    EXPECT_EQ(c.sorted[0].description, "C");  // same date as A, url u0 < u1
    EXPECT_EQ(c.sorted[1].description, "A");
    EXPECT_EQ(c.sorted[2].description, "B");
    ASSERT_EQ(c.unresolved.size(), 1u);
    EXPECT_EQ(c.unresolved[0].description, "D");
    EXPECT_TRUE(assemble_candidates({}).sorted.empty());
}

TEST(Assemble, ZeroEventDocumentContributesNothing) {
    auto world = providers::load_fixture_world(testsupport::trail_world());
    ScrapedDocument weather{"https://weather.example.com/summer-outlook", "Summer weather outlook", d(2024, 7, 20),
                            "Forecasters expect a warm and dry August.", 1};
    auto r = assemble_candidates(testsupport::trail_pledge(), {weather}, examples(), *world.llm);
    ASSERT_EQ(r.extractions.size(), 1u);
    EXPECT_FALSE(r.extractions[0].failure);
    EXPECT_TRUE(r.candidates.sorted.empty());
}

TEST(ExtractedEventJson, RoundTrip) {
    ExtractedEvent e{"X", "soon", "https://a", NormalizedDate{d(2024, 8, 21), Precision::day, "soon"}, true};
    EXPECT_EQ(json(e).get<ExtractedEvent>(), e);
    ExtractedEvent u{"Y", "last week", "https://b", std::nullopt, false};
    EXPECT_EQ(json(u).get<ExtractedEvent>(), u);
}
