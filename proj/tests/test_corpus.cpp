#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include <json.hpp>

#include "mssum/corpus.hpp"

using namespace mssum;
using nlohmann::json;

namespace {

json minimal_meeting() {
    return json{{"meeting_id", "m1"},
                {"turns", json::array({{{"speaker_role", "pm"}, {"text", "Hello there."}},
                                       {{"speaker_role", "dev"}, {"text", "Hi. All good."}}})},
                {"documents", json::array({{{"doc_id", "d1"},
                                            {"kind", "slides"},
                                            {"text", "Slide one content."}}})}};
}

}  // namespace

TEST_CASE("load_meeting accepts a minimal valid meeting") {
    Meeting m = load_meeting(minimal_meeting().dump());
    CHECK(m.meeting_id == "m1");
    CHECK(m.turns.size() == 2);
    CHECK(m.turns[0].speaker_role == "pm");
    CHECK(m.documents.size() == 1);
    CHECK(m.documents[0].kind == DocKind::slides);
    CHECK_FALSE(m.gold_summary.has_value());
    CHECK(m.load_warnings.empty());
}

TEST_CASE("load_meeting rejects structural problems") {
    CHECK_THROWS_AS(load_meeting("not json"), SchemaError);
    CHECK_THROWS_AS(load_meeting("[1,2]"), SchemaError);

    json j = minimal_meeting();
    j.erase("meeting_id");
    CHECK_THROWS_AS(load_meeting(j.dump()), SchemaError);

    j = minimal_meeting();
    j["turns"] = json::array();
    CHECK_THROWS_AS(load_meeting(j.dump()), EmptyTranscript);

    j = minimal_meeting();
    j["turns"][0].erase("text");
    CHECK_THROWS_AS(load_meeting(j.dump()), SchemaError);

    j = minimal_meeting();
    j["turns"][0]["text"] = "   \n ";
    CHECK_THROWS_AS(load_meeting(j.dump()), SchemaError);

    j = minimal_meeting();
    j["documents"].push_back(j["documents"][0]);  // duplicate doc_id
    CHECK_THROWS_AS(load_meeting(j.dump()), SchemaError);

    j = minimal_meeting();
    j["documents"][0]["kind"] = "sketch";
    CHECK_THROWS_AS(load_meeting(j.dump()), SchemaError);
}

TEST_CASE("unknown fields are warned about and preserved, not fatal") {
    json j = minimal_meeting();
    j["recording_url"] = "https://example.invalid/a.wav";
    j["turns"][0]["start_ms"] = 1234;
    Meeting m = load_meeting(j.dump());
    CHECK(m.load_warnings.size() == 2);
    CHECK(m.extra.contains("meeting"));
}

TEST_CASE("render_transcript emits role/text blocks separated by blank lines") {
    Meeting m = load_meeting(minimal_meeting().dump());
    CHECK(render_transcript(m) == "pm\nHello there.\n\ndev\nHi. All good.");
}

TEST_CASE("serialize round-trips through load_meeting") {
    json j = minimal_meeting();
    j["gold_summary"] = "A short gold summary.";
    Meeting m = load_meeting(j.dump());
    Meeting again = load_meeting(serialize(m).dump());
    CHECK(serialize(again) == serialize(m));
}

TEST_CASE("count_tokens: whitespace and chars-per-token modes") {
    auto ws = TokenizerProfile::whitespace();
    CHECK(count_tokens("", ws) == 0);
    CHECK(count_tokens("one", ws) == 1);
    CHECK(count_tokens("  two   words \n", ws) == 2);
    CHECK(count_tokens("a b c d e", ws) == 5);

    auto cpt = TokenizerProfile::approx(4.0);
    CHECK(count_tokens("", cpt) == 0);
    CHECK(count_tokens("abcd", cpt) == 1);      // 4/4
    CHECK(count_tokens("abcde", cpt) == 2);     // ceil(5/4)
    CHECK(count_tokens(std::string(17, 'x'), cpt) == 5);  // ceil(17/4)
}

TEST_CASE("corpus_stats matches a hand-computed oracle") {
    json a = minimal_meeting();  // 2 turns, 2 speakers, 1 doc, no gold
    json b = minimal_meeting();
    b["meeting_id"] = "m2";
    b["turns"].push_back({{"speaker_role", "pm"}, {"text", "Closing remark here."}});
    b["turns"].push_back({{"speaker_role", "qa"}, {"text", "One question."}});
    b["documents"].push_back({{"doc_id", "d2"}, {"kind", "notes"}, {"text", "Notes."}});
    b["gold_summary"] = "four words exactly here";

    auto stats = corpus_stats({load_meeting(a.dump()), load_meeting(b.dump())});
    CHECK(stats.meeting_count == 2);
    CHECK(stats.avg_turns == doctest::Approx((2 + 4) / 2.0));
    CHECK(stats.avg_speakers == doctest::Approx((2 + 3) / 2.0));
    CHECK(stats.avg_documents == doctest::Approx((1 + 2) / 2.0));
    CHECK(stats.meetings_with_gold == 1);
    CHECK(stats.avg_gold_words == doctest::Approx(4.0));  // averaged over meetings with gold
    CHECK_THROWS_AS(corpus_stats({}), EmptyCorpus);
}

TEST_CASE("bundled toy meeting satisfies the fixture contract") {
    Meeting m = load_meeting_file(TOY_MEETING_PATH);
    CHECK(m.turns.size() >= 40);
    CHECK(m.documents.size() == 3);
    std::set<std::string> roles;
    for (const auto& t : m.turns) roles.insert(t.speaker_role);
    CHECK(roles.size() == 4);
    CHECK(m.gold_summary.has_value());
}
