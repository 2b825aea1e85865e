#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mssum/eval.hpp"
#include "mssum/mock_backend.hpp"

using namespace mssum;

namespace {

struct Harness {
    MockChatBackend chat_backend{21};
    MockEmbedBackend embed_backend{64};
    CallLedger ledger;
    StageContext ctx;

    Harness() {
        ctx.chat = &chat_backend;
        ctx.embed = &embed_backend;
        ctx.ledger = &ledger;
    }
};

class CannedBackend : public ChatBackend {
public:
    explicit CannedBackend(std::vector<std::string> responses)
        : responses_(std::move(responses)), profile_(MockChatBackend::default_profile()) {}

    ChatResponse complete(const ChatRequest&) override {
        ChatResponse r;
        r.text = responses_[std::min(next_, responses_.size() - 1)];
        ++next_;
        return r;
    }
    const ModelProfile& profile() const override { return profile_; }
    bool simulated() const override { return true; }

    std::size_t calls() const { return next_; }

private:
    std::vector<std::string> responses_;
    ModelProfile profile_;
    std::size_t next_ = 0;
};

// Independent pair-enumeration oracle for Krippendorff's alpha. Marginals and
// distances are computed directly from the pairable ratings, without building
// the implementation's coincidence matrix.
double alpha_oracle(const std::vector<std::vector<std::optional<int>>>& rows,
                    AgreementLevel level) {
    std::vector<std::vector<int>> units;
    for (const auto& row : rows) {
        std::vector<int> vals;
        for (const auto& c : row) {
            if (c) vals.push_back(*c);
        }
        if (vals.size() >= 2) units.push_back(std::move(vals));
    }

    std::map<int, double> marginal;  // n_v over pairable ratings
    double n = 0;
    for (const auto& u : units) {
        for (int v : u) {
            marginal[v] += 1.0;
            n += 1.0;
        }
    }

    auto delta2 = [&](int a, int b) -> double {
        if (level == AgreementLevel::interval) {
            return (static_cast<double>(a) - b) * (static_cast<double>(a) - b);
        }
        if (a == b) return 0.0;
        int lo = std::min(a, b), hi = std::max(a, b);
        double sum = 0.0;
        for (const auto& [v, count] : marginal) {
            if (v >= lo && v <= hi) sum += count;
        }
        sum -= (marginal[lo] + marginal[hi]) / 2.0;
        return sum * sum;
    };

    double d_o = 0.0;  // sum over units of within-unit pair disagreement
    for (const auto& u : units) {
        double m = static_cast<double>(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            for (std::size_t j = 0; j < u.size(); ++j) {
                if (i != j) d_o += delta2(u[i], u[j]) / (m - 1.0);
            }
        }
    }
    d_o /= n;

    double d_e = 0.0;
    for (const auto& [a, na] : marginal) {
        for (const auto& [b, nb] : marginal) {
            if (a != b) d_e += na * nb * delta2(a, b);
        }
    }
    d_e /= n * (n - 1.0);
    return 1.0 - d_o / d_e;
}

}  // namespace

TEST_CASE("standard criteria carry the expected keys and persona flags") {
    for (const auto& key : Criterion::standard_keys()) {
        auto c = Criterion::standard(key);
        CHECK(c.key == key);
        CHECK(!c.definition.empty());
        CHECK(c.personalized == (key.size() > 2 && key.substr(key.size() - 2) == "_P"));
    }
    CHECK_THROWS_AS(Criterion::standard("XYZ"), SchemaError);
}

TEST_CASE("judge parser fixture suite: 12 outputs parse or fail per the contract") {
    struct Fixture {
        const char* raw;
        std::optional<int> expected_score;  // nullopt = parse failure
    };
    const Fixture fixtures[12] = {
        // 1: clean explanation ! {json}
        {"The summary is complete and clear. ! {\"INF\": 4}", 4},
        // 2: explanation itself contains '!'
        {"Surprisingly good! Very clear indeed. ! {\"INF\": 5}", 5},
        // 3: code-fenced json object
        {"Step one, step two. ! ```json\n{\"OVR\": 3}\n```", 3},
        // 4: score at the boundary values
        {"Minimal quality. ! {\"FAC\": 1}", 1},
        // 5: multi-line explanation
        {"First point.\nSecond point.\nThird point. ! {\"REL\": 2}", 2},
        // 6: whitespace padding around the separator
        {"Reasoning here.   !   {\"INF\": 5}  ", 5},
        // 7: json carries a non-criterion key (single key still accepted)
        {"Analysis done. ! {\"score\": 4}", 4},
        // 8: multiple '!' with json after the last one only
        {"Wow! Impressive! ! {\"OVR\": 5}", 5},
        // 9: out-of-range score fails
        {"Looks fine. ! {\"INF\": 6}", std::nullopt},
        // 10: zero is also out of range
        {"Poor. ! {\"INF\": 0}", std::nullopt},
        // 11: no json object at all
        {"I refuse to answer in the requested format.", std::nullopt},
        // 12: '!' present but what follows never parses
        {"Explanation ! not json at all", std::nullopt},
    };
    for (int i = 0; i < 12; ++i) {
        CAPTURE(i);
        auto v = parse_judge_output(fixtures[i].raw, "INF");
        if (fixtures[i].expected_score) {
            REQUIRE(v.has_value());
            CHECK(v->score == *fixtures[i].expected_score);
            CHECK(v->criterion == "INF");
            CHECK(v->explanation.find('{') == std::string::npos);
        } else {
            CHECK_FALSE(v.has_value());
        }
    }
}

TEST_CASE("judge returns a verdict from the mock and records ledger calls") {
    Harness h;
    auto verdict = judge("A short summary of the meeting.", "pm\nWe met and decided things.",
                         Criterion::standard("INF"), std::nullopt, h.ctx);
    CHECK(verdict.criterion == "INF");
    CHECK(verdict.score >= 1);
    CHECK(verdict.score <= 5);
    CHECK(!verdict.explanation.empty());
    CHECK(h.ledger.size() == 1);
}

TEST_CASE("judge re-asks once on malformed output, then raises ParseError") {
    CannedBackend flaky({"garbled output", "Now properly formatted. ! {\"INF\": 4}"});
    Harness h;
    StageContext ctx = h.ctx;
    ctx.chat = &flaky;
    auto verdict = judge("summary", "pm\ntranscript text", Criterion::standard("INF"),
                         std::nullopt, ctx);
    CHECK(verdict.score == 4);
    CHECK(flaky.calls() == 2);

    CannedBackend hopeless({"garbled", "still garbled"});
    ctx.chat = &hopeless;
    CHECK_THROWS_AS(
        judge("summary", "pm\ntranscript text", Criterion::standard("INF"), std::nullopt, ctx),
        ParseError);
    CHECK(hopeless.calls() == 2);  // exactly one corrective re-ask
}

TEST_CASE("personalized criteria demand a persona") {
    Harness h;
    CHECK_THROWS_AS(judge("s", "pm\nt", Criterion::standard("INF_P"), std::nullopt, h.ctx),
                    SchemaError);
    Persona p;
    p.participant = "pm";
    p.text = "detail-oriented manager";
    auto verdict = judge("s", "pm\nt", Criterion::standard("INF_P"), p, h.ctx);
    CHECK(verdict.criterion == "INF_P");
}

TEST_CASE("likert_from_ratio maps support ratios onto the 1..5 scale") {
    CHECK(likert_from_ratio(0.0) == 1);
    CHECK(likert_from_ratio(0.25) == 2);
    CHECK(likert_from_ratio(0.5) == 3);
    CHECK(likert_from_ratio(0.75) == 4);
    CHECK(likert_from_ratio(1.0) == 5);
    CHECK(likert_from_ratio(0.3) == 2);   // 1 + round(1.2)
    CHECK(likert_from_ratio(0.85) == 4);  // 1 + round(3.4)
}

TEST_CASE("fact_score decomposes, labels, and scores") {
    CannedBackend scripted({
        R"(["The budget is twelve euros.", "The case is rubber.", "The antenna reaches nine meters.", "The launch is in June."])",
        R"([true, true, true, false])",
    });
    Harness h;
    StageContext ctx = h.ctx;
    ctx.chat = &scripted;
    auto report = fact_score("summary text", "pm\ntranscript", ctx);
    CHECK(report.facts.size() == 4);
    CHECK(report.support_ratio == doctest::Approx(0.75));
    CHECK(report.likert == 4);
    CHECK(report.facts[3].supported == false);
}

TEST_CASE("fact_score raises LengthMismatch when labels and facts disagree") {
    CannedBackend scripted({R"(["fact one", "fact two", "fact three"])", R"([true, false])"});
    Harness h;
    StageContext ctx = h.ctx;
    ctx.chat = &scripted;
    CHECK_THROWS_AS(fact_score("summary", "pm\ntranscript", ctx), LengthMismatch);

    CannedBackend empty_facts({R"([])"});
    ctx.chat = &empty_facts;
    CHECK_THROWS_AS(fact_score("summary", "pm\ntranscript", ctx), ParseError);
}

TEST_CASE("fact_score works end-to-end against the mock backend") {
    Harness h;
    auto report = fact_score("The team froze the design on Friday.", "pm\ntranscript here", h.ctx);
    CHECK(report.likert >= 1);
    CHECK(report.likert <= 5);
    CHECK(report.likert == likert_from_ratio(report.support_ratio));
    CHECK(!report.facts.empty());
}

TEST_CASE("aggregate computes mean and population stddev, guarding criteria mixing") {
    std::vector<JudgeVerdict> verdicts;
    for (int s : {2, 4, 4, 5}) {
        JudgeVerdict v;
        v.criterion = "INF";
        v.score = s;
        verdicts.push_back(v);
    }
    auto agg = aggregate(verdicts);
    CHECK(agg.criterion == "INF");
    CHECK(agg.n == 4);
    CHECK(agg.mean == doctest::Approx(3.75));
    // population sigma: sqrt(((2-3.75)^2 + 2*(4-3.75)^2 + (5-3.75)^2)/4)
    CHECK(agg.stddev == doctest::Approx(std::sqrt((3.0625 + 0.0625 + 0.0625 + 1.5625) / 4.0)));

    verdicts[1].criterion = "OVR";
    CHECK_THROWS_AS(aggregate(verdicts), MixedCriteria);
    CHECK_THROWS_AS(aggregate({}), EmptyInput);
    CHECK_THROWS_AS(aggregate_scores("INF", {}), EmptyInput);
}

TEST_CASE("compare: identical paired samples yield p exactly 1.0") {
    std::vector<int> a = {3, 4, 5, 2, 3, 4};
    auto r = compare(a, a, true);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.significant_05);
    CHECK(r.method == "paired-permutation");
}

TEST_CASE("compare: clearly separated paired samples come out significant") {
    std::vector<int> a = {5, 5, 4, 5, 5, 4, 5, 5, 4, 5, 5, 5};
    std::vector<int> b = {1, 2, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1};
    auto r = compare(a, b, true, CompareMethod::permutation, 123);
    CHECK(r.p_value < 0.01);
    CHECK(r.significant_05);
    CHECK(r.significant_01);

    // Symmetric in the order of arguments.
    auto rev = compare(b, a, true, CompareMethod::permutation, 123);
    CHECK(rev.p_value == doctest::Approx(r.p_value));
}

TEST_CASE("compare: seeded permutation is deterministic") {
    std::vector<int> a = {3, 4, 2, 5, 4, 3, 2, 4};
    std::vector<int> b = {2, 4, 3, 4, 3, 3, 3, 3};
    auto r1 = compare(a, b, true, CompareMethod::permutation, 7);
    auto r2 = compare(a, b, true, CompareMethod::permutation, 7);
    CHECK(r1.p_value == r2.p_value);
}

TEST_CASE("compare: unpaired permutation and input validation") {
    std::vector<int> a = {5, 4, 5, 5, 4, 5, 4};
    std::vector<int> b = {1, 2, 1, 2, 1};
    auto r = compare(a, b, false, CompareMethod::permutation, 3);
    CHECK(r.method == "label-permutation");
    CHECK(r.p_value < 0.05);

    CHECK_THROWS_AS(compare({1, 2, 3, 4, 5}, {1, 2, 3, 4}, true), LengthMismatch);
    CHECK_THROWS_AS(compare({1, 2, 3, 4}, {1, 2, 3, 4}, true), TooFewSamples);
}

TEST_CASE("compare: Wilcoxon signed-rank agrees on obvious cases") {
    std::vector<int> a = {5, 5, 4, 5, 5, 4, 5, 5, 4, 5};
    std::vector<int> b = {1, 2, 1, 1, 2, 1, 1, 1, 2, 1};
    auto r = compare(a, b, true, CompareMethod::wilcoxon);
    CHECK(r.method == "wilcoxon-signed-rank");
    CHECK(r.p_value < 0.05);

    auto tie = compare(a, a, true, CompareMethod::wilcoxon);
    CHECK(tie.p_value == 1.0);
    CHECK_THROWS_AS(compare(a, b, false, CompareMethod::wilcoxon), SchemaError);
}

TEST_CASE("krippendorff: perfect non-degenerate agreement scores exactly 1.0") {
    RatingMatrix m;
    m.rows = {{1, 1, 1}, {3, 3, 3}, {5, 5, 5}, {2, 2, 2}};
    CHECK(krippendorff_alpha(m, AgreementLevel::ordinal).alpha == doctest::Approx(1.0));
    CHECK(krippendorff_alpha(m, AgreementLevel::interval).alpha == doctest::Approx(1.0));
}

TEST_CASE("krippendorff: degenerate and underspecified inputs raise") {
    RatingMatrix identical;
    identical.rows = {{2, 2}, {2, 2}};
    CHECK_THROWS_AS(krippendorff_alpha(identical, AgreementLevel::ordinal), DegenerateData);

    RatingMatrix one_rater;
    one_rater.rows = {{1}, {2}};
    CHECK_THROWS_AS(krippendorff_alpha(one_rater, AgreementLevel::ordinal), EmptyInput);

    RatingMatrix no_pairs;
    no_pairs.rows = {{1, std::nullopt}, {std::nullopt, 2}};
    CHECK_THROWS_AS(krippendorff_alpha(no_pairs, AgreementLevel::ordinal), EmptyInput);
}

TEST_CASE("krippendorff matches the pair-enumeration oracle on 50 random matrices") {
    std::mt19937_64 rng(777);
    int tested = 0;
    while (tested < 50) {
        std::uniform_int_distribution<int> raters_d(2, 4), items_d(3, 10), value_d(1, 5);
        std::uniform_real_distribution<double> miss(0.0, 1.0);
        int raters = raters_d(rng), items = items_d(rng);
        RatingMatrix m;
        for (int i = 0; i < items; ++i) {
            std::vector<std::optional<int>> row;
            for (int r = 0; r < raters; ++r) {
                if (miss(rng) < 0.2) {
                    row.push_back(std::nullopt);
                } else {
                    row.push_back(value_d(rng));
                }
            }
            m.rows.push_back(std::move(row));
        }
        for (auto level : {AgreementLevel::ordinal, AgreementLevel::interval}) {
            double expected;
            double got;
            try {
                expected = alpha_oracle(m.rows, level);
                got = krippendorff_alpha(m, level).alpha;
            } catch (const std::exception&) {
                goto next_matrix;  // degenerate draw; resample
            }
            CHECK(std::abs(got - expected) <= 1e-9);
        }
        ++tested;
    next_matrix:;
    }
    CHECK(tested == 50);
}

TEST_CASE("rating_matrix_from_csv parses blanks as missing cells") {
    auto m = rating_matrix_from_csv("1,2,3\n4,,5\n, ,\n2,2,2\n");
    REQUIRE(m.rows.size() == 4);
    CHECK(m.rows[0] == std::vector<std::optional<int>>{1, 2, 3});
    CHECK(m.rows[1] == std::vector<std::optional<int>>{4, std::nullopt, 5});
    CHECK(m.rows[2] == std::vector<std::optional<int>>{std::nullopt, std::nullopt, std::nullopt});
}
