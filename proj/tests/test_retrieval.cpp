#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mssum/mock_backend.hpp"
#include "mssum/retrieval.hpp"

using namespace mssum;

namespace {

std::string random_words(std::mt19937_64& rng, std::size_t n) {
    std::string out;
    std::uniform_int_distribution<int> len(1, 9);
    std::uniform_int_distribution<int> letter('a', 'z');
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        int l = len(rng);
        for (int j = 0; j < l; ++j) out += static_cast<char>(letter(rng));
    }
    return out;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> dist;
    std::vector<double> v(dim);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Independent brute-force ranking oracle: score desc, then (doc_id, seq) asc.
std::vector<std::size_t> oracle_ranking(const EmbeddingIndex& index,
                                        const std::vector<double>& query) {
    std::vector<std::size_t> order(index.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> scores(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) scores[i] = cosine(index.vector_at(i), query);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (index.chunk_at(a).doc_id != index.chunk_at(b).doc_id) {
            return index.chunk_at(a).doc_id < index.chunk_at(b).doc_id;
        }
        return index.chunk_at(a).seq < index.chunk_at(b).seq;
    });
    return order;
}

}  // namespace

TEST_CASE("cosine matches a hand computation") {
    // dot = 4+10+18 = 32; |a| = sqrt(14); |b| = sqrt(77)
    double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
    CHECK(cosine({1, 2, 3}, {4, 5, 6}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(cosine({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine({2, 0}, {5, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cosine({0, 0}, {1, 2}), ZeroVector);
    CHECK_THROWS_AS(cosine({1, 2}, {1, 2, 3}), DimensionMismatch);
}

TEST_CASE("chunk_text rejects invalid configs") {
    CHECK_THROWS_AS(chunk_text("a b c", 0, 0), InvalidChunkConfig);
    CHECK_THROWS_AS(chunk_text("a b c", 4, 4), InvalidChunkConfig);
    CHECK_THROWS_AS(chunk_text("a b c", 4, 5), InvalidChunkConfig);
}

TEST_CASE("chunk_text identity: zero overlap reconstructs the input byte-exactly") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> n_words(1, 400);
    std::uniform_int_distribution<std::size_t> max_tok(1, 50);
    for (int trial = 0; trial < 100; ++trial) {
        std::string text = random_words(rng, n_words(rng));
        std::size_t max_tokens = max_tok(rng);
        auto chunks = chunk_text(text, max_tokens, 0, "doc");

        std::size_t tokens = count_tokens(text, TokenizerProfile::whitespace());
        std::size_t expected_count = (tokens + max_tokens - 1) / max_tokens;
        CHECK(chunks.size() == expected_count);

        std::string rebuilt;
        for (const auto& c : chunks) {
            CHECK(c.token_count <= max_tokens);
            CHECK(c.lead_overlap_bytes == 0);
            rebuilt += c.text;
        }
        CHECK(rebuilt == text);
        for (std::size_t i = 0; i < chunks.size(); ++i) CHECK(chunks[i].seq == i);
    }
}

TEST_CASE("chunk_text overlap: chunks stay within budget and record shared bytes") {
    std::mt19937_64 rng(99);
    std::string text = random_words(rng, 300);
    auto chunks = chunk_text(text, 40, 10, "doc");
    REQUIRE(chunks.size() > 1);
    CHECK(chunks[0].lead_overlap_bytes == 0);
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        CHECK(chunks[i].token_count <= 40);
        CHECK(chunks[i].lead_overlap_bytes > 0);
        // The recorded lead region is literally the tail of the previous chunk.
        std::string lead = chunks[i].text.substr(0, chunks[i].lead_overlap_bytes);
        std::string prev_tail = chunks[i - 1].text.substr(chunks[i - 1].text.size() - lead.size());
        CHECK(lead == prev_tail);
    }
}

TEST_CASE("chunk boundaries snap to a sentence end inside the trailing 20%") {
    // 10-token budget; the sentence ends at token 9 of 12, inside the window.
    std::string text = "one two three four five six seven eight nine. ten eleven twelve";
    auto chunks = chunk_text(text, 10, 0);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].text == "one two three four five six seven eight nine. ");
    CHECK(chunks[1].text == "ten eleven twelve");
}

TEST_CASE("single-chunk input passes through untouched") {
    std::string text = "just a few words here";
    auto chunks = chunk_text(text, 512, 64);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].text == text);
    CHECK(chunks[0].token_count == 5);
}

TEST_CASE("top_k equals the brute-force oracle on 200 random vectors") {
    std::mt19937_64 rng(7);
    EmbeddingIndex index;
    for (std::size_t i = 0; i < 200; ++i) {
        Chunk c;
        c.doc_id = "doc" + std::to_string(i % 7);
        c.seq = i / 7;
        c.text = "chunk " + std::to_string(i);
        index.add(std::move(c), random_vector(rng, 64));
    }
    auto query = random_vector(rng, 64);
    auto oracle = oracle_ranking(index, query);
    for (std::size_t k : {std::size_t(1), std::size_t(5), std::size_t(17)}) {
        auto hits = top_k(index, query, k);
        REQUIRE(hits.size() == k);
        for (std::size_t i = 0; i < k; ++i) {
            const Chunk& expect = index.chunk_at(oracle[i]);
            CHECK(hits[i].chunk.doc_id == expect.doc_id);
            CHECK(hits[i].chunk.seq == expect.seq);
            CHECK(hits[i].score ==
                  doctest::Approx(cosine(index.vector_at(oracle[i]), query)).epsilon(1e-12));
        }
    }
}

TEST_CASE("top_k tie-break prefers ascending (doc_id, seq)") {
    EmbeddingIndex index;
    // Three identical vectors: all cosines tie exactly.
    for (auto [doc, seq] : std::vector<std::pair<std::string, std::size_t>>{
             {"b", 0}, {"a", 1}, {"a", 0}}) {
        Chunk c;
        c.doc_id = doc;
        c.seq = seq;
        c.text = doc + std::to_string(seq);
        index.add(std::move(c), {1.0, 0.0});
    }
    auto hits = top_k(index, {1.0, 0.0}, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].chunk.doc_id == "a");
    CHECK(hits[0].chunk.seq == 0);
    CHECK(hits[1].chunk.doc_id == "a");
    CHECK(hits[1].chunk.seq == 1);
    CHECK(hits[2].chunk.doc_id == "b");
}

TEST_CASE("top_k clamps k to the index size and handles empty queries") {
    EmbeddingIndex index;
    Chunk c;
    c.doc_id = "d";
    c.text = "x";
    index.add(std::move(c), {1.0, 2.0});
    CHECK(top_k(index, {1.0, 2.0}, 10).size() == 1);
    CHECK_THROWS_AS(top_k(index, {1.0, 2.0, 3.0}, 1), DimensionMismatch);
}

TEST_CASE("index save/load round-trips through JSONL") {
    std::mt19937_64 rng(3);
    EmbeddingIndex index;
    for (std::size_t i = 0; i < 10; ++i) {
        Chunk c;
        c.doc_id = "d" + std::to_string(i);
        c.seq = i;
        c.text = random_words(rng, 5);
        c.token_count = 5;
        index.add(std::move(c), random_vector(rng, 8));
    }
    std::string path = "/tmp/mssum_test_index.jsonl";
    index.save_jsonl(path);
    auto loaded = EmbeddingIndex::load_jsonl(path);
    REQUIRE(loaded.size() == index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.chunk_at(i).doc_id == index.chunk_at(i).doc_id);
        CHECK(loaded.chunk_at(i).seq == index.chunk_at(i).seq);
        CHECK(loaded.vector_at(i) == index.vector_at(i));
    }
    std::remove(path.c_str());
}

TEST_CASE("build_index covers every document chunk deterministically") {
    std::vector<SourceDocument> docs;
    for (int i = 0; i < 3; ++i) {
        SourceDocument d;
        d.doc_id = "doc" + std::to_string(i);
        d.kind = DocKind::notes;
        std::mt19937_64 rng(i);
        d.text = random_words(rng, 120);
        docs.push_back(std::move(d));
    }
    MockEmbedBackend embedder(64);
    CallLedger ledger;
    auto index = build_index(docs, embedder, ChunkConfig{50, 10}, ledger);
    CHECK(index.size() >= 6);  // 3 docs x >= 2 chunks
    // Chunks arrive in (document order, seq) order.
    for (std::size_t i = 1; i < index.size(); ++i) {
        const auto& prev = index.chunk_at(i - 1);
        const auto& cur = index.chunk_at(i);
        bool ordered = prev.doc_id < cur.doc_id ||
                       (prev.doc_id == cur.doc_id && prev.seq < cur.seq);
        CHECK(ordered);
    }
}

TEST_CASE("top_documents ranks the lexically matching document first") {
    Meeting m;
    m.meeting_id = "m";
    m.turns.push_back({"pm", std::nullopt,
                       "We must decide the production budget and the component cost targets."});
    m.turns.push_back({"dev", std::nullopt,
                       "The budget covers the case, the board, and the battery cost."});

    SourceDocument about_budget;
    about_budget.doc_id = "budget-doc";
    about_budget.kind = DocKind::slides;
    about_budget.text = "Budget slides: production budget, component cost targets, battery cost.";
    SourceDocument about_colors;
    about_colors.doc_id = "color-doc";
    about_colors.kind = DocKind::notes;
    about_colors.text = "Color survey: yellow lime berry preferences among younger viewers.";
    m.documents = {about_colors, about_budget};

    MockEmbedBackend embedder(64);
    CallLedger ledger;
    auto ranked = top_documents(m, 2, embedder, ChunkConfig{64, 0}, ledger);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].doc_id == "budget-doc");
    auto top1 = top_documents(m, 1, embedder, ChunkConfig{64, 0}, ledger);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].doc_id == "budget-doc");
}
