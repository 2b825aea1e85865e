#include "mssum/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

namespace mssum {

namespace {

// (start, end) byte offsets of whitespace-separated tokens.
std::vector<std::pair<std::size_t, std::size_t>> token_spans(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) spans.emplace_back(start, i);
    }
    return spans;
}

bool ends_sentence(const std::string& text, const std::pair<std::size_t, std::size_t>& span) {
    char c = text[span.second - 1];
    return c == '.' || c == '!' || c == '?';
}

}  // namespace

std::vector<Chunk> chunk_text(const std::string& text, std::size_t max_tokens,
                              std::size_t overlap_tokens, const std::string& doc_id) {
    if (max_tokens == 0 || max_tokens <= overlap_tokens) {
        throw InvalidChunkConfig("chunk config: need max_tokens > overlap_tokens >= 0");
    }
    auto spans = token_spans(text);
    const std::size_t n = spans.size();
    if (n <= max_tokens) {
        Chunk c;
        c.doc_id = doc_id;
        c.seq = 0;
        c.text = text;
        c.token_count = n;
        return {c};
    }

    // Boundary before token t, in bytes. Trailing whitespace belongs to the
    // preceding chunk so that zero-overlap chunks concatenate exactly.
    auto boundary = [&](std::size_t t) -> std::size_t {
        if (t == 0) return 0;
        if (t >= n) return text.size();
        return spans[t].first;
    };

    std::vector<Chunk> chunks;
    std::size_t start = 0;  // first token of this chunk (may repeat overlap)
    std::size_t body = 0;   // first token not covered by a previous chunk
    std::size_t seq = 0;
    while (body < n) {
        std::size_t end = std::min(start + max_tokens, n);
        if (end < n) {
            // Snap back to a sentence end inside the trailing 20% of the window.
            std::size_t window = end - start;
            std::size_t lo = end - std::max<std::size_t>(1, window / 5);
            for (std::size_t k = end; k-- > std::max(lo, body + 1);) {
                if (ends_sentence(text, spans[k - 1])) {
                    end = k;
                    break;
                }
            }
        }
        Chunk c;
        c.doc_id = doc_id;
        c.seq = seq++;
        c.text = text.substr(boundary(start), boundary(end) - boundary(start));
        c.token_count = end - start;
        c.lead_overlap_bytes = boundary(body) - boundary(start);
        chunks.push_back(std::move(c));
        body = end;
        start = (end >= overlap_tokens) ? end - overlap_tokens : 0;
        if (end >= n) break;
    }
    return chunks;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("cosine: dimensions " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void EmbeddingIndex::add(Chunk chunk, std::vector<double> vector) {
    if (chunks_.empty()) {
        dimension_ = vector.size();
    } else if (vector.size() != dimension_) {
        throw DimensionMismatch("index: entry dimension " + std::to_string(vector.size()) +
                                " differs from index dimension " + std::to_string(dimension_));
    }
    chunks_.push_back(std::move(chunk));
    vectors_.push_back(std::move(vector));
}

void EmbeddingIndex::save_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write index file: " + path);
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        nlohmann::json j;
        j["doc_id"] = chunks_[i].doc_id;
        j["seq"] = chunks_[i].seq;
        j["vector"] = vectors_[i];
        out << j.dump() << '\n';
    }
}

EmbeddingIndex EmbeddingIndex::load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open index file: " + path);
    EmbeddingIndex index;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Chunk c;
        c.doc_id = j.at("doc_id").get<std::string>();
        c.seq = j.at("seq").get<std::size_t>();
        index.add(std::move(c), j.at("vector").get<std::vector<double>>());
    }
    return index;
}

EmbeddingIndex build_index(const std::vector<SourceDocument>& documents, EmbedBackend& embedder,
                           const ChunkConfig& config, CallLedger& ledger) {
    std::vector<Chunk> chunks;
    for (const auto& doc : documents) {
        for (auto& c : chunk_text(doc.text, config.max_tokens, config.overlap_tokens, doc.doc_id)) {
            chunks.push_back(std::move(c));
        }
    }
    EmbeddingIndex index;
    if (chunks.empty()) return index;
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = embed(embedder, texts, ledger);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        index.add(std::move(chunks[i]), std::move(vectors[i]));
    }
    return index;
}

std::vector<RetrievalHit> top_k(const EmbeddingIndex& index, const std::vector<double>& query,
                                std::size_t k) {
    if (k == 0) throw InvalidChunkConfig("top_k: k must be >= 1");
    if (index.empty()) return {};
    if (query.size() != index.dimension()) {
        throw DimensionMismatch("top_k: query dimension " + std::to_string(query.size()) +
                                " vs index dimension " + std::to_string(index.dimension()));
    }
    std::vector<std::size_t> order(index.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> scores(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) scores[i] = cosine(query, index.vector_at(i));

    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        const Chunk& ca = index.chunk_at(a);
        const Chunk& cb = index.chunk_at(b);
        if (ca.doc_id != cb.doc_id) return ca.doc_id < cb.doc_id;
        return ca.seq < cb.seq;
    };
    std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

    std::vector<RetrievalHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        hits.push_back({index.chunk_at(order[i]), scores[order[i]]});
    }
    return hits;
}

std::vector<SourceDocument> top_documents(const Meeting& meeting, std::size_t k,
                                          EmbedBackend& embedder, const ChunkConfig& config,
                                          CallLedger& ledger) {
    if (k == 0) throw InvalidChunkConfig("top_documents: k must be >= 1");
    if (meeting.documents.empty()) return {};

    auto transcript_chunks =
        chunk_text(render_transcript(meeting), config.max_tokens, config.overlap_tokens);
    std::vector<std::string> texts;
    for (const auto& c : transcript_chunks) texts.push_back(c.text);
    auto vectors = embed(embedder, texts, ledger);

    std::vector<double> query(embedder.dimension(), 0.0);
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < v.size(); ++i) query[i] += v[i];
    }
    double norm = std::sqrt(std::inner_product(query.begin(), query.end(), query.begin(), 0.0));
    if (norm == 0.0) throw ZeroVector("top_documents: transcript query vector is zero");
    for (double& x : query) x /= norm;

    EmbeddingIndex index = build_index(meeting.documents, embedder, config, ledger);
    std::vector<double> doc_score(meeting.documents.size(),
                                  -std::numeric_limits<double>::infinity());
    std::map<std::string, std::size_t> doc_pos;
    for (std::size_t i = 0; i < meeting.documents.size(); ++i) {
        doc_pos[meeting.documents[i].doc_id] = i;
    }
    for (std::size_t i = 0; i < index.size(); ++i) {
        double s = cosine(query, index.vector_at(i));
        std::size_t pos = doc_pos.at(index.chunk_at(i).doc_id);
        doc_score[pos] = std::max(doc_score[pos], s);
    }

    std::vector<std::size_t> order(meeting.documents.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return doc_score[a] > doc_score[b];
    });
    std::vector<SourceDocument> out;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
        out.push_back(meeting.documents[order[i]]);
    }
    return out;
}

}  // namespace mssum
