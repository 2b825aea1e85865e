#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mssum/corpus.hpp"
#include "mssum/provider.hpp"

namespace mssum {

struct InvalidChunkConfig : std::runtime_error {
    explicit InvalidChunkConfig(const std::string& what) : std::runtime_error(what) {}
};
struct ZeroVector : std::runtime_error {
    explicit ZeroVector(const std::string& what) : std::runtime_error(what) {}
};
struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ChunkConfig {
    std::size_t max_tokens = 512;
    std::size_t overlap_tokens = 64;
};

struct Chunk {
    std::string doc_id;
    std::size_t seq = 0;
    std::string text;
    std::size_t token_count = 0;
    // Byte length of the leading region shared with the previous chunk.
    std::size_t lead_overlap_bytes = 0;
};

// Token-budgeted chunking over whitespace tokens. With overlap 0 the chunks
// concatenate back to the input byte-exactly; chunk boundaries snap backward
// to a sentence end when one falls within the trailing 20% of the window.
std::vector<Chunk> chunk_text(const std::string& text, std::size_t max_tokens,
                              std::size_t overlap_tokens, const std::string& doc_id = "");

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct RetrievalHit {
    Chunk chunk;
    double score = 0.0;
};

class EmbeddingIndex {
public:
    EmbeddingIndex() = default;

    void add(Chunk chunk, std::vector<double> vector);
    std::size_t size() const { return chunks_.size(); }
    bool empty() const { return chunks_.empty(); }
    std::size_t dimension() const { return dimension_; }
    const Chunk& chunk_at(std::size_t i) const { return chunks_[i]; }
    const std::vector<double>& vector_at(std::size_t i) const { return vectors_[i]; }

    void save_jsonl(const std::string& path) const;
    static EmbeddingIndex load_jsonl(const std::string& path);

private:
    std::vector<Chunk> chunks_;
    std::vector<std::vector<double>> vectors_;
    std::size_t dimension_ = 0;
};

EmbeddingIndex build_index(const std::vector<SourceDocument>& documents, EmbedBackend& embedder,
                           const ChunkConfig& config, CallLedger& ledger);

// k highest-cosine entries, ties broken by (doc_id, seq) ascending.
std::vector<RetrievalHit> top_k(const EmbeddingIndex& index, const std::vector<double>& query,
                                std::size_t k);

// Documents ranked by max chunk cosine against the transcript query vector
// (mean of transcript chunk embeddings, L2-normalized).
std::vector<SourceDocument> top_documents(const Meeting& meeting, std::size_t k,
                                          EmbedBackend& embedder, const ChunkConfig& config,
                                          CallLedger& ledger);

}  // namespace mssum
