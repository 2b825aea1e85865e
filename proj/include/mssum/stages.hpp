#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mssum/corpus.hpp"
#include "mssum/prompts.hpp"
#include "mssum/provider.hpp"
#include "mssum/retrieval.hpp"

namespace mssum {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};
struct UnknownParticipant : std::runtime_error {
    explicit UnknownParticipant(const std::string& what) : std::runtime_error(what) {}
};

struct Persona {
    std::string participant;  // speaker_role
    std::string text;
    std::string extracted_with;
};

// Target-reader conditioning for a stage call. persona_text is set only for
// the persona-extracting variants; the role name alone marks target-informed
// persona-free runs.
struct PersonaContext {
    std::string participant;
    std::optional<std::string> persona_text;
};

struct ContextGap {
    std::string question;
    std::string insert_anchor;  // model-claimed verbatim transcript sentence
    std::optional<std::pair<std::size_t, std::size_t>> anchor_span;
};

struct InferredAnswer {
    ContextGap gap;
    std::string answer;
    bool able = false;
    std::vector<std::pair<std::string, std::size_t>> source_chunks;  // (doc_id, seq)
    std::size_t attempts = 0;
};

struct Insertion {
    std::size_t position = 0;  // byte offset into the original transcript
    std::string comment;
};

struct EnrichedTranscript {
    std::string original;
    std::vector<Insertion> insertions;
    std::string rendered;
    std::vector<std::string> skip_report;
};

struct Summary {
    std::string text;
    std::size_t token_count = 0;
    bool truncated = false;
    std::size_t calls_used = 0;
};

// Shared handles for the stage calls.
struct StageContext {
    ChatBackend* chat = nullptr;
    EmbedBackend* embed = nullptr;
    CallLedger* ledger = nullptr;
    PromptLibrary prompts = PromptLibrary::defaults();
    TokenizerProfile tokenizer = TokenizerProfile::whitespace();
};

std::vector<ContextGap> identify_gaps(const std::string& transcript,
                                      const std::optional<PersonaContext>& persona,
                                      StageContext& ctx, std::size_t max_gaps = 5);

// Anchor resolution: exact substring, then normalized match, then best
// sentence by token Jaccard (accepted at >= 0.6). Earliest occurrence wins.
std::optional<std::pair<std::size_t, std::size_t>> locate_anchor(const std::string& transcript,
                                                                 const std::string& insert);

struct InferOptions {
    std::size_t max_attempts = 3;
    std::size_t excerpt_turn_window = 2;  // turns of context around the anchor
    bool concat_top_k = false;            // one call over concatenated top hits
};

InferredAnswer infer_answer(const ContextGap& gap, const EmbeddingIndex& index,
                            const std::string& transcript,
                            const std::optional<PersonaContext>& persona, StageContext& ctx,
                            const InferOptions& options = {});

EnrichedTranscript inject(const std::string& transcript,
                          const std::vector<InferredAnswer>& answers);

// Structural strip of the recorded insertion regions from `rendered`.
std::string strip_insertions(const EnrichedTranscript& enriched);

Summary summarize(const std::string& input_text, const std::optional<PersonaContext>& persona,
                  StageContext& ctx, std::size_t limit_tokens = 250);

Persona extract_persona(const std::string& transcript, const std::string& participant,
                        StageContext& ctx);

}  // namespace mssum
