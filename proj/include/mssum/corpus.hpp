#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mssum {

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyTranscript : std::runtime_error {
    explicit EmptyTranscript(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyCorpus : std::runtime_error {
    explicit EmptyCorpus(const std::string& what) : std::runtime_error(what) {}
};

struct Turn {
    std::string speaker_role;
    std::optional<std::string> speaker_name;
    std::string text;
};

enum class DocKind { slides, whiteboard, notes, other };

std::string to_string(DocKind kind);
DocKind doc_kind_from_string(const std::string& s);

struct SourceDocument {
    std::string doc_id;
    DocKind kind = DocKind::other;
    std::optional<std::string> title;
    std::string text;
};

struct Meeting {
    std::string meeting_id;
    std::vector<Turn> turns;
    std::vector<SourceDocument> documents;
    std::optional<std::string> gold_summary;
    // Unknown JSON fields encountered during load, preserved verbatim.
    nlohmann::json extra = nlohmann::json::object();
    std::vector<std::string> load_warnings;
};

struct TokenizerProfile {
    enum class Mode { whitespace, chars_per_token };
    Mode mode = Mode::whitespace;
    double chars_per_token = 4.0;

    static TokenizerProfile whitespace() { return {}; }
    static TokenizerProfile approx(double cpt) {
        TokenizerProfile p;
        p.mode = Mode::chars_per_token;
        p.chars_per_token = cpt;
        return p;
    }
};

struct CorpusStats {
    std::size_t meeting_count = 0;
    double avg_turns = 0.0;
    double avg_speakers = 0.0;
    double avg_transcript_words = 0.0;
    double avg_gold_words = 0.0;  // over meetings that have a gold summary
    double avg_documents = 0.0;
    std::size_t meetings_with_gold = 0;
};

Meeting load_meeting(const std::string& raw_json);
Meeting load_meeting_file(const std::string& path);
nlohmann::json serialize(const Meeting& meeting);

// Canonical transcript form fed to all prompts: one speaker-role line, then
// the utterance, blocks separated by a single blank line.
std::string render_transcript(const Meeting& meeting);

std::size_t count_tokens(const std::string& text, const TokenizerProfile& profile);

CorpusStats corpus_stats(const std::vector<Meeting>& meetings);

}  // namespace mssum
