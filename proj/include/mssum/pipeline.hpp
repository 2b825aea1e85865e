#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mssum/corpus.hpp"
#include "mssum/stages.hpp"

namespace mssum {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Variant {
    G_NONE,
    G_ALL,
    G_TOP,
    G_INFER,
    P_NONE,
    P_ALL,
    P_INFER,
    P_PER,
    P_INFER_PER,
};

constexpr std::array<Variant, 9> kAllVariants = {
    Variant::G_NONE, Variant::G_ALL,   Variant::G_TOP,       Variant::G_INFER, Variant::P_NONE,
    Variant::P_ALL,  Variant::P_INFER, Variant::P_PER,       Variant::P_INFER_PER,
};

std::string variant_name(Variant v);                 // "g-none" ... "p-infer-per"
Variant variant_from_name(const std::string& name);
bool variant_is_personalized(Variant v);             // any p-* variant
bool variant_extracts_persona(Variant v);            // p-per, p-infer-per
bool variant_enriches(Variant v);                    // g-infer, p-infer, p-infer-per

struct RunConfig {
    Variant variant = Variant::G_NONE;
    std::optional<std::string> target_participant;
    std::size_t max_gaps = 5;
    std::size_t top_k_docs = 5;
    std::size_t summary_limit_tokens = 250;
    InferOptions infer;
    ChunkConfig chunking;
    std::uint64_t seed = 0;
};

struct RunRecord {
    std::string meeting_id;
    Variant variant = Variant::G_NONE;
    std::string transcript;  // original rendering; evaluation input
    std::optional<Persona> persona;
    std::vector<ContextGap> gaps;
    std::vector<InferredAnswer> answers;
    std::optional<EnrichedTranscript> enriched;
    Summary summary;
    std::vector<CallRecord> ledger;
    double wall_time_s = 0.0;
    std::vector<std::string> skip_report;
    bool degraded = false;  // gap identification failed; fell back to plain summarization
    std::uint64_t seed = 0;
    std::string config_digest;
};

RunRecord run(const Meeting& meeting, const RunConfig& config, StageContext& ctx);

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

struct Backends {
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<EmbedBackend> embed;
};
using BackendFactory = std::function<Backends(std::uint64_t cell_seed)>;

struct MatrixCell {
    std::string meeting_id;
    Variant variant = Variant::G_NONE;
    std::uint64_t seed = 0;
    std::string status;  // "ok" or "failed"
    std::string error;
    std::optional<RunRecord> record;
};

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& meeting_id, Variant variant);

// One cell per (meeting, variant); failures are recorded per cell without
// aborting the batch. jobs > 1 runs cells concurrently.
std::vector<MatrixCell> run_matrix(const std::vector<Meeting>& meetings,
                                   const std::vector<Variant>& variants,
                                   const RunConfig& config_base, const BackendFactory& factory,
                                   const PromptLibrary& prompts, std::size_t jobs = 1);

nlohmann::json matrix_manifest(const std::vector<MatrixCell>& cells,
                               const std::vector<std::string>& artifact_paths);

}  // namespace mssum
