#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mssum/corpus.hpp"

namespace mssum {

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};
struct ProviderError : std::runtime_error {
    ProviderError(int status, const std::string& what)
        : std::runtime_error(what), status(status) {}
    int status = 0;
};
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};
struct InputTooLong : std::runtime_error {
    explicit InputTooLong(const std::string& what) : std::runtime_error(what) {}
};
struct UnknownStageTag : std::runtime_error {
    explicit UnknownStageTag(const std::string& what) : std::runtime_error(what) {}
};

struct ModelProfile {
    std::string model_name;
    std::size_t context_window_tokens = 0;
    std::size_t max_output_tokens = 0;
    double price_in = 0.0;   // currency per 1M input tokens
    double price_out = 0.0;  // currency per 1M output tokens

    void validate() const;
};

// Price table file: JSON map model_name -> profile fields.
std::map<std::string, ModelProfile> load_price_table(const std::string& path);
ModelProfile profile_from_json(const std::string& name, const nlohmann::json& j);

struct ChatRequest {
    std::optional<std::string> system_instruction;
    std::string user_content;
    double temperature = 0.0;
    std::optional<std::size_t> max_output_tokens;
    std::string stage_tag;  // "gap", "infer", "summarize", "persona", "judge", ...
};

struct ChatResponse {
    std::string text;
    std::size_t tokens_in = 0;
    std::size_t tokens_out = 0;
    double latency_s = 0.0;
    bool usage_reported = false;  // token counts came from the provider, not estimated
};

struct CallRecord {
    std::string stage_tag;
    std::string model_name;
    std::size_t tokens_in = 0;
    std::size_t tokens_out = 0;
    double latency_s = 0.0;
    double cost = 0.0;
    bool estimated_usage = false;
};

struct StageTotals {
    double cost = 0.0;
    double latency_s = 0.0;
    std::size_t calls = 0;
};

struct LedgerTotals {
    double total_cost = 0.0;
    double total_latency_s = 0.0;
    std::size_t total_calls = 0;
    std::map<std::string, StageTotals> per_stage;
};

// Append-ordered, safe for concurrent appends. Records are immutable once in.
class CallLedger {
public:
    void append(CallRecord record);
    std::vector<CallRecord> records() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

LedgerTotals ledger_totals(const CallLedger& ledger);
LedgerTotals ledger_totals(const std::vector<CallRecord>& records);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual const ModelProfile& profile() const = 0;
    // True for offline backends with deterministic, simulated latency.
    virtual bool simulated() const { return false; }
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    // One vector per input text; all vectors share dimension().
    virtual std::vector<std::vector<double>> embed_texts(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;
    virtual const ModelProfile& profile() const = 0;
    virtual bool simulated() const { return false; }
    // Wall-clock latency of the most recent embed_texts call, if measured.
    virtual double last_latency_s() const { return 0.0; }
};

// Budget-checked chat call; appends exactly one CallRecord to the ledger.
ChatResponse chat(ChatBackend& backend, const ChatRequest& request, CallLedger& ledger,
                  const TokenizerProfile& tokenizer = TokenizerProfile::whitespace());

// Validated embedding call; appends exactly one CallRecord (stage_tag "embed").
std::vector<std::vector<double>> embed(EmbedBackend& backend,
                                       const std::vector<std::string>& texts, CallLedger& ledger,
                                       const TokenizerProfile& tokenizer =
                                           TokenizerProfile::whitespace());

double call_cost(const ModelProfile& profile, std::size_t tokens_in, std::size_t tokens_out);

}  // namespace mssum
